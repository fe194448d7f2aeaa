//! Eigenvector-driven neighbor selection for consensus networks.
//!
//! Agents in a diffusively coupled network can drop neighbors and still
//! reach the same steady state, often much faster. This crate builds the
//! "following the slower neighbor" (FSN) reduced networks from Laplacian
//! eigenvectors and from locally measured relative tempo:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | Networks, leader configurations, Laplacians, structural balance |
//! | [`spectral`] | Cyclic Jacobi eigensolver, principal and Fiedler pairs |
//! | [`blocks`] | Block-cut tree and Fiedler-sign classification |
//! | [`selection`] | FSN/FFN construction, reachability, rate bounds |
//! | [`dynamics`] | Fixed-step simulation, steady states, empirical rates |
//! | [`tempo`] | Relative tempo and distributed selection |
//! | [`io`] | Network files, trajectories, arc lists, reports |
//!
//! Node ids are 1-based everywhere in the public API. Matrix row `k`
//! corresponds to node `k + 1`.
//!
//! ```
//! use fsnlab::{fixtures, io, selection, spectral};
//!
//! let parsed = io::parse_network_file(fixtures::G8.as_bytes()).unwrap();
//! let cfg = parsed.config.as_ref().unwrap();
//! let lb = fsnlab::graph::perturbed_laplacian(&parsed.network, cfg).unwrap();
//! let tol = spectral::Tolerances::default();
//! let v1 = spectral::principal_pair_perturbed(&lb, &tol).unwrap();
//! assert!((v1.value - 0.1414).abs() < 1e-3);
//! let fsn = selection::fsn_san(&parsed.network, cfg, &v1.vector, &tol).unwrap();
//! assert_eq!(fsn.arcs().len(), 10);
//! ```

pub mod blocks;
pub mod dynamics;
mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod selection;
pub mod spectral;
pub mod tempo;

pub use error::{Error, Result};

/// Dense real matrix; row and column `k` belong to node `k + 1`.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector indexed like [`Matrix`] rows.
pub type Vector = nalgebra::DVector<f64>;
