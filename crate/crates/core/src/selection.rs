//! FSN/FFN reduced networks, reachability checks and rate bounds.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::blocks::{BlockDecomposition, BlockLabel, FiedlerClassification};
use crate::graph::{self, Arc, DirectedNetwork, Network, SemiAutonomousConfig};
use crate::spectral::{self, EigenPair, Tolerances};
use crate::{Error, Matrix, Result, Vector};

fn check_len(net: &Network, v: &Vector) -> Result<()> {
    if v.len() != net.node_count() {
        return Err(Error::Dimension(format!(
            "vector of length {} for {} nodes",
            v.len(),
            net.node_count()
        )));
    }
    Ok(())
}

fn check_config(net: &Network, cfg: &SemiAutonomousConfig) -> Result<()> {
    let n = net.node_count();
    match cfg.links().iter().find(|l| l.node > n) {
        Some(l) => Err(Error::NodeOutOfRange { node: l.node, n }),
        None => Ok(()),
    }
}

fn check_positive(v: &Vector, tol: &Tolerances) -> Result<()> {
    match v.iter().enumerate().find(|(_, &x)| x <= tol.pos) {
        Some((k, &x)) => Err(Error::MixedSign {
            node: k + 1,
            value: x,
        }),
        None => Ok(()),
    }
}

fn strictly_above_one(ratio: f64, tol: &Tolerances) -> bool {
    ratio > 1.0 && (ratio - 1.0).abs() >= tol.tie
}

fn strictly_below_one(ratio: f64, tol: &Tolerances) -> bool {
    ratio < 1.0 && (ratio - 1.0).abs() >= tol.tie
}

fn select<F>(net: &Network, keep: F) -> DirectedNetwork
where
    F: Fn(usize, usize) -> bool,
{
    let mut arcs = Vec::new();
    for e in net.edges() {
        for (follower, followed) in [(e.i, e.j), (e.j, e.i)] {
            if keep(follower, followed) {
                arcs.push(Arc {
                    follower,
                    followed,
                    w: e.w,
                });
            }
        }
    }
    DirectedNetwork::new(net.node_count(), arcs).expect("arcs come from distinct edges")
}

/// Agent `i` keeps neighbor `j` iff `[v1]_i / [v1]_j > 1`.
pub fn fsn_san(
    net: &Network,
    cfg: &SemiAutonomousConfig,
    v1: &Vector,
    tol: &Tolerances,
) -> Result<DirectedNetwork> {
    check_len(net, v1)?;
    check_positive(v1, tol)?;
    check_config(net, cfg)?;
    Ok(select(net, |i, j| {
        strictly_above_one(spectral::entry_ratio(v1, i, j, tol), tol)
    }))
}

/// Agent `i` keeps neighbor `j` iff `[v1]_i / [v1]_j < 1`.
pub fn ffn_san(
    net: &Network,
    cfg: &SemiAutonomousConfig,
    v1: &Vector,
    tol: &Tolerances,
) -> Result<DirectedNetwork> {
    check_len(net, v1)?;
    check_positive(v1, tol)?;
    check_config(net, cfg)?;
    Ok(select(net, |i, j| {
        strictly_below_one(spectral::entry_ratio(v1, i, j, tol), tol)
    }))
}

/// Agent `i` keeps neighbor `j` iff `|[v1s]_i / [v1s]_j| > 1`.
pub fn fsn_signed_san(
    net: &Network,
    cfg: &SemiAutonomousConfig,
    v1s: &Vector,
    tol: &Tolerances,
) -> Result<DirectedNetwork> {
    check_len(net, v1s)?;
    if graph::augmented_balance(net, cfg)?.is_none() {
        return Err(Error::Unbalanced);
    }
    if let Some((k, &x)) = v1s.iter().enumerate().find(|(_, &x)| x.abs() <= tol.pos) {
        return Err(Error::MixedSign {
            node: k + 1,
            value: x,
        });
    }
    Ok(select(net, |i, j| {
        strictly_above_one(spectral::entry_ratio(v1s, i, j, tol).abs(), tol)
    }))
}

/// FSN of a fully autonomous network from its Fiedler vector.
///
/// Inside positive and negative blocks agent `i` keeps `j` iff the entry
/// ratio is above 1 or negative; a zero `j` gives an infinite ratio and is
/// kept. Core-block and zero-block edges are kept in both directions.
pub fn fsn_fan(
    net: &Network,
    v2: &EigenPair,
    decomp: &BlockDecomposition,
    cls: &FiedlerClassification,
    tol: &Tolerances,
) -> Result<DirectedNetwork> {
    if !v2.simple {
        return Err(Error::RepeatedEigenvalue(v2.value));
    }
    let v = &v2.vector;
    check_len(net, v)?;
    let mut arcs = Vec::new();
    for e in net.edges() {
        let block = decomp
            .block_of_edge(e.i, e.j)
            .ok_or_else(|| Error::Classification(format!("edge {{{}, {}}} in no block", e.i, e.j)))?;
        for (follower, followed) in [(e.i, e.j), (e.j, e.i)] {
            let keep = match cls.block_label[block] {
                BlockLabel::Core | BlockLabel::Zero => true,
                BlockLabel::Positive | BlockLabel::Negative => {
                    let ratio = spectral::entry_ratio(v, follower, followed, tol);
                    strictly_above_one(ratio, tol) || ratio < 0.0
                }
            };
            if keep {
                arcs.push(Arc {
                    follower,
                    followed,
                    w: e.w,
                });
            }
        }
    }
    DirectedNetwork::new(net.node_count(), arcs)
}

/// Nodes reachable from `sources` along arcs, followed to follower.
pub fn reachable_from(dnet: &DirectedNetwork, sources: &BTreeSet<usize>) -> Vec<bool> {
    let n = dnet.node_count();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in dnet.arcs() {
        out[a.followed - 1].push(a.follower);
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = sources.iter().copied().collect();
    for &s in &stack {
        seen[s - 1] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in &out[u - 1] {
            if !seen[v - 1] {
                seen[v - 1] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Whether each node hears from some external input.
pub fn reachable_from_inputs(dnet: &DirectedNetwork, cfg: &SemiAutonomousConfig) -> Vec<bool> {
    reachable_from(dnet, &cfg.leaders())
}

/// Whether each node hears from the core block or core node.
pub fn reachable_from_core(
    dnet: &DirectedNetwork,
    decomp: &BlockDecomposition,
    cls: &FiedlerClassification,
) -> Vec<bool> {
    reachable_from(dnet, &cls.core_nodes(decomp))
}

/// Spectrum of a generator whose strongly connected blocks are symmetric,
/// read from its block-triangular form. Ascending.
pub fn directed_spectrum(generator: &Matrix) -> Result<Vec<f64>> {
    let n = generator.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let ids: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for r in 0..n {
        for c in 0..n {
            if r != c && generator[(r, c)] != 0.0 {
                g.add_edge(ids[r], ids[c], ());
            }
        }
    }
    let mut values = Vec::with_capacity(n);
    for component in tarjan_scc(&g) {
        let mut idx: Vec<usize> = component.iter().map(|x| x.index()).collect();
        idx.sort_unstable();
        let block = Matrix::from_fn(idx.len(), idx.len(), |r, c| generator[(idx[r], idx[c])]);
        match spectral::symmetric_eigen(&block) {
            Ok(dec) => values.extend(dec.values),
            Err(Error::NotSymmetric(_)) => {
                return Err(Error::NonSymmetricBlock(idx.iter().map(|k| k + 1).collect()))
            }
            Err(e) => return Err(e),
        }
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Reduced perturbed generator `L(Gbar) + diag(|B| 1)`.
pub fn reduced_perturbed(dnet: &DirectedNetwork, cfg: &SemiAutonomousConfig) -> Matrix {
    let mut l = graph::reduced_signed_laplacian(dnet);
    for link in cfg.links() {
        l[(link.node - 1, link.node - 1)] += 1.0;
    }
    l
}

/// Smallest eigenvalue of the reduced perturbed generator.
pub fn reduced_rate_san(dnet: &DirectedNetwork, cfg: &SemiAutonomousConfig) -> Result<f64> {
    let spectrum = directed_spectrum(&reduced_perturbed(dnet, cfg))?;
    Ok(spectrum[0])
}

/// Second smallest eigenvalue of the reduced FAN generator.
pub fn reduced_rate_fan(dnet: &DirectedNetwork) -> Result<f64> {
    let spectrum = directed_spectrum(&graph::reduced_laplacian(dnet))?;
    spectrum
        .get(1)
        .copied()
        .ok_or_else(|| Error::Dimension("need at least two nodes".into()))
}

/// Orthonormal basis of the complement of the all-ones vector.
pub fn consensus_complement_basis(n: usize) -> Matrix {
    let mut q = Matrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for r in 0..k {
            q[(r, k - 1)] = scale;
        }
        q[(k, k - 1)] = -(k as f64) * scale;
    }
    q
}

/// Smallest eigenpair of the symmetric part of a reduced Laplacian on the
/// disagreement subspace. The value is the rate the bound is compared to.
pub fn disagreement_pair(reduced: &Matrix, tol: &Tolerances) -> Result<EigenPair> {
    let n = reduced.nrows();
    if n < 2 {
        return Err(Error::TooManyEigenpairs { requested: 2, n });
    }
    let sym = (reduced + reduced.transpose()) * 0.5;
    let q = consensus_complement_basis(n);
    let restricted = q.transpose() * &sym * &q;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let pair = spectral::smallest_eigenpairs(&restricted, 1, tol)?.remove(0);
    Ok(EigenPair {
        value: pair.value,
        vector: spectral::normalize_sign(&q * pair.vector),
        simple: pair.simple,
    })
}

/// `lambda_2(L) + sum over dropped choices (i <- j) of w_ij vbar_i (vbar_j - vbar_i)`.
pub fn fiedler_lower_bound(
    net: &Network,
    dnet: &DirectedNetwork,
    vbar: &Vector,
    tol: &Tolerances,
) -> Result<f64> {
    check_len(net, vbar)?;
    let lambda2 = spectral::fiedler_pair(&graph::laplacian(net), tol)?.value;
    let mut sum = 0.0;
    for e in net.edges() {
        for (i, j) in [(e.i, e.j), (e.j, e.i)] {
            if !dnet.contains(i, j) {
                let (vi, vj) = (vbar[i - 1], vbar[j - 1]);
                sum += e.w * vi * (vj - vi);
            }
        }
    }
    Ok(lambda2 + sum)
}

/// `2 (1 - cos(pi / (diam + 1)))`, an upper bound on a tree's `lambda_2`.
pub fn tree_diameter_bound(diam: usize) -> f64 {
    2.0 * (1.0 - (std::f64::consts::PI / (diam as f64 + 1.0)).cos())
}
