use std::collections::{BTreeSet, VecDeque};

use fsnlab::blocks::{self, Case};
use fsnlab::dynamics::{self, Drive, Method, Model, SimulationConfig};
use fsnlab::graph::{self, LeaderLink, Network, SemiAutonomousConfig};
use fsnlab::spectral::{self, Tolerances};
use fsnlab::tempo::{self, DistributedParams};
use fsnlab::{selection, Matrix, Vector};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: 100_000,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn tol() -> Tolerances {
    Tolerances::default()
}

/// Random spanning tree plus extra edges, relabeled by a random permutation.
fn connected(min_n: usize, max_n: usize, extra: f64) -> impl Strategy<Value = Network> {
    (min_n..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                vec(any::<u32>(), n - 1),
                vec(prop::bool::weighted(extra), n * (n - 1) / 2),
                Just((1..=n).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_map(|(n, parents, mask, perm)| {
            let mut edges = BTreeSet::new();
            for k in 1..n {
                let p = parents[k - 1] as usize % k;
                let (a, b) = (perm[k], perm[p]);
                edges.insert((a.min(b), a.max(b)));
            }
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask[idx] {
                        let (a, b) = (perm[i], perm[j]);
                        edges.insert((a.min(b), a.max(b)));
                    }
                    idx += 1;
                }
            }
            Network::unweighted(n, edges).unwrap()
        })
}

fn trees(min_n: usize, max_n: usize) -> impl Strategy<Value = Network> {
    connected(min_n, max_n, 0.0)
}

/// Connected network with a nonempty leader set on a single input.
fn sans(max_n: usize) -> impl Strategy<Value = (Network, SemiAutonomousConfig)> {
    connected(2, max_n, 0.25)
        .prop_flat_map(|net| {
            let n = net.node_count();
            (Just(net), vec(prop::bool::weighted(0.3), n), 0..n, 0.0..1.0f64)
        })
        .prop_map(|(net, mask, forced, u)| {
            let n = net.node_count();
            let mut leaders: Vec<usize> = (1..=n).filter(|&k| mask[k - 1]).collect();
            if leaders.is_empty() {
                leaders.push(forced + 1);
            }
            let cfg = SemiAutonomousConfig::uniform(n, &leaders, vec![u]).unwrap();
            (net, cfg)
        })
}

fn principal(net: &Network, cfg: &SemiAutonomousConfig) -> (Matrix, spectral::EigenPair) {
    let lb = graph::perturbed_laplacian(net, cfg).unwrap();
    let pair = spectral::principal_pair_perturbed(&lb, &tol()).unwrap();
    (lb, pair)
}

fn induced_connected(net: &Network, nodes: &BTreeSet<usize>) -> bool {
    let Some(&start) = nodes.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in net.neighbors(u) {
            if nodes.contains(&v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen.len() == nodes.len()
}

fn is_star(net: &Network) -> bool {
    let n = net.node_count();
    (1..=n).any(|k| net.degree(k) == n - 1) && net.is_tree()
}

pub fn laplacian_rows_and_perturbation() {
    runner(200)
        .run(&sans(12), |(net, cfg)| {
            let l = graph::laplacian(&net);
            for r in 0..net.node_count() {
                prop_assert!(l.row(r).sum().abs() < 1e-12);
            }
            let diff = graph::perturbed_laplacian(&net, &cfg).unwrap() - &l;
            let leaders = cfg.leaders();
            for r in 0..net.node_count() {
                for c in 0..net.node_count() {
                    let want = if r == c && leaders.contains(&(r + 1)) { 1.0 } else { 0.0 };
                    prop_assert_eq!(diff[(r, c)], want);
                }
            }
            Ok(())
        })
        .unwrap();
}

pub fn eigensolver_residual_and_orthonormality() {
    runner(200)
        .run(&sans(12), |(net, cfg)| {
            let lb = graph::perturbed_laplacian(&net, &cfg).unwrap();
            let n = net.node_count();
            let dec = spectral::symmetric_eigen(&lb).unwrap();
            let scale = spectral::inf_norm(&lb).max(1.0);
            for k in 0..n {
                let v = dec.vectors.column(k);
                let resid = (&lb * v - v * dec.values[k]).amax();
                prop_assert!(resid < 1e-8 * scale);
                prop_assert!((v.norm() - 1.0).abs() < 1e-10);
            }
            let ortho = dec.vectors.transpose() * &dec.vectors - Matrix::identity(n, n);
            prop_assert!(ortho.amax() < 1e-8);
            let once = spectral::normalize_sign(dec.vectors.column(n - 1).into_owned());
            prop_assert_eq!(spectral::normalize_sign(once.clone()), once);
            Ok(())
        })
        .unwrap();
}

pub fn perturbed_principal_pair_is_positive_and_simple() {
    runner(200)
        .run(&sans(12), |(net, cfg)| {
            let (_, pair) = principal(&net, &cfg);
            prop_assert!(pair.value > 0.0);
            prop_assert!(pair.simple);
            prop_assert!(pair.vector.iter().all(|&x| x > 0.0));
            Ok(())
        })
        .unwrap();
}

pub fn fsn_reaches_every_agent_and_is_acyclic() {
    runner(300)
        .run(&sans(12), |(net, cfg)| {
            let (_, pair) = principal(&net, &cfg);
            let fsn = selection::fsn_san(&net, &cfg, &pair.vector, &tol()).unwrap();
            prop_assert!(selection::reachable_from_inputs(&fsn, &cfg).iter().all(|&r| r));
            prop_assert!(!fsn.has_cycle());
            let ffn = selection::ffn_san(&net, &cfg, &pair.vector, &tol()).unwrap();
            prop_assert!(!ffn.has_cycle());
            let diag = graph::reduced_laplacian(&fsn).diagonal().into_owned();
            prop_assert!(diag.iter().all(|&d| d >= 0.0 && d.fract() == 0.0));
            Ok(())
        })
        .unwrap();
}

pub fn reduced_rate_dominates_original() {
    runner(200)
        .run(&sans(12), |(net, cfg)| {
            let (_, pair) = principal(&net, &cfg);
            let fsn = selection::fsn_san(&net, &cfg, &pair.vector, &tol()).unwrap();
            let reduced = selection::reduced_rate_san(&fsn, &cfg).unwrap();
            prop_assert!(reduced >= pair.value - 1e-12);
            prop_assert!((reduced - 1.0).abs() < 1e-12);
            if cfg.leaders().len() < net.node_count() {
                prop_assert!(reduced > pair.value + 1e-9, "{} vs {}", reduced, pair.value);
            } else {
                prop_assert!((reduced - pair.value).abs() < 1e-12);
            }
            Ok(())
        })
        .unwrap();
}

fn fan_parts(net: &Network) -> Option<(spectral::EigenPair, blocks::BlockDecomposition, blocks::FiedlerClassification)> {
    let v2 = spectral::fiedler_pair(&graph::laplacian(net), &tol()).ok()?;
    if !v2.simple {
        return None;
    }
    let d = blocks::block_cut_tree(net).unwrap();
    let c = blocks::classify_fiedler(net, &d, &v2.vector, &tol()).unwrap();
    Some((v2, d, c))
}

pub fn block_partition_and_tree_shape() {
    runner(500)
        .run(&connected(2, 14, 0.2), |net| {
            let d = blocks::block_cut_tree(&net).unwrap();
            let total: usize = d.blocks.iter().map(|b| b.edges.len()).sum();
            prop_assert_eq!(total, net.edges().len());
            let mut all: Vec<(usize, usize)> = d.blocks.iter().flat_map(|b| b.edges.clone()).collect();
            all.sort_unstable();
            all.dedup();
            prop_assert_eq!(all.len(), net.edges().len());
            prop_assert_eq!(d.tree_adjacency.len() + 1, d.blocks.len() + d.cut_nodes.len());
            Ok(())
        })
        .unwrap();
}

pub fn fiedler_classification_is_total() {
    runner(200)
        .run(&connected(2, 12, 0.2), |net| {
            let v2 = spectral::fiedler_pair(&graph::laplacian(&net), &tol()).unwrap();
            prop_assume!(v2.simple);
            let d = blocks::block_cut_tree(&net).unwrap();
            let c = blocks::classify_fiedler(&net, &d, &v2.vector, &tol()).unwrap();
            let mixed = d
                .blocks
                .iter()
                .filter(|b| {
                    let s: Vec<_> = b.nodes.iter().map(|&k| c.sign(k)).collect();
                    s.contains(&blocks::NodeSign::Positive) && s.contains(&blocks::NodeSign::Negative)
                })
                .count();
            match c.case {
                Case::CoreBlock(_) => prop_assert_eq!(mixed, 1),
                Case::CoreNode(x) => {
                    prop_assert_eq!(mixed, 0);
                    prop_assert_eq!(c.sign(x), blocks::NodeSign::Zero);
                }
            }
            Ok(())
        })
        .unwrap();
}

pub fn fiedler_level_sets_are_connected() {
    runner(200)
        .run(&(connected(2, 12, 0.2), 0.0..1.0f64), |(net, frac)| {
            let v2 = spectral::fiedler_pair(&graph::laplacian(&net), &tol()).unwrap();
            prop_assume!(v2.simple);
            let v = &v2.vector;
            let eps = tol().zero(v);
            for sign in [1.0, -1.0] {
                let r = frac * v.amax();
                let nodes: BTreeSet<usize> = (1..=net.node_count())
                    .filter(|&k| sign * v[k - 1] + r >= -eps)
                    .collect();
                prop_assert!(induced_connected(&net, &nodes), "r = {} sign {}", r, sign);
            }
            Ok(())
        })
        .unwrap();
}

pub fn fan_fsn_reaches_from_core_and_agrees_with_simulation() {
    runner(200)
        .run(&(connected(2, 12, 0.2), 0u64..1000), |(net, seed)| {
            let Some((v2, d, c)) = fan_parts(&net) else {
                return Err(TestCaseError::reject("repeated lambda_2"));
            };
            let fsn = selection::fsn_fan(&net, &v2, &d, &c, &tol()).unwrap();
            prop_assert!(selection::reachable_from_core(&fsn, &d, &c).iter().all(|&r| r));
            let n = net.node_count();
            let x0 = tempo::generic_x0(n, 1, seed, |_| true);
            let expected = dynamics::fan_fsn_consensus_value(&x0, &c, &d)[0];
            let generator = graph::reduced_laplacian(&fsn);
            let rate = selection::reduced_rate_fan(&fsn).unwrap();
            prop_assert!(rate > 0.0);
            let horizon = (20.0 / rate).clamp(20.0, 400.0);
            let cfg = SimulationConfig { dt: 0.02, horizon, method: Method::Rk4 };
            let traj = dynamics::simulate(&generator, None, &x0, &cfg, Model::ReducedDirected).unwrap();
            let last = traj.last();
            for r in 0..n {
                prop_assert!((last[(r, 0)] - expected).abs() < 1e-3, "agent {} {} vs {}", r + 1, last[(r, 0)], expected);
            }
            Ok(())
        })
        .unwrap();
}

pub fn tree_fsn_rate_is_one_and_lambda2_is_small() {
    runner(200)
        .run(&trees(4, 12), |tree| {
            prop_assume!(!is_star(&tree));
            let Some((v2, d, c)) = fan_parts(&tree) else {
                return Err(TestCaseError::reject("repeated lambda_2"));
            };
            prop_assume!(!c.has_zero_blocks());
            let fsn = selection::fsn_fan(&tree, &v2, &d, &c, &tol()).unwrap();
            let relevant = selection::reduced_rate_fan(&fsn).unwrap();
            prop_assert!((relevant - 1.0).abs() < 1e-9);
            prop_assert!(relevant > v2.value);
            prop_assert!(v2.value < 0.59, "lambda_2 = {}", v2.value);
            Ok(())
        })
        .unwrap();
}

pub fn tree_diameter_bounds_algebraic_connectivity() {
    runner(200)
        .run(&trees(2, 12), |tree| {
            let lambda2 = spectral::fiedler_pair(&graph::laplacian(&tree), &tol()).unwrap().value;
            let bound = selection::tree_diameter_bound(tree.diameter().unwrap());
            prop_assert!(lambda2 <= bound + 1e-12, "{} > {}", lambda2, bound);
            Ok(())
        })
        .unwrap();
}

pub fn removal_bound_is_below_measured() {
    runner(200)
        .run(&connected(2, 12, 0.2), |net| {
            let Some((v2, d, c)) = fan_parts(&net) else {
                return Err(TestCaseError::reject("repeated lambda_2"));
            };
            let fsn = selection::fsn_fan(&net, &v2, &d, &c, &tol()).unwrap();
            let pair = selection::disagreement_pair(&graph::reduced_laplacian(&fsn), &tol()).unwrap();
            let bound = selection::fiedler_lower_bound(&net, &fsn, &pair.vector, &tol()).unwrap();
            prop_assert!(bound <= pair.value + 1e-9, "{} > {}", bound, pair.value);
            Ok(())
        })
        .unwrap();
}

/// Balanced signed network from a random gauge, with leader signs that
/// keep the augmented graph balanced.
fn balanced_signed(max_n: usize) -> impl Strategy<Value = (Network, SemiAutonomousConfig, Vec<f64>)> {
    sans(max_n)
        .prop_flat_map(|(net, cfg)| {
            let n = net.node_count();
            (Just(net), Just(cfg), vec(any::<bool>(), n), any::<bool>())
        })
        .prop_map(|(net, cfg, flips, input_flip)| {
            let n = net.node_count();
            let mut sigma: Vec<f64> = flips.iter().map(|&f| if f { -1.0 } else { 1.0 }).collect();
            if sigma[0] < 0.0 {
                sigma.iter_mut().for_each(|s| *s = -*s);
            }
            let signed = Network::new(
                n,
                net.edges().iter().map(|e| (e.i, e.j, sigma[e.i - 1] * sigma[e.j - 1] * e.w)),
            )
            .unwrap();
            let su = if input_flip { -1.0 } else { 1.0 };
            let links = cfg
                .links()
                .iter()
                .map(|l| LeaderLink {
                    node: l.node,
                    input: l.input,
                    sign: (sigma[l.node - 1] * su) as i32,
                })
                .collect();
            let cfg = SemiAutonomousConfig::new(n, links, cfg.inputs().to_vec()).unwrap();
            (signed, cfg, sigma)
        })
}

pub fn gauge_identity_and_signed_selection() {
    runner(200)
        .run(&balanced_signed(12), |(net, cfg, sigma)| {
            let n = net.node_count();
            let partition = graph::structural_balance_partition(&net).unwrap().unwrap();
            for k in 1..=n {
                prop_assert_eq!(partition.sigma(k), sigma[k - 1]);
            }
            let g = graph::gauge_matrix(&partition, n);
            let conj = &g * graph::signed_laplacian(&net) * &g;
            prop_assert!((conj - graph::laplacian(&net.absolute())).amax() < 1e-12);

            let lbs = graph::signed_perturbed_laplacian(&net, &cfg).unwrap();
            let v1s = spectral::principal_pair_signed(&lbs, &partition, &tol()).unwrap();
            let fsn = selection::fsn_signed_san(&net, &cfg, &v1s.vector, &tol()).unwrap();

            let abs = net.absolute();
            let abs_cfg = SemiAutonomousConfig::uniform(n, &cfg.leaders().into_iter().collect::<Vec<_>>(), cfg.inputs()[0].clone()).unwrap();
            let (_, v1) = principal(&abs, &abs_cfg);
            let unsigned = selection::fsn_san(&abs, &abs_cfg, &v1.vector, &tol()).unwrap();
            prop_assert_eq!(fsn.arc_set(), unsigned.arc_set());
            for a in fsn.arcs() {
                prop_assert_eq!(a.w, net.weight(a.follower, a.followed).unwrap());
            }
            let reduced = selection::reduced_rate_san(&fsn, &cfg).unwrap();
            prop_assert!(reduced >= v1s.value - 1e-12);
            Ok(())
        })
        .unwrap();
}

pub fn balance_partition_follows_relabeling() {
    runner(200)
        .run(
            &(balanced_signed(10), any::<u64>()).prop_flat_map(|((net, _, _), _)| {
                let n = net.node_count();
                (Just(net), Just((1..=n).collect::<Vec<usize>>()).prop_shuffle())
            }),
            |(net, perm)| {
                let n = net.node_count();
                let relabeled = Network::new(
                    n,
                    net.edges().iter().map(|e| (perm[e.i - 1], perm[e.j - 1], e.w)),
                )
                .unwrap();
                let p = graph::structural_balance_partition(&net).unwrap().unwrap();
                let q = graph::structural_balance_partition(&relabeled).unwrap().unwrap();
                // Same split up to swapping sides.
                let image: BTreeSet<usize> = p.v1.iter().map(|&k| perm[k - 1]).collect();
                prop_assert!(image == q.v1 || image == q.v2);
                Ok(())
            },
        )
        .unwrap();
}

pub fn fan_dynamics_conserve_the_mean() {
    runner(200)
        .run(&(connected(2, 12, 0.2), 0u64..1000), |(net, seed)| {
            let n = net.node_count();
            let x0 = tempo::generic_x0(n, 2, seed, |_| true);
            let l = graph::laplacian(&net);
            let cfg = SimulationConfig { dt: 0.01, horizon: 2.0, method: Method::Rk4 };
            let traj = dynamics::simulate(&l, None, &x0, &cfg, Model::Fan).unwrap();
            let mean0 = x0.row_sum() / n as f64;
            for x in &traj.states {
                prop_assert!((x.row_sum() / n as f64 - &mean0).amax() < 1e-9 * cfg.horizon);
            }
            let max_diag = l.diagonal().amax();
            let euler = SimulationConfig { dt: 0.2 / max_diag.max(1.0), horizon: 2.0, method: Method::Euler };
            let rk4 = SimulationConfig { method: Method::Rk4, ..euler };
            let a = dynamics::simulate(&l, None, &x0, &euler, Model::Fan).unwrap();
            let b = dynamics::simulate(&l, None, &x0, &rk4, Model::Fan).unwrap();
            prop_assert!((a.last() - b.last()).amax() < 10.0 * euler.dt);
            Ok(())
        })
        .unwrap();
}

struct SanCase {
    lb: Matrix,
    v1: Vector,
    drive: Drive,
    steady: Matrix,
    gap: f64,
}

fn san_case(net: &Network, cfg: &SemiAutonomousConfig) -> SanCase {
    let n = net.node_count();
    let lb = graph::perturbed_laplacian(net, cfg).unwrap();
    let pairs = spectral::smallest_eigenpairs(&lb, 2.min(n), &tol()).unwrap();
    let v1 = spectral::principal_pair_perturbed(&lb, &tol()).unwrap().vector;
    let gap = if n > 1 { pairs[1].value - pairs[0].value } else { f64::INFINITY };
    let drive = Drive { b: cfg.input_matrix(n), inputs: cfg.input_values() };
    let steady = dynamics::steady_state_san(&lb, &drive.b, &drive.inputs).unwrap();
    SanCase { lb, v1, drive, steady, gap }
}

pub fn simulated_tempo_matches_eigenvector_and_oracle() {
    runner(200)
        .run(&(sans(10), 0u64..1000), |((net, cfg), seed)| {
            let n = net.node_count();
            prop_assume!(n >= 2);
            let s = san_case(&net, &cfg);
            let x0 = tempo::generic_x0(n, 1, seed, |x| {
                tempo::projections_clear(x, Some(&s.steady), std::slice::from_ref(&s.v1))
            });
            let shifted = x0.column(0) - s.steady.column(0);
            let (i, j) = (net.edges()[0].i, net.edges()[0].j);

            // Modal expansion of the derivative: pick the time at which the
            // subdominant modes perturb the ratio by less than 1e-4.
            let eig = s.lb.clone().symmetric_eigen();
            let order: Vec<usize> = {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                o
            };
            let lam = |k: usize| eig.eigenvalues[order[k]];
            let alpha = |k: usize| eig.eigenvectors.column(order[k]).dot(&shifted);
            let lead = |r: usize| (lam(0) * alpha(0) * eig.eigenvectors[(r - 1, order[0])]).abs();
            let tail: f64 = (1..n).map(|k| (lam(k) * alpha(k)).abs()).sum();
            let spread = tail * (1.0 / lead(i) + 1.0 / lead(j));
            let horizon = ((spread * 1e4).ln() / s.gap).max(1.0);
            // Forward differences must stay well above rounding noise.
            let floor = lead(i).min(lead(j)) * (-lam(0) * horizon).exp() * 0.01;
            prop_assume!(floor > 1e-10);

            let cfg_sim = SimulationConfig { dt: 0.01, horizon, method: Method::Rk4 };
            let traj = dynamics::simulate(&s.lb, Some(&s.drive), &x0, &cfg_sim, Model::San).unwrap();
            let simulated = tempo::g_ratio_series(&traj, i, j).unwrap().last_finite().unwrap();
            let oracle = tempo::tempo_limit_oracle(&(-&s.lb), &shifted, &[i], &[j], &tol()).unwrap();
            let from_vector = tempo::tempo_limit_from_eigvec(&s.v1, &[i], &[j], &tol()).unwrap();
            prop_assert!((oracle - from_vector).abs() < 1e-9 * from_vector.max(1.0));
            prop_assert!((simulated - oracle).abs() < 1e-3, "{} vs {} at t = {}", simulated, oracle, horizon);
            prop_assert!((simulated / from_vector - 1.0).abs() < 1e-2);
            Ok(())
        })
        .unwrap();
}

pub fn distributed_matches_centralized_selection() {
    runner(100)
        .run(&(sans(10), 0u64..1000), |((net, cfg), seed)| {
            let n = net.node_count();
            let s = san_case(&net, &cfg);
            // Near-ties are excluded: their classification is a coin flip at
            // any finite termination threshold.
            let min_log_ratio = net
                .edges()
                .iter()
                .map(|e| (s.v1[e.i - 1] / s.v1[e.j - 1]).ln().abs())
                .fold(f64::INFINITY, f64::min);
            prop_assume!(min_log_ratio > 0.02);
            let x0 = tempo::generic_x0(n, 1, seed, |x| {
                tempo::projections_clear(x, Some(&s.steady), std::slice::from_ref(&s.v1))
            });
            let (dnet, report) = tempo::run_algorithm1(&net, &cfg, &x0, &DistributedParams::default()).unwrap();
            let central = selection::fsn_san(&net, &cfg, &s.v1, &tol()).unwrap();
            prop_assert_eq!(dnet.arc_set(), central.arc_set());
            prop_assert!(!report.pairs.is_empty());
            Ok(())
        })
        .unwrap();
}

pub fn distributed_ordering_settles_before_the_final_quarter() {
    runner(100)
        .run(&(sans(10), 0u64..1000), |((net, cfg), seed)| {
            let n = net.node_count();
            let s = san_case(&net, &cfg);
            let min_log_ratio = net
                .edges()
                .iter()
                .map(|e| (s.v1[e.i - 1] / s.v1[e.j - 1]).ln().abs())
                .fold(f64::INFINITY, f64::min);
            prop_assume!(min_log_ratio > 0.02);
            let x0 = tempo::generic_x0(n, 1, seed, |x| {
                tempo::projections_clear(x, Some(&s.steady), std::slice::from_ref(&s.v1))
            });
            let (_, report) = tempo::run_algorithm1(&net, &cfg, &x0, &DistributedParams::default()).unwrap();
            for p in &report.pairs {
                prop_assert!(p.last_flip <= p.rounds - p.rounds / 4, "{:?}", p);
            }
            Ok(())
        })
        .unwrap();
}

pub fn cut_node_entries_grow_away_from_the_core() {
    runner(200)
        .run(&connected(2, 12, 0.15), |net| {
            let Some((v2, d, c)) = fan_parts(&net) else {
                return Err(TestCaseError::reject("repeated lambda_2"));
            };
            let v = &v2.vector;
            let eps = tol().zero(v);
            // Walk the block-cut tree outward from the core.
            let mut frontier: Vec<(usize, f64)> = match c.case {
                Case::CoreBlock(b) => d
                    .tree_adjacency
                    .iter()
                    .filter(|&&(blk, _)| blk == b)
                    .map(|&(_, cut)| (cut, 0.0))
                    .collect(),
                Case::CoreNode(x) => vec![(x, 0.0)],
            };
            let mut seen_cuts = BTreeSet::new();
            let mut seen_blocks: BTreeSet<usize> = match c.case {
                Case::CoreBlock(b) => BTreeSet::from([b]),
                Case::CoreNode(_) => BTreeSet::new(),
            };
            while let Some((cut, parent)) = frontier.pop() {
                if !seen_cuts.insert(cut) {
                    continue;
                }
                let here = v[cut - 1];
                if parent.abs() > eps {
                    prop_assert!(here * parent.signum() >= -eps, "sign change at {}", cut);
                }
                prop_assert!(here.abs() + eps >= parent.abs(), "node {}: {} < {}", cut, here, parent);
                for &(blk, _) in d.tree_adjacency.iter().filter(|&&(_, x)| x == cut) {
                    if !seen_blocks.insert(blk) {
                        continue;
                    }
                    for &(b2, next) in d.tree_adjacency.iter().filter(|&&(b2, _)| b2 == blk) {
                        if b2 == blk && next != cut {
                            frontier.push((next, here));
                        }
                    }
                }
            }
            Ok(())
        })
        .unwrap();
}

pub fn san_trajectory_decays_to_steady_state() {
    runner(200)
        .run(&(sans(10), 0u64..1000), |((net, cfg), seed)| {
            let n = net.node_count();
            let s = san_case(&net, &cfg);
            let lambda1 = spectral::principal_pair_perturbed(&s.lb, &tol()).unwrap().value;
            let x0 = tempo::generic_x0(n, 1, seed, |_| true);
            let c = (&x0 - &s.steady).norm();
            let sim = SimulationConfig { dt: 0.01, horizon: 10.0, method: Method::Rk4 };
            let traj = dynamics::simulate(&s.lb, Some(&s.drive), &x0, &sim, Model::San).unwrap();
            for (t, x) in traj.times.iter().zip(&traj.states).step_by(100) {
                let err = (x - &s.steady).amax();
                prop_assert!(err <= c * (-lambda1 * t).exp() * (1.0 + 1e-6) + 1e-12, "t={} {}", t, err);
            }
            Ok(())
        })
        .unwrap();
}
