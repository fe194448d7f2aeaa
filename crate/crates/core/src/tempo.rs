//! Relative tempo from trajectories and distributed neighbor selection.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, Method, Trajectory};
use crate::graph::{self, Arc, DirectedNetwork, Network, SemiAutonomousConfig};
use crate::spectral::{self, Tolerances};
use crate::{blocks, Error, Matrix, Result, Vector};

/// Difference norms below this are treated as a stalled signal.
pub const EPS_STILL: f64 = 1e-14;

fn selection_norm(v: &Vector, nodes: &[usize]) -> f64 {
    nodes.iter().map(|&k| v[k - 1] * v[k - 1]).sum::<f64>().sqrt()
}

/// `||phi(V1) v|| / ||phi(V2) v||`.
pub fn tempo_limit_from_eigvec(v: &Vector, v1: &[usize], v2: &[usize], tol: &Tolerances) -> Result<f64> {
    let den = selection_norm(v, v2);
    if den <= tol.zero(v) {
        return Err(Error::ZeroSelection);
    }
    Ok(selection_norm(v, v1) / den)
}

/// Limit of `||x'_{V1}|| / ||x'_{V2}||` for `x' = M x`, from the projection of
/// `x0` on the eigenspace of the largest nonzero eigenvalue of `M`.
pub fn tempo_limit_oracle(
    m: &Matrix,
    x0: &Vector,
    v1: &[usize],
    v2: &[usize],
    tol: &Tolerances,
) -> Result<f64> {
    let dec = spectral::symmetric_eigen(m)?;
    let gap = tol.gap(m).max(f64::EPSILON);
    let dominant = dec
        .values
        .iter()
        .rev()
        .copied()
        .find(|x| x.abs() > gap)
        .ok_or(Error::ZeroEigenvalue(0.0))?;
    let mut projected = Vector::zeros(x0.len());
    for (k, &value) in dec.values.iter().enumerate() {
        if (value - dominant).abs() <= gap {
            let col = dec.vectors.column(k);
            projected += col * col.dot(x0);
        }
    }
    if projected.norm() <= 1e-12 * x0.norm().max(1.0) {
        return Err(Error::DegenerateInitialState);
    }
    let den = selection_norm(&projected, v2);
    if den <= tol.zero(&projected) {
        return Err(Error::ZeroSelection);
    }
    Ok(selection_norm(&projected, v1) / den)
}

/// Time-indexed ratio samples; `None` marks a stalled denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl RatioSeries {
    /// Value at the sample nearest `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.values[k]
    }

    pub fn last_finite(&self) -> Option<f64> {
        self.values.iter().rev().flatten().next().copied()
    }
}

fn difference_series<F>(traj: &Trajectory, ratio: F) -> Result<RatioSeries>
where
    F: Fn(&Matrix) -> Option<f64>,
{
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort(traj.len()));
    }
    let mut times = Vec::with_capacity(traj.len() - 1);
    let mut values = Vec::with_capacity(traj.len() - 1);
    for k in 1..traj.len() {
        times.push(traj.times[k]);
        values.push(ratio(&(&traj.states[k] - &traj.states[k - 1])));
    }
    Ok(RatioSeries { times, values })
}

/// `g_ij = ||dx_i|| / ||dx_j||` from forward differences.
pub fn g_ratio_series(traj: &Trajectory, i: usize, j: usize) -> Result<RatioSeries> {
    difference_series(traj, |diff| {
        let den = diff.row(j - 1).norm();
        (den >= EPS_STILL).then(|| diff.row(i - 1).norm() / den)
    })
}

/// Signed ratio of first-coordinate forward differences.
pub fn first_component_ratio(traj: &Trajectory, u: usize, v: usize) -> Result<RatioSeries> {
    difference_series(traj, |diff| {
        let den = diff[(v - 1, 0)];
        (den.abs() >= EPS_STILL).then(|| diff[(u - 1, 0)] / den)
    })
}

/// Knobs of the distributed procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedParams {
    /// Sampling step.
    pub delta: f64,
    /// Termination threshold on successive estimates, per agent.
    pub eps: Vec<f64>,
    pub round_cap: usize,
    /// Consecutive quiet rounds required before an agent stops; `None`
    /// means `ceil(1 / delta)`. A window of 1 is the single-round test.
    pub window: Option<usize>,
    /// Tree variant: ratios smaller than this in magnitude count as zero.
    pub zero_band: f64,
    /// Tree variant: maximum change of `ln |ratio|` across a window for a
    /// finite nonzero limit.
    pub drift_tol: f64,
}

impl DistributedParams {
    pub fn new(delta: f64, eps: f64) -> Self {
        Self {
            delta,
            eps: vec![eps],
            ..Self::default()
        }
    }

    fn eps_for(&self, agent: usize) -> f64 {
        if self.eps.len() == 1 {
            self.eps[0]
        } else {
            self.eps[agent - 1]
        }
    }

    fn window(&self) -> usize {
        self.window
            .unwrap_or_else(|| (1.0 / self.delta).ceil() as usize)
            .max(1)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::SimulationConfig(format!("delta must be positive, got {}", self.delta)));
        }
        if self.eps.len() != 1 && self.eps.len() != n {
            return Err(Error::SimulationConfig(format!(
                "{} thresholds for {} agents",
                self.eps.len(),
                n
            )));
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::SimulationConfig("thresholds must be positive".into()));
        }
        Ok(())
    }
}

impl Default for DistributedParams {
    fn default() -> Self {
        Self {
            delta: 0.01,
            eps: vec![1e-4],
            round_cap: 100_000,
            window: None,
            zero_band: 1e-2,
            drift_tol: 1e-3,
        }
    }
}

/// Outcome for one ordered pair `(agent, neighbor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTempo {
    pub agent: usize,
    pub neighbor: usize,
    /// Final estimate; `None` if the signal never moved.
    pub value: Option<f64>,
    /// Aitken extrapolation of the estimate's limit, used for retention.
    pub limit: Option<f64>,
    /// Round at which `agent` terminated.
    pub rounds: usize,
    pub retained: bool,
    /// Last round in which the estimate crossed the retention threshold.
    pub last_flip: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TempoReport {
    pub pairs: Vec<PairTempo>,
    /// Rounds until the last agent terminated.
    pub rounds: usize,
}

impl TempoReport {
    pub fn pair(&self, agent: usize, neighbor: usize) -> Option<&PairTempo> {
        self.pairs
            .iter()
            .find(|p| p.agent == agent && p.neighbor == neighbor)
    }
}

struct NeighborTrack {
    id: usize,
    weight: f64,
    previous: Vector,
    g: Option<f64>,
    changes: [f64; 2],
    last_flip: usize,
}

impl NeighborTrack {
    // Aitken's delta-squared step on the last two changes, applied only
    // while the changes shrink geometrically with a common sign.
    fn limit(&self) -> Option<f64> {
        let g = self.g?;
        let [older, newer] = self.changes;
        let q = newer / older;
        if older != 0.0 && q > 0.0 && q < 1.0 {
            Some(g + newer * q / (1.0 - q))
        } else {
            Some(g)
        }
    }
}

/// Local memory of one agent running the tempo procedure.
struct AgentState {
    id: usize,
    previous: Vector,
    neighbors: Vec<NeighborTrack>,
    eps: f64,
    quiet: usize,
    done: Option<usize>,
}

impl AgentState {
    // `sample` holds this round's exchanged states of every agent; only the
    // agent's own row and its neighbors' rows are read.
    fn observe(&mut self, sample: &Matrix, round: usize, window: usize) {
        let own = sample.row(self.id - 1).transpose();
        let num = (&own - &self.previous).norm();
        let mut quiet = true;
        for nb in &mut self.neighbors {
            let theirs = sample.row(nb.id - 1).transpose();
            let den = (&theirs - &nb.previous).norm();
            let g = if den < EPS_STILL { nb.g } else { Some(num / den) };
            match (nb.g, g) {
                (Some(old), Some(new)) => {
                    if (new - old).abs() >= self.eps {
                        quiet = false;
                    }
                    if (old > 1.0 + self.eps) != (new > 1.0 + self.eps) {
                        nb.last_flip = round;
                    }
                }
                _ => quiet = false,
            }
            if let (Some(old), Some(new)) = (nb.g, g) {
                nb.changes = [nb.changes[1], new - old];
            }
            nb.g = g;
            nb.previous = theirs;
        }
        self.previous = own;
        self.quiet = if quiet { self.quiet + 1 } else { 0 };
        if self.quiet >= window {
            self.done = Some(round);
        }
    }
}

/// Round-synchronized distributed FSN selection for a semi-autonomous
/// network. The plant is the original network sampled every `delta`.
pub fn run_algorithm1(
    net: &Network,
    cfg: &SemiAutonomousConfig,
    x0: &Matrix,
    params: &DistributedParams,
) -> Result<(DirectedNetwork, TempoReport)> {
    let n = net.node_count();
    params.validate(n)?;
    if !graph::is_connected(net) {
        return Err(Error::Disconnected);
    }
    if cfg.links().is_empty() {
        return Err(Error::ZeroEigenvalue(0.0));
    }
    if x0.nrows() != n || x0.ncols() != cfg.dimension() {
        return Err(Error::Dimension(format!(
            "initial state {}x{} for {} agents of dimension {}",
            x0.nrows(),
            x0.ncols(),
            n,
            cfg.dimension()
        )));
    }
    let lb = graph::perturbed_laplacian(net, cfg)?;
    let forcing = cfg.input_matrix(n) * cfg.input_values();
    let window = params.window();

    let mut agents: Vec<AgentState> = (1..=n)
        .map(|id| AgentState {
            id,
            previous: x0.row(id - 1).transpose(),
            neighbors: net
                .neighbors(id)
                .iter()
                .map(|&(j, w)| NeighborTrack {
                    id: j,
                    weight: w,
                    previous: x0.row(j - 1).transpose(),
                    g: None,
                    changes: [0.0; 2],
                    last_flip: 0,
                })
                .collect(),
            eps: params.eps_for(id),
            quiet: 0,
            done: None,
        })
        .collect();

    let mut x = x0.clone();
    let mut round = 0;
    while agents.iter().any(|a| a.done.is_none()) {
        if round == params.round_cap {
            return Err(Error::NoTermination {
                round_cap: params.round_cap,
                pending: agents.iter().filter(|a| a.done.is_none()).map(|a| a.id).collect(),
            });
        }
        round += 1;
        x = dynamics::step(&lb, Some(&forcing), &x, params.delta, Method::Rk4);
        let snapshot = x.clone();
        for agent in agents.iter_mut().filter(|a| a.done.is_none()) {
            agent.observe(&snapshot, round, window);
        }
    }

    let mut arcs = Vec::new();
    let mut pairs = Vec::new();
    for agent in &agents {
        let rounds = agent.done.expect("loop exits once every agent is done");
        for nb in &agent.neighbors {
            let limit = nb.limit();
            let retained = limit.is_some_and(|g| g > 1.0 + agent.eps);
            if retained {
                arcs.push(Arc {
                    follower: agent.id,
                    followed: nb.id,
                    w: nb.weight,
                });
            }
            pairs.push(PairTempo {
                agent: agent.id,
                neighbor: nb.id,
                value: nb.g,
                limit,
                rounds,
                retained,
                last_flip: nb.last_flip,
            });
        }
    }
    let report = TempoReport { pairs, rounds: round };
    Ok((DirectedNetwork::new(n, arcs)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Zero,
    Finite(f64),
    Divergent(f64),
}

impl Verdict {
    fn retained(self) -> bool {
        match self {
            Verdict::Zero => false,
            Verdict::Finite(r) => r > 1.0 || r < 0.0,
            Verdict::Divergent(_) => true,
        }
    }

    fn value(self) -> f64 {
        match self {
            Verdict::Zero => 0.0,
            Verdict::Finite(r) | Verdict::Divergent(r) => r,
        }
    }
}

struct RatioTrack {
    id: usize,
    weight: f64,
    previous: f64,
    history: VecDeque<Option<f64>>,
    last_flip: usize,
}

impl RatioTrack {
    fn verdict(&self, eps: f64, params: &DistributedParams) -> Option<Verdict> {
        let values: Vec<f64> = self.history.iter().copied().collect::<Option<_>>()?;
        if values.len() < 2 {
            return None;
        }
        let (first, last) = (values[0], values[values.len() - 1]);
        let growing = values.windows(2).all(|w| w[1].abs() > w[0].abs());
        if last.abs() > 1.0 / params.zero_band && growing {
            return Some(Verdict::Divergent(last));
        }
        let quiet = values.windows(2).all(|w| (w[1] - w[0]).abs() < eps);
        if !quiet {
            return None;
        }
        if last.abs() < params.zero_band {
            return Some(Verdict::Zero);
        }
        let drift = (last.abs().ln() - first.abs().ln()).abs();
        (drift < params.drift_tol && first.signum() == last.signum()).then_some(Verdict::Finite(last))
    }
}

/// Distributed FSN selection on a tree network from signed first-component
/// derivative ratios. Output matches the spectral construction when the
/// preconditions hold.
pub fn run_distributed_fan_tree(
    net: &Network,
    x0: &Matrix,
    params: &DistributedParams,
    tol: &Tolerances,
) -> Result<(DirectedNetwork, TempoReport)> {
    let n = net.node_count();
    params.validate(n)?;
    if !net.is_tree() {
        return Err(Error::NotTree);
    }
    if x0.nrows() != n || x0.ncols() == 0 {
        return Err(Error::Dimension(format!("initial state {}x{} for {} agents", x0.nrows(), x0.ncols(), n)));
    }
    let l = graph::laplacian(net);
    let v2 = spectral::fiedler_pair(&l, tol)?;
    if !v2.simple {
        return Err(Error::RepeatedEigenvalue(v2.value));
    }
    let decomp = blocks::block_cut_tree(net)?;
    if blocks::classify_fiedler(net, &decomp, &v2.vector, tol)?.has_zero_blocks() {
        return Err(Error::ZeroBlocks);
    }

    let window = params.window();
    let mut tracks: Vec<Vec<RatioTrack>> = (1..=n)
        .map(|id| {
            net.neighbors(id)
                .iter()
                .map(|&(j, w)| RatioTrack {
                    id: j,
                    weight: w,
                    previous: x0[(j - 1, 0)],
                    history: VecDeque::with_capacity(window + 1),
                    last_flip: 0,
                })
                .collect()
        })
        .collect();
    let mut own_previous: Vec<f64> = (0..n).map(|k| x0[(k, 0)]).collect();
    let mut done: Vec<Option<(usize, Vec<Verdict>)>> = vec![None; n];

    let mut x = x0.clone();
    let mut round = 0;
    while done.iter().any(Option::is_none) {
        if round == params.round_cap {
            let agent = done.iter().position(Option::is_none).expect("some agent pending") + 1;
            let eps = params.eps_for(agent);
            let neighbor = tracks[agent - 1]
                .iter()
                .find(|t| t.verdict(eps, params).is_none())
                .map_or(agent, |t| t.id);
            return Err(Error::UnsettledSign { agent, neighbor });
        }
        round += 1;
        x = dynamics::step(&l, None, &x, params.delta, Method::Rk4);
        let snapshot = x.clone();
        for id in 1..=n {
            if done[id - 1].is_some() {
                continue;
            }
            let own = snapshot[(id - 1, 0)];
            let num = own - own_previous[id - 1];
            own_previous[id - 1] = own;
            let eps = params.eps_for(id);
            let mut verdicts = Vec::new();
            for track in &mut tracks[id - 1] {
                let theirs = snapshot[(track.id - 1, 0)];
                let den = theirs - track.previous;
                track.previous = theirs;
                let last = track.history.back().copied().flatten();
                let ratio = if den.abs() < EPS_STILL { last } else { Some(num / den) };
                if let (Some(old), Some(new)) = (last, ratio) {
                    if Verdict::Finite(old).retained() != Verdict::Finite(new).retained() {
                        track.last_flip = round;
                    }
                }
                track.history.push_back(ratio);
                if track.history.len() > window + 1 {
                    track.history.pop_front();
                }
                if track.history.len() == window + 1 {
                    verdicts.push(track.verdict(eps, params));
                } else {
                    verdicts.push(None);
                }
            }
            if let Some(all) = verdicts.into_iter().collect::<Option<Vec<_>>>() {
                done[id - 1] = Some((round, all));
            }
        }
    }

    let mut arcs = Vec::new();
    let mut pairs = Vec::new();
    for id in 1..=n {
        let (rounds, verdicts) = done[id - 1].take().expect("every agent finished");
        for (track, verdict) in tracks[id - 1].iter().zip(verdicts) {
            let retained = verdict.retained();
            if retained {
                arcs.push(Arc {
                    follower: id,
                    followed: track.id,
                    w: track.weight,
                });
            }
            pairs.push(PairTempo {
                agent: id,
                neighbor: track.id,
                value: Some(verdict.value()),
                limit: Some(verdict.value()),
                rounds,
                retained,
                last_flip: track.last_flip,
            });
        }
    }
    let report = TempoReport { pairs, rounds: round };
    Ok((DirectedNetwork::new(n, arcs)?, report))
}

/// Uniform `[0, 1)` initial states, redrawn until `accept` holds.
pub fn generic_x0<F>(n: usize, d: usize, seed: u64, accept: F) -> Matrix
where
    F: Fn(&Matrix) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x0 = Matrix::from_fn(n, d, |_, _| rng.random::<f64>());
        if accept(&x0) {
            return x0;
        }
    }
}

/// Whether every column of `x0 - offset` has a projection above `1e-6` on
/// each of `directions`.
pub fn projections_clear(x0: &Matrix, offset: Option<&Matrix>, directions: &[Vector]) -> bool {
    let shifted = match offset {
        Some(o) => x0 - o,
        None => x0.clone(),
    };
    shifted
        .column_iter()
        .all(|col| directions.iter().all(|v| col.dot(v).abs() > 1e-6))
}
