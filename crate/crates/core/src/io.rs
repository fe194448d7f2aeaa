//! Network files, trajectory and arc-list CSV, and run reports.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Model, Trajectory};
use crate::graph::{Arc, DirectedNetwork, LeaderLink, Network, SemiAutonomousConfig};
use crate::tempo::TempoReport;
use crate::{Error, Matrix};

/// Load failure with the location it was detected at.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Invalid {
        field: String,
        #[source]
        source: Error,
    },
    #[error("{field}: {message}")]
    Shape { field: String, message: String },
}

fn shape(field: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Shape {
        field: field.into(),
        message: message.into(),
    }
}

fn invalid(field: impl Into<String>, source: Error) -> ParseError {
    ParseError::Invalid {
        field: field.into(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    i: usize,
    j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeaderEntry {
    node: usize,
    input: usize,
    #[serde(default = "default_sign")]
    sign: i32,
}

fn default_sign() -> i32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    #[serde(default)]
    directed: bool,
    edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaders: Option<Vec<LeaderEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<Vec<f64>>>,
}

/// Contents of a network file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedNetwork {
    pub network: Network,
    pub config: Option<SemiAutonomousConfig>,
    /// `n x d` initial state.
    pub x0: Option<Matrix>,
}

pub fn parse_network_file(bytes: &[u8]) -> Result<ParsedNetwork, ParseError> {
    let file: NetworkFile = serde_json::from_slice(bytes).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.directed {
        return Err(shape("directed", "only undirected networks are supported"));
    }
    let n = file.n;
    let mut seen = HashSet::new();
    let mut triples = Vec::with_capacity(file.edges.len());
    for (k, e) in file.edges.iter().enumerate() {
        let field = format!("edges[{k}]");
        for node in [e.i, e.j] {
            if node == 0 || node > n {
                return Err(invalid(field, Error::NodeOutOfRange { node, n }));
            }
        }
        if e.i == e.j {
            return Err(invalid(field, Error::SelfLoop(e.i)));
        }
        let w = e.w.unwrap_or(1.0);
        if w == 0.0 || !w.is_finite() {
            return Err(invalid(field, Error::InvalidWeight(e.i, e.j)));
        }
        if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
            return Err(invalid(field, Error::DuplicateEdge(e.i.min(e.j), e.i.max(e.j))));
        }
        triples.push((e.i, e.j, w));
    }
    let mut network = Network::new(n, triples).map_err(|e| invalid("edges", e))?;
    if let Some(name) = &file.name {
        network = network.with_name(name.clone());
    }

    let config = match (&file.leaders, &file.inputs) {
        (None, None) => None,
        (Some(_), None) => return Err(shape("inputs", "leaders are given without inputs")),
        (None, Some(_)) => return Err(shape("leaders", "inputs are given without leaders")),
        (Some(leaders), Some(inputs)) => {
            let d = inputs.first().map_or(0, Vec::len);
            for (k, u) in inputs.iter().enumerate() {
                if u.is_empty() || u.len() != d {
                    return Err(invalid(format!("inputs[{k}]"), Error::InputDimension));
                }
            }
            let mut nodes = HashSet::new();
            for (k, l) in leaders.iter().enumerate() {
                let field = format!("leaders[{k}]");
                if l.node == 0 || l.node > n {
                    return Err(invalid(field, Error::NodeOutOfRange { node: l.node, n }));
                }
                if !nodes.insert(l.node) {
                    return Err(invalid(field, Error::RepeatedLeader(l.node)));
                }
                if l.input == 0 || l.input > inputs.len() {
                    return Err(invalid(
                        field,
                        Error::InputOutOfRange {
                            index: l.input,
                            m: inputs.len(),
                        },
                    ));
                }
                if l.sign != 1 && l.sign != -1 {
                    return Err(invalid(field, Error::InvalidSign(l.sign)));
                }
            }
            let links = leaders
                .iter()
                .map(|l| LeaderLink {
                    node: l.node,
                    input: l.input,
                    sign: l.sign,
                })
                .collect();
            Some(SemiAutonomousConfig::new(n, links, inputs.clone()).map_err(|e| invalid("leaders", e))?)
        }
    };

    let x0 = match &file.x0 {
        None => None,
        Some(rows) => {
            if rows.len() != n {
                return Err(shape("x0", format!("{} rows for {} nodes", rows.len(), n)));
            }
            let d = rows.first().map_or(0, Vec::len);
            if let Some(cfg) = &config {
                if d != cfg.dimension() {
                    return Err(shape("x0", format!("dimension {d} but inputs have dimension {}", cfg.dimension())));
                }
            }
            for (k, r) in rows.iter().enumerate() {
                if r.is_empty() || r.len() != d {
                    return Err(shape(format!("x0[{k}]"), format!("expected {d} entries, got {}", r.len())));
                }
                if r.iter().any(|x| !x.is_finite()) {
                    return Err(shape(format!("x0[{k}]"), "non-finite entry"));
                }
            }
            Some(Matrix::from_fn(n, d, |r, c| rows[r][c]))
        }
    };

    Ok(ParsedNetwork { network, config, x0 })
}

/// Pretty JSON that parses back to the same model.
pub fn serialize_network_file(parsed: &ParsedNetwork) -> String {
    let net = &parsed.network;
    let file = NetworkFile {
        name: net.name().map(str::to_owned),
        n: net.node_count(),
        directed: false,
        edges: net
            .edges()
            .iter()
            .map(|e| EdgeEntry {
                i: e.i,
                j: e.j,
                w: (e.w != 1.0).then_some(e.w),
            })
            .collect(),
        leaders: parsed.config.as_ref().map(|c| {
            c.links()
                .iter()
                .map(|l| LeaderEntry {
                    node: l.node,
                    input: l.input,
                    sign: l.sign,
                })
                .collect()
        }),
        inputs: parsed.config.as_ref().map(|c| c.inputs().to_vec()),
        x0: parsed
            .x0
            .as_ref()
            .map(|x| x.row_iter().map(|r| r.iter().copied().collect()).collect()),
    };
    serde_json::to_string_pretty(&file).expect("network files always serialize")
}

/// `t,agent,dim,value` rows, time-major then agent-minor, 1-based ids.
pub fn emit_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,agent,dim,value\n");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        for agent in 0..x.nrows() {
            for dim in 0..x.ncols() {
                let _ = writeln!(out, "{:.16e},{},{},{:.16e}", t, agent + 1, dim + 1, x[(agent, dim)]);
            }
        }
    }
    out
}

/// Inverse of [`emit_trajectory_csv`]; the model tag is supplied by the caller.
pub fn parse_trajectory_csv(text: &str, model: Model) -> Result<Trajectory, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t,agent,dim,value")) => {}
        _ => return Err(shape("line 1", "expected header t,agent,dim,value")),
    }
    let mut rows: Vec<(f64, usize, usize, f64)> = Vec::new();
    for (k, line) in lines {
        if line.is_empty() {
            continue;
        }
        let field = format!("line {}", k + 1);
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(shape(field, "expected 4 columns"));
        }
        let t = parts[0].parse().map_err(|_| shape(field.clone(), "bad time"))?;
        let a: usize = parts[1].parse().map_err(|_| shape(field.clone(), "bad agent"))?;
        let d: usize = parts[2].parse().map_err(|_| shape(field.clone(), "bad dim"))?;
        let v = parts[3].parse().map_err(|_| shape(field.clone(), "bad value"))?;
        if a == 0 || d == 0 {
            return Err(shape(field, "ids are 1-based"));
        }
        rows.push((t, a, d, v));
    }
    let n = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let d = rows.iter().map(|r| r.2).max().unwrap_or(0);
    let per_time = n * d;
    if per_time == 0 || rows.len() % per_time != 0 {
        return Err(shape("rows", "row count is not a multiple of agents x dims"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for chunk in rows.chunks(per_time) {
        let t = chunk[0].0;
        let mut x = Matrix::zeros(n, d);
        for (k, &(tk, a, dim, v)) in chunk.iter().enumerate() {
            if tk != t || (a - 1) * d + (dim - 1) != k {
                return Err(shape("rows", format!("unexpected ordering near t = {t}")));
            }
            x[(a - 1, dim - 1)] = v;
        }
        times.push(t);
        states.push(x);
    }
    Ok(Trajectory { times, states, model })
}

/// `follower,followed,w` lines; arc `(i, j)` means `i` keeps `j`.
pub fn emit_arcs_csv(dnet: &DirectedNetwork) -> String {
    let mut out = String::from("follower,followed,w\n");
    for a in dnet.arcs() {
        let _ = writeln!(out, "{},{},{}", a.follower, a.followed, a.w);
    }
    out
}

pub fn parse_arcs_csv(text: &str, n: usize) -> Result<DirectedNetwork, ParseError> {
    let mut arcs = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.starts_with("follower")) {
            continue;
        }
        let field = format!("line {}", k + 1);
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(shape(field, "expected follower,followed[,w]"));
        }
        let follower = parts[0].parse().map_err(|_| shape(field.clone(), "bad follower"))?;
        let followed = parts[1].parse().map_err(|_| shape(field.clone(), "bad followed"))?;
        let w = match parts.get(2) {
            Some(w) => w.parse().map_err(|_| shape(field.clone(), "bad weight"))?,
            None => 1.0,
        };
        arcs.push(Arc { follower, followed, w });
    }
    DirectedNetwork::new(n, arcs).map_err(|e| invalid("arcs", e))
}

/// `agent,neighbor,value,rounds,retained,last_flip` rows.
pub fn emit_tempo_report_csv(report: &TempoReport) -> String {
    let mut out = String::from("agent,neighbor,value,rounds,retained,last_flip\n");
    for p in &report.pairs {
        let value = p.value.map_or_else(|| "stalled".to_owned(), |v| format!("{v:.10}"));
        let _ = writeln!(out, "{},{},{},{},{},{}", p.agent, p.neighbor, value, p.rounds, p.retained, p.last_flip);
    }
    out
}

/// A reported number together with the tolerance it was judged under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub tolerance: f64,
}

impl Measured {
    pub fn new(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance }
    }
}

/// Outcome of one verification inside a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub blocks: Vec<Vec<usize>>,
    pub cut_nodes: Vec<usize>,
    pub case: String,
    pub core: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original_eigenvalue: Option<Measured>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_eigenvalue: Option<Measured>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvector: Option<Vec<Measured>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub retained: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reachable: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus_value: Option<Vec<Measured>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_rate: Option<Measured>,
    /// Rounds until the distributed procedure stopped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Seed for random initial states, from `FSNLAB_SEED` (default 1).
pub fn seed_from_env() -> u64 {
    std::env::var("FSNLAB_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(1)
}
