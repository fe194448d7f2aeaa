use std::fmt::Write as _;
use std::io::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fsnlab::blocks::{self, BlockDecomposition, Case, FiedlerClassification};
use fsnlab::dynamics::{self, Drive, Method, Model, SimulationConfig, Trajectory};
use fsnlab::graph::{self, Bipartition, DirectedNetwork, Network, SemiAutonomousConfig};
use fsnlab::io::{self, BlockSummary, Measured, ParsedNetwork, RunReport};
use fsnlab::spectral::{self, EigenPair, Tolerances};
use fsnlab::tempo::{self, DistributedParams};
use fsnlab::{fixtures, selection, Matrix, Vector};
use serde_json::json;

/// Neighbor selection for consensus networks.
///
/// FILE is a network file or one of the bundled fixtures
/// (g6, g8, g8-signed, g12, t12). Reports go to stdout as JSON; csv
/// artifacts go to --out.
///
/// Exit codes: 0 ok, 1 usage/IO/parse error, 2 a verification failed,
/// 3 a numerical precondition failed.
#[derive(Parser)]
#[command(name = "fsnlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, block-cut tree, Fiedler classification and balance.
    Analyze { file: String },
    /// Build a reduced network.
    Select {
        file: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Write the arc list here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the consensus dynamics.
    Simulate {
        file: String,
        /// Arc list of a reduced network to run instead of the original.
        #[arg(long)]
        reduced: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
        method: MethodArg,
        /// Write the trajectory csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derivative ratios g_ij against their eigenvector limits.
    Tempo {
        file: String,
        /// Comma separated `i:j` pairs.
        #[arg(long)]
        pairs: String,
        /// Signed ratio of first coordinates instead of norms.
        #[arg(long)]
        first_component: bool,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        /// Write the ratio series csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the distributed selection and compare with the centralized one.
    DistributedSelect {
        file: String,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Tree variant for networks without leaders.
        #[arg(long)]
        fan_tree: bool,
        /// Write the per-pair csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Original against reduced network, end to end.
    Compare {
        file: String,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    SanFsn,
    SanFfn,
    FanFsn,
    SignedSanFsn,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Euler,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Euler => Method::Euler,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

enum Failure {
    Usage(String),
    Numeric(fsnlab::Error),
}

impl From<fsnlab::Error> for Failure {
    fn from(e: fsnlab::Error) -> Self {
        Failure::Numeric(e)
    }
}

struct Output {
    json: serde_json::Value,
    passed: bool,
}

impl From<RunReport> for Output {
    fn from(report: RunReport) -> Self {
        Output {
            passed: report.passed(),
            json: serde_json::to_value(&report).expect("reports serialize"),
        }
    }
}

type Outcome = Result<Output, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Analyze { file } => analyze(&file),
        Command::Select { file, mode, out } => select(&file, mode, out.as_deref()),
        Command::Simulate { file, reduced, dt, horizon, method, out } => {
            let sim = SimulationConfig { dt, horizon, method: method.into() };
            simulate(&file, reduced.as_deref(), &sim, out.as_deref())
        }
        Command::Tempo { file, pairs, first_component, dt, horizon, out } => {
            let sim = SimulationConfig { dt, horizon, method: Method::Rk4 };
            tempo_cmd(&file, &pairs, first_component, &sim, out.as_deref())
        }
        Command::DistributedSelect { file, delta, eps, fan_tree, out } => {
            distributed(&file, &DistributedParams::new(delta, eps), fan_tree, out.as_deref())
        }
        Command::Compare { file, dt, horizon } => {
            compare(&file, &SimulationConfig { dt, horizon, method: Method::Rk4 })
        }
    };
    match outcome {
        Ok(output) => {
            let text = serde_json::to_string_pretty(&output.json).expect("values serialize");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if output.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn load(arg: &str) -> Result<ParsedNetwork, Failure> {
    let path = Path::new(arg);
    let bytes = if path.exists() {
        fs::read(path).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?
    } else if let Some(text) = fixtures::bundled(arg) {
        text.as_bytes().to_vec()
    } else {
        return Err(Failure::Usage(format!(
            "{arg}: no such file or bundled fixture ({})",
            fixtures::NAMES.join(", ")
        )));
    };
    let mut parsed = io::parse_network_file(&bytes).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?;
    if parsed.network.name().is_none() {
        let stem = path.file_stem().map_or(arg.to_string(), |s| s.to_string_lossy().into_owned());
        parsed.network = parsed.network.with_name(stem);
    }
    Ok(parsed)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    if let Some(path) = path {
        fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn need_config(p: &ParsedNetwork) -> Result<&SemiAutonomousConfig, Failure> {
    p.config
        .as_ref()
        .ok_or_else(|| Failure::Usage("network has no leaders; this needs a semi-autonomous network".into()))
}

fn new_report(p: &ParsedNetwork, mode: &str) -> RunReport {
    RunReport {
        network: p.network.name().map(str::to_string),
        mode: Some(mode.to_string()),
        ..RunReport::default()
    }
}

fn measured_vector(v: &Vector, m: &Matrix) -> Vec<Measured> {
    let t = tol().gap(m).max(1e-12);
    v.iter().map(|&x| Measured::new(x, t)).collect()
}

/// Arcs `(i, j)` of the original network that the reduction dropped.
fn removed(net: &Network, dnet: &DirectedNetwork) -> Vec<(usize, usize)> {
    let kept = dnet.arc_set();
    let mut out = Vec::new();
    for e in net.edges() {
        for (a, b) in [(e.i, e.j), (e.j, e.i)] {
            if !kept.contains(&(a, b)) {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

fn fill_arcs(report: &mut RunReport, net: &Network, dnet: &DirectedNetwork) {
    report.retained = dnet.arcs().iter().map(|a| (a.follower, a.followed)).collect();
    report.removed = removed(net, dnet);
}

fn block_summary(decomp: &BlockDecomposition, cls: &FiedlerClassification) -> BlockSummary {
    let case = match cls.case {
        Case::CoreBlock(_) => "core block",
        Case::CoreNode(_) => "core node",
    };
    BlockSummary {
        blocks: decomp.blocks.iter().map(|b| b.nodes.iter().copied().collect()).collect(),
        cut_nodes: decomp.cut_nodes.iter().copied().collect(),
        case: case.to_string(),
        core: cls.core_nodes(decomp).into_iter().collect(),
    }
}

struct FanParts {
    l: Matrix,
    v2: EigenPair,
    decomp: BlockDecomposition,
    cls: FiedlerClassification,
}

fn fan_parts(net: &Network) -> Result<FanParts, Failure> {
    if net.is_signed() {
        return Err(Failure::Usage("FAN selection needs an unsigned network".into()));
    }
    let l = graph::laplacian(net);
    let v2 = spectral::fiedler_pair(&l, &tol())?;
    let decomp = blocks::block_cut_tree(net)?;
    let cls = blocks::classify_fiedler(net, &decomp, &v2.vector, &tol())?;
    Ok(FanParts { l, v2, decomp, cls })
}

fn signed_parts(p: &ParsedNetwork) -> Result<(Matrix, Bipartition, EigenPair), Failure> {
    let cfg = need_config(p)?;
    let (partition, _) = graph::augmented_balance(&p.network, cfg)?.ok_or(fsnlab::Error::Unbalanced)?;
    let lbs = graph::signed_perturbed_laplacian(&p.network, cfg)?;
    let v1 = spectral::principal_pair_signed(&lbs, &partition, &tol())?;
    Ok((lbs, partition, v1))
}

fn is_signed_san(p: &ParsedNetwork) -> bool {
    p.network.is_signed() || p.config.as_ref().is_some_and(|c| c.is_signed())
}

fn analyze(file: &str) -> Outcome {
    let p = load(file)?;
    let net = &p.network;
    let mut report = new_report(&p, "analyze");
    let l = if net.is_signed() { graph::signed_laplacian(net) } else { graph::laplacian(net) };
    let spectrum = spectral::symmetric_eigen(&l)?.values;
    let balance = graph::structural_balance_partition(net)?;
    let mut out = json!({
        "nodes": net.node_count(),
        "edges": net.edges().len(),
        "signed": net.is_signed(),
        "connected": graph::is_connected(net),
        "laplacian_spectrum": spectrum.iter().collect::<Vec<_>>(),
        "balance": balance.as_ref().map(|b| json!({"v1": b.v1, "v2": b.v2})),
    });
    if let Some(cfg) = &p.config {
        let leaders: Vec<usize> = cfg.leaders().into_iter().collect();
        out["leaders"] = json!(leaders);
        let lb = if is_signed_san(&p) {
            graph::signed_perturbed_laplacian(net, cfg)?
        } else {
            graph::perturbed_laplacian(net, cfg)?
        };
        let lambda1 = spectral::smallest_eigenpairs(&lb, 1, &tol())?[0].value;
        out["perturbed_lambda1"] = json!(lambda1);
    }
    if !net.is_signed() && graph::is_connected(net) && net.node_count() > 1 {
        let decomp = blocks::block_cut_tree(net)?;
        let v2 = spectral::fiedler_pair(&graph::laplacian(net), &tol())?;
        out["lambda2"] = json!({"value": v2.value, "simple": v2.simple});
        if v2.simple {
            let cls = blocks::classify_fiedler(net, &decomp, &v2.vector, &tol())?;
            out["fiedler_vector"] = json!(v2.vector.iter().collect::<Vec<_>>());
            out["warnings"] = json!(cls.warnings);
            report.blocks = Some(block_summary(&decomp, &cls));
        } else {
            out["blocks"] = json!(decomp.blocks.iter().map(|b| &b.nodes).collect::<Vec<_>>());
            out["cut_nodes"] = json!(decomp.cut_nodes);
        }
    }
    let mut output = Output::from(report);
    output.json["analysis"] = out;
    Ok(output)
}

struct Selected {
    dnet: DirectedNetwork,
    report: RunReport,
}

fn run_select(p: &ParsedNetwork, mode: Mode) -> Result<Selected, Failure> {
    let net = &p.network;
    let name = match mode {
        Mode::SanFsn => "san-fsn",
        Mode::SanFfn => "san-ffn",
        Mode::FanFsn => "fan-fsn",
        Mode::SignedSanFsn => "signed-san-fsn",
    };
    let mut report = new_report(p, name);
    let dnet = match mode {
        Mode::SanFsn | Mode::SanFfn => {
            let cfg = need_config(p)?;
            let lb = graph::perturbed_laplacian(net, cfg)?;
            let v1 = spectral::principal_pair_perturbed(&lb, &tol())?;
            let dnet = if matches!(mode, Mode::SanFsn) {
                selection::fsn_san(net, cfg, &v1.vector, &tol())?
            } else {
                selection::ffn_san(net, cfg, &v1.vector, &tol())?
            };
            report.original_eigenvalue = Some(Measured::new(v1.value, tol().gap(&lb)));
            report.eigenvector = Some(measured_vector(&v1.vector, &lb));
            let reduced = selection::reduced_rate_san(&dnet, cfg)?;
            report.reduced_eigenvalue = Some(Measured::new(reduced, tol().gap(&lb)));
            let reach = selection::reachable_from_inputs(&dnet, cfg);
            if matches!(mode, Mode::SanFsn) {
                report.check("reachability", reach.iter().all(|&r| r), "every agent reachable from an input");
                report.check(
                    "rate",
                    reduced >= v1.value - tol().gap(&lb),
                    format!("reduced {reduced:.6} against original {:.6}", v1.value),
                );
            }
            report.reachable = Some(reach);
            dnet
        }
        Mode::SignedSanFsn => {
            let cfg = need_config(p)?;
            let (lbs, _, v1) = signed_parts(p)?;
            let dnet = selection::fsn_signed_san(net, cfg, &v1.vector, &tol())?;
            report.original_eigenvalue = Some(Measured::new(v1.value, tol().gap(&lbs)));
            report.eigenvector = Some(measured_vector(&v1.vector, &lbs));
            let reduced = selection::reduced_rate_san(&dnet, cfg)?;
            report.reduced_eigenvalue = Some(Measured::new(reduced, tol().gap(&lbs)));
            let reach = selection::reachable_from_inputs(&dnet, cfg);
            report.check("reachability", reach.iter().all(|&r| r), "every agent reachable from an input");
            report.check(
                "rate",
                reduced >= v1.value - tol().gap(&lbs),
                format!("reduced {reduced:.6} against original {:.6}", v1.value),
            );
            report.reachable = Some(reach);
            dnet
        }
        Mode::FanFsn => {
            let f = fan_parts(net)?;
            let dnet = selection::fsn_fan(net, &f.v2, &f.decomp, &f.cls, &tol())?;
            report.original_eigenvalue = Some(Measured::new(f.v2.value, tol().gap(&f.l)));
            report.eigenvector = Some(measured_vector(&f.v2.vector, &f.l));
            let reduced = selection::reduced_rate_fan(&dnet)?;
            report.reduced_eigenvalue = Some(Measured::new(reduced, tol().gap(&f.l)));
            let reach = selection::reachable_from_core(&dnet, &f.decomp, &f.cls);
            report.check("reachability", reach.iter().all(|&r| r), "every agent reachable from the core");
            report.reachable = Some(reach);
            report.blocks = Some(block_summary(&f.decomp, &f.cls));
            dnet
        }
    };
    fill_arcs(&mut report, net, &dnet);
    Ok(Selected { dnet, report })
}

fn select(file: &str, mode: Mode, out: Option<&Path>) -> Outcome {
    let p = load(file)?;
    let s = run_select(&p, mode)?;
    write_out(out, &io::emit_arcs_csv(&s.dnet))?;
    Ok(s.report.into())
}

/// Generator, drive and model of the original dynamics.
fn original_dynamics(p: &ParsedNetwork) -> Result<(Matrix, Option<Drive>, Model), Failure> {
    let net = &p.network;
    let n = net.node_count();
    Ok(match &p.config {
        Some(cfg) => {
            let drive = Drive { b: cfg.input_matrix(n), inputs: cfg.input_values() };
            if is_signed_san(p) {
                (graph::signed_perturbed_laplacian(net, cfg)?, Some(drive), Model::SignedSan)
            } else {
                (graph::perturbed_laplacian(net, cfg)?, Some(drive), Model::San)
            }
        }
        None if net.is_signed() => (graph::signed_laplacian(net), None, Model::SignedFan),
        None => (graph::laplacian(net), None, Model::Fan),
    })
}

fn dimension(p: &ParsedNetwork) -> usize {
    match (&p.x0, &p.config) {
        (Some(x0), _) => x0.ncols(),
        (None, Some(cfg)) => cfg.dimension(),
        (None, None) => 1,
    }
}

fn initial_state(p: &ParsedNetwork, offset: Option<&Matrix>, directions: &[Vector]) -> Matrix {
    p.x0.clone().unwrap_or_else(|| {
        tempo::generic_x0(p.network.node_count(), dimension(p), io::seed_from_env(), |x| {
            tempo::projections_clear(x, offset, directions)
        })
    })
}

fn rate_of(traj: &Trajectory, target: &Matrix) -> Option<f64> {
    dynamics::empirical_rate(traj, target).ok()
}

fn simulate(file: &str, reduced: Option<&Path>, sim: &SimulationConfig, out: Option<&Path>) -> Outcome {
    let p = load(file)?;
    let n = p.network.node_count();
    let (mut generator, drive, mut model) = original_dynamics(&p)?;
    let mut report = new_report(&p, "simulate");
    if let Some(path) = reduced {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let dnet = io::parse_arcs_csv(&text, n).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        generator = match &p.config {
            Some(cfg) => selection::reduced_perturbed(&dnet, cfg),
            None => graph::reduced_signed_laplacian(&dnet),
        };
        model = Model::ReducedDirected;
        fill_arcs(&mut report, &p.network, &dnet);
    }
    let x0 = initial_state(&p, None, &[]);
    let traj = dynamics::simulate(&generator, drive.as_ref(), &x0, sim, model)?;
    write_out(out, &io::emit_trajectory_csv(&traj))?;
    let last = traj.last();
    let target = match &drive {
        Some(d) => Some(dynamics::steady_state_san(&generator, &d.b, &d.inputs)?),
        None if reduced.is_none() && !p.network.is_signed() => {
            let mean = x0.row_sum() / n as f64;
            Some(Matrix::from_fn(n, x0.ncols(), |_, c| mean[c]))
        }
        None => None,
    };
    if let Some(target) = &target {
        report.empirical_rate = rate_of(&traj, target).map(|r| Measured::new(r, 1e-2 * r));
    }
    let mean = last.row_sum() / n as f64;
    report.consensus_value = Some(mean.iter().map(|&m| Measured::new(m, sim.dt)).collect());
    Ok(report.into())
}

fn parse_pairs(text: &str, n: usize) -> Result<Vec<(usize, usize)>, Failure> {
    text.split(',')
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("pair `{item}` is not of the form i:j")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&k| (1..=n).contains(&k))
                    .ok_or_else(|| Failure::Usage(format!("pair `{item}`: node ids run from 1 to {n}")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn tempo_cmd(file: &str, pairs: &str, first_component: bool, sim: &SimulationConfig, out: Option<&Path>) -> Outcome {
    let p = load(file)?;
    let n = p.network.node_count();
    let pairs = parse_pairs(pairs, n)?;
    let (generator, drive, model) = original_dynamics(&p)?;
    let mut report = new_report(&p, if first_component { "tempo-first-component" } else { "tempo" });
    let (vector, offset) = match &drive {
        Some(d) => {
            let v = if is_signed_san(&p) { signed_parts(&p)?.2 } else { spectral::principal_pair_perturbed(&generator, &tol())? };
            (v, Some(dynamics::steady_state_san(&generator, &d.b, &d.inputs)?))
        }
        None => (spectral::fiedler_pair(&generator, &tol())?, None),
    };
    let x0 = initial_state(&p, offset.as_ref(), std::slice::from_ref(&vector.vector));
    let traj = dynamics::simulate(&generator, drive.as_ref(), &x0, sim, model)?;
    let mut csv = String::from("t,i,j,value\n");
    for &(i, j) in &pairs {
        let series = if first_component {
            tempo::first_component_ratio(&traj, i, j)?
        } else {
            tempo::g_ratio_series(&traj, i, j)?
        };
        for (t, v) in series.times.iter().zip(&series.values) {
            let value = v.map_or(String::new(), |v| format!("{v:.16e}"));
            let _ = writeln!(csv, "{t},{i},{j},{value}");
        }
        let expected = if first_component {
            spectral::entry_ratio(&vector.vector, i, j, &tol())
        } else {
            tempo::tempo_limit_from_eigvec(&vector.vector, &[i], &[j], &tol())?
        };
        let settled = series.last_finite();
        let passed = match settled {
            Some(s) if expected.is_finite() => (s - expected).abs() <= 1e-2 * expected.abs().max(1e-12),
            Some(s) => s.abs() > 1e3,
            None => false,
        };
        let shown = settled.map_or("none".to_string(), |s| format!("{s:.6}"));
        report.check(format!("tempo {i}:{j}"), passed, format!("settled {shown}, eigenvector ratio {expected:.6}"));
    }
    write_out(out, &csv)?;
    report.eigenvector = Some(measured_vector(&vector.vector, &generator));
    Ok(report.into())
}

fn distributed(file: &str, params: &DistributedParams, fan_tree: bool, out: Option<&Path>) -> Outcome {
    let p = load(file)?;
    let net = &p.network;
    let (dnet, tempo_report, central, mode) = if fan_tree {
        let f = fan_parts(net)?;
        let x0 = initial_state(&p, None, std::slice::from_ref(&f.v2.vector));
        let (dnet, rep) = tempo::run_distributed_fan_tree(net, &x0, params, &tol())?;
        let central = selection::fsn_fan(net, &f.v2, &f.decomp, &f.cls, &tol())?;
        (dnet, rep, central, "distributed-fan-tree")
    } else {
        let Some(cfg) = &p.config else {
            return Err(Failure::Usage("network has no leaders; pass --fan-tree for the tree variant".into()));
        };
        if is_signed_san(&p) {
            return Err(Failure::Usage("the distributed selection runs on unsigned networks".into()));
        }
        let lb = graph::perturbed_laplacian(net, cfg)?;
        let v1 = spectral::principal_pair_perturbed(&lb, &tol())?;
        let steady = dynamics::steady_state_san(&lb, &cfg.input_matrix(net.node_count()), &cfg.input_values())?;
        let x0 = initial_state(&p, Some(&steady), std::slice::from_ref(&v1.vector));
        let (dnet, rep) = tempo::run_algorithm1(net, cfg, &x0, params)?;
        let central = selection::fsn_san(net, cfg, &v1.vector, &tol())?;
        (dnet, rep, central, "distributed-san")
    };
    let mut report = new_report(&p, mode);
    fill_arcs(&mut report, net, &dnet);
    report.rounds = Some(tempo_report.rounds);
    let same = dnet.arc_set() == central.arc_set();
    let detail = if same {
        format!("{} arcs, identical", dnet.arcs().len())
    } else {
        let d: Vec<_> = dnet.arc_set().symmetric_difference(&central.arc_set()).copied().collect();
        format!("arcs differ: {d:?}")
    };
    report.check("centralized-equality", same, detail);
    write_out(out, &io::emit_tempo_report_csv(&tempo_report))?;
    Ok(report.into())
}

fn compare(file: &str, sim: &SimulationConfig) -> Outcome {
    let p = load(file)?;
    let net = &p.network;
    let n = net.node_count();
    let mode = match &p.config {
        Some(_) if is_signed_san(&p) => Mode::SignedSanFsn,
        Some(_) => Mode::SanFsn,
        None => Mode::FanFsn,
    };
    let Selected { dnet, mut report } = run_select(&p, mode)?;
    report.mode = Some(format!("compare {}", report.mode.unwrap_or_default()));
    let (generator, drive, model) = original_dynamics(&p)?;
    let x0 = initial_state(&p, None, &[]);
    let original = dynamics::simulate(&generator, drive.as_ref(), &x0, sim, model)?;

    let (reduced_gen, target, reduced_target) = match (&p.config, &drive) {
        (Some(cfg), Some(d)) => {
            let g = selection::reduced_perturbed(&dnet, cfg);
            let t = dynamics::steady_state_san(&generator, &d.b, &d.inputs)?;
            let rt = dynamics::steady_state_san(&g, &d.b, &d.inputs)?;
            (g, t, rt)
        }
        _ => {
            let f = fan_parts(net)?;
            let mean = x0.row_sum() / n as f64;
            let t = Matrix::from_fn(n, x0.ncols(), |_, c| mean[c]);
            let value = dynamics::fan_fsn_consensus_value(&x0, &f.cls, &f.decomp);
            let rt = Matrix::from_fn(n, x0.ncols(), |_, c| value[c]);
            (graph::reduced_laplacian(&dnet), t, rt)
        }
    };
    let reduced = dynamics::simulate(&reduced_gen, drive.as_ref(), &x0, sim, Model::ReducedDirected)?;

    let reached = (reduced.last() - &reduced_target).amax();
    report.check("reduced-limit", reached < 1e-3, format!("max deviation {reached:.2e} from the predicted limit"));
    if drive.is_none() {
        let value: Vec<f64> = (0..x0.ncols()).map(|c| reduced_target[(0, c)]).collect();
        report.consensus_value = Some(value.iter().map(|&v| Measured::new(v, 1e-12)).collect());
        let simulated = reduced.last().row_sum() / n as f64;
        let gap = value.iter().zip(simulated.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.check("consensus-value", gap < 1e-3, format!("simulated mean within {gap:.2e} of the core average"));
    }
    match (rate_of(&original, &target), rate_of(&reduced, &reduced_target)) {
        (Some(a), Some(b)) => {
            report.empirical_rate = Some(Measured::new(b, 1e-2 * b));
            report.check("faster", b > a, format!("empirical rate {b:.4} on the reduced network against {a:.4}"));
        }
        (a, b) => report.check("faster", false, format!("rates could not be measured: original {a:?}, reduced {b:?}")),
    }
    Ok(report.into())
}
