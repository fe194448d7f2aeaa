use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} is out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{0}, {1}}} has zero or non-finite weight")]
    InvalidWeight(usize, usize),
    #[error("node {0} is linked to more than one input")]
    RepeatedLeader(usize),
    #[error("input index {index} is out of range 1..={m}")]
    InputOutOfRange { index: usize, m: usize },
    #[error("leader sign must be +1 or -1, got {0}")]
    InvalidSign(i32),
    #[error("inputs have inconsistent dimensions")]
    InputDimension,
    #[error("signed leader link on node {0}; use the signed perturbed Laplacian")]
    SignedLeader(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("signed graph is not structurally balanced")]
    Unbalanced,
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("requested {requested} eigenpairs from a {n}x{n} matrix")]
    TooManyEigenpairs { requested: usize, n: usize },
    #[error("Jacobi sweep did not converge (off-diagonal norm {0:e})")]
    NoConvergence(f64),
    #[error("eigenvalue {0:e} is numerically zero")]
    ZeroEigenvalue(f64),
    #[error("eigenvalue {0} is numerically repeated")]
    RepeatedEigenvalue(f64),
    #[error("eigenvector is not strictly single-signed (entry {node} = {value:e})")]
    MixedSign { node: usize, value: f64 },
    #[error("Fiedler classification failed: {0}")]
    Classification(String),
    #[error("Fiedler entries violate block-cut monotonicity by {deficit:e} between cut nodes {from} and {to}")]
    Monotonicity { from: usize, to: usize, deficit: f64 },
    #[error("strongly connected block {0:?} of the reduced generator is not symmetric")]
    NonSymmetricBlock(Vec<usize>),
    #[error("time step {dt} exceeds the explicit Euler stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("invalid simulation config: {0}")]
    SimulationConfig(String),
    #[error("matrix is singular")]
    Singular,
    #[error("error signal does not decay: {0}")]
    NotConverging(String),
    #[error("trajectory has {0} samples, need at least 2")]
    TrajectoryTooShort(usize),
    #[error("selected entries are all zero")]
    ZeroSelection,
    #[error("initial state is orthogonal to the dominant eigenspace")]
    DegenerateInitialState,
    #[error("graph is not a tree")]
    NotTree,
    #[error("tree has zero blocks (zero Fiedler entries besides a core node)")]
    ZeroBlocks,
    #[error("agents {pending:?} did not terminate within {round_cap} rounds")]
    NoTermination { round_cap: usize, pending: Vec<usize> },
    #[error("agent {agent}: sign of the first-component ratio toward {neighbor} did not settle")]
    UnsettledSign { agent: usize, neighbor: usize },
}
