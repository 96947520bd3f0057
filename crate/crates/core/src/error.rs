use thiserror::Error;

/// Errors raised across the solver, the estimate harness and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("argument {z} outside the series radius {radius}")]
    BranchSelection { z: f64, radius: f64 },

    #[error("argument {z} outside the managed range [0, {max}]")]
    Range { z: f64, max: f64 },

    #[error("gamma function pole at {0}")]
    Pole(f64),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid resolves only {shells} dyadic shells, at least {required} required")]
    GridTooSmall { shells: usize, required: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("scaling window spans {decades:.2} decades, at least {required} required")]
    InsufficientRange { decades: f64, required: f64 },

    #[error("history holds {available} nodes, index {requested} requested")]
    InsufficientHistory { available: usize, requested: usize },

    #[error("time mesh too coarse: {nodes} nodes, at least {required} required")]
    MeshTooCoarse { nodes: usize, required: usize },

    #[error("iterate {iterate} blew up (non-finite values)")]
    BlowUp { iterate: usize },

    #[error("scaling not applicable: {0}")]
    ScalingNotApplicable(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
