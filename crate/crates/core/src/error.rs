use thiserror::Error;

/// Crate-wide error type. Variants carry enough context (layer, step,
/// field) to point at the offending piece of a run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at layer {layer}: expected {expected}, got {got}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-finite value produced in layer {layer}")]
    NonFinite { layer: usize },
    #[error("non-finite update at step {step}")]
    NonFiniteUpdate { step: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch size {requested} exceeds dataset size {available}")]
    BatchTooLarge { requested: usize, available: usize },
    #[error("unknown optimizer '{0}'")]
    UnknownOptimizer(String),
    #[error("unknown experiment '{name}'; valid names: {valid}")]
    UnknownExperiment { name: String, valid: String },
    #[error("config error in field '{field}': {message}")]
    Config { field: String, message: String },
    #[error("step {0} is not recorded in the trajectory")]
    StepNotRecorded(usize),
    #[error("optimizer state missing at step {step}: {what}")]
    StateMissing { step: usize, what: &'static str },
    #[error("record was produced by optimizer '{found}', expected '{expected}'")]
    OptimizerMismatch { expected: String, found: String },
    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),
    #[error(
        "recording stride {0} is too coarse for an exact two-time reconstruction; re-record with stride 1"
    )]
    StrideTooCoarse(usize),
    #[error("runs do not share the same initialization")]
    MismatchedInit,
    #[error("memory budget exceeded: {need} floats > {budget}; increase the recording stride")]
    MemoryBudget { need: usize, budget: usize },
    #[error("C({n},{b}) subsets exceed the exact-enumeration limit; use the sample estimate")]
    CombinatorialOverflow { n: usize, b: usize },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    Asymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {eig:.3e} below -1e-10 * trace)")]
    NotPsd { eig: f64 },
    #[error("preconditioner has a non-positive diagonal entry at index {0}")]
    SingularPreconditioner(usize),
    #[error("trajectory file has unsupported version {found} (reader supports {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("trajectory file checksum mismatch")]
    ChecksumMismatch,
    #[error("malformed trajectory file: {0}")]
    MalformedFile(String),
    #[error("integer overflow in exact rank elimination")]
    RankOverflow,
    #[error("artifact checksum mismatch: {0}")]
    ArtifactMismatch(String),
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
