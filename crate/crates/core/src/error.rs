use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid transport order p = {0} (must be >= 1)")]
    InvalidOrder(f64),
    #[error("marginal support does not match kernel sources")]
    SourceMismatch,
    #[error("transport problem {rows}x{cols} exceeds size cap {cap}x{cap}")]
    SizeCapExceeded { rows: usize, cols: usize, cap: usize },
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("selection is empty")]
    EmptySelection,
    #[error("instance too large for enumeration (K = {candidates}, M = {budget})")]
    EnumerationGuard { candidates: usize, budget: usize },
    #[error("budget M = 0 with nonempty particle set")]
    InfeasibleBudget,
    #[error("instance has no particles or no candidates")]
    EmptyInstance,
    #[error("primal recovery history is empty")]
    EmptyHistory,
    #[error("particle cloud for source {0} is empty")]
    EmptyCloud(usize),
    #[error("particle ({group}, {particle}) assigned to unselected candidate {candidate}")]
    UnselectedAssignment { group: usize, particle: usize, candidate: usize },
    #[error("stage {stage}: budget {budget} is infeasible for {candidates} candidates")]
    StageBudgetInfeasible { stage: usize, budget: usize, candidates: usize },
    #[error("no value for a kernel support point at stage {0}")]
    MissingValue(usize),
    #[error("semideviation weight kappa = {0} outside [0, 1]")]
    InvalidKappa(f64),
    #[error("index {index} out of range for horizon {horizon}")]
    IndexRange { index: usize, horizon: usize },
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Sobol dimension {0} unsupported")]
    DimUnsupported(usize),
    #[error("degenerate box in coordinate {0}")]
    DegenerateBox(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("config validation error: {0}")]
    ConfigValidation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
