use thiserror::Error;

/// Errors raised by the laboratory. Numeric payloads are stored as `f64`
/// regardless of the scalar type the computation ran in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid exponent p = {0} (need p >= 1)")]
    InvalidExponent(f64),
    #[error("spectrum violates Hermitian symmetry (max defect {defect:e})")]
    SymmetryViolation { defect: f64 },
    #[error("no lattice frequency with |n| in [{lo}, {hi}]")]
    EmptyFrequencyShell { lo: f64, hi: f64 },
    #[error("degenerate exponent fit: {0}")]
    DegenerateFit(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("step index {step} beyond Wiener path horizon {horizon}")]
    HorizonExceeded { step: usize, horizon: usize },
    #[error("noise coefficient bound violated at {count} sample(s); first at mode {mode}, x = {x}, xi = {xi}")]
    BoundViolation {
        count: usize,
        mode: usize,
        x: f64,
        xi: f64,
        report: Box<crate::noise::BoundReport>,
    },
    #[error("CFL violation in {stage}: dt = {dt:e} exceeds admissible {admissible:e}")]
    CflViolation {
        stage: &'static str,
        dt: f64,
        admissible: f64,
    },
    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveFailure { iterations: usize, residual: f64 },
    #[error("non-finite value at step {step}, index {index}")]
    NonFinite { step: usize, index: usize },
    #[error("t_end / dt = {ratio} is not an integer step count")]
    StepCount { ratio: f64 },
    #[error("value range [{lo}, {hi}] not covered by xi grid [{xi_min}, {xi_max}]")]
    RangeNotCovered {
        lo: f64,
        hi: f64,
        xi_min: f64,
        xi_max: f64,
    },
    #[error("coupled estimator requires equal seeds (got {0} and {1})")]
    CouplingMismatch(u64, u64),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("member {member} (seed {seed}) failed: {source}")]
    Member {
        member: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
