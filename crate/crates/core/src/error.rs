use thiserror::Error;

/// Every failure mode of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HhgError {
    #[error("photon-number cutoff {dim} too small: truncated norm deviates by {deviation:.3e}")]
    CutoffTooSmall { dim: usize, deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mode count mismatch: expected {expected}, got {got}")]
    ModeCountMismatch { expected: usize, got: usize },
    #[error("state variant {0} is not supported by this operation")]
    UnsupportedVariant(&'static str),
    #[error("operation requires a single-mode state, got {0} modes")]
    MultiModeUnsupported(usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("conditioning annihilates the state (chi_1 = 0 with the projector)")]
    DegenerateSuperposition,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grid too small: |W| = {boundary:.3e} on the boundary")]
    GridTooSmall { boundary: f64 },
    #[error("integrator produced a non-finite state at step {step}")]
    NonFiniteState { step: usize },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("non-uniform time grid at row {row}")]
    NonUniformGrid { row: usize },
    #[error("non-finite value at row {row}")]
    NonFiniteValue { row: usize },
    #[error("time {t} outside the dipole grid [{start}, {end}]")]
    OutOfGridRange { t: f64, start: f64, end: f64 },
    #[error("transition dipole series d_ij(t) required but absent")]
    MissingTransitionDipoles,
    #[error("emitted intensity vanishes, g2 is undefined")]
    DivisionByZeroIntensity,
    #[error("window too short: {0}")]
    WindowTooShort(String),
    #[error("atomic basis too small: {0} states (need at least 2)")]
    BasisTooSmall(usize),
    #[error("step too large: order-control estimate {estimate:.3e} exceeds {limit:.1e}; try dt <= {suggested_dt:.4e}")]
    StepTooLarge {
        estimate: f64,
        limit: f64,
        suggested_dt: f64,
    },
    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HhgError {
    fn from(e: std::io::Error) -> Self {
        HhgError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HhgError>;
