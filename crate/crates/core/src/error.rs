use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("times and weights must be non-empty lists of equal length (got {times} times, {weights} weights)")]
    ShapeMismatch { times: usize, weights: usize },
    #[error("atom times must be strictly increasing (t[{index}] = {value} after {previous})")]
    NonIncreasingTimes { index: usize, value: f64, previous: f64 },
    #[error("atom time t[{index}] = {value} is not positive")]
    NonPositiveTime { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("weight p[{index}] = {value} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("point is not in the stage-{stage} simplex: {reason}")]
    NotInSimplex { stage: usize, reason: String },
    #[error("stage {stage} has no successor (atom count {atoms})")]
    StageOverflow { stage: usize, atoms: usize },
    #[error("stage mismatch: expected {expected}, got {got}")]
    StageMismatch { expected: usize, got: usize },
    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("coupling weights are invalid: {0}")]
    WeightMismatch(String),
    #[error("time step {dt} exceeds the monotonicity bound dx^2 = {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("free simplex dimension {dimension} is not supported without the high-dimension override")]
    UnsupportedDimension { dimension: usize },
    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),
    #[error("no policy recorded for stage {0}")]
    MissingPolicy(usize),
    #[error("path {path} became non-finite")]
    NonFinitePath { path: usize },
    #[error("stop probability {0} outside [0, 1]")]
    QOutOfRange(f64),
    #[error("only {found} samples stopped at atom {atom}, need at least {required}")]
    InsufficientSamples { atom: usize, found: usize, required: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
