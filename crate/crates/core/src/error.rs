use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid qubit count {0}")]
    InvalidQubitCount(usize),
    #[error("register of {n} qubits exceeds the configured maximum of {max}")]
    RegisterTooLarge { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state vector is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),
    #[error("subsystems overlap on qubit {0}")]
    OverlappingSubsystems(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid stabilizer code: {0}")]
    InvalidCode(String),
    #[error("stabilizer dictionaries are supported for 1 <= n <= 4 qubits, got {0}")]
    UnsupportedDictionarySize(usize),
    #[error("dictionary cache: {0}")]
    Cache(String),
    #[error("linear program is infeasible (residual {0:.3e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("no sign change of the crossing function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("rejection sampler exhausted {0} attempts")]
    SamplerExhausted(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
