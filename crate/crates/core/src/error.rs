use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("negative eigenvalue {value:.3e} in state")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid subsystem selection {keep:?} for {qubits} qubits")]
    InvalidSubsystems { keep: Vec<usize>, qubits: usize },

    #[error("state vector norm is {0}, expected 1")]
    NotNormalized(f64),

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("probabilities sum to {0}, expected 1")]
    BadNormalization(f64),

    #[error("noise parameter {0} outside its admissible range")]
    NoiseOutOfRange(f64),

    #[error("sequences have unequal lengths {alice} and {bob}")]
    LengthMismatch { alice: usize, bob: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid letter {0:?}")]
    InvalidLetter(char),

    #[error("sifting protocol violation: {0}")]
    Sifting(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("session aborted: {reason}")]
    Aborted { reason: String },

    #[error("transport error: {0}")]
    Transport(String),
}
