use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PasmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("expected a bit word of length {expected}, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("position {0:?} lies outside the deployment region")]
    OutsideRegion([f64; 3]),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("Gram matrix is singular; zero-forcing needs N_r >= N_t and full column rank")]
    SingularGram,

    #[error("search space of {candidates} candidates exceeds the guard of {guard}")]
    SearchGuard { candidates: u128, guard: u128 },

    #[error("{pairs} codeword pairs exceed the budget of {budget}; enable pair truncation")]
    PairGuard { pairs: u128, budget: u128 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PasmError {
    fn from(e: std::io::Error) -> Self {
        PasmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PasmError>;
