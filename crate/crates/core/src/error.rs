use thiserror::Error;

/// Errors for kernel, state and bound operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("vector is not {norm}-normalized: norm is {value}")]
    NotNormalized { norm: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("{qubits} qubits exceeds the dense backend limit of {max}")]
    QubitGuard { qubits: usize, max: usize },

    #[error("grid of {pairs} pairs exceeds the limit of {max}")]
    GridGuard { pairs: u128, max: u128 },

    #[error("feature dimension must be even and at least 2, got {0}")]
    InvalidFeatureDimension(usize),

    #[error("kernel has no spectral sampler")]
    NoSampler,

    #[error("finite differences diverge at the origin; kernel is not twice differentiable")]
    NonSmooth,

    #[error("matrix is not symmetric: max deviation {0:e}")]
    Asymmetric(f64),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("invalid Pauli word index {index} for {qubits} qubits")]
    InvalidPauliIndex { index: u64, qubits: usize },

    #[error("invalid trigonometric polynomial: {0}")]
    InvalidTrigPolynomial(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("preprocessor output {value} at coordinate {index} lies outside [-{bound}, {bound}]")]
    OutOfBox { index: usize, value: f64, bound: f64 },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("retained eigenvalue {index} is not positive: {value:e}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("feature vector is zero")]
    ZeroFeatureVector,
}

pub type Result<T> = std::result::Result<T, Error>;
