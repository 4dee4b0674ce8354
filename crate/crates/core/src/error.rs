use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),

    #[error("qubit count must be at least 1")]
    ZeroQubits,

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("state is not normalised (norm {norm:.15})")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("shift generator does not square to the identity (residual {residual:.3e})")]
    NotInvolution { residual: f64 },

    #[error("shift angle {theta} sits on a pole of the shift rule (|sin| = {sine:.3e})")]
    ShiftPole { theta: f64, sine: f64 },

    #[error("parameter index {index} out of range for {count} parameters")]
    ParameterIndex { index: usize, count: usize },

    #[error("parameter vector has length {found}, model expects {expected}")]
    ParameterLength { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fisher matrix is singular along {null_direction:?} (condition number {condition:.3e})")]
    SingularFisher {
        null_direction: Vec<f64>,
        condition: f64,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("numerical guard failed: {0}")]
    NumericalGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
