use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("qubit index {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("observable does not square to the identity (deviation {deviation:.3e})")]
    NotInvolution { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("measurement angle {0} outside (0, pi/2]")]
    PhiOutOfRange(f64),

    #[error("outcome {0} is not a binary outcome")]
    InvalidOutcome(u8),

    #[error("measurement kind does not match the requested Kraus construction")]
    KindMismatch,

    #[error("modular value diverges: vanishing detector overlap with numerator {numerator}")]
    DivergentModularValue { numerator: Complex64 },

    #[error("weak value undefined: vanishing detector overlap")]
    VanishingOverlap,

    #[error("observable is the identity")]
    IdentityObservable,

    #[error("cannot parse Pauli string {0:?}")]
    ParsePauli(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("numerical invariant violated: {name} (residual {residual:.3e})")]
    Invariant { name: &'static str, residual: f64 },
}
