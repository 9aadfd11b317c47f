use thiserror::Error;

/// Errors produced by state construction, the optimizers and the chain solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcorrError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |rho - rho^dagger| = {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace deviates from one by {deviation:e}")]
    TraceDeviation { deviation: f64 },

    #[error("layout {da}x{db} does not match a state of dimension {dim}")]
    LayoutMismatch { da: usize, db: usize, dim: usize },

    #[error("expected dimension {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("entropic index q = {q} is invalid (need q > 0 and q != 1)")]
    InvalidQ { q: f64 },

    #[error("operation is not defined for the {family} family")]
    UnsupportedFamily { family: String },

    #[error("invalid POVM: {reason}")]
    InvalidPovm { reason: String },

    #[error("measurement direction must be a non-zero finite vector")]
    InvalidDirection,

    #[error("chain of {n} sites exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("site index out of range: ({i}, {j}) for {n} sites")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("field angle gamma = {gamma} must be below theta = {theta}")]
    GammaTooLarge { gamma: f64, theta: f64 },

    #[error("theta = {theta} outside (0, pi/2]")]
    InvalidTheta { theta: f64 },

    #[error("unsupported chain geometry: {reason}")]
    UnsupportedGeometry { reason: String },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("numerical failure: {reason}")]
    Numerical { reason: String },
}

pub type Result<T> = std::result::Result<T, QcorrError>;

impl QcorrError {
    /// Failures of a computation on valid input, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, QcorrError::Numerical { .. })
    }
}
