use crate::legs::LegId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown leg {0}")]
    UnknownLeg(LegId),
    #[error("invalid permutation: new order must be a permutation of the layout legs")]
    InvalidPermutation,
    #[error("matrix not Hermitian: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitian { residual: f64, tol: f64 },
    #[error("eigenvalue {0:.3e} below the negativity clamp threshold")]
    NegativeEigenvalue(f64),
    #[error("trace {0:.6e} outside the normalized range expected here")]
    NotNormalized(f64),
    #[error("singular Gram matrix: instrument elements are linearly dependent")]
    SingularGram,
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("observable support on the memory block leaves the instrument span (residual {0:.3e})")]
    OutOfSpan(f64),
    #[error("unknown outcome label {0:?}")]
    UnknownOutcome(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
