use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pivot block {0} is numerically singular")]
    SingularBlock(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("variable {variable} is constant at time index {time}")]
    DegenerateColumn { time: usize, variable: usize },
    #[error("invalid pair ({i}, {j}) for p = {p}")]
    InvalidPair { i: usize, j: usize, p: usize },
    #[error("invalid knot configuration: {0}")]
    InvalidKnots(String),
    #[error("precision matrix is not positive definite at t = {0}")]
    NotPd(f64),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("support mask needs at least one positive and one negative cell")]
    DegenerateMask,
    #[error("every grid cell failed to fit")]
    AllCellsFailed,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
