use thiserror::Error;

/// Errors raised by the library. Guard violations carry the offending size
/// and the limit so callers can map them to a distinct exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlqError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("feasible set is empty")]
    Infeasible,
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("point is not feasible")]
    PointNotFeasible,
    #[error("point is not in the domain of the function")]
    PointNotInDomain,
    #[error("point lies outside the function domain")]
    OutsideDomain,
    #[error("active pieces disagree at the point (spread {spread:.3e})")]
    InconsistentPieces { spread: f64 },
    #[error("too many constraints: {count} exceeds limit {limit}")]
    TooManyConstraints { count: usize, limit: usize },
    #[error("too many pieces: {count} exceeds limit {limit}")]
    TooManyPieces { count: usize, limit: usize },
    #[error("polytope is unbounded")]
    UnboundedSet,
    #[error("sample is outside every active tangent cone")]
    SampleOutsideCone,
    #[error("expected exactly one negative eigenvalue, found {negative}")]
    WrongInertia { negative: usize },
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("point is not a unit eigenvector with eigenvalue in [0,1]")]
    NotUnitEigenvector,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("second-order information unavailable: {0}")]
    SecondOrderUnavailable(String),
    #[error("objective is not a convex function composed with a PA map: {0}")]
    NotCompositeConvexPa(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl PlqError {
    /// True for the size-guard family of errors.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            PlqError::TooManyConstraints { .. } | PlqError::TooManyPieces { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, PlqError>;
