use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("point lies outside the feasible set (violation {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("cut pool is empty")]
    EmptyPool,

    #[error("operation requires an affine operator")]
    NotAffine,

    #[error("affine operator is not monotone: symmetric part has eigenvalue {0:.3e}")]
    NotMonotone(f64),

    #[error("penalty parameter escalated {0} times without reaching feasibility")]
    EscalationCap(usize),

    #[error("premise violated: {0}")]
    Premise(String),

    #[error("final gap {eps_tilde} exceeds the guaranteed bound {bound}")]
    BoundViolation { eps_tilde: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
