use thiserror::Error;

/// Errors raised by the exact engine and its numeric cross-checks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("evaluation point is a pole")]
    PoleAtEvaluation,

    #[error("v = sqrt(q) is irrational at q = {0} and the value has odd powers of v")]
    IrrationalPoint(String),

    #[error("substitution z{var} := {target} annihilates a factor with negative power")]
    SubstituteIntoPole { var: usize, target: String },

    #[error("pole of z{var} on the unit circle at {location}")]
    PoleOnContour { var: usize, location: String },

    #[error("factor {factor} is not a product of linear factors in z{var} over the coefficient field")]
    NonLinearPole { var: usize, factor: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unknown catalog label `{0}`")]
    UnknownLabel(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numeric sample too close to a singularity")]
    NearSingular,
}

pub type Result<T> = std::result::Result<T, Error>;
