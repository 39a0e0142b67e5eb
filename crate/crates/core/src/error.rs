use thiserror::Error;

/// Errors raised by operator construction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{component} index {value} out of range (must be < {bound})")]
    Range {
        component: &'static str,
        value: u64,
        bound: u64,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not unitary: max |v^dagger v - 1| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("operator is not Hermitian: max |A - A^dagger| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },

    #[error("dense eigensolve of dimension {dim} exceeds cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal inconsistency in {what}: residual {residual:e}")]
    Inconsistent { what: String, residual: f64 },

    #[error("paths merge: basis states {first} and {second} both step to {target}")]
    Distinctness {
        first: usize,
        second: usize,
        target: usize,
    },

    #[error("step amplitude at basis state {index} has modulus {modulus} (must be 1)")]
    NormViolation { index: usize, modulus: f64 },

    #[error("power {power} of the operator is not a partial isometry (residual {residual:e})")]
    PpiViolation { power: usize, residual: f64 },

    #[error("decomposition incomplete: {0}")]
    Decomposition(String),

    #[error("Hamiltonian is not ballistic on the basis at state {state}: {reason}")]
    NonBallistic { state: usize, reason: String },

    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
