use thiserror::Error;

/// Errors produced by the numerics in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient list is empty")]
    EmptyCoefficients,

    #[error("|a_N| = {modulus} is not 1 within tolerance {tol}")]
    UnitModulusViolation { modulus: f64, tol: f64 },

    /// `a_{N-index} != a_N * conj(a_index)`; `deviation` is the larger of the
    /// componentwise absolute differences.
    #[error("self-reciprocal symmetry fails at index {index}: deviation {deviation} > {tol}")]
    SymmetryViolation { index: usize, deviation: f64, tol: f64 },

    #[error("invalid zero configuration: {0}")]
    InvalidConfiguration(String),

    #[error("root finder did not converge after {iterations} iterations (residual {residual})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("off-circle root {re}{im:+}i has no reflected partner within {radius}")]
    UnpairedRoot { re: f64, im: f64, radius: f64 },

    #[error("expected {expected} angles, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid ensemble specification: {0}")]
    InvalidSpec(String),

    /// Returned together with whatever was accepted before the budget ran out.
    #[error("attempt budget exhausted: accepted {accepted} of {requested} after {attempted} attempts")]
    AttemptBudgetExhausted {
        accepted: usize,
        requested: usize,
        attempted: u64,
    },

    #[error("eigenvalue solver failed on a {dim}x{dim} matrix")]
    EigensolveFailure { dim: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadratic form ({a}, {b}, {c}) is not positive definite")]
    NotPositiveDefinite { a: f64, b: f64, c: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("s = {re}{im:+}i is within {radius} of a pole")]
    PoleProximity { re: f64, im: f64, radius: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
