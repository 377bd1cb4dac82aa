use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants map to the failure modes of the numeric
/// kernels and the model constructions; none of them are recoverable by
/// retrying with the same inputs.
#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("integrand returned a non-finite value at x = {abscissa}")]
    Integrand { abscissa: f64 },

    #[error("failed to bracket a root: {0}")]
    Bracket(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("sampler initialization point has non-finite log-density")]
    MhInit,

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("unsupported assertion: {0}")]
    UnsupportedAssertion(String),

    #[error("statistic is not equivariant: offset {offset} changed T(x + c) - T(x) by {discrepancy:e}")]
    NotEquivariant { offset: f64, discrepancy: f64 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("tau choice does not complete eta to a basis: {0}")]
    TauChoice(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{failed} of {total} replications failed numerically; first failure: {first}")]
    RepFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}
