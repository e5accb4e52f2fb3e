use alloc::string::String;
use num_complex::Complex64;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge (last two estimates {last} and {previous})")]
    QuadratureFailure { last: Complex64, previous: Complex64 },
    #[error("independent evaluations disagree: {first} vs {second}")]
    Consistency { first: Complex64, second: Complex64 },
    #[error("backward Macdonald recurrence is degenerate for u^2 = v^2")]
    DegenerateRecurrence,
    #[error("moment M({m},{n}) is not supported: {reason}")]
    UnsupportedMoment { m: u32, n: u32, reason: &'static str },
    #[error("expansion order {order} is not supported (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("Pade denominator vanishes at the evaluation point")]
    PoleAtEvaluation,
    #[error("Pade table is degenerate down to [{l}/{m}]")]
    DegenerateTable { l: usize, m: usize },
    #[error("the logarithmic moment is not integrable")]
    NotIntegrable,
    #[error("result overflowed or produced a non-finite value")]
    NonFinite,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
