use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigen-solve for Gauss-Jacobi rule did not converge (m = {m}, lambda = {lambda})")]
    EigenSolve { m: usize, lambda: f64 },

    #[error("quadrature did not converge after {depth} levels (partial estimate {partial:e}, last increment {increment:e})")]
    QuadratureNonConvergence {
        depth: usize,
        partial: f64,
        increment: f64,
    },

    #[error("singular energy: points {i} and {j} coincide (inner product {inner})")]
    SingularPair { i: usize, j: usize, inner: f64 },

    #[error("coefficient {k} = {value:e} is negative beyond tolerance {tol:e}; potential is not positive definite")]
    NotPositiveDefinite { k: usize, value: f64, tol: f64 },

    #[error("sign certification failed: tail bound {tail_bound:e} exceeds |partial sum| {partial:e}")]
    Certification { partial: f64, tail_bound: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
