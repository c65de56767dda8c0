//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("segment from {from:?} to {to:?} leaves the domain near t = {t}")]
    SegmentOutsideDomain {
        from: Vec<f64>,
        to: Vec<f64>,
        t: f64,
    },

    #[error("derivative order {requested} exceeds the field's max order {max}")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("order must be a positive integer")]
    OrderZero,

    #[error("arity mismatch: expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("theta must lie strictly inside (0, 1), got {0}")]
    ThetaOutOfRange(f64),

    #[error("increment must be finite, got {0}")]
    NonFiniteIncrement(f64),

    #[error("invalid interval: left endpoint {lo} exceeds right endpoint {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error(
        "quadrature did not converge: node-doubling disagreement {disagreement:e} \
         exceeds tolerance {tol:e}"
    )]
    QuadratureNonConvergence { disagreement: f64, tol: f64 },

    #[error(
        "no root of the remainder equation in [{lo}, {hi}] (pi = {pi}, best residual \
         {best_residual:e}); the derivative oracle or the domain is suspect"
    )]
    NoRootFound {
        lo: f64,
        hi: f64,
        pi: f64,
        best_residual: f64,
    },

    #[error("invalid selection policy: {0}")]
    InvalidPolicy(String),

    #[error("selector failed on {}/{total} outcomes; first: {} -> {}",
        failures.len(), failures[0].0, failures[0].1)]
    PerOutcome {
        total: usize,
        failures: Vec<(String, Box<Error>)>,
    },

    #[error("probability space is invalid: {0}")]
    InvalidSpace(String),

    #[error("random variable is not measurable: values differ inside atom {atom}")]
    NotMeasurable { atom: usize },

    #[error("random variables live on different probability spaces")]
    MismatchedSpaces,

    #[error("unsupported distribution spec '{0}'")]
    UnsupportedDistribution(String),

    #[error("unknown function spec '{0}'")]
    UnknownFunction(String),

    #[error("the transform has zero derivative at the mean ({mu}); the delta method degenerates")]
    ZeroDerivativeAtMean { mu: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
