use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Mismatched vector/matrix dimensions, mode counts or ħ conventions.
    #[error("shape error: {0}")]
    Shape(String),

    /// A parameter or state outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Bargmann kernel (or another factorised matrix) is numerically singular.
    #[error("numerical degeneracy: {context} (condition estimate {condition:.3e})")]
    Degenerate { context: String, condition: f64 },

    /// A ket with vanishing vacuum amplitude cannot be put in the `<0|g> >= 0` gauge.
    #[error("gauge error: {0}; supply an explicit phase reference for this ket")]
    Gauge(String),

    /// `<g_k|g_j>` too small to divide by when rewriting an outer product.
    #[error("degenerate pair ({j}, {k}): overlap modulus {modulus:.3e} is below 1e-12")]
    DegeneratePair { j: usize, k: usize, modulus: f64 },

    /// Exponential-cost moment sums above the configured ceiling.
    #[error(
        "cost guard: moment order {requested} exceeds the ceiling {ceiling} for an \
         exponential-cost expansion ({terms} terms); raise TRACEDIST_MAX_EXP_STEPS to opt in"
    )]
    CostGuard {
        requested: usize,
        ceiling: usize,
        terms: f64,
    },

    /// The Krylov metric produced a clearly negative squared norm.
    #[error("metric inconsistency at step {step}: squared norm {value:.3e}")]
    MetricInconsistency { step: usize, value: f64 },

    /// Not enough moments for the requested Hankel size.
    #[error("need at least {required} moments, got {available}")]
    Length { required: usize, available: usize },

    /// Invalid user input to a front end (spec file, command flags).
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
