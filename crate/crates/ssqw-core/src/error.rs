//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong across the crate, from shape mismatches to
/// numerical-domain violations.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector lengths inconsistent with the declared dimension.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A parameter is outside its documented range.
    #[error("invalid value for {what}: {detail}")]
    InvalidValue { what: &'static str, detail: String },

    /// Evolution horizon exceeds what the truncated box can represent exactly.
    #[error("light-cone violation: t = {t} exceeds radius − 1 = {max_t} under zero truncation")]
    LightCone { t: usize, max_t: usize },

    /// A dense factorization or eigensolve was requested beyond the supported order.
    #[error("dense solve of order {order} exceeds budget {budget}; use a smaller radius (a sparse shift-invert path would be needed beyond this)")]
    BudgetExceeded { order: usize, budget: usize },

    /// λ too close to (or inside) the essential band, where the resolvent
    /// integrand is singular.
    #[error(
        "lambda = {lambda} is within {edge_guard} of the essential band [{band_lo}, {band_hi}]"
    )]
    InsideBand {
        lambda: f64,
        band_lo: f64,
        band_hi: f64,
        edge_guard: f64,
    },

    /// λ hit a point the operation explicitly excludes (e.g. the defect
    /// on-site value in the rank-one reduction).
    #[error("lambda = {lambda} excluded: {why}")]
    ExcludedPoint { lambda: f64, why: &'static str },

    /// The requested spectral gap is too narrow to search at the configured
    /// edge guard.
    #[error(
        "spectral gap {gap} has width {width:.3e}, below the searchable minimum {min_width:.3e}"
    )]
    GapTooNarrow {
        gap: &'static str,
        width: f64,
        min_width: f64,
    },

    /// The quadrature error estimate is too large to resolve a sign decision.
    #[error("quadrature too coarse near lambda = {lambda}: error estimate {error_estimate:.3e} exceeds the required resolution {needed:.3e}; increase the grid size or refinement level")]
    QuadratureTooCoarse {
        lambda: f64,
        error_estimate: f64,
        needed: f64,
    },

    /// An iterative method ran out of its iteration budget.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
