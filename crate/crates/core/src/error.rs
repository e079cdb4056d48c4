//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the numerical kernels and the geometry built on top of
/// them.  Degeneracies are reported as hard errors rather than NaNs so that
/// a poisoned value can never propagate silently through a pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An elementary operation was evaluated outside its domain
    /// (square root of a negative value, division by zero, ...).
    #[error("domain error in `{op}`: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Orthonormalization hit a vector that is (numerically) dependent on
    /// its predecessors.
    #[error("rank deficiency at vector {index}: projected norm {norm:.3e} is below 1e-10")]
    RankDeficient { index: usize, norm: f64 },

    /// A Cholesky pivot fell below the positivity threshold.
    #[error("matrix is not positive definite: pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:.3e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("quadrature order {order} outside the supported range 1..=128")]
    QuadratureOrder { order: usize },

    #[error("ODE tolerance {value:.3e} outside [1e-13, 1e-2]")]
    OdeTolerance { value: f64 },

    /// The adaptive step controller shrank the step below the useful range;
    /// the right-hand side is stiff or singular near the reported abscissa.
    #[error("ODE step size underflow at s = {s}")]
    StepUnderflow { s: f64 },

    /// The profile equation for surfaces of revolution degenerates where
    /// r (r - s r') vanishes.
    #[error("singular profile equation at s = {s}: r (r - s r') vanished")]
    SingularOde { s: f64 },

    /// The chart lost rank (or its metric lost positivity) at a point.
    #[error("degenerate chart at u = {u:?}: {source}")]
    DegenerateChart {
        u: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("parameter {u:?} lies outside the chart domain on axis {axis}")]
    OutsideDomain { u: Vec<f64>, axis: usize },

    /// A vector handed to the shape operator was not normal to the tangent
    /// space.
    #[error("vector is not normal to the tangent space: <xi, e_{index}> = {dot:.3e}")]
    NotNormal { index: usize, dot: f64 },

    /// A finite-difference stencil would leave the chart through a
    /// non-periodic boundary.
    #[error("point too close to a non-periodic boundary on axis {axis} for stencil width {width:.3e}")]
    NearBoundary { axis: usize, width: f64 },

    /// A curve that must be parameterized by arclength is not.
    #[error("curve is not unit speed: |gamma'| = {speed} at the sampled parameter")]
    NotUnitSpeed { speed: f64 },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("invalid integration job: {detail}")]
    InvalidJob { detail: String },
}
