//! Pointwise extrinsic geometry of parametric submanifolds of Euclidean
//! space, centered on the tangential part of the position vector field.
//!
//! The crate evaluates charts through exact second-order jets and derives
//! the metric, the second fundamental form, the mean curvature vector, the
//! tangential/normal split of the position field, its divergence along two
//! independent routes, and the Laplacian of the immersion.  On top of that
//! sit the classified families on which the tangential field has unit
//! negative pairing with the mean curvature (`families`) and quadrature of
//! the associated integral identity over closed charts (`integrals`).

pub mod error;
pub mod families;
pub mod geometry;
pub mod integrals;
pub mod numerics;

pub use error::{Error, Result};
pub use geometry::{Axis, BeltramiCheck, GeometryFrame, Immersion};
pub use numerics::Jet2;
