//! Numerical kernels: exact second-order jets, small dense linear algebra,
//! Gauss-Legendre rules, and an adaptive Runge-Kutta integrator.

pub mod jet;
pub mod linalg;
pub mod ode;
pub mod quadrature;

pub use jet::{jet_elementary, Jet2, JetOp};
pub use linalg::{dot, gram_schmidt, norm, spd_solve, Cholesky, SquareMat};
pub use ode::{rk45_integrate, rk45_integrate_partial, OdeState};
pub use quadrature::{gauss_legendre, QuadratureRule};
