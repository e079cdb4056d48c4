//! Tensor-product quadrature over chart boxes: chart volume and the
//! integral of the incompressibility residual `1 + <H, x>`.
//!
//! Over a closed submanifold the residual integrates to zero (the classical
//! Minkowski–Hsiung identity), which makes the second integrand a sharp
//! whole-manifold check on the frame pipeline: any systematic bias in H or
//! in the volume density shows up as a nonzero value.
//!
//! Nodes are evaluated in parallel but summed pairwise in a fixed order, so
//! results are identical run to run.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Immersion;
use crate::numerics::quadrature::gauss_legendre;

/// What to integrate against the chart's volume measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// The constant 1: total volume of the chart.
    Volume,
    /// The incompressibility residual `1 + <H, x>`; zero in total over any
    /// closed submanifold.
    MinkowskiHsiung,
}

/// A fully specified integration request.
#[derive(Clone)]
pub struct IntegrationJob {
    immersion: Immersion,
    orders: Vec<usize>,
    integrand: Integrand,
}

impl IntegrationJob {
    /// Per-axis quadrature orders; every order must be at least 2 and one
    /// order is required per intrinsic dimension.
    pub fn new(
        immersion: Immersion,
        orders: Vec<usize>,
        integrand: Integrand,
    ) -> Result<Self> {
        if orders.len() != immersion.intrinsic_dim() {
            return Err(Error::InvalidParameter {
                name: "orders",
                detail: format!(
                    "expected {} per-axis orders, got {}",
                    immersion.intrinsic_dim(),
                    orders.len()
                ),
            });
        }
        if let Some(bad) = orders.iter().find(|o| **o < 2) {
            return Err(Error::InvalidParameter {
                name: "orders",
                detail: format!("orders must be at least 2, got {bad}"),
            });
        }
        Ok(IntegrationJob { immersion, orders, integrand })
    }

    /// Same order along every axis.
    pub fn uniform(immersion: Immersion, order: usize, integrand: Integrand) -> Result<Self> {
        let n = immersion.intrinsic_dim();
        IntegrationJob::new(immersion, vec![order; n], integrand)
    }

    pub fn immersion(&self) -> &Immersion {
        &self.immersion
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn integrand(&self) -> Integrand {
        self.integrand
    }
}

/// Sums in a fixed pairwise order, independent of how the terms were
/// produced; keeps roundoff at O(log n) ulps and results reproducible.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        len => {
            let (lo, hi) = terms.split_at(len / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Tensor-product Gauss–Legendre integral of the job's integrand times the
/// volume density sqrt(det g) over the chart box.  A degenerate metric at
/// any node fails the whole integral, reporting that node's coordinates.
pub fn integrate(job: &IntegrationJob) -> Result<f64> {
    let n = job.immersion.intrinsic_dim();
    let mut rules = Vec::with_capacity(n);
    for (order, axis) in job.orders.iter().zip(job.immersion.axes()) {
        rules.push(gauss_legendre(*order)?.mapped(axis.lo, axis.hi));
    }
    let total: usize = job.orders.iter().product();
    let terms = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rest = flat;
            let mut u = vec![0.0; n];
            let mut weight = 1.0;
            // Last axis varies fastest so the flat order is lexicographic.
            for k in (0..n).rev() {
                let (nodes, weights) = &rules[k];
                let i = rest % nodes.len();
                rest /= nodes.len();
                u[k] = nodes[i];
                weight *= weights[i];
            }
            let frame = job.immersion.evaluate_frame(&u).map_err(|e| match e {
                already @ Error::DegenerateChart { .. } => already,
                other => Error::DegenerateChart { u: u.clone(), source: Box::new(other) },
            })?;
            let density = frame
                .metric
                .cholesky()
                .map_err(|e| Error::DegenerateChart { u: u.clone(), source: Box::new(e) })?
                .sqrt_det();
            let value = match job.integrand {
                Integrand::Volume => 1.0,
                Integrand::MinkowskiHsiung => frame.residual,
            };
            Ok(weight * density * value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Volume-weighted mean of the incompressibility residual: the residual
/// integral divided by the volume.  For a closed chart with constant
/// pointwise residual this recovers that constant (hence zero).
pub fn mean_residual(immersion: &Immersion, orders: &[usize]) -> Result<f64> {
    let volume = integrate(&IntegrationJob::new(
        immersion.clone(),
        orders.to_vec(),
        Integrand::Volume,
    )?)?;
    if volume.abs() < 1e-300 {
        return Err(Error::Domain {
            op: "mean_residual",
            detail: "chart has zero volume".to_string(),
        });
    }
    let residual = integrate(&IntegrationJob::new(
        immersion.clone(),
        orders.to_vec(),
        Integrand::MinkowskiHsiung,
    )?)?;
    Ok(residual / volume)
}
