//! Embedded Runge-Kutta 4(5) integration (Dormand-Prince pair) with a
//! proportional-integral step controller.
//!
//! The driver advances with the fifth-order solution and controls the step
//! from the embedded fourth-order error estimate.  Steps are capped at one
//! sixteenth of the requested range so even smooth problems leave a usable
//! trajectory, and a step collapsing below 1e-13 of the range is reported as
//! stiffness or a singularity of the right-hand side.

use crate::error::{Error, Result};

/// One accepted point of a trajectory: abscissa, state, and the step that
/// produced it (the seed step for the initial point).
#[derive(Clone, Debug)]
pub struct OdeState {
    pub s: f64,
    pub y: Vec<f64>,
    pub step: f64,
}

const STAGES: usize = 7;
const A: [[f64; 6]; STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn check_tol(value: f64) -> Result<()> {
    if !(1e-13..=1e-2).contains(&value) {
        return Err(Error::OdeTolerance { value });
    }
    Ok(())
}

/// Integrates `rhs` from `s_range[0]` to `s_range[1]` (either direction) and
/// returns the accepted trajectory including both endpoints.
pub fn rk45_integrate<F>(
    rhs: F,
    y0: &[f64],
    s_range: [f64; 2],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<OdeState>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let (states, failure) = rk45_integrate_partial(rhs, y0, s_range, rel_tol, abs_tol)?;
    match failure {
        None => Ok(states),
        Some(err) => Err(err),
    }
}

/// Like [`rk45_integrate`] but on mid-range failure returns the trajectory
/// accepted so far together with the error, so callers can keep the partial
/// result (the outer `Err` is reserved for invalid tolerances).
pub fn rk45_integrate_partial<F>(
    mut rhs: F,
    y0: &[f64],
    s_range: [f64; 2],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(Vec<OdeState>, Option<Error>)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    check_tol(rel_tol)?;
    check_tol(abs_tol)?;
    let [s0, s1] = s_range;
    let span = (s1 - s0).abs();
    let dir = if s1 >= s0 { 1.0 } else { -1.0 };
    let dim = y0.len();

    let max_step = span / 16.0;
    let mut h = span / 256.0;
    let mut states = vec![OdeState { s: s0, y: y0.to_vec(), step: h }];
    if span == 0.0 {
        return Ok((states, None));
    }

    let mut s = s0;
    let mut y = y0.to_vec();
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;

    loop {
        let remaining = (s1 - s) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < 1e-13 * span {
            return Ok((states, Some(Error::StepUnderflow { s })));
        }
        let hs = h * dir;

        let mut k: Vec<Vec<f64>> = Vec::with_capacity(STAGES);
        let mut failed_stage = None;
        for stage in 0..STAGES {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for (yv, kv) in yi.iter_mut().zip(kj) {
                        *yv += hs * a * kv;
                    }
                }
            }
            match rhs(s + C[stage] * hs, &yi) {
                Ok(f) => {
                    assert_eq!(f.len(), dim, "right-hand side changed dimension");
                    k.push(f);
                }
                Err(e) => {
                    failed_stage = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed_stage {
            return Ok((states, Some(e)));
        }

        let mut y5 = y.clone();
        let mut err_vec = vec![0.0; dim];
        for (stage, kj) in k.iter().enumerate() {
            for i in 0..dim {
                y5[i] += hs * B5[stage] * kj[i];
                err_vec[i] += hs * (B5[stage] - B4[stage]) * kj[i];
            }
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            let e = err_vec[i] / scale;
            err_sq += e * e;
        }
        let err = (err_sq / dim as f64).sqrt();

        if err.is_finite() && err <= 1.0 {
            let s_next = if last { s1 } else { s + hs };
            s = s_next;
            y = y5;
            states.push(OdeState { s, y: y.clone(), step: h });
            if last {
                break;
            }
            let fac_max = if rejected { 1.0 } else { 5.0 };
            let fac = (0.9 * err.max(1e-20).powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0))
                .clamp(0.2, fac_max);
            err_old = err.max(1e-4);
            rejected = false;
            h = (h * fac).min(max_step);
        } else {
            let shrink = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 0.9)
            } else {
                0.2
            };
            h *= shrink;
            rejected = true;
        }
    }
    Ok((states, None))
}
