//! Generators for the chart families used throughout the crate.
//!
//! The interesting members are the ones whose tangential position field is
//! divergence free (`<H, x> = -1` pointwise): planar spirals with curvature
//! proportional to 1/sqrt(s), the flat hypercylinders over a specific
//! clothoid-like profile, origin-centered hyperspheres, surfaces of
//! revolution whose profile solves a second-order ODE, and products of
//! origin-centered circles and spirals in 4-space.  Cones over circles sit
//! at the opposite extreme: their position field is purely tangential and
//! has constant divergence.
//!
//! Every constructor validates its parameters and returns an [`Immersion`]
//! whose chart is evaluated through exact jets; closed-form curvatures and
//! ODE residuals are exposed alongside so the generated charts can be
//! cross-examined against the equations that define them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, Immersion};
use crate::numerics::jet::Jet2;
use crate::numerics::ode::{rk45_integrate, rk45_integrate_partial, OdeState};

// ---------------------------------------------------------------------------
// Planar spirals
// ---------------------------------------------------------------------------

/// Unit-speed planar spiral with curvature c / (2 sqrt(s)).
///
/// With phi = c sqrt(s) the trace is
/// (2/c^2) (cos phi + phi sin phi, sin phi - phi cos phi); its tangential
/// position field is divergence free for every nonzero c.
pub fn spiral_curve(c: f64, s_min: f64, s_max: f64) -> Result<Immersion> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c",
            detail: format!("curvature scale must be finite and nonzero, got {c}"),
        });
    }
    if s_min <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "s_min",
            detail: format!("arclength must stay positive, got {s_min}"),
        });
    }
    let axis = Axis::new(s_min, s_max, false)?;
    let k = 2.0 / (c * c);
    Immersion::new(1, 2, vec![axis], move |u| {
        let phi = u[0].sqrt()?.scale(c);
        let (sin, cos) = (phi.sin(), phi.cos());
        let x = cos.add(&phi.mul(&sin)).scale(k);
        let y = sin.sub(&phi.mul(&cos)).scale(k);
        Ok(vec![x, y])
    })
}

/// Closed-form curvature of [`spiral_curve`]: c / (2 sqrt(s)).
pub fn spiral_curvature(c: f64, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: format!("arclength must be positive, got {s}"),
        });
    }
    Ok(c / (2.0 * s.sqrt()))
}

/// Residual of the planar defining equation kappa'/kappa^3 = -2/b with
/// b = c^2, evaluated with exact jets of the closed-form curvature.
/// Vanishes identically on the spiral family.
pub fn curvature_ode_residual_planar(c: f64, s: f64) -> Result<f64> {
    if c == 0.0 || s <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: format!("need c != 0 and s > 0, got c = {c}, s = {s}"),
        });
    }
    let sj = Jet2::variable(s, 0, 1);
    let kappa = sj.powf(-0.5)?.scale(0.5 * c);
    let k = kappa.value();
    let kp = kappa.grad_at(0);
    Ok(kp / (k * k * k) + 2.0 / (c * c))
}

// ---------------------------------------------------------------------------
// Hypercylinders over the clothoid-like profile
// ---------------------------------------------------------------------------

fn check_cylinder_params(n: usize, c: f64) -> Result<f64> {
    if !(2..=7).contains(&n) {
        return Err(Error::InvalidParameter {
            name: "n",
            detail: format!("intrinsic dimension must lie in 2..=7, got {n}"),
        });
    }
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c",
            detail: format!("scale must be finite and nonzero, got {c}"),
        });
    }
    Ok(c.abs())
}

/// Planar profile of the incompressible hypercylinder family: a unit-speed
/// curve on |s| < c with curvature sqrt(n) / (sqrt(n-1) sqrt(c^2 - s^2)),
/// pinned so that <gamma, gamma''> = -n.  The chart stops `margin` short of
/// the curvature blow-up at |s| = c.
pub fn cylinder_profile(n: usize, c: f64, margin: f64) -> Result<Immersion> {
    let a = check_cylinder_params(n, c)?;
    if margin <= 0.0 || margin >= a {
        return Err(Error::InvalidParameter {
            name: "margin",
            detail: format!("need 0 < margin < |c|, got {margin}"),
        });
    }
    let axis = Axis::new(-a + margin, a - margin, false)?;
    Immersion::new(1, 2, vec![axis], move |u| {
        let [x, y] = planar_profile_jets(&u[0], n, c)?;
        Ok(vec![x, y])
    })
}

/// Flat hypercylinder `gamma x E^{n-1}` over [`cylinder_profile`], the only
/// non-spherical hypersurface family with a divergence-free tangential
/// position field.  Ruling coordinates range over `t_range`.
pub fn hypercylinder_with(
    n: usize,
    c: f64,
    margin: f64,
    t_range: [f64; 2],
) -> Result<Immersion> {
    let profile = cylinder_profile(n, c, margin)?;
    let s_axis = profile.axes()[0];
    let mut axes = vec![s_axis];
    for _ in 1..n {
        axes.push(Axis::new(t_range[0], t_range[1], false)?);
    }
    let m = n + 1;
    Immersion::new(n, m, axes, move |u| {
        let [x, y] = planar_profile_jets(&u[0], n, c)?;
        let mut coords = vec![x, y];
        coords.extend(u[1..].iter().cloned());
        Ok(coords)
    })
}

// The profile formula over jets in however many parameters the caller
// seeded, so it can serve as the leading coordinates of the cylinder chart.
fn planar_profile_jets(s: &Jet2, n: usize, c: f64) -> Result<[Jet2; 2]> {
    let a = c.abs();
    let nf = n as f64;
    let ang_scale = (nf / (nf - 1.0)).sqrt();
    let amp = (nf * (nf - 1.0)).sqrt();
    let w = s.mul(s).neg().add_scalar(a * a).sqrt()?;
    let k = s.atan2(&w)?.scale(ang_scale);
    let (sin_k, cos_k) = (k.sin(), k.cos());
    let first = s.scale(1.0 - nf);
    let second = w.scale(amp);
    let x = first.mul(&cos_k).add(&second.mul(&sin_k));
    let y = first.mul(&sin_k).sub(&second.mul(&cos_k));
    Ok([x, y])
}

/// [`hypercylinder_with`] using the default guard band (1e-3 |c|) and ruling
/// range [0, 1].
pub fn hypercylinder(n: usize, c: f64) -> Result<Immersion> {
    hypercylinder_with(n, c, 1e-3 * c.abs(), [0.0, 1.0])
}

/// Closed-form curvature of [`cylinder_profile`]:
/// sqrt(n) / (sqrt(n-1) sqrt(c^2 - s^2)).
pub fn hypercylinder_curvature(n: usize, c: f64, s: f64) -> Result<f64> {
    let a = check_cylinder_params(n, c)?;
    if s.abs() >= a {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: format!("need |s| < |c| = {a}, got {s}"),
        });
    }
    let nf = n as f64;
    Ok(nf.sqrt() / ((nf - 1.0).sqrt() * (a * a - s * s).sqrt()))
}

/// Residual of the hypersurface defining equation
/// n (kappa kappa'' - 3 kappa'^2) = (n - 1) kappa^4, evaluated with exact
/// jets of the closed-form curvature.  Vanishes identically on the
/// hypercylinder family and not on the spiral one.
pub fn curvature_ode_residual_cylinder(n: usize, c: f64, s: f64) -> Result<f64> {
    let a = check_cylinder_params(n, c)?;
    if s.abs() >= a {
        return Err(Error::InvalidParameter {
            name: "s",
            detail: format!("need |s| < |c| = {a}, got {s}"),
        });
    }
    let nf = n as f64;
    let sj = Jet2::variable(s, 0, 1);
    let kappa = sj
        .mul(&sj)
        .neg()
        .add_scalar(a * a)
        .powf(-0.5)?
        .scale(nf.sqrt() / (nf - 1.0).sqrt());
    let k = kappa.value();
    let kp = kappa.grad_at(0);
    let kpp = kappa.hess_at(0, 0);
    Ok(nf * (k * kpp - 3.0 * kp * kp) - (nf - 1.0) * k.powi(4))
}

// ---------------------------------------------------------------------------
// Hyperspheres, circles, cones
// ---------------------------------------------------------------------------

const POLE_MARGIN: f64 = 1e-6;

/// Origin-centered n-sphere of radius r in polyspherical coordinates.
/// Polar axes stop `1e-6` short of the poles, where the chart loses rank.
pub fn hypersphere(n: usize, r: f64) -> Result<Immersion> {
    if !(1..=7).contains(&n) {
        return Err(Error::InvalidParameter {
            name: "n",
            detail: format!("intrinsic dimension must lie in 1..=7, got {n}"),
        });
    }
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r",
            detail: format!("radius must be positive, got {r}"),
        });
    }
    let mut axes = Vec::with_capacity(n);
    for _ in 0..n.saturating_sub(1) {
        axes.push(Axis::new(POLE_MARGIN, std::f64::consts::PI - POLE_MARGIN, false)?);
    }
    axes.push(Axis::new(0.0, 2.0 * std::f64::consts::PI, true)?);
    Immersion::new(n, n + 1, axes, move |u| {
        let dim = u.len();
        let mut coords = Vec::with_capacity(dim + 1);
        let mut running = Jet2::constant(r, dim);
        for angle in u {
            coords.push(running.mul(&angle.cos()));
            running = running.mul(&angle.sin());
        }
        coords.push(running);
        Ok(coords)
    })
}

/// Origin-centered planar circle of radius r (the one-dimensional sphere).
pub fn circle(r: f64) -> Result<Immersion> {
    hypersphere(1, r)
}

/// Cone over a horizontal circle of radius rho in the unit sphere:
/// (theta, t) -> t (rho cos theta, rho sin theta, sqrt(1 - rho^2)).
/// The position vector is purely tangential, so <H, x> = 0 and the
/// tangential field has constant divergence 2.
pub fn cone_over_circle(rho: f64, t_range: [f64; 2]) -> Result<Immersion> {
    if !(0.0 < rho && rho < 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            detail: format!("base radius must lie in (0, 1), got {rho}"),
        });
    }
    if t_range[0] <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "t_range",
            detail: format!("the ray parameter must stay positive, got {}", t_range[0]),
        });
    }
    let height = (1.0 - rho * rho).sqrt();
    let axes = vec![
        Axis::new(0.0, 2.0 * std::f64::consts::PI, true)?,
        Axis::new(t_range[0], t_range[1], false)?,
    ];
    Immersion::new(2, 3, axes, move |u| {
        let (theta, t) = (&u[0], &u[1]);
        Ok(vec![
            t.mul(&theta.cos()).scale(rho),
            t.mul(&theta.sin()).scale(rho),
            t.scale(height),
        ])
    })
}

// ---------------------------------------------------------------------------
// Surfaces of revolution
// ---------------------------------------------------------------------------

/// Second derivative of a revolution profile with a divergence-free
/// tangential field:
/// r'' = -(1 + r'^2)(r + s r' + 2 r r'^2) / (r (r - s r')).
/// The equation is singular where r (r - s r') vanishes.
pub fn revolution_rhs(s: f64, r: f64, rp: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            detail: format!("profile radius must be positive, got r({s}) = {r}"),
        });
    }
    let denom = r * (r - s * rp);
    if denom.abs() < 1e-12 {
        return Err(Error::SingularOde { s });
    }
    Ok(-(1.0 + rp * rp) * (r + s * rp + 2.0 * r * rp * rp) / denom)
}

/// Defining-equation residual for revolution profiles:
/// (1 + r'^2)(r + s r' + 2 r r'^2) + r (r - s r') r''.
pub fn revolution_ode_residual(s: f64, r: f64, rp: f64, rpp: f64) -> f64 {
    (1.0 + rp * rp) * (r + s * rp + 2.0 * r * rp * rp) + r * (r - s * rp) * rpp
}

/// One sample of a numerically integrated profile.
#[derive(Clone, Copy, Debug)]
pub struct ProfileSample {
    pub s: f64,
    pub r: f64,
    pub rp: f64,
}

/// Numeric revolution profile: samples of (r, r') strictly increasing in s,
/// with r > 0 throughout.
#[derive(Clone, Debug)]
pub struct ProfileCurve {
    samples: Vec<ProfileSample>,
    tol: f64,
}

impl ProfileCurve {
    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn s_range(&self) -> [f64; 2] {
        [self.samples[0].s, self.samples[self.samples.len() - 1].s]
    }
}

fn states_to_profile(states: Vec<OdeState>, backwards: bool, tol: f64) -> ProfileCurve {
    let mut samples: Vec<ProfileSample> = states
        .into_iter()
        .map(|st| ProfileSample { s: st.s, r: st.y[0], rp: st.y[1] })
        .collect();
    if backwards {
        samples.reverse();
    }
    ProfileCurve { samples, tol }
}

/// Integrates the profile equation from (r, r') = (r0, r0p) at
/// `s_range[0]` to `s_range[1]` with the adaptive integrator; stops with an
/// error at singularities of the equation.
pub fn solve_revolution_profile(
    r0: f64,
    r0p: f64,
    s_range: [f64; 2],
    tol: f64,
) -> Result<ProfileCurve> {
    let (profile, failure) = solve_revolution_profile_partial(r0, r0p, s_range, tol)?;
    match failure {
        None => Ok(profile),
        Some(err) => Err(err),
    }
}

/// Like [`solve_revolution_profile`] but keeps whatever trajectory was
/// accepted before a mid-range singularity; the outer `Err` is reserved for
/// invalid arguments.
pub fn solve_revolution_profile_partial(
    r0: f64,
    r0p: f64,
    s_range: [f64; 2],
    tol: f64,
) -> Result<(ProfileCurve, Option<Error>)> {
    if r0 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r0",
            detail: format!("initial radius must be positive, got {r0}"),
        });
    }
    let rhs = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
        let rpp = revolution_rhs(s, y[0], y[1])?;
        Ok(vec![y[1], rpp])
    };
    let (states, failure) =
        rk45_integrate_partial(rhs, &[r0, r0p], s_range, tol, tol)?;
    let backwards = s_range[1] < s_range[0];
    Ok((states_to_profile(states, backwards, tol), failure))
}

/// Per-sample defect of a numeric profile: each accepted step is re-run at a
/// thousandfold tighter tolerance and the difference at the far end is
/// reported (first entry 0).  Bounded by roughly the integration tolerance
/// when the trajectory is healthy; pairs whose re-integration cannot reach
/// the far end (a near-singular tail) report infinity.
pub fn profile_defects(profile: &ProfileCurve) -> Vec<f64> {
    let ref_tol = (profile.tol * 1e-3).clamp(1e-13, 1e-2);
    let samples = profile.samples();
    let mut defects = vec![0.0];
    for pair in samples.windows(2) {
        let [a, b] = [pair[0], pair[1]];
        let rhs = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![y[1], revolution_rhs(s, y[0], y[1])?])
        };
        let refined = rk45_integrate_partial(rhs, &[a.r, a.rp], [a.s, b.s], ref_tol, ref_tol)
            .expect("reference tolerance is always in range");
        let defect = match refined {
            (states, None) => {
                let last = states.last().expect("trajectory includes endpoints");
                (b.r - last.y[0]).abs().max((b.rp - last.y[1]).abs())
            }
            (_, Some(_)) => f64::INFINITY,
        };
        defects.push(defect);
    }
    defects
}

/// Surface of revolution (s, t) -> (r(s) cos t, r(s) sin t, s) over an
/// arbitrary profile reporting (r, r', r'') at each s.
pub fn revolution_surface<F>(profile: F, s_range: [f64; 2]) -> Result<Immersion>
where
    F: Fn(f64) -> Result<(f64, f64, f64)> + Send + Sync + 'static,
{
    let axes = vec![
        Axis::new(s_range[0], s_range[1], false)?,
        Axis::new(0.0, 2.0 * std::f64::consts::PI, true)?,
    ];
    Immersion::new(2, 3, axes, move |u| {
        let (s, t) = (&u[0], &u[1]);
        let (r, rp, rpp) = profile(s.value())?;
        if r <= 0.0 {
            return Err(Error::Domain {
                op: "revolution_profile",
                detail: format!("r({}) = {r} is not positive", s.value()),
            });
        }
        let rj = Jet2::from_parts(r, vec![rp, 0.0], vec![rpp, 0.0, 0.0, 0.0])?;
        Ok(vec![rj.mul(&t.cos()), rj.mul(&t.sin()), s.clone()])
    })
}

/// Surface of revolution over the numeric profile grown from
/// (r, r')(0) = (r0, r0p); each chart evaluation re-integrates the profile
/// equation from 0 to the requested s, so the chart stays a pure function.
pub fn revolution_surface_from_ode(
    r0: f64,
    r0p: f64,
    s_range: [f64; 2],
    tol: f64,
) -> Result<Immersion> {
    if r0 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r0",
            detail: format!("initial radius must be positive, got {r0}"),
        });
    }
    if !(s_range[0] <= 0.0 && 0.0 <= s_range[1]) {
        return Err(Error::InvalidParameter {
            name: "s_range",
            detail: format!("the initial condition sits at s = 0, outside {s_range:?}"),
        });
    }
    let profile = move |s: f64| -> Result<(f64, f64, f64)> {
        let rhs = |sv: f64, y: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![y[1], revolution_rhs(sv, y[0], y[1])?])
        };
        let states = rk45_integrate(rhs, &[r0, r0p], [0.0, s], tol, tol)?;
        let last = states.last().expect("trajectory includes endpoints");
        let (r, rp) = (last.y[0], last.y[1]);
        Ok((r, rp, revolution_rhs(s, r, rp)?))
    };
    revolution_surface(profile, s_range)
}

/// Closed-form mean curvature vector of a revolution surface at (s, t),
/// given the profile data there:
/// H = (1 + r'^2 - r r'') / (2 r (1 + r'^2)^2) * (-cos t, -sin t, r').
pub fn revolution_mean_curvature(r: f64, rp: f64, rpp: f64, t: f64) -> Result<[f64; 3]> {
    if r <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            detail: format!("profile radius must be positive, got {r}"),
        });
    }
    let one_rp2 = 1.0 + rp * rp;
    let factor = (one_rp2 - r * rpp) / (2.0 * r * one_rp2 * one_rp2);
    Ok([-factor * t.cos(), -factor * t.sin(), factor * rp])
}

/// Torus of revolution with ring radius R and tube radius r (0 < r < R),
/// the standard closed chart for integral checks.
pub fn torus(ring_radius: f64, tube_radius: f64) -> Result<Immersion> {
    if !(tube_radius > 0.0 && tube_radius < ring_radius) {
        return Err(Error::InvalidParameter {
            name: "tube_radius",
            detail: format!("need 0 < tube < ring, got tube = {tube_radius}, ring = {ring_radius}"),
        });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let axes = vec![Axis::new(0.0, two_pi, true)?, Axis::new(0.0, two_pi, true)?];
    Immersion::new(2, 3, axes, move |u| {
        let (a, b) = (&u[0], &u[1]);
        let ring = b.cos().scale(tube_radius).add_scalar(ring_radius);
        Ok(vec![ring.mul(&a.cos()), ring.mul(&a.sin()), b.sin().scale(tube_radius)])
    })
}

// ---------------------------------------------------------------------------
// Products of plane curves in 4-space
// ---------------------------------------------------------------------------

/// Product of two origin-centered circles traversed by arclength,
/// (s, t) -> (beta(s), gamma(t)) in 4-space.  The tangential position field
/// is divergence free for every pair of radii.
pub fn product_surface(radius_a: f64, radius_b: f64) -> Result<Immersion> {
    if radius_a <= 0.0 || radius_b <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "radius",
            detail: format!("radii must be positive, got {radius_a}, {radius_b}"),
        });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let axes = vec![
        Axis::new(0.0, two_pi * radius_a, true)?,
        Axis::new(0.0, two_pi * radius_b, true)?,
    ];
    Immersion::new(2, 4, axes, move |u| {
        let a = u[0].scale(1.0 / radius_a);
        let b = u[1].scale(1.0 / radius_b);
        Ok(vec![
            a.cos().scale(radius_a),
            a.sin().scale(radius_a),
            b.cos().scale(radius_b),
            b.sin().scale(radius_b),
        ])
    })
}

/// Residuals of the product splitting condition at parameters (s, t): for a
/// product (beta(s), gamma(t)) of unit-speed plane curves the tangential
/// field is divergence free iff <beta, beta''> = -a and
/// <gamma, gamma''> = -(2 - a) for some constant a.  Returns
/// (<beta, beta''> + a, <gamma, gamma''> + 2 - a).  Both curves must be
/// parameterized by arclength.
pub fn product_condition_residuals(
    beta: &Immersion,
    gamma: &Immersion,
    a: f64,
    s: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let mut residuals = [0.0; 2];
    for (slot, (curve, at)) in [(beta, s), (gamma, t)].iter().enumerate() {
        if curve.intrinsic_dim() != 1 || curve.ambient_dim() != 2 {
            return Err(Error::InvalidParameter {
                name: "curve",
                detail: "product factors must be plane curves".to_string(),
            });
        }
        let jets = curve.eval_jets(&[*at])?;
        let speed =
            (jets[0].grad_at(0).powi(2) + jets[1].grad_at(0).powi(2)).sqrt();
        if (speed - 1.0).abs() > 1e-8 {
            return Err(Error::NotUnitSpeed { speed });
        }
        residuals[slot] = jets[0].value() * jets[0].hess_at(0, 0)
            + jets[1].value() * jets[1].hess_at(0, 0);
    }
    Ok((residuals[0] + a, residuals[1] + 2.0 - a))
}

// ---------------------------------------------------------------------------
// Reference charts for cross-checks
// ---------------------------------------------------------------------------

/// Flat plane through the origin, (u, v) -> (u, v, 0).
pub fn plane() -> Immersion {
    Immersion::new(
        2,
        3,
        vec![
            Axis::new(-3.0, 3.0, false).expect("static axis"),
            Axis::new(-3.0, 3.0, false).expect("static axis"),
        ],
        |u| Ok(vec![u[0].clone(), u[1].clone(), Jet2::constant(0.0, 2)]),
    )
    .expect("static dimensions")
}

/// Graph surface (u, v) -> (u, v, p(u, v)) for the quadratic
/// p = c0 u^2 + c1 u v + c2 v^2 + c3 u + c4 v + c5 on a centered square.
pub fn graph_quadratic(coeffs: [f64; 6], half_width: f64) -> Result<Immersion> {
    if half_width <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "half_width",
            detail: format!("need a positive half width, got {half_width}"),
        });
    }
    let axes = vec![
        Axis::new(-half_width, half_width, false)?,
        Axis::new(-half_width, half_width, false)?,
    ];
    Immersion::new(2, 3, axes, move |u| {
        let (x, y) = (&u[0], &u[1]);
        let p = x
            .mul(x)
            .scale(coeffs[0])
            .add(&x.mul(y).scale(coeffs[1]))
            .add(&y.mul(y).scale(coeffs[2]))
            .add(&x.scale(coeffs[3]))
            .add(&y.scale(coeffs[4]))
            .add_scalar(coeffs[5]);
        Ok(vec![x.clone(), y.clone(), p])
    })
}

// ---------------------------------------------------------------------------
// Declarative family descriptions
// ---------------------------------------------------------------------------

/// Family tags accepted in scene descriptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Spiral,
    Hypercylinder,
    Hypersphere,
    ConeOverCircle,
    RevolutionProfile,
    RevolutionSurface,
    ProductSurface,
    Circle,
}

/// Declarative description of a family member:
/// `{"kind": "...", "params": {"name": value, ...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// A built family member: the immersion plus the facts the caller needs to
/// drive it (closedness is asserted by construction, never detected).
pub struct FamilyInstance {
    pub spec: FamilySpec,
    pub immersion: Immersion,
    pub closed: bool,
}

struct Params {
    entries: BTreeMap<String, f64>,
}

impl Params {
    fn new(map: &BTreeMap<String, f64>) -> Self {
        Params { entries: map.clone() }
    }

    fn has(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    fn take(&mut self, name: &str) -> Option<f64> {
        self.entries.remove(name)
    }

    fn take_or(&mut self, name: &str, default: f64) -> f64 {
        self.take(name).unwrap_or(default)
    }

    fn require(&mut self, name: &'static str) -> Result<f64> {
        self.take(name).ok_or(Error::InvalidParameter {
            name,
            detail: "required parameter is missing".to_string(),
        })
    }

    fn require_int(&mut self, name: &'static str) -> Result<usize> {
        let v = self.require(name)?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::InvalidParameter {
                name,
                detail: format!("expected a non-negative integer, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn finish(self) -> Result<()> {
        if let Some(name) = self.entries.keys().next() {
            return Err(Error::InvalidParameter {
                name: "params",
                detail: format!("unknown parameter `{name}`"),
            });
        }
        Ok(())
    }
}

impl FamilySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "scene",
            detail: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("family specs always serialize")
    }

    /// Builds the described immersion and reports whether its chart covers a
    /// closed submanifold (up to a measure-zero seam).
    pub fn build(&self) -> Result<FamilyInstance> {
        let mut p = Params::new(&self.params);
        let (immersion, closed) = match self.kind {
            FamilyKind::Spiral => {
                let c = p.require("c")?;
                let s_min = p.take_or("s_min", 0.01);
                let s_max = p.take_or("s_max", 100.0);
                (spiral_curve(c, s_min, s_max)?, false)
            }
            FamilyKind::Hypercylinder => {
                let n = p.require_int("n")?;
                let c = p.require("c")?;
                let margin = p.take_or("margin", 1e-3 * c.abs());
                let t_min = p.take_or("t_min", 0.0);
                let t_max = p.take_or("t_max", 1.0);
                (hypercylinder_with(n, c, margin, [t_min, t_max])?, false)
            }
            FamilyKind::Hypersphere => {
                let n = p.require_int("n")?;
                let r = p.require("r")?;
                (hypersphere(n, r)?, true)
            }
            FamilyKind::ConeOverCircle => {
                let rho = p.require("rho")?;
                let t_min = p.take_or("t_min", 0.1);
                let t_max = p.take_or("t_max", 2.0);
                (cone_over_circle(rho, [t_min, t_max])?, false)
            }
            FamilyKind::RevolutionProfile => {
                return Err(Error::InvalidParameter {
                    name: "kind",
                    detail: "revolution_profile describes a profile curve, not a chart; \
                             integrate it with solve_revolution_profile"
                        .to_string(),
                });
            }
            FamilyKind::RevolutionSurface => {
                if p.has("ring_radius") || p.has("tube_radius") {
                    let ring = p.require("ring_radius")?;
                    let tube = p.require("tube_radius")?;
                    (torus(ring, tube)?, true)
                } else if p.has("const_r") {
                    let r = p.require("const_r")?;
                    if r <= 0.0 {
                        return Err(Error::InvalidParameter {
                            name: "const_r",
                            detail: format!("radius must be positive, got {r}"),
                        });
                    }
                    let s_min = p.take_or("s_min", -1.0);
                    let s_max = p.take_or("s_max", 1.0);
                    (
                        revolution_surface(move |_| Ok((r, 0.0, 0.0)), [s_min, s_max])?,
                        false,
                    )
                } else {
                    let r0 = p.require("r0")?;
                    let r0p = p.take_or("r0p", 0.0);
                    let s_min = p.take_or("s_min", -0.7);
                    let s_max = p.take_or("s_max", 0.7);
                    let tol = p.take_or("tol", 1e-10);
                    (revolution_surface_from_ode(r0, r0p, [s_min, s_max], tol)?, false)
                }
            }
            FamilyKind::ProductSurface => {
                let ra = p.take_or("radius_a", 1.0);
                let rb = p.take_or("radius_b", 1.0);
                (product_surface(ra, rb)?, true)
            }
            FamilyKind::Circle => {
                let r = p.require("r")?;
                (circle(r)?, true)
            }
        };
        p.finish()?;
        Ok(FamilyInstance { spec: self.clone(), immersion, closed })
    }
}
