//! Acceptance suite: ten go/no-go criteria for the whole toolkit, each
//! printing a single pass/fail line (run with `--nocapture` to see them
//! all).  Tolerances here are contractual — do not loosen them.

use std::fs;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfl_core::families::{
    cone_over_circle, curvature_ode_residual_cylinder, curvature_ode_residual_planar,
    cylinder_profile, graph_quadratic, hypercylinder, hypercylinder_curvature, hypersphere,
    plane, product_surface, revolution_mean_curvature, revolution_rhs,
    revolution_surface_from_ode, solve_revolution_profile, spiral_curvature, spiral_curve,
    torus,
};
use cfl_core::geometry::Immersion;
use cfl_core::integrals::{integrate, Integrand, IntegrationJob};
use cfl_core::numerics::{gauss_legendre, norm, rk45_integrate, Jet2};

fn report(number: usize, name: &str, pass: bool, detail: String) {
    println!(
        "acceptance {number} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {number} ({name}) failed: {detail}");
}

fn corpus() -> Vec<(&'static str, Immersion)> {
    vec![
        ("plane", plane()),
        (
            "graph",
            graph_quadratic([0.3, -0.2, 0.25, 0.1, 0.0, 0.4], 1.2).unwrap(),
        ),
        ("torus", torus(2.0, 1.0).unwrap()),
        ("spiral", spiral_curve(1.0, 0.01, 100.0).unwrap()),
        ("hypercylinder", hypercylinder(2, 1.0).unwrap()),
        ("product", product_surface(1.0, 1.0).unwrap()),
    ]
}

#[test]
fn criterion_1_conservative_gradient() {
    let mut worst = (0.0f64, String::new());
    for (idx, (name, im)) in corpus().into_iter().enumerate() {
        for u in im.sample_interior(50, 1000 + idx as u64, 0.02) {
            let frame = im.evaluate_frame(&u).unwrap();
            let grad = im.intrinsic_gradient_potential(&u).unwrap();
            let err: f64 = grad
                .iter()
                .zip(&frame.tangential)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let bound = 1e-9 * (1.0 + norm(&frame.position));
            let ratio = err / bound;
            if ratio > worst.0 {
                worst = (ratio, format!("{name} at {u:?}: {err:.3e} vs bound {bound:.3e}"));
            }
        }
    }
    report(1, "conservative gradient", worst.0 <= 1.0, worst.1);
}

#[test]
fn criterion_2_divergence_identity() {
    let mut worst = (0.0f64, String::new());
    for (idx, (name, im)) in corpus().into_iter().enumerate() {
        for u in im.sample_interior(50, 2000 + idx as u64, 0.02) {
            let frame = im.evaluate_frame(&u).unwrap();
            let direct = im.divergence_direct(&u).unwrap();
            let gap = (direct - frame.divergence_closed_form()).abs();
            let bound = 1e-7 * (1.0 + norm(&frame.position));
            let ratio = gap / bound;
            if ratio > worst.0 {
                worst = (ratio, format!("{name} at {u:?}: gap {gap:.3e} vs bound {bound:.3e}"));
            }
        }
    }
    report(2, "divergence identity", worst.0 <= 1.0, worst.1);
}

#[test]
fn criterion_3_laplacian_pairing() {
    const INCOMPRESSIBLE: &[&str] = &["spiral", "hypercylinder", "product"];
    let mut pass = true;
    let mut detail = String::new();
    for (idx, (name, im)) in corpus().into_iter().enumerate() {
        let n = im.intrinsic_dim() as f64;
        for u in im.sample_interior(20, 3000 + idx as u64, 0.03) {
            let frame = im.evaluate_frame(&u).unwrap();
            let laplacian = im.laplace_position(&u, 1e-4).unwrap();
            let err: f64 = laplacian
                .iter()
                .zip(&frame.mean_curvature)
                .map(|(l, h)| (l + n * h) * (l + n * h))
                .sum::<f64>()
                .sqrt();
            if err > 1e-4 * n * (1.0 + norm(&frame.mean_curvature)) {
                pass = false;
                detail = format!("{name} at {u:?}: |laplacian + n H| = {err:.3e}");
            }
            if INCOMPRESSIBLE.contains(&name) {
                let check = im.verify_beltrami_pairing(&u, 1e-4).unwrap();
                if (check.pairing - n).abs() > 1e-3 {
                    pass = false;
                    detail = format!("{name} at {u:?}: pairing {} != {n}", check.pairing);
                }
            }
        }
    }
    report(3, "laplacian pairing", pass, detail);
}

#[test]
fn criterion_4_classification_positives() {
    let mut worst = (0.0f64, String::new());
    for c in [0.5, 1.0, 2.0] {
        let im = spiral_curve(c, 0.01, 100.0).unwrap();
        for u in im.sample_interior(200, 41, 0.005) {
            let residual = im.evaluate_frame(&u).unwrap().residual.abs();
            if residual > worst.0 {
                worst = (residual, format!("spiral c={c} at {u:?}"));
            }
        }
    }
    for n in [2usize, 3, 5] {
        for c in [1.0, 2.0] {
            let im = hypercylinder(n, c).unwrap();
            for u in im.sample_interior(200, 43, 0.005) {
                let residual = im.evaluate_frame(&u).unwrap().residual.abs();
                if residual > worst.0 {
                    worst = (residual, format!("hypercylinder n={n} c={c} at {u:?}"));
                }
            }
        }
    }
    report(
        4,
        "classification positives",
        worst.0 <= 1e-8,
        format!("max residual {:.3e} at {}", worst.0, worst.1),
    );
}

#[test]
fn criterion_5_classification_negatives() {
    let cone = cone_over_circle(0.6, [0.1, 2.0]).unwrap();
    let mut cone_ok = true;
    for u in cone.sample_interior(50, 47, 0.01) {
        let frame = cone.evaluate_frame(&u).unwrap();
        if (frame.residual - 1.0).abs() > 1e-9 {
            cone_ok = false;
        }
    }

    let shifted = hypersphere(2, 1.0).unwrap().translated(&[0.0, 0.0, 3.0]).unwrap();
    let mut max_residual = 0.0f64;
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut points = shifted.sample_interior(100, 53, 0.01);
    points.push(vec![quarter, quarter]);
    for u in points {
        max_residual = max_residual.max(shifted.evaluate_frame(&u).unwrap().residual.abs());
    }

    report(
        5,
        "classification negatives",
        cone_ok && max_residual >= 2.0,
        format!("cone ok: {cone_ok}, shifted-sphere max residual {max_residual}"),
    );
}

#[test]
fn criterion_6_curvature_odes() {
    let mut pass = true;
    let mut detail = String::new();

    for c in [0.5, 1.0, 2.0] {
        for k in 0..100 {
            let s = 0.02 + 0.6 * k as f64;
            let r = curvature_ode_residual_planar(c, s).unwrap();
            if r.abs() > 1e-10 {
                pass = false;
                detail = format!("planar residual {r:.3e} at c={c}, s={s}");
            }
        }
    }
    for (n, c) in [(2usize, 1.0), (3, 1.0), (5, 2.0)] {
        for k in 0..100 {
            let s = -0.95 * c + 1.9 * c * (k as f64) / 99.0;
            let kappa = hypercylinder_curvature(n, c, s).unwrap();
            let r = curvature_ode_residual_cylinder(n, c, s).unwrap();
            if r.abs() > 1e-8 * kappa.powi(4) {
                pass = false;
                detail = format!("hypersurface residual {r:.3e} at n={n}, c={c}, s={s}");
            }
        }
    }

    // Numeric curvature of the generated curves against the closed forms.
    let spiral = spiral_curve(1.0, 0.01, 60.0).unwrap();
    for u in spiral.sample_interior(100, 59, 0.002) {
        let jets = spiral.eval_jets(&u).unwrap();
        let accel = (jets[0].hess_at(0, 0).powi(2) + jets[1].hess_at(0, 0).powi(2)).sqrt();
        if (accel - spiral_curvature(1.0, u[0]).unwrap()).abs() > 1e-7 {
            pass = false;
            detail = format!("spiral curvature mismatch at {u:?}");
        }
    }
    let profile = cylinder_profile(2, 1.0, 1e-3).unwrap();
    for u in profile.sample_interior(100, 61, 0.002) {
        let jets = profile.eval_jets(&u).unwrap();
        let accel = (jets[0].hess_at(0, 0).powi(2) + jets[1].hess_at(0, 0).powi(2)).sqrt();
        if (accel - hypercylinder_curvature(2, 1.0, u[0]).unwrap()).abs() > 1e-7 {
            pass = false;
            detail = format!("profile curvature mismatch at {u:?}");
        }
    }

    report(6, "curvature equations", pass, detail);
}

#[test]
fn criterion_7_revolution_profile() {
    let mut pass = true;
    let mut detail = String::new();

    for target in [0.7, -0.7] {
        let profile = solve_revolution_profile(1.0, 0.0, [0.0, target], 1e-10).unwrap();
        for sample in profile.samples() {
            let expected = (1.0 - sample.s * sample.s).sqrt();
            if (sample.r - expected).abs() > 1e-7 {
                pass = false;
                detail = format!("profile r error {:.3e} at s={}", (sample.r - expected).abs(), sample.s);
            }
        }
    }

    let surface = revolution_surface_from_ode(1.0, 0.0, [-0.7, 0.7], 1e-10).unwrap();
    for u in surface.sample_interior(20, 67, 0.02) {
        let frame = surface.evaluate_frame(&u).unwrap();
        if frame.residual.abs() > 1e-6 {
            pass = false;
            detail = format!("surface residual {:.3e} at {u:?}", frame.residual);
        }
        // Closed-form mean curvature from independently integrated profile
        // data must match the general pipeline.
        let (s, t) = (u[0], u[1]);
        let (r, rp) = if s == 0.0 {
            (1.0, 0.0)
        } else {
            let arc = solve_revolution_profile(1.0, 0.0, [0.0, s], 1e-12).unwrap();
            let last = *arc.samples().last().unwrap();
            let last = if s < 0.0 { arc.samples()[0] } else { last };
            (last.r, last.rp)
        };
        let rpp = revolution_rhs(s, r, rp).unwrap();
        let closed = revolution_mean_curvature(r, rp, rpp, t).unwrap();
        for a in 0..3 {
            if (frame.mean_curvature[a] - closed[a]).abs() > 1e-8 {
                pass = false;
                detail = format!(
                    "mean curvature[{a}] {:.3e} vs closed {:.3e} at {u:?}",
                    frame.mean_curvature[a], closed[a]
                );
            }
        }
    }

    report(7, "revolution profile", pass, detail);
}

#[test]
fn criterion_8_residual_integrals() {
    let mut pass = true;
    let mut detail = String::new();

    let torus_im = torus(2.0, 1.0).unwrap();
    let torus_vol = integrate(
        &IntegrationJob::uniform(torus_im.clone(), 32, Integrand::Volume).unwrap(),
    )
    .unwrap();
    let expected = 8.0 * std::f64::consts::PI * std::f64::consts::PI;
    if (torus_vol - expected).abs() > 1e-6 * expected {
        pass = false;
        detail = format!("torus volume {torus_vol} vs {expected}");
    }

    let closed: Vec<(&str, Immersion)> = vec![
        ("torus", torus_im),
        ("circle", hypersphere(1, 1.0).unwrap()),
        ("sphere", hypersphere(2, 1.0).unwrap()),
        ("product", product_surface(1.0, 1.0).unwrap()),
    ];
    for (name, im) in closed {
        let vol = integrate(
            &IntegrationJob::uniform(im.clone(), 32, Integrand::Volume).unwrap(),
        )
        .unwrap();
        let residual = integrate(
            &IntegrationJob::uniform(im, 32, Integrand::MinkowskiHsiung).unwrap(),
        )
        .unwrap();
        if residual.abs() > 1e-5 * vol {
            pass = false;
            detail = format!("{name}: residual integral {residual:.3e} vs volume {vol:.3e}");
        }
    }

    report(8, "residual integrals", pass, detail);
}

#[test]
fn criterion_9_figure_reproduction() {
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut detail = String::new();

    for (command, golden) in [("figure1", "figure1.csv"), ("figure2", "figure2.csv")] {
        let path = dir.path().join(golden);
        let status = Command::new(env!("CARGO_BIN_EXE_cfl"))
            .args([command, "--out", path.to_str().unwrap()])
            .status()
            .expect("binary runs");
        let fresh = fs::read(&path).unwrap();
        let committed =
            fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden))
                .unwrap();
        if !status.success() || fresh != committed {
            pass = false;
            detail = format!("{command} output drifted from {golden}");
        }
    }

    // Spot values: the half-turn point on figure 1 and the waist on figure 2.
    let fig1 = fs::read_to_string(dir.path().join("figure1.csv")).unwrap();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut found1 = false;
    for line in fig1.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if (cells[0] - pi2).abs() <= 1e-12 {
            found1 = true;
            if (cells[1] + 2.0).abs() > 1e-12
                || (cells[2] - 2.0 * std::f64::consts::PI).abs() > 1e-12
            {
                pass = false;
                detail = format!("half-turn spot value off: {line}");
            }
        }
    }
    let fig2 = fs::read_to_string(dir.path().join("figure2.csv")).unwrap();
    let mut found2 = false;
    for line in fig2.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if cells[0] == 0.0 && cells[1] == 0.0 {
            found2 = true;
            let root2 = 2.0_f64.sqrt();
            if cells[2].abs() > 1e-12 || (cells[3] + root2).abs() > 1e-12 {
                pass = false;
                detail = format!("waist spot value off: {line}");
            }
        }
    }
    if !found1 || !found2 {
        pass = false;
        detail = format!("spot rows missing (figure1: {found1}, figure2: {found2})");
    }

    report(9, "figure reproduction", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 10: the numeric substrate itself
// ---------------------------------------------------------------------------

/// Random closed expression tree over two variables.  Every constructor is
/// total on the reals (denominators and radicands are shifted away from
/// zero), so trees never leave the domain of any operation.
#[derive(Clone, Debug)]
enum Node {
    Var(usize),
    Const(f64),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    SoftDiv(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    ExpSin(Box<Node>),
    LogShift(Box<Node>),
    SqrtShift(Box<Node>),
    PowShift(Box<Node>),
    Atan2Shift(Box<Node>, Box<Node>),
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> Node {
    if depth == 0 {
        return if rng.gen_bool(0.7) {
            Node::Var(rng.gen_range(0..2))
        } else {
            Node::Const(rng.gen_range(-2.0..2.0))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_tree(rng, depth - 1));
    match rng.gen_range(0..11) {
        0 => Node::Add(sub(rng), sub(rng)),
        1 => Node::Sub(sub(rng), sub(rng)),
        2 => Node::Mul(sub(rng), sub(rng)),
        3 => Node::SoftDiv(sub(rng), sub(rng)),
        4 => Node::Sin(sub(rng)),
        5 => Node::Cos(sub(rng)),
        6 => Node::ExpSin(sub(rng)),
        7 => Node::LogShift(sub(rng)),
        8 => Node::SqrtShift(sub(rng)),
        9 => Node::PowShift(sub(rng)),
        _ => Node::Atan2Shift(sub(rng), sub(rng)),
    }
}

fn eval_jet(node: &Node, vars: &[Jet2; 2]) -> Jet2 {
    match node {
        Node::Var(i) => vars[*i].clone(),
        Node::Const(c) => Jet2::constant(*c, 2),
        Node::Add(a, b) => eval_jet(a, vars).add(&eval_jet(b, vars)),
        Node::Sub(a, b) => eval_jet(a, vars).sub(&eval_jet(b, vars)),
        Node::Mul(a, b) => eval_jet(a, vars).mul(&eval_jet(b, vars)),
        Node::SoftDiv(a, b) => {
            let denom = eval_jet(b, vars);
            let denom = denom.mul(&denom).add_scalar(0.5);
            eval_jet(a, vars).div(&denom).unwrap()
        }
        Node::Sin(a) => eval_jet(a, vars).sin(),
        Node::Cos(a) => eval_jet(a, vars).cos(),
        Node::ExpSin(a) => eval_jet(a, vars).sin().exp(),
        Node::LogShift(a) => {
            let sq = eval_jet(a, vars);
            sq.mul(&sq).add_scalar(0.5).ln().unwrap()
        }
        Node::SqrtShift(a) => {
            let sq = eval_jet(a, vars);
            sq.mul(&sq).add_scalar(0.5).sqrt().unwrap()
        }
        Node::PowShift(a) => {
            let sq = eval_jet(a, vars);
            sq.mul(&sq).add_scalar(0.5).powf(1.5).unwrap()
        }
        Node::Atan2Shift(a, b) => {
            let x = eval_jet(b, vars);
            let x = x.mul(&x).add_scalar(0.5);
            eval_jet(a, vars).atan2(&x).unwrap()
        }
    }
}

fn eval_scalar(node: &Node, vars: [f64; 2]) -> f64 {
    match node {
        Node::Var(i) => vars[*i],
        Node::Const(c) => *c,
        Node::Add(a, b) => eval_scalar(a, vars) + eval_scalar(b, vars),
        Node::Sub(a, b) => eval_scalar(a, vars) - eval_scalar(b, vars),
        Node::Mul(a, b) => eval_scalar(a, vars) * eval_scalar(b, vars),
        Node::SoftDiv(a, b) => {
            let d = eval_scalar(b, vars);
            eval_scalar(a, vars) / (d * d + 0.5)
        }
        Node::Sin(a) => eval_scalar(a, vars).sin(),
        Node::Cos(a) => eval_scalar(a, vars).cos(),
        Node::ExpSin(a) => eval_scalar(a, vars).sin().exp(),
        Node::LogShift(a) => {
            let v = eval_scalar(a, vars);
            (v * v + 0.5).ln()
        }
        Node::SqrtShift(a) => {
            let v = eval_scalar(a, vars);
            (v * v + 0.5).sqrt()
        }
        Node::PowShift(a) => {
            let v = eval_scalar(a, vars);
            (v * v + 0.5).powf(1.5)
        }
        Node::Atan2Shift(a, b) => {
            let x = eval_scalar(b, vars);
            eval_scalar(a, vars).atan2(x * x + 0.5)
        }
    }
}

#[test]
fn criterion_10_numeric_substrate() {
    let mut pass = true;
    let mut detail = String::new();

    // (a) 100 random composite trees: jets vs central finite differences.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-4;
    for tree_index in 0..100 {
        let tree = random_tree(&mut rng, 4);
        let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let jets = [Jet2::variable(x[0], 0, 2), Jet2::variable(x[1], 1, 2)];
        let jet = eval_jet(&tree, &jets);
        let f = eval_scalar(&tree, x);

        let at = |dx: f64, dy: f64| eval_scalar(&tree, [x[0] + dx, x[1] + dy]);
        for i in 0..2 {
            let (p, m) = if i == 0 {
                (at(h, 0.0), at(-h, 0.0))
            } else {
                (at(0.0, h), at(0.0, -h))
            };
            let fd = (p - m) / (2.0 * h);
            if (jet.grad_at(i) - fd).abs() > 1e-5 * (1.0 + f.abs() + fd.abs()) {
                pass = false;
                detail = format!(
                    "tree {tree_index}: grad[{i}] {} vs fd {fd} (tree {tree:?})",
                    jet.grad_at(i)
                );
            }
            let fd2 = if i == 0 {
                (at(h, 0.0) - 2.0 * f + at(-h, 0.0)) / (h * h)
            } else {
                (at(0.0, h) - 2.0 * f + at(0.0, -h)) / (h * h)
            };
            if (jet.hess_at(i, i) - fd2).abs() > 1e-5 * (1.0 + f.abs() + fd2.abs()) {
                pass = false;
                detail = format!(
                    "tree {tree_index}: hess[{i},{i}] {} vs fd {fd2}",
                    jet.hess_at(i, i)
                );
            }
        }
        let mixed =
            (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        if (jet.hess_at(0, 1) - mixed).abs() > 1e-5 * (1.0 + f.abs() + mixed.abs()) {
            pass = false;
            detail = format!("tree {tree_index}: mixed {} vs fd {mixed}", jet.hess_at(0, 1));
        }
    }

    // (b) Quadrature exactness to degree 2k - 1.
    for k in 1..=10usize {
        let rule = gauss_legendre(k).unwrap();
        let even = 2 * k - 2;
        let numeric: f64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(x, w)| w * x.powi(even as i32))
            .sum();
        let exact = 2.0 / (even as f64 + 1.0);
        let odd: f64 = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(x, w)| w * x.powi(even as i32 + 1))
            .sum();
        if (numeric - exact).abs() > 1e-12 || odd.abs() > 1e-13 {
            pass = false;
            detail = format!("order {k}: even {numeric} vs {exact}, odd {odd}");
        }
    }

    // (c) Plane-rotation endpoint accuracy.
    let states = rk45_integrate(
        |_, y| Ok(vec![y[1], -y[0]]),
        &[1.0, 0.0],
        [0.0, std::f64::consts::PI],
        1e-10,
        1e-10,
    )
    .unwrap();
    let last = states.last().unwrap();
    let err = ((last.y[0] + 1.0).powi(2) + last.y[1].powi(2)).sqrt();
    if err > 1e-8 {
        pass = false;
        detail = format!("rotation endpoint error {err:.3e}");
    }

    report(10, "numeric substrate", pass, detail);
}
