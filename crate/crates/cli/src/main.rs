//! `cfl` — command-line driver for the incompressible-position-field
//! toolkit.
//!
//! Subcommands: `verify` runs the field identities for a scene over a grid
//! plus random interior points; `generate` writes sampled rows; `integrate`
//! computes chart volume or the residual integral for closed scenes;
//! `solve-revolution` integrates the profile equation; `figure1`/`figure2`
//! emit the two reference point clouds.
//!
//! Exit codes: 0 checks pass, 1 a check failed or an integration stopped
//! early, 2 usage or domain errors.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cfl_core::families::{
    hypercylinder_with, profile_defects, solve_revolution_profile_partial, spiral_curve,
    FamilyInstance, FamilySpec,
};
use cfl_core::geometry::Immersion;
use cfl_core::integrals::{integrate, Integrand, IntegrationJob};
use cfl_core::numerics::norm;

const GRAD_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "cfl",
    version,
    about = "Chart diagnostics for tangential position fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for sampled rows
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Per-axis sample counts, comma separated (defaults depend on dimension)
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,

    /// Seed for the random interior sample points
    #[arg(long, global = true, default_value_t = 12345)]
    seed: u64,

    /// Largest acceptable |1 + <H, x>| for a pass
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_residual: f64,

    /// Largest acceptable gap between the two divergence routes
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_div: f64,

    /// Largest acceptable defect in the Laplacian/curvature identity
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol_beltrami: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the field identities for a scene; exit 1 when any check fails
    Verify {
        /// Scene JSON, or @path to a JSON file
        scene: String,
    },
    /// Sample a scene over its grid and write one row per point
    Generate {
        /// Scene JSON, or @path to a JSON file
        scene: String,
    },
    /// Integrate the revolution profile equation and write the trajectory
    SolveRevolution {
        /// Radius at s = s-min
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        /// Slope at s = s-min
        #[arg(long, default_value_t = 0.0)]
        r0p: f64,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        #[arg(long)]
        s_max: f64,
        /// Relative and absolute integration tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Integrate over a closed scene and report a convergence estimate
    Integrate {
        /// Scene JSON, or @path to a JSON file
        scene: String,
        #[arg(long, value_enum, default_value_t = IntegrandTag::MinkowskiHsiung)]
        integrand: IntegrandTag,
        /// Quadrature order per axis
        #[arg(long, default_value_t = 32)]
        order: usize,
    },
    /// Emit the planar spiral sample table (c = 1, 100 points)
    Figure1,
    /// Emit the cylinder-profile sample table (n = 2, c = 1, 41 x 11 points)
    Figure2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandTag {
    /// Total chart volume
    #[value(name = "volume")]
    Volume,
    /// Integral of 1 + <H, x>; vanishes over closed submanifolds
    #[value(name = "minkowski_hsiung", alias = "minkowski-hsiung")]
    MinkowskiHsiung,
}

impl IntegrandTag {
    fn as_integrand(self) -> Integrand {
        match self {
            IntegrandTag::Volume => Integrand::Volume,
            IntegrandTag::MinkowskiHsiung => Integrand::MinkowskiHsiung,
        }
    }

    fn name(self) -> &'static str {
        match self {
            IntegrandTag::Volume => "volume",
            IntegrandTag::MinkowskiHsiung => "minkowski_hsiung",
        }
    }
}

/// Any error that should terminate the process with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<cfl_core::Error> for UsageError {
    fn from(e: cfl_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, UsageError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CFL_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Verify { scene } => cmd_verify(cli, scene),
        Command::Generate { scene } => cmd_generate(cli, scene),
        Command::SolveRevolution { r0, r0p, s_min, s_max, tol } => {
            cmd_solve_revolution(cli, *r0, *r0p, *s_min, *s_max, *tol)
        }
        Command::Integrate { scene, integrand, order } => {
            cmd_integrate(cli, scene, *integrand, *order)
        }
        Command::Figure1 => cmd_figure1(cli),
        Command::Figure2 => cmd_figure2(cli),
    }
}

// ---------------------------------------------------------------------------
// Scene and grid plumbing
// ---------------------------------------------------------------------------

fn load_scene(text: &str) -> Result<FamilyInstance, UsageError> {
    let json = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read scene file {path}: {e}")))?,
        None => text.to_string(),
    };
    let spec = FamilySpec::from_json(json.trim())?;
    let instance = spec.build()?;
    log::info!(
        "scene {}: {} -> {} chart",
        spec.to_json(),
        instance.immersion.intrinsic_dim(),
        instance.immersion.ambient_dim()
    );
    Ok(instance)
}

fn grid_counts(cli: &Cli, im: &Immersion) -> Result<Vec<usize>, UsageError> {
    let n = im.intrinsic_dim();
    let counts = match &cli.grid {
        Some(counts) => counts.clone(),
        None => match n {
            1 => vec![64],
            2 => vec![12, 12],
            _ => vec![8; n],
        },
    };
    if counts.len() != n {
        return Err(UsageError(format!(
            "--grid needs {n} counts for this scene, got {}",
            counts.len()
        )));
    }
    if counts.iter().any(|c| *c < 2) {
        return Err(UsageError("--grid counts must be at least 2".to_string()));
    }
    Ok(counts)
}

/// Tensor grid in lexicographic order.  Periodic axes are sampled half-open,
/// non-periodic ones strictly inside the box (midpoint placement) so that
/// finite-difference probes stay in the domain.
fn interior_grid(im: &Immersion, counts: &[usize]) -> Vec<Vec<f64>> {
    let axes = im.axes();
    let mut points = vec![Vec::new()];
    for (axis, count) in axes.iter().zip(counts) {
        let mut extended = Vec::with_capacity(points.len() * count);
        for point in &points {
            for k in 0..*count {
                let frac = if axis.periodic {
                    k as f64 / *count as f64
                } else {
                    (k as f64 + 0.5) / *count as f64
                };
                let mut next = point.clone();
                next.push(axis.lo + axis.span() * frac);
                extended.push(next);
            }
        }
        points = extended;
    }
    points
}

/// Tensor grid including non-periodic endpoints, for row emission.
fn spanning_grid(im: &Immersion, counts: &[usize]) -> Vec<Vec<f64>> {
    let axes = im.axes();
    let mut points = vec![Vec::new()];
    for (axis, count) in axes.iter().zip(counts) {
        let mut extended = Vec::with_capacity(points.len() * count);
        for point in &points {
            for k in 0..*count {
                let frac = if axis.periodic {
                    k as f64 / *count as f64
                } else {
                    k as f64 / (*count - 1) as f64
                };
                let mut next = point.clone();
                next.push(axis.lo + axis.span() * frac);
                extended.push(next);
            }
        }
        points = extended;
    }
    points
}

// ---------------------------------------------------------------------------
// Row tables
// ---------------------------------------------------------------------------

struct RowTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn sample_rows(im: &Immersion, points: &[Vec<f64>]) -> Result<RowTable, UsageError> {
    let n = im.intrinsic_dim();
    let m = im.ambient_dim();
    let mut header = Vec::with_capacity(n + m + 2);
    for i in 1..=n {
        header.push(format!("u{i}"));
    }
    for a in 1..=m {
        header.push(format!("x{a}"));
    }
    header.push("divT".to_string());
    header.push("residual".to_string());

    let mut rows = Vec::with_capacity(points.len());
    for u in points {
        let frame = im.evaluate_frame(u)?;
        let div = im.divergence_direct(u)?;
        let mut row = Vec::with_capacity(n + m + 2);
        row.extend_from_slice(u);
        row.extend_from_slice(&frame.position);
        row.push(div);
        row.push(frame.residual);
        rows.push(row);
    }
    Ok(RowTable { header, rows })
}

fn write_output(cli: &Cli, body: &str) -> Result<(), UsageError> {
    match &cli.out {
        Some(path) => {
            fs::write(path, body)
                .map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn render_table(table: &RowTable, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&table.header.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let doc = serde_json::json!({ "header": table.header, "rows": table.rows });
            let mut out = serde_json::to_string_pretty(&doc).expect("rows always serialize");
            out.push('\n');
            out
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckReport {
    name: &'static str,
    max: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerificationReport {
    family: FamilySpec,
    points: usize,
    checks: Vec<CheckReport>,
    pass: bool,
}

fn cmd_verify(cli: &Cli, scene: &str) -> CmdResult {
    let instance = load_scene(scene)?;
    let im = &instance.immersion;
    let n = im.intrinsic_dim() as f64;

    let counts = grid_counts(cli, im)?;
    let mut points = interior_grid(im, &counts);
    points.extend(im.sample_interior(50, cli.seed, 0.01));

    let mut max_residual = 0.0f64;
    let mut max_div = 0.0f64;
    let mut max_grad = 0.0f64;
    let mut max_beltrami = 0.0f64;

    for u in &points {
        let frame = im.evaluate_frame(u)?;
        let scale = 1.0 + norm(&frame.position);

        max_residual = max_residual.max(frame.residual.abs());

        let direct = im.divergence_direct(u)?;
        max_div = max_div.max((direct - frame.divergence_closed_form()).abs() / scale);

        let grad = im.intrinsic_gradient_potential(u)?;
        let grad_err: f64 = grad
            .iter()
            .zip(&frame.tangential)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        max_grad = max_grad.max(grad_err / scale);

        let laplacian = im.laplace_position(u, FD_STEP)?;
        let beltrami_err: f64 = laplacian
            .iter()
            .zip(&frame.mean_curvature)
            .map(|(l, h)| (l + n * h) * (l + n * h))
            .sum::<f64>()
            .sqrt();
        max_beltrami =
            max_beltrami.max(beltrami_err / (n * (1.0 + norm(&frame.mean_curvature))));
    }

    let checks = vec![
        CheckReport {
            name: "residual",
            max: max_residual,
            tolerance: cli.tol_residual,
            pass: max_residual <= cli.tol_residual,
        },
        CheckReport {
            name: "divergence agreement",
            max: max_div,
            tolerance: cli.tol_div,
            pass: max_div <= cli.tol_div,
        },
        CheckReport {
            name: "gradient agreement",
            max: max_grad,
            tolerance: GRAD_TOL,
            pass: max_grad <= GRAD_TOL,
        },
        CheckReport {
            name: "laplace pairing",
            max: max_beltrami,
            tolerance: cli.tol_beltrami,
            pass: max_beltrami <= cli.tol_beltrami,
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = VerificationReport {
        family: instance.spec.clone(),
        points: points.len(),
        checks,
        pass,
    };

    println!("scene   {}", report.family.to_json());
    println!("points  {}", report.points);
    println!("{:<22} {:>13} {:>13} {:>7}", "check", "max", "tolerance", "status");
    for check in &report.checks {
        println!(
            "{:<22} {:>13.3e} {:>13.1e} {:>7}",
            check.name,
            check.max,
            check.tolerance,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    println!("overall {}", if report.pass { "pass" } else { "FAIL" });

    if cli.out.is_some() {
        let mut body =
            serde_json::to_string_pretty(&report).expect("report always serializes");
        body.push('\n');
        write_output(cli, &body)?;
    }

    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn cmd_generate(cli: &Cli, scene: &str) -> CmdResult {
    let instance = load_scene(scene)?;
    let counts = grid_counts(cli, &instance.immersion)?;
    let points = spanning_grid(&instance.immersion, &counts);
    let table = sample_rows(&instance.immersion, &points)?;
    write_output(cli, &render_table(&table, cli.format))?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// solve-revolution
// ---------------------------------------------------------------------------

fn cmd_solve_revolution(
    cli: &Cli,
    r0: f64,
    r0p: f64,
    s_min: f64,
    s_max: f64,
    tol: f64,
) -> CmdResult {
    let (profile, failure) = solve_revolution_profile_partial(r0, r0p, [s_min, s_max], tol)?;
    let defects = profile_defects(&profile);

    let mut body = String::from("s,r,rp,ode_residual\n");
    for (sample, defect) in profile.samples().iter().zip(&defects) {
        body.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            sample.s, sample.r, sample.rp, defect
        ));
    }
    write_output(cli, &body)?;

    match failure {
        Some(err) => {
            let last = profile
                .samples()
                .last()
                .map(|s| s.s)
                .unwrap_or(s_min);
            eprintln!("integration stopped at s = {last}: {err}");
            Ok(ExitCode::from(1))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

fn cmd_integrate(cli: &Cli, scene: &str, tag: IntegrandTag, order: usize) -> CmdResult {
    let instance = load_scene(scene)?;
    if !instance.closed {
        return Err(UsageError(
            "integration requires a closed scene (hypersphere, circle, torus, or \
             product_surface)"
                .to_string(),
        ));
    }
    let im = instance.immersion;
    let value = integrate(&IntegrationJob::uniform(
        im.clone(),
        order,
        tag.as_integrand(),
    )?)?;
    let half_order = (order / 2).max(2);
    let coarse = integrate(&IntegrationJob::uniform(
        im,
        half_order,
        tag.as_integrand(),
    )?)?;
    let delta = (value - coarse).abs();

    println!("integrand  {}", tag.name());
    println!("order      {order}");
    println!("value      {value:.16e}");
    println!("delta vs order {half_order}: {delta:.3e}");

    if cli.out.is_some() {
        let record = serde_json::json!({
            "family": instance.spec,
            "integrand": tag.name(),
            "order": order,
            "value": value,
            "half_order": half_order,
            "delta": delta,
        });
        let mut body = serde_json::to_string_pretty(&record).expect("record serializes");
        body.push('\n');
        write_output(cli, &body)?;
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// figures
// ---------------------------------------------------------------------------

/// Spiral with c = 1 sampled uniformly in turning angle: s_k = (k pi / 23)^2
/// for k = 1..=100, which puts the half-turn point s = pi^2 exactly on the
/// grid (k = 23).
fn cmd_figure1(cli: &Cli) -> CmdResult {
    let im = spiral_curve(1.0, 0.01, 60.0 * std::f64::consts::PI)?;
    let points: Vec<Vec<f64>> = (1..=100)
        .map(|k| {
            let phi = k as f64 * std::f64::consts::PI / 23.0;
            vec![phi * phi]
        })
        .collect();
    let table = sample_rows(&im, &points)?;
    write_output(cli, &render_table(&table, cli.format))?;
    Ok(ExitCode::SUCCESS)
}

/// Cylinder over the planar profile (n = 2, c = 1), sampled on
/// s in [-0.7, 0.7] x t in [0, 1] with 41 x 11 points; s = 0 lands exactly
/// on the grid.
fn cmd_figure2(cli: &Cli) -> CmdResult {
    let im = hypercylinder_with(2, 1.0, 1e-3, [0.0, 1.0])?;
    let mut points = Vec::with_capacity(41 * 11);
    for i in 0..41 {
        let s = -0.7 + 1.4 * (i as f64 / 40.0);
        for j in 0..11 {
            let t = j as f64 / 10.0;
            points.push(vec![s, t]);
        }
    }
    let table = sample_rows(&im, &points)?;
    write_output(cli, &render_table(&table, cli.format))?;
    Ok(ExitCode::SUCCESS)
}
