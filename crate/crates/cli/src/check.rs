use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use regime_core::output::write_curl_csv;
use regime_core::plasticity::{plasticity_rhs_gated, potential_u};
use regime_core::reducibility::{
    descent_check, minimax_simulate, oja_report, oja_simulate, planar_curl, principal_eigenvector,
    CurlSample, Rect, ScalarField2D, Sym2, VectorField2D, CURL_H, GRAD_H,
};
use regime_core::{PlasticityMode, RunConfig, StructParams};

#[derive(Debug, Subcommand)]
pub enum Subject {
    /// Mean Oja dynamics against the principal eigenvector of C.
    Oja(OjaArgs),
    /// Conservation of x^2 + y^2 under simultaneous play on L = xy.
    Minimax(MinimaxArgs),
    /// Sign of grad V . F over a grid, plus the planar curl of F.
    Descent(FieldArgs),
    /// Planar curl of F over a grid.
    Curl(CurlArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OjaArgs {
    /// Symmetric 2x2 matrix, row-major.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 0.0, 0.0, 1.0])]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.8])]
    pub w0: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub angle_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub norm_tol: f64,
    /// Allowed per-step increase of V.
    #[arg(long, default_value_t = 1e-10)]
    pub mono_tol: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MinimaxArgs {
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldKind {
    /// omega (-x2, x1)
    Rotation,
    /// -(x1, x2)
    Gradient,
    /// Gradient-only plasticity flow with the gate open.
    Baseline,
    /// Curl-augmented plasticity flow with the gate open.
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialKind {
    /// (x1^2 + x2^2) / 2
    Quadratic,
    /// Structural potential k/2 (rho - rho0)^2.
    Potential,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FieldArgs {
    #[arg(long, value_enum, default_value = "rotation")]
    pub field: FieldKind,
    #[arg(long, value_enum, default_value = "quadratic")]
    pub v: PotentialKind,
    /// Rotation rate; defaults to the run config value.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Half-width of the square domain.
    #[arg(long, default_value_t = 2.0)]
    pub half: f64,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Inner products above this count as violations.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CurlArgs {
    #[arg(long, value_enum, default_value = "rotation")]
    pub field: FieldKind,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub half: f64,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Directory for curl.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn field(kind: FieldKind, omega: f64) -> VectorField2D<'static> {
    let mut pc = RunConfig::default().plasticity();
    pc.omega = omega;
    match kind {
        FieldKind::Rotation => VectorField2D::rotation(omega),
        FieldKind::Gradient => VectorField2D::quadratic_descent(),
        FieldKind::Baseline => {
            pc.mode = PlasticityMode::GradientOnly;
            VectorField2D::new("baseline", move |a, b| {
                plasticity_rhs_gated(StructParams::new(a, b), 1.0, &pc)
            })
        }
        FieldKind::Augmented => {
            pc.mode = PlasticityMode::CurlAugmented;
            VectorField2D::new("augmented", move |a, b| {
                plasticity_rhs_gated(StructParams::new(a, b), 1.0, &pc)
            })
        }
    }
}

/// Analytic curl and the tolerance the finite-difference estimate must meet.
/// The plasticity fields carry a cone point at the origin, hence the looser bound.
fn expected_curl(kind: FieldKind, omega: f64) -> (f64, f64) {
    match kind {
        FieldKind::Rotation => (2.0 * omega, 1e-8),
        FieldKind::Gradient => (0.0, 1e-8),
        FieldKind::Baseline => (0.0, 1e-4),
        FieldKind::Augmented => (2.0 * omega, 1e-4),
    }
}

fn curl_stats(samples: &[CurlSample], expected: f64) -> (f64, f64, f64) {
    let lo = samples.iter().map(|s| s.curl).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.curl)
        .fold(f64::NEG_INFINITY, f64::max);
    let err = samples
        .iter()
        .map(|s| (s.curl - expected).abs())
        .fold(0.0, f64::max);
    (lo, hi, err)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

/// Run one check; `Ok(false)` means an invariant failed.
pub fn run(subject: Subject) -> Result<bool> {
    match subject {
        Subject::Oja(a) => {
            if a.c.len() != 4 || a.w0.len() != 2 {
                bail!("--c takes 4 comma-separated values and --w0 takes 2");
            }
            let c = Sym2::from_rows([a.c[0], a.c[1], a.c[2], a.c[3]])?;
            let traj = oja_simulate(&c, [a.w0[0], a.w0[1]], a.dt, a.steps)?;
            let rep = oja_report(&c, &traj, a.mono_tol);
            let e = principal_eigenvector(&c);
            let ok = rep.angle_to_principal < a.angle_tol
                && rep.norm_error < a.norm_tol
                && rep.descent.is_monotone();
            println!("principal eigenvector: ({:.6}, {:.6})", e[0], e[1]);
            println!("final w: ({:.9}, {:.9})", rep.final_w[0], rep.final_w[1]);
            println!(
                "angle to principal axis: {:.3e} rad (tol {:.1e})",
                rep.angle_to_principal, a.angle_tol
            );
            println!(
                "| |w| - 1 |: {:.3e} (tol {:.1e})",
                rep.norm_error, a.norm_tol
            );
            println!(
                "max per-step V increase: {:.3e} (tol {:.1e})",
                rep.descent.max_increase, a.mono_tol
            );
            println!("oja: {}", verdict(ok));
            Ok(ok)
        }
        Subject::Minimax(a) => {
            if a.dt.is_nan() || a.t_end.is_nan() || a.dt <= 0.0 || a.t_end <= 0.0 {
                bail!("dt and t_end must be positive");
            }
            let n = (a.t_end / a.dt).round() as usize;
            let traj = minimax_simulate(a.x0, a.y0, a.dt, n)?;
            let r0 = a.x0 * a.x0 + a.y0 * a.y0;
            let drift = traj.iter().map(|p| (p.r2 - r0).abs()).fold(0.0, f64::max);
            let ok = drift < a.tol;
            println!("steps: {n}, x^2 + y^2 at start: {r0}");
            println!("max conservation drift: {drift:.3e} (tol {:.1e})", a.tol);
            println!("minimax: {}", verdict(ok));
            Ok(ok)
        }
        Subject::Descent(a) => {
            let omega = a.omega.unwrap_or(RunConfig::default().omega);
            let f = field(a.field, omega);
            let cfg = RunConfig::default();
            let v = match a.v {
                PotentialKind::Quadratic => ScalarField2D::quadratic(),
                PotentialKind::Potential => ScalarField2D::new("U", move |x, y| {
                    potential_u(StructParams::new(x, y), cfg.k, cfg.rho0)
                }),
            };
            let dom = Rect::square(a.half);
            let rep = descent_check(&f, &v, &dom, a.n, a.tol, GRAD_H)?;
            let violations = (rep.violation_fraction * rep.n_samples as f64).round() as usize;
            let (want, curl_tol) = expected_curl(a.field, omega);
            let (lo, hi, err) = curl_stats(&planar_curl(&f, &dom, a.n, CURL_H)?, want);
            let ok = violations == 0 && err < curl_tol;
            println!(
                "grid: {} points on [-{h}, {h}]^2",
                rep.n_samples,
                h = a.half
            );
            println!(
                "violations: {violations} (max grad V . F = {:.3e} at ({:.3}, {:.3}))",
                rep.max_inner_product, rep.worst_point.0, rep.worst_point.1
            );
            println!("curl: [{lo:.9}, {hi:.9}], expected {want} (max error {err:.2e})");
            println!("descent: {}", verdict(ok));
            Ok(ok)
        }
        Subject::Curl(a) => {
            let omega = a.omega.unwrap_or(RunConfig::default().omega);
            let f = field(a.field, omega);
            let samples = planar_curl(&f, &Rect::square(a.half), a.n, CURL_H)?;
            let (want, tol) = expected_curl(a.field, omega);
            let (lo, hi, err) = curl_stats(&samples, want);
            if let Some(dir) = &a.out {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("curl.csv");
                let file =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_curl_csv(BufWriter::new(file), &samples)?;
                println!("wrote {}", path.display());
            }
            let ok = err < tol;
            println!(
                "curl: [{lo:.9}, {hi:.9}], expected {want} (max error {err:.2e}, tol {tol:.0e})"
            );
            println!("curl: {}", verdict(ok));
            Ok(ok)
        }
    }
}
