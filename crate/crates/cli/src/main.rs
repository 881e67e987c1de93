use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use regime_core::output::{summary_json, write_events_jsonl, write_run_csv, write_scan_csv};
use regime_core::{bifurcation_scan, run_scenario, RunConfig, RunResult, ScanConfig, Scenario};

mod check;
mod overrides;
mod plot;

#[derive(Debug, Parser)]
#[command(
    name = "regime",
    version,
    about = "Slow-fast regime switching under stress-gated plasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write run.csv, events.jsonl, summary.json.
    Run(RunArgs),
    /// Classify the fast layer over a grid of theta1 values.
    Scan(ScanArgs),
    /// Run a reducibility check; exits 1 if its invariant fails.
    #[command(subcommand)]
    Check(check::Subject),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// TOML config; absent fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Override any config field, e.g. `--set s_c=0.95`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write panel_u.svg, panel_R.svg, panel_rho_phi.svg, panel_B.svg.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ScanArgs {
    #[arg(long, default_value_t = -1.5)]
    min: f64,
    #[arg(long, default_value_t = 1.5)]
    max: f64,
    #[arg(long, default_value_t = 61)]
    n_points: usize,
    /// Fast-layer parameters are read from this config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 500.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 500.0)]
    measure: f64,
    #[arg(long, default_value_t = 0.02)]
    dt: f64,
    /// Peak-to-peak amplitude above which a point counts as oscillatory.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    /// Worker threads for grid points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = overrides::apply(overrides::load(a.config.as_deref())?, &a.set)?;
    if let Some(s) = a.scenario {
        cfg.scenario = s;
    }
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;

    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let result = run_scenario(&cfg)?;

    let mut w = create(&dir.join("run.csv"))?;
    write_run_csv(&mut w, &result)?;
    w.flush()?;
    let mut w = create(&dir.join("events.jsonl"))?;
    write_events_jsonl(&mut w, &result.events)?;
    w.flush()?;
    let summary = summary_json(&result.summary);
    fs::write(dir.join("summary.json"), format!("{summary}\n"))?;
    fs::write(dir.join("effective_config.toml"), cfg.to_toml_string())?;
    if a.plot {
        write_panels(&dir, &cfg, &result)?;
    }

    println!("scenario: {}", cfg.scenario.name());
    println!("{summary}");
    println!("outputs in {}", dir.display());
    Ok(())
}

fn write_panels(dir: &Path, cfg: &RunConfig, r: &RunResult) -> Result<()> {
    use plot::{render, Chart, Series};
    let col = |f: fn(&regime_core::TrajectoryRow) -> f64| {
        r.samples.iter().map(|s| (s.t, f(s))).collect::<Vec<_>>()
    };
    let marks: Vec<f64> = r.events.iter().map(|e| e.t_plus).collect();
    let panels = [
        (
            "panel_u.svg",
            Chart {
                title: "fast variable u",
                y_label: "u",
                series: vec![Series {
                    name: "u",
                    color: "#1f77b4",
                    points: col(|s| s.u),
                }],
                marks: marks.clone(),
                hline: None,
            },
        ),
        (
            "panel_R.svg",
            Chart {
                title: "activity variance R",
                y_label: "R",
                series: vec![Series {
                    name: "R",
                    color: "#2ca02c",
                    points: col(|s| s.r),
                }],
                marks: marks.clone(),
                hline: None,
            },
        ),
        (
            "panel_rho_phi.svg",
            Chart {
                title: "structural parameters in polar form",
                y_label: "rho, phi",
                series: vec![
                    Series {
                        name: "rho",
                        color: "#9467bd",
                        points: col(|s| s.rho),
                    },
                    Series {
                        name: "phi",
                        color: "#ff7f0e",
                        points: col(|s| s.phi),
                    },
                ],
                marks: marks.clone(),
                hline: None,
            },
        ),
        (
            "panel_B.svg",
            Chart {
                title: "badness B and stress S",
                y_label: "B, S",
                series: vec![
                    Series {
                        name: "B",
                        color: "#d62728",
                        points: col(|s| s.b),
                    },
                    Series {
                        name: "S",
                        color: "#333333",
                        points: col(|s| s.s),
                    },
                ],
                marks,
                hline: Some((cfg.s_c, "S_c")),
            },
        ),
    ];
    for (name, chart) in panels {
        fs::write(dir.join(name), render(&chart)).with_context(|| format!("writing {name}"))?;
    }
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> Result<()> {
    let base = overrides::load(a.config.as_deref())?.fhn();
    let sc = ScanConfig {
        burn_in: a.burn_in,
        measure: a.measure,
        dt: a.dt,
        amp_threshold: a.threshold,
        ..ScanConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()?;
    let scan = pool.install(|| bifurcation_scan(a.min, a.max, a.n_points, &base, &sc))?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let path = a.out.join("scan.csv");
    let mut w = create(&path)?;
    write_scan_csv(&mut w, &scan)?;
    w.flush()?;

    for b in &scan.boundaries {
        println!(
            "boundary {}->{} in [{}, {}]",
            b.from.code(),
            b.to.code(),
            b.lo,
            b.hi
        );
    }
    match scan.onsets().as_slice() {
        [] => println!("onset: none"),
        [b] => println!("onset: [{}, {}] midpoint {}", b.lo, b.hi, b.midpoint()),
        many => println!(
            "onset: {} candidates, first midpoint {}",
            many.len(),
            many[0].midpoint()
        ),
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Scan(a) => cmd_scan(a).map(|_| true),
        Command::Check(s) => check::run(s),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
