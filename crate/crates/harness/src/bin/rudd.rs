//! Command-line front end. Exit status is 0 only when every requested
//! check passes; 1 when a check fails; 2 on usage or input errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rudd_core::pulse::{eta_integrals, solve_shape, PulseDocument, PulseShape};
use rudd_core::schedule::{
    centered_udd_schedule, cpmg_rudd_schedule, qrudd_schedule, rudd_durations, rudd_schedule, udd_schedule, Schedule,
    ThetaPulseWidth,
};
use rudd_core::Axis;
use rudd_harness::config::{AngleName, ExperimentKind, Params, Resolved, ShapeSource};
use rudd_harness::experiment::{measure, ShapeCache, Track};
use rudd_harness::report::write_outputs;
use rudd_harness::{compare, compare_series, run, ExperimentConfig, ScalingReport};

#[derive(Parser)]
#[command(name = "rudd", version, about = "Decoupling sequences with finite shaped pulses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, validate or export pulse schedules.
    #[command(subcommand)]
    Schedule(ScheduleCmd),
    /// Solve, inspect or sample pulse shapes.
    #[command(subcommand)]
    Pulse(PulseCmd),
    /// Evaluate one point of a configured series.
    Simulate(SimulateArgs),
    /// Run sweeps and compare their reports.
    #[command(subcommand)]
    Scaling(ScalingCmd),
    /// Inspect reports.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Udd,
    Rudd,
    CenteredUdd,
    Cpmg,
    Qrudd,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Interior π pulses (outer level for QRUDD).
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    total: f64,
    /// `ϑ_p` as a fraction of `π/(2N+2)`.
    #[arg(long, default_value_t = 0.5)]
    theta_fraction: f64,
    #[arg(long, default_value = "y")]
    axis: Axis,
    /// CPMG cycles; the total duration is split evenly among them.
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// QRUDD inner pulses about z.
    #[arg(long, default_value_t = 2)]
    n_inner: usize,
    #[arg(long, default_value_t = 0.0)]
    inner_theta_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScheduleCmd {
    /// Print a schedule as JSON.
    Build(BuildArgs),
    /// Check the structural invariants of a schedule file.
    Validate { file: PathBuf },
    /// Sample `F̃(t)` of a schedule file as CSV `t, theta, F`.
    Export {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, value_enum, default_value = "pi")]
    angle: AngleArg,
    #[arg(long, value_enum, default_value = "published")]
    shape: ShapeArg,
    /// Pulse JSON `{theta, tau_p, a, b, c, axis}`; overrides angle and shape.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value = "x")]
    axis: Axis,
}

#[derive(Clone, Copy, ValueEnum)]
enum AngleArg {
    Pi,
    TwoPi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Published,
    Naive,
    Solved,
}

#[derive(Subcommand)]
enum PulseCmd {
    /// Find the coefficients for which all five η vanish.
    Solve {
        #[arg(long, value_enum, default_value = "pi")]
        angle: AngleArg,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// List every root, not only the smallest-peak one.
        #[arg(long)]
        all: bool,
    },
    /// Print the five η integrals of a shape.
    Eta(ShapeArgs),
    /// Sample `v(t)` and `ψ(t)` as CSV `t, v, psi`.
    Render {
        #[command(flatten)]
        shape: ShapeArgs,
        /// Samples per unit time.
        #[arg(long, default_value_t = 1000.0)]
        rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Series label; the first series when absent.
    #[arg(long)]
    series: Option<String>,
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum ScalingCmd {
    /// Run a configuration and write its CSV and JSON outputs.
    Run {
        config: PathBuf,
        /// Base directory for relative output paths (default: the current
        /// directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Ratio table of two reports on the same grid.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        series_a: Option<String>,
        #[arg(long)]
        series_b: Option<String>,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    Show { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn read_schedule(path: &Path) -> Result<Schedule> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Schedule::from_json(&text)?)
}

fn build(a: &BuildArgs) -> Result<Schedule> {
    let width = |n| ThetaPulseWidth::fraction(a.theta_fraction, n);
    Ok(match a.family {
        FamilyArg::Udd => udd_schedule(a.n, a.total, a.axis)?,
        FamilyArg::Rudd => rudd_schedule(a.n, a.total, width(a.n)?, a.axis)?,
        FamilyArg::CenteredUdd => {
            centered_udd_schedule(a.n, a.total, &rudd_durations(a.n, a.total, width(a.n)?), a.axis)?
        }
        FamilyArg::Cpmg => cpmg_rudd_schedule(a.cycles, a.total / (4 * a.cycles) as f64, width(2)?, a.axis)?,
        FamilyArg::Qrudd => qrudd_schedule(
            a.n_inner,
            a.n,
            a.total,
            ThetaPulseWidth::fraction(a.inner_theta_fraction, a.n_inner.max(1))?,
            width(a.n)?,
        )?,
    })
}

fn shape_from(args: &ShapeArgs) -> Result<PulseShape> {
    if let Some(file) = &args.file {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        return Ok(PulseShape::from_json(&text)?);
    }
    let params = Params {
        angle: Some(match args.angle {
            AngleArg::Pi => AngleName::Pi,
            AngleArg::TwoPi => AngleName::TwoPi,
        }),
        shape: Some(match args.shape {
            ShapeArg::Published => ShapeSource::Published,
            ShapeArg::Naive => ShapeSource::Naive,
            ShapeArg::Solved => ShapeSource::Solved,
        }),
        axis: Some(Axis::Y),
        ..Params::default()
    };
    let resolved = Resolved::new(ExperimentKind::PulseOrder, &params)?;
    Ok(ShapeCache::default().pulse(&resolved)?.with_duration(args.tau)?.with_axis(args.axis))
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Schedule(ScheduleCmd::Build(args)) => {
            let s = build(&args)?;
            emit(&s.to_json(), args.out.as_deref())?;
            Ok(true)
        }
        Command::Schedule(ScheduleCmd::Validate { file }) => {
            let s = read_schedule(&file)?;
            let violations = s.validate();
            if violations.is_empty() {
                println!("valid: {} segments, {} pulse windows", s.segments.len(), s.windows().count());
            }
            for v in &violations {
                println!("violation: {v}");
            }
            Ok(violations.is_empty())
        }
        Command::Schedule(ScheduleCmd::Export { file, samples, out }) => {
            let s = read_schedule(&file)?;
            if samples < 2 {
                bail!("need at least 2 samples");
            }
            let mut text = String::from("t,theta,F\n");
            for k in 0..samples {
                let t = s.total * k as f64 / (samples - 1) as f64;
                let theta = 2.0 * (t / s.total).sqrt().clamp(0.0, 1.0).asin();
                text.push_str(&format!("{t:e},{theta:e},{}\n", s.switching(t)));
            }
            emit(&text, out.as_deref())?;
            Ok(true)
        }
        Command::Pulse(PulseCmd::Solve { angle, tau, all }) => {
            let theta = match angle {
                AngleArg::Pi => std::f64::consts::PI,
                AngleArg::TwoPi => 2.0 * std::f64::consts::PI,
            };
            let sol = solve_shape(theta, tau)?;
            let docs: Vec<serde_json::Value> = sol
                .roots
                .iter()
                .zip(&sol.residuals)
                .take(if all { usize::MAX } else { 1 })
                .map(|(r, res)| {
                    let mut v = serde_json::to_value(PulseDocument::from(r)).expect("pulse serialises");
                    v["residual"] = serde_json::json!(res);
                    v["peak_amplitude"] = serde_json::json!(r.peak_amplitude());
                    v
                })
                .collect();
            let body = if all { serde_json::json!(docs) } else { docs[0].clone() };
            println!("{}", serde_json::to_string_pretty(&body)?);
            Ok(true)
        }
        Command::Pulse(PulseCmd::Eta(args)) => {
            let shape = shape_from(&args)?;
            let eta = eta_integrals(&shape)?;
            println!("{}", serde_json::to_string_pretty(&eta)?);
            Ok(true)
        }
        Command::Pulse(PulseCmd::Render { shape, rate, out }) => {
            let shape = shape_from(&shape)?;
            let mut text = String::from("t,v,psi\n");
            for (t, v) in shape.render(rate)? {
                text.push_str(&format!("{t:e},{v:e},{:e}\n", shape.psi(t)?));
            }
            emit(&text, out.as_deref())?;
            Ok(true)
        }
        Command::Simulate(args) => {
            let cfg = ExperimentConfig::load(&args.config)?;
            let series = match &args.series {
                Some(label) => {
                    cfg.series.iter().find(|s| &s.label == label).ok_or_else(|| anyhow!("no series `{label}`"))?
                }
                None => cfg.series.first().ok_or_else(|| anyhow!("config has no series"))?,
            };
            let p = cfg.resolve(series)?.with(series.sweep.variable, args.x)?;
            let cache = ShapeCache::default();
            for &track in Track::of(p.kind) {
                let eps = measure(&p, track, args.seed, &cache)?;
                let label = track.suffix(p.kind).map(|s| format!("{s} ")).unwrap_or_default();
                println!("{label}epsilon = {eps:e}");
            }
            Ok(true)
        }
        Command::Scaling(ScalingCmd::Run { config, out_dir, quiet }) => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run(&cfg)?;
            let base = out_dir.unwrap_or_else(|| PathBuf::from("."));
            let written = write_outputs(&report, &cfg.output, &base)?;
            if !quiet {
                print!("{}", report.render());
                for w in written {
                    println!("wrote {}", w.display());
                }
            }
            Ok(report.passed)
        }
        Command::Scaling(ScalingCmd::Compare { a, b, series_a, series_b }) => {
            let (ra, rb) = (ScalingReport::load(&a)?, ScalingReport::load(&b)?);
            let comparisons = match (series_a, series_b) {
                (None, None) => compare(&ra, &rb)?,
                (sa, sb) => {
                    let pick = |r: &ScalingReport, l: Option<String>| -> Result<rudd_harness::SeriesReport> {
                        match l {
                            Some(l) => r.series(&l).cloned().ok_or_else(|| anyhow!("no series `{l}` in {}", r.name)),
                            None if r.series.len() == 1 => Ok(r.series[0].clone()),
                            None => bail!("{} has several series; name one", r.name),
                        }
                    };
                    vec![compare_series(&pick(&ra, sa)?, &pick(&rb, sb)?)?]
                }
            };
            for c in comparisons {
                print!("{}", c.render());
            }
            Ok(true)
        }
        Command::Report(ReportCmd::Show { file }) => {
            let report = ScalingReport::load(&file)?;
            print!("{}", report.render());
            Ok(report.passed)
        }
    }
}
