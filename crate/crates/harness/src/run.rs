//! Sweep execution.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{fit_series, fit_two_term, geometric_mean};
use crate::checks::{series_check, static_check};
use crate::config::{ExperimentConfig, ExperimentKind, Resolved, SeriesConfig};
use crate::error::{config, Result};
use crate::experiment::{bound_terms, measure, ShapeCache, Track};
use crate::report::{
    AggregatePoint, BoundSummary, CheckOutcome, PointRecord, ScalingReport, SeedBound, SeriesReport, ARTIFACT_VERSION,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "RUDD_WORKERS";

/// Worker count from [`WORKERS_ENV`]; `None` leaves the pool default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    run_with(cfg, &ShapeCache::default(), workers_from_env()?)
}

struct Job {
    series: usize,
    track: Track,
    x: f64,
    seed: u64,
}

/// Execute every series and check of `cfg`. Point failures are recorded in
/// the report; only an invalid configuration is an error.
pub fn run_with(cfg: &ExperimentConfig, shapes: &ShapeCache, workers: Option<usize>) -> Result<ScalingReport> {
    let start = Instant::now();
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config(format!("worker pool: {e}")))?;

    let mut bases = Vec::with_capacity(cfg.series.len());
    let mut grids = Vec::with_capacity(cfg.series.len());
    let mut jobs = Vec::new();
    for (i, s) in cfg.series.iter().enumerate() {
        let base = cfg.resolve(s)?;
        let grid = s.sweep.grid()?;
        for &track in Track::of(base.kind) {
            for &x in &grid {
                for &seed in &cfg.seeds {
                    jobs.push(Job { series: i, track, x, seed });
                }
            }
        }
        bases.push(base);
        grids.push(grid);
    }

    let results: Vec<std::result::Result<f64, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let s = &cfg.series[job.series];
                let p = bases[job.series].with(s.sweep.variable, job.x).map_err(|e| e.to_string())?;
                measure(&p, job.track, job.seed, shapes).map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut series_reports = Vec::new();
    let mut checks = Vec::new();
    for (i, s) in cfg.series.iter().enumerate() {
        let base = &bases[i];
        let mut tracks = Vec::new();
        for &track in Track::of(base.kind) {
            let points: Vec<PointRecord> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.series == i && j.track == track)
                .map(|(j, r)| PointRecord {
                    x: j.x,
                    seed: j.seed,
                    epsilon: r.as_ref().ok().copied(),
                    error: r.as_ref().err().cloned(),
                })
                .collect();
            let label = match track.suffix(base.kind) {
                Some(suffix) => format!("{}/{suffix}", s.label),
                None => s.label.clone(),
            };
            tracks.push(series_report(label, s, base, &grids[i], points, &cfg.seeds, track)?);
        }
        let naive = tracks.get(1);
        for c in &s.checks {
            checks.push(series_check(&s.label, c, &tracks[0], naive));
        }
        series_reports.extend(tracks);
    }
    for c in &cfg.checks {
        checks.push(static_check(c, shapes));
    }

    let failed = series_reports.iter().any(|s| s.failed_points() > 0);
    let passed = !failed && checks.iter().all(|c: &CheckOutcome| c.passed);
    Ok(ScalingReport {
        name: cfg.name.clone(),
        description: cfg.description.clone(),
        kind: cfg.kind,
        schema_version: cfg.schema_version,
        artifact_version: ARTIFACT_VERSION.to_string(),
        config_hash: cfg.hash(),
        passed,
        checks,
        series: series_reports,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn series_report(
    label: String,
    s: &SeriesConfig,
    base: &Resolved,
    grid: &[f64],
    points: Vec<PointRecord>,
    seeds: &[u64],
    track: Track,
) -> Result<SeriesReport> {
    let aggregated: Vec<AggregatePoint> = grid
        .iter()
        .map(|&x| {
            let vals: Vec<f64> = points.iter().filter(|p| p.x == x).filter_map(|p| p.epsilon).collect();
            AggregatePoint { x, epsilon: geometric_mean(&vals), seeds: vals.len() }
        })
        .collect();
    let pairs: Vec<(f64, Option<f64>)> = aggregated.iter().map(|a| (a.x, a.epsilon)).collect();
    let fit = fit_series(&pairs, base.floor);
    let shaped_rudd = matches!(base.kind, ExperimentKind::RuddShaped)
        || (base.kind == ExperimentKind::RuddVsNaive && track == Track::Primary);
    let bound = if shaped_rudd { Some(bound_summary(s, base, &points, seeds)?) } else { None };
    Ok(SeriesReport {
        label,
        kind: base.kind,
        variable: s.sweep.variable,
        floor: base.floor,
        points,
        aggregated,
        fit,
        bound,
    })
}

fn bound_summary(s: &SeriesConfig, base: &Resolved, points: &[PointRecord], seeds: &[u64]) -> Result<BoundSummary> {
    let mut rows = Vec::new();
    for p in points {
        if let Some(e) = p.epsilon {
            let (a, b) = bound_terms(&base.with(s.sweep.variable, p.x)?)?;
            rows.push((p.seed, (a, b, e)));
        }
    }
    let all: Vec<_> = rows.iter().map(|r| r.1).collect();
    let per_seed: Vec<SeedBound> = seeds
        .iter()
        .map(|&seed| {
            let mine: Vec<_> = rows.iter().filter(|r| r.0 == seed).map(|r| r.1).collect();
            SeedBound { seed, fit: fit_two_term(&mine) }
        })
        .collect();
    let ratio = |get: fn(&crate::analysis::TwoTermFit) -> f64| {
        let vals: Option<Vec<f64>> = per_seed.iter().map(|b| b.fit.as_ref().map(get).filter(|v| *v > 0.0)).collect();
        let vals = vals?;
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    };
    Ok(BoundSummary { fit: fit_two_term(&all), c1_ratio: ratio(|f| f.c1), c2_ratio: ratio(|f| f.c2), per_seed })
}
