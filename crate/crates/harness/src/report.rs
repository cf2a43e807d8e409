//! Scaling reports: JSON (stable key order), per-series CSV and a text
//! view.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{FitSummary, TwoTermFit};
use crate::config::{ExperimentKind, OutputConfig, SweepVariable};
use crate::error::{io, HarnessError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub seed: u64,
    /// Absent when the point failed.
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub x: f64,
    /// Geometric mean over the seeds that succeeded.
    pub epsilon: Option<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedBound {
    pub seed: u64,
    pub fit: Option<TwoTermFit>,
}

/// Two-term bound `c₁(γT)^{N+1} + c₂ N(γτ_mx)³` fitted once over all
/// points and per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub fit: Option<TwoTermFit>,
    pub per_seed: Vec<SeedBound>,
    /// `max/min` of the per-seed coefficients when all are positive.
    pub c1_ratio: Option<f64>,
    pub c2_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub label: String,
    pub kind: ExperimentKind,
    pub variable: SweepVariable,
    pub floor: f64,
    pub points: Vec<PointRecord>,
    pub aggregated: Vec<AggregatePoint>,
    pub fit: FitSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSummary>,
}

impl SeriesReport {
    pub fn grid(&self) -> Vec<f64> {
        self.aggregated.iter().map(|a| a.x).collect()
    }

    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| p.epsilon.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub name: String,
    pub description: String,
    pub kind: ExperimentKind,
    pub schema_version: u32,
    pub artifact_version: String,
    pub config_hash: String,
    /// Every check passed and no point failed.
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    pub series: Vec<SeriesReport>,
    pub wall_time_s: f64,
}

impl ScalingReport {
    pub fn series(&self, label: &str) -> Option<&SeriesReport> {
        self.series.iter().find(|s| s.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        Self::from_json(&text).map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let status = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} [{}] {status}", self.name, self.kind.name());
        if !self.description.is_empty() {
            let _ = writeln!(out, "  {}", self.description);
        }
        let _ = writeln!(
            out,
            "  config {} | version {} | {:.3} s",
            &self.config_hash[..12.min(self.config_hash.len())],
            self.artifact_version,
            self.wall_time_s
        );
        for s in &self.series {
            let _ = writeln!(out, "\n  series {} ({}, x = {})", s.label, s.kind.name(), s.variable.name());
            let _ = writeln!(out, "  {:>12}  {:>14}  {:>5}", "x", "epsilon", "seeds");
            for a in &s.aggregated {
                let eps = a.epsilon.map_or("failed".to_string(), |e| format!("{e:.6e}"));
                let mark = if s.fit.window.contains(&a.x) { "*" } else { " " };
                let _ = writeln!(out, "  {:>12.6e}  {eps:>14}  {:>5}{mark}", a.x, a.seeds);
            }
            match (s.fit.slope, &s.fit.flag) {
                (Some(slope), _) => {
                    let _ = writeln!(
                        out,
                        "  slope {slope:.4} (r² {:.5}) over {} points (*)",
                        s.fit.r2.unwrap_or(f64::NAN),
                        s.fit.window.len()
                    );
                }
                (None, Some(flag)) => {
                    let _ = writeln!(out, "  no slope: {flag}");
                }
                (None, None) => {}
            }
            if let Some(b) = s.bound.as_ref().and_then(|b| b.fit.map(|f| (f, b))) {
                let (f, summary) = b;
                let ratio = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.2}"));
                let _ = writeln!(
                    out,
                    "  bound c1 = {:.4e}, c2 = {:.4e}, rms log residual {:.3}, seed ratios {} / {}",
                    f.c1,
                    f.c2,
                    f.rms_log_residual,
                    ratio(summary.c1_ratio),
                    ratio(summary.c2_ratio)
                );
            }
            if s.failed_points() > 0 {
                let _ = writeln!(out, "  {} failed point(s)", s.failed_points());
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out);
        }
        for c in &self.checks {
            let _ = writeln!(out, "  {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }
}

/// CSV rows `x, seed, epsilon`; failed points carry `NaN`.
pub fn write_csv(series: &SeriesReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))?;
    w.write_record(["x", "seed", "epsilon"])?;
    for p in &series.points {
        let eps = p.epsilon.map_or("NaN".to_string(), |e| format!("{e:e}"));
        w.write_record([format!("{:e}", p.x), p.seed.to_string(), eps])?;
    }
    w.flush().map_err(|e| io(path, e))?;
    Ok(())
}

fn csv_path(template: &Path, label: &str, several: bool) -> PathBuf {
    if !several {
        return template.to_path_buf();
    }
    let stem = template.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = template.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    let file = format!("{stem}.{}.{ext}", label.replace('/', "-"));
    template.with_file_name(file)
}

/// Write the outputs requested in `output`, relative paths resolved
/// against `base`. Returns the files written.
pub fn write_outputs(report: &ScalingReport, output: &OutputConfig, base: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    if let Some(csv) = &output.csv {
        let template = resolve(csv);
        if let Some(dir) = template.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        let several = report.series.len() > 1;
        for s in &report.series {
            let path = csv_path(&template, &s.label, several);
            write_csv(s, &path)?;
            written.push(path);
        }
    }
    if let Some(json) = &output.json {
        let path = resolve(json);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        std::fs::write(&path, report.to_json()).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_label_insertion() {
        let p = csv_path(Path::new("out/run.csv"), "rudd/naive", true);
        assert_eq!(p, PathBuf::from("out/run.rudd-naive.csv"));
        assert_eq!(csv_path(Path::new("out/run.csv"), "a", false), PathBuf::from("out/run.csv"));
    }
}
