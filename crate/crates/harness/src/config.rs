//! Experiment configuration files (TOML, `schema_version = 1`).
//!
//! ```toml
//! schema_version = 1
//! name = "udd-ideal"
//! kind = "udd-ideal"
//! seeds = [0, 1, 2, 3, 4]
//!
//! [params]
//! bath = { kind = "dephasing", dim = 4 }
//!
//! [[series]]
//! label = "n1"
//! n = 1
//! sweep = { variable = "gamma-t", log = { start = 0.02, stop = 0.2, points = 7 } }
//! checks = [{ check = "slope", target = 2.0, tol = 0.2 }]
//! ```
//!
//! Top-level `[params]` apply to every series; keys set on a series
//! override them. The swept variable overrides both. Every key is listed in
//! [`Params`]; unknown keys are rejected. Grids are strictly increasing
//! with at least three points.
//!
//! Non-sweep checks (pulse residuals, root recovery, CPMG structure,
//! Fourier coefficients) go in top-level `[[checks]]` tables.

use std::collections::BTreeSet;
use std::path::Path;

use rudd_core::bath::BathKind;
use rudd_core::propagation::Scheme;
use rudd_core::schedule::PulseAngle;
use rudd_core::Axis;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, io, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// `‖U₊ − U₋‖` of ideal UDD.
    UddIdeal,
    /// `‖U₊ − U₋‖` of RUDD with the coupling off inside windows.
    RuddNoiseOff,
    /// Single-pulse deviation from its reference.
    PulseOrder,
    /// Channel error of RUDD with shaped pulses.
    RuddShaped,
    /// Paired RUDD and centred naive UDD channel errors.
    RuddVsNaive,
    /// z-axis pulse deviation under a general bath.
    Longitudinal,
    /// Channel error of CPMG-RUDD.
    Cpmg,
    /// Channel error of QRUDD under a general bath.
    Qrudd,
}

impl ExperimentKind {
    /// Kinds whose points go through the time-stepping integrator.
    pub fn integrates(self) -> bool {
        !matches!(self, ExperimentKind::UddIdeal | ExperimentKind::RuddNoiseOff)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::UddIdeal => "udd-ideal",
            ExperimentKind::RuddNoiseOff => "rudd-noise-off",
            ExperimentKind::PulseOrder => "pulse-order",
            ExperimentKind::RuddShaped => "rudd-shaped",
            ExperimentKind::RuddVsNaive => "rudd-vs-naive",
            ExperimentKind::Longitudinal => "longitudinal",
            ExperimentKind::Cpmg => "cpmg",
            ExperimentKind::Qrudd => "qrudd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// `γT`; the bath strength is `γ = x / T`.
    GammaT,
    /// `ϑ_p` as a fraction of `π/(2N+2)`.
    ThetaFraction,
    /// `γτ_p` of a single pulse of unit duration.
    GammaTau,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::GammaT => "gamma-t",
            SweepVariable::ThetaFraction => "theta-fraction",
            SweepVariable::GammaTau => "gamma-tau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// Exactly one of `values`, `log` or `linear`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Range>,
}

impl SweepSpec {
    /// Grid values: strictly increasing, finite, at least three.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let grid = match (&self.values, &self.log, &self.linear) {
            (Some(v), None, None) => v.clone(),
            (None, Some(r), None) => {
                if !(r.start > 0.0 && r.stop > 0.0) {
                    return Err(config("log grid needs positive bounds"));
                }
                spaced(r, |a, b, f| (a.ln() + f * (b.ln() - a.ln())).exp())
            }
            (None, None, Some(r)) => spaced(r, |a, b, f| a + f * (b - a)),
            _ => return Err(config("sweep needs exactly one of `values`, `log`, `linear`")),
        };
        if grid.len() < 3 {
            return Err(config(format!("sweep grid needs at least 3 points, got {}", grid.len())));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config("sweep grid must be finite and strictly increasing"));
        }
        Ok(grid)
    }
}

fn spaced(r: &Range, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    if r.points < 2 {
        return vec![r.start; r.points];
    }
    (0..r.points)
        .map(|k| if k + 1 == r.points { r.stop } else { f(r.start, r.stop, k as f64 / (r.points - 1) as f64) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeSource {
    /// Published coefficients.
    Published,
    /// Constant amplitude.
    Naive,
    /// Smallest-peak root of the shape solver.
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Zero,
    IdealAt,
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleName {
    Pi,
    TwoPi,
}

impl From<AngleName> for PulseAngle {
    fn from(a: AngleName) -> Self {
        match a {
            AngleName::Pi => PulseAngle::Pi,
            AngleName::TwoPi => PulseAngle::TwoPi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathStateName {
    MaximallyMixed,
    /// Seeded random pure state.
    RandomPure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub kind: BathKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Relative norms of the bath operators; equal split when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
}

fn default_dim() -> usize {
    4
}

/// Point parameters; every field is optional and falls back to a
/// kind-dependent default (see [`Resolved`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Interior π pulses.
    pub n: Option<usize>,
    /// QRUDD inner (z) and outer (x) pulse counts.
    pub n_z: Option<usize>,
    pub n_perp: Option<usize>,
    pub cycles: Option<usize>,
    /// `ϑ_p / (π/(2N+2))`; for QRUDD the outer level.
    pub theta_fraction: Option<f64>,
    /// QRUDD inner level.
    pub inner_theta_fraction: Option<f64>,
    pub gamma_t: Option<f64>,
    pub gamma_tau: Option<f64>,
    pub total: Option<f64>,
    pub axis: Option<Axis>,
    pub angle: Option<AngleName>,
    pub bath: Option<BathConfig>,
    pub bath_state: Option<BathStateName>,
    pub shape: Option<ShapeSource>,
    pub variant: Option<VariantName>,
    /// `τ_s / τ_p` for the `ideal-at` variant.
    pub tau_s_fraction: Option<f64>,
    pub scheme: Option<Scheme>,
    pub integrator_tol: Option<f64>,
    /// Error floor of a point; the fit window drops points below `10³`
    /// times it.
    pub floor: Option<f64>,
}

const PARAM_KEYS: &[&str] = &[
    "n",
    "n_z",
    "n_perp",
    "cycles",
    "theta_fraction",
    "inner_theta_fraction",
    "gamma_t",
    "gamma_tau",
    "total",
    "axis",
    "angle",
    "bath",
    "bath_state",
    "shape",
    "variant",
    "tau_s_fraction",
    "scheme",
    "integrator_tol",
    "floor",
];

impl Params {
    /// Fields of `over` where set, else those of `self`.
    pub fn overlay(&self, over: &Params) -> Params {
        Params {
            n: over.n.or(self.n),
            n_z: over.n_z.or(self.n_z),
            n_perp: over.n_perp.or(self.n_perp),
            cycles: over.cycles.or(self.cycles),
            theta_fraction: over.theta_fraction.or(self.theta_fraction),
            inner_theta_fraction: over.inner_theta_fraction.or(self.inner_theta_fraction),
            gamma_t: over.gamma_t.or(self.gamma_t),
            gamma_tau: over.gamma_tau.or(self.gamma_tau),
            total: over.total.or(self.total),
            axis: over.axis.or(self.axis),
            angle: over.angle.or(self.angle),
            bath: over.bath.clone().or_else(|| self.bath.clone()),
            bath_state: over.bath_state.or(self.bath_state),
            shape: over.shape.or(self.shape),
            variant: over.variant.or(self.variant),
            tau_s_fraction: over.tau_s_fraction.or(self.tau_s_fraction),
            scheme: over.scheme.or(self.scheme),
            integrator_tol: over.integrator_tol.or(self.integrator_tol),
            floor: over.floor.or(self.floor),
        }
    }
}

/// Parameters of one sweep point with all defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub n: usize,
    pub n_z: usize,
    pub n_perp: usize,
    pub cycles: usize,
    pub theta_fraction: f64,
    pub inner_theta_fraction: f64,
    pub gamma_t: f64,
    pub gamma_tau: f64,
    pub total: f64,
    pub axis: Axis,
    pub angle: PulseAngle,
    pub bath: BathConfig,
    pub bath_state: BathStateName,
    pub shape: ShapeSource,
    pub variant: VariantName,
    pub tau_s_fraction: f64,
    pub scheme: Scheme,
    pub integrator_tol: f64,
    pub floor: f64,
}

/// Roundoff level of the closed-form (non-integrated) metrics.
pub const MACHINE_FLOOR: f64 = 1e-15;

impl Resolved {
    pub fn new(kind: ExperimentKind, p: &Params) -> Result<Self> {
        let general = matches!(kind, ExperimentKind::Longitudinal | ExperimentKind::Qrudd);
        let default_axis = match kind {
            ExperimentKind::Longitudinal => Axis::Z,
            ExperimentKind::Qrudd => Axis::X,
            _ => Axis::Y,
        };
        let integrator_tol = p.integrator_tol.unwrap_or(1e-12);
        let r = Resolved {
            kind,
            n: p.n.unwrap_or(1),
            n_z: p.n_z.unwrap_or(2),
            n_perp: p.n_perp.unwrap_or(2),
            cycles: p.cycles.unwrap_or(1),
            theta_fraction: p.theta_fraction.unwrap_or(0.5),
            inner_theta_fraction: p.inner_theta_fraction.unwrap_or(0.0),
            gamma_t: p.gamma_t.unwrap_or(0.1),
            gamma_tau: p.gamma_tau.unwrap_or(0.01),
            total: p.total.unwrap_or(1.0),
            axis: p.axis.unwrap_or(default_axis),
            angle: p.angle.unwrap_or(AngleName::Pi).into(),
            bath: p.bath.clone().unwrap_or(BathConfig {
                kind: if general { BathKind::General } else { BathKind::Dephasing },
                dim: default_dim(),
                weights: Vec::new(),
            }),
            bath_state: p.bath_state.unwrap_or(BathStateName::MaximallyMixed),
            shape: p.shape.unwrap_or(ShapeSource::Published),
            variant: p.variant.unwrap_or(if kind == ExperimentKind::Longitudinal {
                VariantName::Longitudinal
            } else {
                VariantName::Zero
            }),
            tau_s_fraction: p.tau_s_fraction.unwrap_or(0.5),
            scheme: p.scheme.unwrap_or(Scheme::Magnus4),
            integrator_tol,
            floor: p.floor.unwrap_or(if kind.integrates() { integrator_tol } else { MACHINE_FLOOR }),
        };
        r.check()?;
        Ok(r)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("gamma_t", self.gamma_t),
            ("gamma_tau", self.gamma_tau),
            ("total", self.total),
            ("integrator_tol", self.integrator_tol),
            ("floor", self.floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("`{name}` must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("theta_fraction", self.theta_fraction), ("inner_theta_fraction", self.inner_theta_fraction)]
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(config(format!("`{name}` must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.tau_s_fraction) {
            return Err(config("`tau_s_fraction` must lie in [0, 1]"));
        }
        if self.n == 0 || self.n_perp == 0 || self.cycles == 0 {
            return Err(config("pulse and cycle counts must be at least 1"));
        }
        let dephasing = matches!(self.bath.kind, BathKind::Dephasing | BathKind::StaticScalar);
        use ExperimentKind::*;
        match self.kind {
            UddIdeal | RuddNoiseOff | RuddShaped | RuddVsNaive | Cpmg => {
                if !dephasing && matches!(self.kind, UddIdeal | RuddNoiseOff) {
                    return Err(config(format!("{} needs a dephasing bath", self.kind.name())));
                }
                if self.axis == Axis::Z {
                    return Err(config(format!("{} needs pulses about x or y", self.kind.name())));
                }
            }
            PulseOrder | Longitudinal => {
                let needs_general = self.variant == VariantName::Longitudinal;
                if needs_general == dephasing {
                    return Err(config("the longitudinal variant needs a general bath, the others a dephasing one"));
                }
                if needs_general && self.axis != Axis::Z {
                    return Err(config("the longitudinal variant needs a z-axis pulse"));
                }
                if !needs_general && self.axis == Axis::Z {
                    return Err(config("dephasing variants need pulses about x or y"));
                }
                if self.kind == Longitudinal && !needs_general {
                    return Err(config("the longitudinal kind uses the longitudinal variant"));
                }
            }
            Qrudd => {
                if self.bath.kind != BathKind::General {
                    return Err(config("qrudd needs a general bath"));
                }
            }
        }
        Ok(())
    }

    /// Apply the swept value.
    pub fn with(&self, variable: SweepVariable, x: f64) -> Result<Self> {
        let mut r = self.clone();
        match variable {
            SweepVariable::GammaT => r.gamma_t = x,
            SweepVariable::ThetaFraction => r.theta_fraction = x,
            SweepVariable::GammaTau => r.gamma_tau = x,
        }
        r.check()?;
        Ok(r)
    }
}

/// Check attached to a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeriesCheck {
    /// Fitted slope within `tol` of `target`.
    Slope { target: f64, tol: f64 },
    /// Fitted slope at least `min`.
    SlopeMin { min: f64 },
    /// Every point's error at most `max`.
    MaxEpsilon { max: f64 },
    /// RUDD below naive for at least `min_wins` seeds at `at` (every grid
    /// point when absent).
    Wins {
        min_wins: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierFamily {
    Udd,
    Rudd,
}

/// Check not tied to a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StaticCheck {
    /// `|η₁ₖ| ≤ tol·τ_p`, `|η₂ₖ| ≤ tol·τ_p²` for the configured shape.
    EtaResidual {
        angle: AngleName,
        tol: f64,
        #[serde(default = "one")]
        tau_p: f64,
        #[serde(default = "published")]
        shape: ShapeSource,
    },
    /// The shape solver finds a root within `rel` of `expected` (units
    /// `1/τ_p`).
    SolveRecovers { angle: AngleName, expected: [f64; 3], rel: f64 },
    /// CPMG-RUDD cycles last `4t` and one cycle equals RUDD(N=2, T=4t).
    CpmgStructure { cycles: Vec<usize>, quarter: f64, theta_fraction: f64, tol: f64 },
    /// Odd harmonics match the closed form, even ones vanish.
    Fourier {
        family: FourierFamily,
        n: Vec<usize>,
        #[serde(default)]
        theta_fraction: f64,
        lmax: usize,
        tol_odd: f64,
        tol_even: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn published() -> ShapeSource {
    ShapeSource::Published
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub checks: Vec<SeriesCheck>,
    #[serde(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV path; with several series the label is inserted before the
    /// extension.
    pub csv: Option<String>,
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub series: Vec<SeriesConfig>,
    #[serde(default)]
    pub checks: Vec<StaticCheck>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        check_series_keys(&value)?;
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.series.is_empty() && self.checks.is_empty() {
            return Err(config("nothing to run: no series and no checks"));
        }
        if !self.series.is_empty() && self.seeds.is_empty() {
            return Err(config("seeds must be non-empty"));
        }
        let mut labels = BTreeSet::new();
        for s in &self.series {
            if s.label.is_empty() || s.label.contains('/') {
                return Err(config(format!("series label `{}` must be non-empty without `/`", s.label)));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(config(format!("duplicate series label `{}`", s.label)));
            }
            let resolved = self.resolve(s)?;
            for x in s.sweep.grid()? {
                resolved
                    .with(s.sweep.variable, x)
                    .map_err(|e| config(format!("series `{}` at x = {x}: {e}", s.label)))?;
            }
            for c in &s.checks {
                if matches!(c, SeriesCheck::Wins { .. }) && resolved.kind != ExperimentKind::RuddVsNaive {
                    return Err(config(format!("series `{}`: `wins` applies to rudd-vs-naive only", s.label)));
                }
            }
        }
        Ok(())
    }

    pub fn series_kind(&self, s: &SeriesConfig) -> ExperimentKind {
        s.kind.unwrap_or(self.kind)
    }

    /// Series parameters before the swept value is applied.
    pub fn resolve(&self, s: &SeriesConfig) -> Result<Resolved> {
        Resolved::new(self.series_kind(s), &self.params.overlay(&s.params))
            .map_err(|e| config(format!("series `{}`: {e}", s.label)))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// `deny_unknown_fields` does not reach through the flattened series
/// parameters, so series keys are checked by hand.
fn check_series_keys(doc: &toml::Table) -> Result<()> {
    let Some(series) = doc.get("series").and_then(|v| v.as_array()) else { return Ok(()) };
    for (i, s) in series.iter().enumerate() {
        let Some(table) = s.as_table() else { continue };
        for key in table.keys() {
            let known =
                PARAM_KEYS.contains(&key.as_str()) || ["label", "kind", "sweep", "checks"].contains(&key.as_str());
            if !known {
                return Err(config(format!("series {i}: unknown key `{key}`")));
            }
        }
    }
    Ok(())
}
