//! Switching-function timelines.
//!
//! A [`Schedule`] tiles `[0, T]` with free-evolution segments and pulse
//! windows. Free segments carry the toggling-frame sign `F̃ = ±1` of the
//! coupling perpendicular to the schedule axis; pulse windows stand for
//! `F̃ = 0`. A window of zero width is an ideal, instantaneous pulse.
//!
//! The optimised families all live naturally in the variable `ϑ` defined by
//! `t = T sin²(ϑ/2)`: UDD instants are equidistant in `ϑ` and the RUDD
//! windows `ϑ ∈ [jπ/(N+1) − ϑ_p, jπ/(N+1) + ϑ_p]` keep the induced `F(ϑ)`
//! odd and antiperiodic with antiperiod `π/(N+1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{identity, rotation, Axis, CMatrix};
use crate::numerics::quad::quad;

/// Rotation angle of a pulse window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseAngle {
    Pi,
    TwoPi,
}

impl PulseAngle {
    pub fn radians(self) -> f64 {
        match self {
            PulseAngle::Pi => PI,
            PulseAngle::TwoPi => 2.0 * PI,
        }
    }

    pub fn from_radians(theta: f64) -> Result<Self> {
        if (theta - PI).abs() < 1e-12 {
            Ok(PulseAngle::Pi)
        } else if (theta - 2.0 * PI).abs() < 1e-12 {
            Ok(PulseAngle::TwoPi)
        } else {
            Err(Error::InvalidArgument(format!("pulse angle must be π or 2π, got {theta}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Free { sign: i8 },
    Pulse { angle: PulseAngle, axis: Axis },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self.kind, SegmentKind::Pulse { .. })
    }

    /// `F̃` on this segment: the free sign or zero inside a window.
    pub fn switching(&self) -> f64 {
        match self.kind {
            SegmentKind::Free { sign } => sign as f64,
            SegmentKind::Pulse { .. } => 0.0,
        }
    }
}

/// Which construction produced a schedule; drives the structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Family {
    Udd,
    Rudd,
    /// UDD instants with constant-amplitude pulses centred on them.
    CenteredUdd,
    CpmgRudd {
        cycles: usize,
    },
    Qrudd {
        n_inner: usize,
        n_outer: usize,
    },
    Custom,
}

/// Angular half-width `ϑ_p` of the RUDD windows, `0 ≤ ϑ_p ≤ π/(2N+2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThetaPulseWidth(f64);

impl ThetaPulseWidth {
    /// Largest admissible half-width for `n` interior pulses.
    pub fn bound(n: usize) -> f64 {
        PI / (2 * n + 2) as f64
    }

    pub fn new(theta_p: f64, n: usize) -> Result<Self> {
        let bound = Self::bound(n);
        if !(theta_p >= 0.0) || theta_p > bound * (1.0 + 1e-14) {
            return Err(Error::InvalidArgument(format!(
                "pulse half-width ϑ_p = {theta_p} outside [0, π/(2N+2)] = [0, {bound}] for N = {n}"
            )));
        }
        Ok(ThetaPulseWidth(theta_p.min(bound)))
    }

    /// `ϑ_p = fraction · π/(2N+2)`.
    pub fn fraction(fraction: f64, n: usize) -> Result<Self> {
        Self::new(fraction * Self::bound(n), n)
    }

    pub fn zero() -> Self {
        ThetaPulseWidth(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A complete timeline over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub total: f64,
    /// Axis of the interior π pulses (outer level for QRUDD).
    pub axis: Axis,
    /// Number of interior π pulses about `axis`.
    pub n_pulses: usize,
    pub theta_p: Option<f64>,
    pub family: Family,
    pub segments: Vec<Segment>,
}

/// A window before tiling: `(start, end, angle, axis)`.
#[derive(Debug, Clone, Copy)]
struct Window {
    start: f64,
    end: f64,
    angle: PulseAngle,
    axis: Axis,
}

/// Tile `[0, total]` around sorted windows; free segments get the sign
/// `(−1)^(π pulses about `axis` so far)`. Empty free gaps are dropped.
fn tile(total: f64, windows: &[Window], axis: Axis) -> Vec<Segment> {
    let mut segments = Vec::with_capacity(2 * windows.len() + 1);
    let mut cursor = 0.0;
    let mut sign: i8 = 1;
    for w in windows {
        if w.start > cursor {
            segments.push(Segment { kind: SegmentKind::Free { sign }, start: cursor, end: w.start });
        }
        segments.push(Segment {
            kind: SegmentKind::Pulse { angle: w.angle, axis: w.axis },
            start: w.start,
            end: w.end,
        });
        if w.angle == PulseAngle::Pi && w.axis == axis {
            sign = -sign;
        }
        cursor = w.end;
    }
    if total > cursor {
        segments.push(Segment { kind: SegmentKind::Free { sign }, start: cursor, end: total });
    }
    segments
}

fn check_n_t(n: usize, total: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one pulse is required (N >= 1)".into()));
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidArgument(format!("total duration must be positive, got {total}")));
    }
    Ok(())
}

/// UDD switching instants `t_j = T sin²(jπ/(2N+2))`, `j = 1…N`.
pub fn udd_instants(n: usize, total: f64) -> Result<Vec<f64>> {
    check_n_t(n, total)?;
    Ok((1..=n).map(|j| total * (j as f64 * PI / (2 * n + 2) as f64).sin().powi(2)).collect())
}

/// Ideal UDD: zero-width π windows at the UDD instants, no end pulses.
pub fn udd_schedule(n: usize, total: f64, axis: Axis) -> Result<Schedule> {
    let windows: Vec<Window> =
        udd_instants(n, total)?.into_iter().map(|t| Window { start: t, end: t, angle: PulseAngle::Pi, axis }).collect();
    Ok(Schedule {
        total,
        axis,
        n_pulses: n,
        theta_p: Some(0.0),
        family: Family::Udd,
        segments: tile(total, &windows, axis),
    })
}

fn rudd_windows(n: usize, total: f64, theta_p: f64, axis: Axis, offset: f64) -> Vec<Window> {
    let at = |theta: f64| offset + total * (0.5 * theta).sin().powi(2);
    let step = PI / (n + 1) as f64;
    let mut windows = Vec::with_capacity(n + 2);
    windows.push(Window { start: offset, end: at(theta_p), angle: PulseAngle::TwoPi, axis });
    for j in 1..=n {
        let centre = j as f64 * step;
        windows.push(Window { start: at(centre - theta_p), end: at(centre + theta_p), angle: PulseAngle::Pi, axis });
    }
    windows.push(Window {
        start: offset + total * (0.5 * theta_p).cos().powi(2),
        end: offset + total,
        angle: PulseAngle::TwoPi,
        axis,
    });
    windows
}

/// RUDD: π windows `[t_j⁻, t_j⁺]` with `t_j^± = T sin²(jπ/(2N+2) ± ϑ_p/2)`
/// and 2π windows `[0, T sin²(ϑ_p/2)]`, `[T cos²(ϑ_p/2), T]`.
pub fn rudd_schedule(n: usize, total: f64, width: ThetaPulseWidth, axis: Axis) -> Result<Schedule> {
    check_n_t(n, total)?;
    let width = ThetaPulseWidth::new(width.value(), n)?;
    let windows = rudd_windows(n, total, width.value(), axis, 0.0);
    Ok(Schedule {
        total,
        axis,
        n_pulses: n,
        theta_p: Some(width.value()),
        family: Family::Rudd,
        segments: tile(total, &windows, axis),
    })
}

/// Interior RUDD pulse durations `τ_p,j = T sin(jπ/(N+1)) sin ϑ_p`.
pub fn rudd_durations(n: usize, total: f64, width: ThetaPulseWidth) -> Vec<f64> {
    (1..=n).map(|j| total * (j as f64 * PI / (n + 1) as f64).sin() * width.value().sin()).collect()
}

/// UDD with finite constant pulses of the given durations centred on the
/// ideal instants, no end pulses.
pub fn centered_udd_schedule(n: usize, total: f64, durations: &[f64], axis: Axis) -> Result<Schedule> {
    let instants = udd_instants(n, total)?;
    if durations.len() != n {
        return Err(Error::InvalidArgument(format!("expected {n} durations, got {}", durations.len())));
    }
    let windows: Vec<Window> = instants
        .iter()
        .zip(durations)
        .map(|(&t, &d)| Window { start: t - 0.5 * d, end: t + 0.5 * d, angle: PulseAngle::Pi, axis })
        .collect();
    let mut last_end = 0.0;
    for w in &windows {
        if w.start < last_end || w.end > total || w.end < w.start {
            return Err(Error::InvalidSchedule("centred pulses overlap or leave [0, T]".into()));
        }
        last_end = w.end;
    }
    Ok(Schedule {
        total,
        axis,
        n_pulses: n,
        theta_p: None,
        family: Family::CenteredUdd,
        segments: tile(total, &windows, axis),
    })
}

/// Iterated RUDD(N=2) cycles of length `4t` whose touching 2π windows are
/// merged:
/// `(2π)_{t1} [t2 π 2t2 π t2 (2π)_{2t1}]^{n−1} t2 π 2t2 π t2 (2π)_{t1}` with
/// `t1 = 2t(1 − cos ϑ_p)`, `t2 = 2t sin(π/6 − ϑ_p)`, `τ_p = 4t cos(π/6) sin ϑ_p`.
pub fn cpmg_rudd_schedule(cycles: usize, quarter: f64, width: ThetaPulseWidth, axis: Axis) -> Result<Schedule> {
    if cycles == 0 {
        return Err(Error::InvalidArgument("CPMG needs at least one cycle".into()));
    }
    if !(quarter > 0.0) || !quarter.is_finite() {
        return Err(Error::InvalidArgument(format!("quarter-cycle duration must be positive, got {quarter}")));
    }
    let width = ThetaPulseWidth::new(width.value(), 2)?;
    let tp = width.value();
    let t1 = 2.0 * quarter * (1.0 - tp.cos());
    let t2 = 2.0 * quarter * (PI / 6.0 - tp).sin();
    let tau = 4.0 * quarter * (PI / 6.0).cos() * tp.sin();
    let cycle = 4.0 * quarter;
    let total = cycles as f64 * cycle;

    let mut windows = Vec::with_capacity(3 * cycles + 1);
    windows.push(Window { start: 0.0, end: t1, angle: PulseAngle::TwoPi, axis });
    for k in 0..cycles {
        // Anchor every cycle at k·4t so rounding does not accumulate.
        let base = k as f64 * cycle;
        let p1 = base + t1 + t2;
        let p2 = p1 + tau + 2.0 * t2;
        windows.push(Window { start: p1, end: p1 + tau, angle: PulseAngle::Pi, axis });
        windows.push(Window { start: p2, end: p2 + tau, angle: PulseAngle::Pi, axis });
        let next = if k + 1 == cycles { total } else { base + cycle };
        let end = if k + 1 == cycles { total } else { next + t1 };
        windows.push(Window { start: next - t1, end, angle: PulseAngle::TwoPi, axis });
    }
    Ok(Schedule {
        total,
        axis,
        n_pulses: 2 * cycles,
        theta_p: Some(tp),
        family: Family::CpmgRudd { cycles },
        segments: tile(total, &windows, axis),
    })
}

/// QRUDD: an outer RUDD of `n_outer` π pulses about x whose free intervals
/// each hold a complete inner RUDD of `n_inner` π pulses about z, scaled
/// affinely to the interval. `n_inner = 0` leaves the intervals free.
pub fn qrudd_schedule(
    n_inner: usize,
    n_outer: usize,
    total: f64,
    inner: ThetaPulseWidth,
    outer: ThetaPulseWidth,
) -> Result<Schedule> {
    check_n_t(n_outer, total)?;
    let outer = ThetaPulseWidth::new(outer.value(), n_outer)?;
    if n_inner > 0 {
        ThetaPulseWidth::new(inner.value(), n_inner)?;
    }
    let outer_windows = rudd_windows(n_outer, total, outer.value(), Axis::X, 0.0);
    let mut windows = Vec::new();
    for (k, w) in outer_windows.iter().enumerate() {
        windows.push(*w);
        if n_inner == 0 || k + 1 == outer_windows.len() {
            continue;
        }
        let (a, b) = (w.end, outer_windows[k + 1].start);
        if !(b > a) {
            return Err(Error::InvalidSchedule(format!(
                "outer windows {k} and {} touch; no room for the inner z block",
                k + 1
            )));
        }
        windows.extend(rudd_windows(n_inner, b - a, inner.value(), Axis::Z, a));
    }
    Ok(Schedule {
        total,
        axis: Axis::X,
        n_pulses: n_outer,
        theta_p: Some(outer.value()),
        family: Family::Qrudd { n_inner, n_outer },
        segments: tile(total, &windows, Axis::X),
    })
}

/// A violated structural invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Tiling { index: usize, detail: String },
    DurationBudget { pulses: f64, total: f64 },
    Alternation { index: usize, expected: i8, found: i8 },
    Antiperiodicity { theta: f64, block: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Tiling { index, detail } => write!(f, "tiling broken at segment {index}: {detail}"),
            Violation::DurationBudget { pulses, total } => {
                write!(f, "pulse windows last {pulses} > total duration {total}")
            }
            Violation::Alternation { index, expected, found } => {
                write!(f, "segment {index} has F = {found}, expected {expected}")
            }
            Violation::Antiperiodicity { theta, block } => {
                write!(f, "F(ϑ + π/(N+1)) != −F(ϑ) at ϑ = {theta} (block {block})")
            }
        }
    }
}

/// A stretch of the timeline that must be antiperiodic in its own `ϑ`.
#[derive(Debug, Clone, Copy)]
struct Block {
    axis: Axis,
    offset: f64,
    length: f64,
    n: usize,
}

const ANTIPERIODIC_GRID: usize = 10_000;

impl Schedule {
    pub fn windows(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.is_pulse())
    }

    pub fn pulse_count(&self, angle: PulseAngle, axis: Axis) -> usize {
        self.windows()
            .filter(|s| matches!(s.kind, SegmentKind::Pulse { angle: a, axis: x } if a == angle && x == axis))
            .count()
    }

    /// Longest pulse window.
    pub fn tau_max(&self) -> f64 {
        self.windows().map(Segment::duration).fold(0.0, f64::max)
    }

    /// Index of the segment containing `t` (last one wins at shared ends).
    fn locate(&self, t: f64) -> Option<usize> {
        if t < 0.0 || t > self.total {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.end <= t);
        Some(idx.min(self.segments.len() - 1))
    }

    /// `F̃(t)` for the coupling perpendicular to `axis`: `±1` on free
    /// stretches, flipping across π pulses about `axis`, and zero inside
    /// windows of pulses about `axis`.
    pub fn switching_for(&self, axis: Axis, t: f64) -> f64 {
        let Some(idx) = self.locate(t) else { return 0.0 };
        let mut sign = 1.0;
        for s in &self.segments[..idx] {
            if let SegmentKind::Pulse { angle: PulseAngle::Pi, axis: a } = s.kind {
                if a == axis {
                    sign = -sign;
                }
            }
        }
        match self.segments[idx].kind {
            SegmentKind::Pulse { axis: a, .. } if a == axis && self.segments[idx].duration() > 0.0 => 0.0,
            _ => sign,
        }
    }

    /// `F̃(t)` along the schedule axis.
    pub fn switching(&self, t: f64) -> f64 {
        self.switching_for(self.axis, t)
    }

    /// `F(ϑ) = F̃(T sin²(ϑ/2))` for `ϑ ∈ [0, π]`.
    pub fn switching_theta(&self, theta: f64) -> f64 {
        self.switching(self.total * (0.5 * theta).sin().powi(2))
    }

    /// Net ideal spin rotation (2×2), later pulses on the left.
    pub fn net_rotation(&self) -> CMatrix {
        self.windows().fold(identity(2), |acc, s| match s.kind {
            SegmentKind::Pulse { angle, axis } => rotation(axis, angle.radians()) * acc,
            SegmentKind::Free { .. } => acc,
        })
    }

    fn blocks(&self) -> Vec<Block> {
        match self.family {
            Family::Udd | Family::Rudd => {
                vec![Block { axis: self.axis, offset: 0.0, length: self.total, n: self.n_pulses }]
            }
            Family::CpmgRudd { cycles } => {
                let len = self.total / cycles as f64;
                (0..cycles).map(|k| Block { axis: self.axis, offset: k as f64 * len, length: len, n: 2 }).collect()
            }
            Family::Qrudd { n_inner, n_outer } => {
                let mut blocks = vec![Block { axis: self.axis, offset: 0.0, length: self.total, n: n_outer }];
                if n_inner > 0 {
                    // Inner blocks span the free gaps between the x windows.
                    let xw: Vec<&Segment> =
                        self.windows().filter(|s| matches!(s.kind, SegmentKind::Pulse { axis: Axis::X, .. })).collect();
                    for pair in xw.windows(2) {
                        let (a, b) = (pair[0].end, pair[1].start);
                        blocks.push(Block { axis: Axis::Z, offset: a, length: b - a, n: n_inner });
                    }
                }
                blocks
            }
            Family::CenteredUdd | Family::Custom => Vec::new(),
        }
    }

    /// Distance in `ϑ` (within a block) from `theta` to the nearest edge of
    /// a segment; used to ignore grid points sitting on a jump.
    fn near_edge(&self, block: &Block, theta: f64) -> bool {
        let to_theta = |t: f64| {
            let x = ((t - block.offset) / block.length).clamp(0.0, 1.0);
            2.0 * x.sqrt().atan2((1.0 - x).sqrt())
        };
        self.segments.iter().any(|s| (to_theta(s.start) - theta).abs() < 1e-9 || (to_theta(s.end) - theta).abs() < 1e-9)
    }

    /// Check every structural invariant; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let tol = 1e-12 * self.total.max(1.0);
        if self.segments.is_empty() {
            out.push(Violation::Tiling { index: 0, detail: "no segments".into() });
            return out;
        }
        if self.segments[0].start.abs() > tol {
            out.push(Violation::Tiling { index: 0, detail: format!("starts at {}", self.segments[0].start) });
        }
        let last = self.segments.len() - 1;
        if (self.segments[last].end - self.total).abs() > tol {
            out.push(Violation::Tiling { index: last, detail: format!("ends at {} != T", self.segments[last].end) });
        }
        for (i, s) in self.segments.iter().enumerate() {
            let ok = match s.kind {
                SegmentKind::Free { .. } => s.end > s.start,
                SegmentKind::Pulse { .. } => s.end >= s.start,
            };
            if !ok || !s.start.is_finite() || !s.end.is_finite() {
                out.push(Violation::Tiling { index: i, detail: format!("empty or reversed [{}, {}]", s.start, s.end) });
            }
            if i > 0 {
                let gap = s.start - self.segments[i - 1].end;
                if gap.abs() > tol {
                    let what = if gap < 0.0 { "overlaps" } else { "leaves a gap after" };
                    out.push(Violation::Tiling {
                        index: i,
                        detail: format!("{what} segment {} by {}", i - 1, gap.abs()),
                    });
                }
            }
        }
        let pulses: f64 = self.windows().map(Segment::duration).sum();
        if pulses > self.total + tol {
            out.push(Violation::DurationBudget { pulses, total: self.total });
        }
        let mut expected: i8 = 1;
        for (i, s) in self.segments.iter().enumerate() {
            match s.kind {
                SegmentKind::Free { sign } => {
                    if sign != expected {
                        out.push(Violation::Alternation { index: i, expected, found: sign });
                    }
                }
                SegmentKind::Pulse { angle: PulseAngle::Pi, axis } if axis == self.axis => expected = -expected,
                SegmentKind::Pulse { .. } => {}
            }
        }
        if out.iter().any(|v| matches!(v, Violation::Tiling { .. })) {
            return out;
        }
        for (bi, block) in self.blocks().iter().enumerate() {
            let shift = PI / (block.n + 1) as f64;
            let f = |theta: f64| {
                let t = block.offset + block.length * (0.5 * theta).sin().powi(2);
                self.switching_for(block.axis, t.min(self.total))
            };
            for k in 0..ANTIPERIODIC_GRID {
                let theta = (k as f64 + 0.5) * PI / ANTIPERIODIC_GRID as f64;
                if theta + shift >= PI {
                    break;
                }
                if f(theta + shift) != -f(theta)
                    && !self.near_edge(block, theta)
                    && !self.near_edge(block, theta + shift)
                {
                    out.push(Violation::Antiperiodicity { theta, block: bi });
                    break;
                }
            }
        }
        out
    }

    /// Coefficient of `sin(l(N+1)ϑ)` in the Fourier series of the odd
    /// extension of `F(ϑ)`: `(2/π) ∫₀^π F(ϑ) sin(l(N+1)ϑ) dϑ`, integrated
    /// numerically over each free stretch.
    pub fn fourier_coefficient(&self, l: usize) -> Result<f64> {
        if l == 0 {
            return Err(Error::InvalidArgument("harmonic index must be >= 1".into()));
        }
        if !matches!(self.family, Family::Udd | Family::Rudd) {
            return Err(Error::InvalidArgument(format!(
                "Fourier diagnostics need a UDD or RUDD schedule, got {:?}",
                self.family
            )));
        }
        let k = (l * (self.n_pulses + 1)) as f64;
        let to_theta = |t: f64| 2.0 * t.max(0.0).sqrt().atan2((self.total - t).max(0.0).sqrt());
        let mut sum = 0.0;
        for s in &self.segments {
            if let SegmentKind::Free { sign } = s.kind {
                let (a, b) = (to_theta(s.start), to_theta(s.end));
                sum += sign as f64 * quad(|th| (k * th).sin(), a, b, 1e-15)?;
            }
        }
        Ok(2.0 / PI * sum)
    }
}

/// Serialised segment: `{kind, start, end, theta, F, axis}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub kind: String,
    pub start: f64,
    pub end: f64,
    pub theta: Option<f64>,
    #[serde(rename = "F")]
    pub f: i8,
    pub axis: Option<Axis>,
}

/// Serialised schedule: `{T, axis, segments, N, theta_p, family}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    #[serde(rename = "T")]
    pub total: f64,
    pub axis: Axis,
    pub segments: Vec<SegmentRecord>,
    #[serde(rename = "N", default)]
    pub n_pulses: usize,
    #[serde(default)]
    pub theta_p: Option<f64>,
    #[serde(default = "custom_family")]
    pub family: Family,
}

fn custom_family() -> Family {
    Family::Custom
}

impl From<&Schedule> for ScheduleDocument {
    fn from(s: &Schedule) -> Self {
        let segments = s
            .segments
            .iter()
            .map(|seg| match seg.kind {
                SegmentKind::Free { sign } => SegmentRecord {
                    kind: "free".into(),
                    start: seg.start,
                    end: seg.end,
                    theta: None,
                    f: sign,
                    axis: None,
                },
                SegmentKind::Pulse { angle, axis } => SegmentRecord {
                    kind: "pulse".into(),
                    start: seg.start,
                    end: seg.end,
                    theta: Some(angle.radians()),
                    f: 0,
                    axis: Some(axis),
                },
            })
            .collect();
        ScheduleDocument {
            total: s.total,
            axis: s.axis,
            segments,
            n_pulses: s.n_pulses,
            theta_p: s.theta_p,
            family: s.family,
        }
    }
}

impl TryFrom<ScheduleDocument> for Schedule {
    type Error = Error;

    fn try_from(doc: ScheduleDocument) -> Result<Self> {
        let segments = doc
            .segments
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let kind = match r.kind.as_str() {
                    "free" => {
                        if r.f != 1 && r.f != -1 {
                            return Err(Error::InvalidSchedule(format!("free segment {i} needs F = ±1, got {}", r.f)));
                        }
                        SegmentKind::Free { sign: r.f }
                    }
                    "pulse" => SegmentKind::Pulse {
                        angle: PulseAngle::from_radians(
                            r.theta.ok_or_else(|| Error::InvalidSchedule(format!("pulse segment {i} lacks theta")))?,
                        )?,
                        axis: r.axis.unwrap_or(doc.axis),
                    },
                    other => return Err(Error::InvalidSchedule(format!("unknown segment kind `{other}`"))),
                };
                Ok(Segment { kind, start: r.start, end: r.end })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Schedule {
            total: doc.total,
            axis: doc.axis,
            n_pulses: doc.n_pulses,
            theta_p: doc.theta_p,
            family: doc.family,
            segments,
        })
    }
}

impl Schedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScheduleDocument::from(self)).expect("schedule serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidSchedule(format!("bad schedule JSON: {e}")))?;
        Schedule::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn udd_small_cases() {
        assert_eq!(udd_instants(1, 1.0).unwrap().len(), 1);
        assert!((udd_instants(1, 1.0).unwrap()[0] - 0.5).abs() < 1e-15);
        let two = udd_instants(2, 1.0).unwrap();
        assert!((two[0] - 0.25).abs() < 1e-15 && (two[1] - 0.75).abs() < 1e-15);
        // sin²(π/8) = (2 − √2)/4 in closed form.
        let three = udd_instants(3, 1.0).unwrap();
        let s = (2.0 - 2f64.sqrt()) / 4.0;
        assert!((three[0] - s).abs() < 1e-15);
        assert!((three[1] - 0.5).abs() < 1e-15);
        assert!((three[2] - (1.0 - s)).abs() < 1e-15);
        assert!((three[0] - 0.1464466).abs() < 1e-7 && (three[2] - 0.8535534).abs() < 1e-7);
        assert!(udd_instants(0, 1.0).is_err());
    }

    #[test]
    fn rudd_zero_width_is_udd() {
        let r = rudd_schedule(4, 2.0, ThetaPulseWidth::zero(), Axis::Y).unwrap();
        let inst = udd_instants(4, 2.0).unwrap();
        let interior: Vec<&Segment> =
            r.windows().filter(|s| matches!(s.kind, SegmentKind::Pulse { angle: PulseAngle::Pi, .. })).collect();
        for (w, t) in interior.iter().zip(&inst) {
            assert_eq!(w.duration(), 0.0);
            assert!((w.start - t).abs() < 1e-15);
        }
        assert!(r.validate().is_empty());
    }

    #[test]
    fn rudd_pulses_shortest_at_ends() {
        let width = ThetaPulseWidth::fraction(0.7, 4).unwrap();
        let r = rudd_schedule(4, 1.0, width, Axis::Y).unwrap();
        let d: Vec<f64> = r
            .windows()
            .filter(|s| matches!(s.kind, SegmentKind::Pulse { angle: PulseAngle::Pi, .. }))
            .map(Segment::duration)
            .collect();
        assert_eq!(d.len(), 4);
        assert!(d[0] < d[1] && d[3] < d[2]);
        assert!((d[0] - d[3]).abs() < 1e-14);
        let ends: Vec<f64> = r
            .windows()
            .filter(|s| matches!(s.kind, SegmentKind::Pulse { angle: PulseAngle::TwoPi, .. }))
            .map(Segment::duration)
            .collect();
        assert!(ends.iter().all(|&e| e < d[0]));
        assert!(r.validate().is_empty());
    }

    #[test]
    fn width_bound_enforced() {
        assert!(ThetaPulseWidth::new(PI / 8.0 * 1.001, 3).is_err());
        assert!(ThetaPulseWidth::new(-0.1, 3).is_err());
        let at_bound = rudd_schedule(3, 1.0, ThetaPulseWidth::new(PI / 8.0, 3).unwrap(), Axis::X).unwrap();
        assert!(at_bound.validate().is_empty(), "{:?}", at_bound.validate());
        // Adjacent windows touch: no free segment between them.
        assert!(at_bound.segments.iter().all(|s| s.is_pulse()));
    }

    #[test]
    fn overlapping_windows_reported() {
        let segments = vec![
            Segment { kind: SegmentKind::Free { sign: 1 }, start: 0.0, end: 0.5 },
            Segment { kind: SegmentKind::Pulse { angle: PulseAngle::Pi, axis: Axis::X }, start: 0.4, end: 0.6 },
            Segment { kind: SegmentKind::Free { sign: -1 }, start: 0.6, end: 1.0 },
        ];
        let s = Schedule { total: 1.0, axis: Axis::X, n_pulses: 1, theta_p: None, family: Family::Custom, segments };
        let v = s.validate();
        assert!(v.iter().any(|v| matches!(v, Violation::Tiling { index: 1, .. })), "{v:?}");
    }

    #[test]
    fn alternation_violation_reported() {
        let mut s = udd_schedule(2, 1.0, Axis::X).unwrap();
        let last = s.segments.len() - 1;
        s.segments[last].kind = SegmentKind::Free { sign: -1 };
        assert!(s.validate().iter().any(|v| matches!(v, Violation::Alternation { .. })));
    }

    #[test]
    fn centred_udd_is_not_antiperiodic_but_tiles() {
        let d = rudd_durations(3, 1.0, ThetaPulseWidth::fraction(0.3, 3).unwrap());
        let s = centered_udd_schedule(3, 1.0, &d, Axis::Y).unwrap();
        assert!(s.validate().is_empty());
        assert_eq!(s.pulse_count(PulseAngle::Pi, Axis::Y), 3);
    }

    #[test]
    fn cpmg_rejects_zero_cycles() {
        assert!(cpmg_rudd_schedule(0, 1.0, ThetaPulseWidth::zero(), Axis::X).is_err());
    }

    #[test]
    fn cpmg_zero_width_is_ideal_cpmg() {
        let s = cpmg_rudd_schedule(3, 0.5, ThetaPulseWidth::zero(), Axis::X).unwrap();
        let free: Vec<f64> = s.segments.iter().filter(|s| !s.is_pulse()).map(Segment::duration).collect();
        let expected = [0.5, 1.0, 0.5, 0.5, 1.0, 0.5, 0.5, 1.0, 0.5];
        assert_eq!(free.len(), expected.len());
        for (f, e) in free.iter().zip(expected) {
            assert!((f - e).abs() < 1e-14);
        }
        assert!(s.validate().is_empty());
    }

    #[test]
    fn qrudd_ideal_and_counts() {
        let s = qrudd_schedule(2, 2, 1.0, ThetaPulseWidth::zero(), ThetaPulseWidth::zero()).unwrap();
        assert_eq!(s.pulse_count(PulseAngle::Pi, Axis::X), 2);
        assert_eq!(s.pulse_count(PulseAngle::Pi, Axis::Z) + s.pulse_count(PulseAngle::TwoPi, Axis::Z), 3 * 4);
        assert!(s.validate().is_empty(), "{:?}", s.validate());

        let inner = ThetaPulseWidth::fraction(0.4, 3).unwrap();
        let outer = ThetaPulseWidth::fraction(0.5, 2).unwrap();
        let s = qrudd_schedule(3, 2, 1.0, inner, outer).unwrap();
        assert_eq!(s.pulse_count(PulseAngle::Pi, Axis::X), 2);
        assert_eq!(s.pulse_count(PulseAngle::Pi, Axis::Z) + s.pulse_count(PulseAngle::TwoPi, Axis::Z), 3 * 5);
        assert!(s.validate().is_empty(), "{:?}", s.validate());

        let touching = ThetaPulseWidth::fraction(1.0, 2).unwrap();
        assert!(matches!(qrudd_schedule(1, 2, 1.0, inner, touching), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn qrudd_without_inner_level_is_outer_rudd() {
        let w = ThetaPulseWidth::fraction(0.5, 3).unwrap();
        let q = qrudd_schedule(0, 3, 1.0, ThetaPulseWidth::zero(), w).unwrap();
        let r = rudd_schedule(3, 1.0, w, Axis::X).unwrap();
        assert_eq!(q.segments, r.segments);
    }

    #[test]
    fn json_round_trip() {
        let r = rudd_schedule(3, 1.5, ThetaPulseWidth::fraction(0.4, 3).unwrap(), Axis::Y).unwrap();
        let back = Schedule::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let text = r.to_json();
        let t_pos = text.find("\"T\"").unwrap();
        let axis_pos = text.find("\"axis\"").unwrap();
        let seg_pos = text.find("\"segments\"").unwrap();
        assert!(t_pos < axis_pos && axis_pos < seg_pos);
    }
}
