//! Aggregation across seeds, windowed slope fits and the two-term bound.

use rudd_core::numerics::fit::fit_loglog;
use serde::{Deserialize, Serialize};

/// Slopes are reported only at or above this `r²`.
pub const MIN_R2: f64 = 0.98;

/// The fit window drops points below this multiple of the floor.
pub const FLOOR_MARGIN: f64 = 1e3;

/// Geometric mean of positive values; zero if any value is zero, `None` for
/// an empty or invalid sample.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return None;
    }
    if values.contains(&0.0) {
        return Some(0.0);
    }
    let mean_log = values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64;
    Some(mean_log.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    /// `x` of the points used.
    pub window: Vec<f64>,
    /// Present only when the fit exists and `r² ≥ MIN_R2`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Why no slope is reported.
    pub flag: Option<String>,
}

/// Points of `aggregated` inside the fit window: the largest `x` is
/// dropped, as is every point below `FLOOR_MARGIN · floor`.
pub fn fit_window(aggregated: &[(f64, Option<f64>)], floor: f64) -> Vec<(f64, f64)> {
    let n = aggregated.len();
    aggregated
        .iter()
        .take(n.saturating_sub(1))
        .filter_map(|&(x, e)| e.map(|e| (x, e)))
        .filter(|&(_, e)| e.is_finite() && e >= FLOOR_MARGIN * floor)
        .collect()
}

pub fn fit_series(aggregated: &[(f64, Option<f64>)], floor: f64) -> FitSummary {
    let window = fit_window(aggregated, floor);
    let xs = window.iter().map(|p| p.0).collect();
    match fit_loglog(&window) {
        Err(e) => FitSummary { window: xs, slope: None, intercept: None, r2: None, flag: Some(e.to_string()) },
        Ok(fit) if fit.r2 < MIN_R2 => FitSummary {
            window: xs,
            slope: None,
            intercept: None,
            r2: Some(fit.r2),
            flag: Some(format!("r² = {:.4} below {MIN_R2}; unreliable slope {:.4}", fit.r2, fit.slope)),
        },
        Ok(fit) => FitSummary {
            window: xs,
            slope: Some(fit.slope),
            intercept: Some(fit.intercept),
            r2: Some(fit.r2),
            flag: None,
        },
    }
}

/// `ε ≈ c₁ a + c₂ b` with `c₁, c₂ ≥ 0`, fitted in relative error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermFit {
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square of `ln(ε / (c₁ a + c₂ b))`.
    pub rms_log_residual: f64,
}

/// Least squares on `Σ (1 − (c₁ a + c₂ b)/ε)²` over points `(a, b, ε)` with
/// `ε > 0`; falls back to the better one-term fit if a coefficient would be
/// negative.
pub fn fit_two_term(points: &[(f64, f64, f64)]) -> Option<TwoTermFit> {
    let rows: Vec<(f64, f64)> = points.iter().filter(|p| p.2 > 0.0).map(|&(a, b, e)| (a / e, b / e)).collect();
    if rows.len() < 2 {
        return None;
    }
    let (suu, suv, svv) = rows.iter().fold((0.0, 0.0, 0.0), |s, &(u, v)| (s.0 + u * u, s.1 + u * v, s.2 + v * v));
    let (su, sv) = rows.iter().fold((0.0, 0.0), |s, &(u, v)| (s.0 + u, s.1 + v));
    let sse = |c1: f64, c2: f64| rows.iter().map(|&(u, v)| (1.0 - c1 * u - c2 * v).powi(2)).sum::<f64>();
    let det = suu * svv - suv * suv;
    let mut candidates = Vec::new();
    if det > 1e-14 * suu * svv {
        let c1 = (su * svv - sv * suv) / det;
        let c2 = (sv * suu - su * suv) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            candidates.push((c1, c2));
        }
    }
    if suu > 0.0 {
        candidates.push((su / suu, 0.0));
    }
    if svv > 0.0 {
        candidates.push((0.0, sv / svv));
    }
    let (c1, c2) = candidates.into_iter().min_by(|a, b| sse(a.0, a.1).total_cmp(&sse(b.0, b.1)))?;
    let logs: Vec<f64> = points.iter().filter(|p| p.2 > 0.0).map(|&(a, b, e)| (e / (c1 * a + c2 * b)).ln()).collect();
    let rms = (logs.iter().map(|l| l * l).sum::<f64>() / logs.len() as f64).sqrt();
    Some(TwoTermFit { c1, c2, rms_log_residual: rms })
}
