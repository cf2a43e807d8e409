//! Point-by-point comparison of two reports on the same grid.

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{ScalingReport, SeriesReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub x: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `a / b`; absent when either side failed or `b = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<RatioRow>,
    /// Points with `a < b`.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

impl SeriesComparison {
    pub fn render(&self) -> String {
        let mut out =
            format!("{} vs {}\n{:>12}  {:>12}  {:>12}  {:>10}\n", self.label_a, self.label_b, "x", "a", "b", "a/b");
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>12.4e}  {:>12}  {:>12}  {:>10}\n",
                r.x,
                f(r.a),
                f(r.b),
                r.ratio.map_or("-".into(), |v| format!("{v:.4}"))
            ));
        }
        out.push_str(&format!("wins {} / losses {} / ties {}\n", self.wins, self.losses, self.ties));
        out
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()))
}

/// Ratio table of the aggregated errors; the grids must coincide.
pub fn compare_series(a: &SeriesReport, b: &SeriesReport) -> Result<SeriesComparison> {
    if !same_grid(&a.grid(), &b.grid()) {
        return Err(HarnessError::Report(format!("series `{}` and `{}` have different sweep grids", a.label, b.label)));
    }
    let mut cmp = SeriesComparison {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        rows: Vec::new(),
        wins: 0,
        losses: 0,
        ties: 0,
    };
    for (pa, pb) in a.aggregated.iter().zip(&b.aggregated) {
        let ratio = match (pa.epsilon, pb.epsilon) {
            (Some(x), Some(y)) if y > 0.0 => Some(x / y),
            (Some(x), Some(y)) if x == y => Some(1.0),
            _ => None,
        };
        if let (Some(x), Some(y)) = (pa.epsilon, pb.epsilon) {
            match x.total_cmp(&y) {
                std::cmp::Ordering::Less => cmp.wins += 1,
                std::cmp::Ordering::Greater => cmp.losses += 1,
                std::cmp::Ordering::Equal => cmp.ties += 1,
            }
        }
        cmp.rows.push(RatioRow { x: pa.x, a: pa.epsilon, b: pb.epsilon, ratio });
    }
    Ok(cmp)
}

/// Compare series with matching labels; two single-series reports are
/// compared regardless of label.
pub fn compare(a: &ScalingReport, b: &ScalingReport) -> Result<Vec<SeriesComparison>> {
    if a.series.len() == 1 && b.series.len() == 1 {
        return Ok(vec![compare_series(&a.series[0], &b.series[0])?]);
    }
    let pairs: Vec<_> = a.series.iter().filter_map(|s| b.series(&s.label).map(|t| (s, t))).collect();
    if pairs.is_empty() {
        return Err(HarnessError::Report("the reports share no series label".into()));
    }
    pairs.into_iter().map(|(s, t)| compare_series(s, t)).collect()
}
