//! Evaluation of configured checks.

use rudd_core::pulse::{eta_integrals, solve_shape};
use rudd_core::schedule::{
    cpmg_rudd_schedule, rudd_schedule, udd_schedule, PulseAngle, Schedule, SegmentKind, ThetaPulseWidth,
};
use rudd_core::Axis;

use crate::config::{FourierFamily, Resolved, SeriesCheck, StaticCheck};
use crate::experiment::ShapeCache;
use crate::report::{CheckOutcome, SeriesReport};

fn outcome(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed, detail: detail.into() }
}

fn same_x(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// `primary` is the RUDD track for rudd-vs-naive; `naive` its partner.
pub fn series_check(
    label: &str,
    check: &SeriesCheck,
    primary: &SeriesReport,
    naive: Option<&SeriesReport>,
) -> CheckOutcome {
    match check {
        SeriesCheck::Slope { target, tol } => {
            let name = format!("{label}: slope {target} ± {tol}");
            match primary.fit.slope {
                Some(s) => outcome(
                    name,
                    (s - target).abs() <= *tol,
                    format!("fitted {s:.4} over {} points", primary.fit.window.len()),
                ),
                None => outcome(name, false, format!("no slope: {}", primary.fit.flag.as_deref().unwrap_or("no fit"))),
            }
        }
        SeriesCheck::SlopeMin { min } => {
            let name = format!("{label}: slope ≥ {min}");
            match primary.fit.slope {
                Some(s) => outcome(name, s >= *min, format!("fitted {s:.4} over {} points", primary.fit.window.len())),
                None => outcome(name, false, format!("no slope: {}", primary.fit.flag.as_deref().unwrap_or("no fit"))),
            }
        }
        SeriesCheck::MaxEpsilon { max } => {
            let name = format!("{label}: every ε ≤ {max:e}");
            let failed = primary.failed_points();
            let worst = primary.points.iter().filter_map(|p| p.epsilon).fold(0.0, f64::max);
            let mut series = vec![primary];
            series.extend(naive);
            let worst = series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.epsilon)).fold(worst, f64::max);
            let detail = if failed > 0 { format!("{failed} failed point(s)") } else { format!("max ε = {worst:.3e}") };
            outcome(name, failed == 0 && worst <= *max, detail)
        }
        SeriesCheck::Wins { min_wins, at } => {
            let name = match at {
                Some(x) => format!("{label}: RUDD below naive in ≥ {min_wins} seeds at x = {x}"),
                None => format!("{label}: RUDD below naive in ≥ {min_wins} seeds at every x"),
            };
            let Some(naive) = naive else { return outcome(name, false, "no naive track") };
            let grid: Vec<f64> = primary.grid().into_iter().filter(|x| at.is_none_or(|a| same_x(*x, a))).collect();
            if grid.is_empty() {
                return outcome(name, false, "requested x is not on the grid");
            }
            let mut ok = true;
            let mut parts = Vec::new();
            for x in grid {
                let (mut wins, mut total) = (0, 0);
                for p in primary.points.iter().filter(|p| same_x(p.x, x)) {
                    let q = naive.points.iter().find(|q| same_x(q.x, x) && q.seed == p.seed);
                    if let (Some(e), Some(n)) = (p.epsilon, q.and_then(|q| q.epsilon)) {
                        total += 1;
                        if e < n {
                            wins += 1;
                        }
                    }
                }
                ok &= wins >= *min_wins;
                parts.push(format!("x = {x}: {wins}/{total}"));
            }
            outcome(name, ok, parts.join(", "))
        }
    }
}

pub fn static_check(check: &StaticCheck, shapes: &ShapeCache) -> CheckOutcome {
    match run_static(check, shapes) {
        Ok(o) => o,
        Err(e) => outcome(static_name(check), false, format!("error: {e}")),
    }
}

fn static_name(check: &StaticCheck) -> String {
    match check {
        StaticCheck::EtaResidual { angle, shape, .. } => format!("eta residual ({shape:?} {angle:?})"),
        StaticCheck::SolveRecovers { angle, .. } => format!("solver recovers {angle:?} coefficients"),
        StaticCheck::CpmgStructure { .. } => "CPMG-RUDD cycle structure".into(),
        StaticCheck::Fourier { family, .. } => format!("Fourier coefficients ({family:?})"),
    }
}

fn run_static(check: &StaticCheck, shapes: &ShapeCache) -> rudd_core::Result<CheckOutcome> {
    let name = static_name(check);
    match check {
        StaticCheck::EtaResidual { angle, tol, tau_p, shape } => {
            let base = Resolved::new(
                crate::config::ExperimentKind::PulseOrder,
                &crate::config::Params { shape: Some(*shape), angle: Some(*angle), ..Default::default() },
            )
            .map_err(|e| rudd_core::Error::InvalidArgument(e.to_string()))?;
            let pulse = shapes.pulse(&base)?.with_duration(*tau_p)?;
            let eta = eta_integrals(&pulse)?;
            let first = eta.eta11.abs().max(eta.eta12.abs()) / tau_p;
            let second = eta.eta21.abs().max(eta.eta22.abs()).max(eta.eta23.abs()) / (tau_p * tau_p);
            let detail = format!(
                "η = ({:.2e}, {:.2e}, {:.2e}, {:.2e}, {:.2e}); max |η₁|/τ = {first:.2e}, max |η₂|/τ² = {second:.2e}",
                eta.eta11, eta.eta12, eta.eta21, eta.eta22, eta.eta23
            );
            Ok(outcome(name, first <= *tol && second <= *tol, detail))
        }
        StaticCheck::SolveRecovers { angle, expected, rel } => {
            let sol = solve_shape(PulseAngle::from(*angle).radians(), 1.0)?;
            let distance = |c: [f64; 3]| (0..3).map(|i| ((c[i] - expected[i]) / expected[i]).abs()).fold(0.0, f64::max);
            let best = sol
                .roots
                .iter()
                .filter_map(|r| r.coefficients())
                .map(|c| (distance(c), c))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let detail = match best {
                Some((d, c)) => format!(
                    "{} roots; closest ({:.7}, {:.7}, {:.7}) at relative distance {d:.2e}; primary is {}",
                    sol.roots.len(),
                    c[0],
                    c[1],
                    c[2],
                    if sol.primary().coefficients().is_some_and(|p| distance(p) <= *rel) {
                        "it"
                    } else {
                        "another root"
                    }
                ),
                None => "no roots".into(),
            };
            Ok(outcome(name, best.is_some_and(|(d, _)| d <= *rel), detail))
        }
        StaticCheck::CpmgStructure { cycles, quarter, theta_fraction, tol } => {
            let width = ThetaPulseWidth::fraction(*theta_fraction, 2)?;
            let cycle = 4.0 * quarter;
            let mut worst_cycle: f64 = 0.0;
            let mut problems = Vec::new();
            for &n in cycles {
                let s = cpmg_rudd_schedule(n, *quarter, width, Axis::Y)?;
                let violations = s.validate();
                if !violations.is_empty() {
                    problems.push(format!("{n} cycles: {}", violations[0]));
                }
                let bounds = cycle_boundaries(&s);
                if bounds.len() != n + 1 {
                    problems.push(format!("{n} cycles: found {} boundaries", bounds.len()));
                }
                for w in bounds.windows(2) {
                    worst_cycle = worst_cycle.max((w[1] - w[0] - cycle).abs());
                }
            }
            let one = cpmg_rudd_schedule(1, *quarter, width, Axis::Y)?;
            let reference = rudd_schedule(2, cycle, width, Axis::Y)?;
            let seg_diff = segment_distance(&one, &reference);
            if seg_diff.is_none() {
                problems.push("one cycle differs from RUDD(N=2) in segment kinds".into());
            }
            let seg_diff = seg_diff.unwrap_or(f64::INFINITY);
            let passed = problems.is_empty() && worst_cycle <= *tol && seg_diff <= *tol;
            let mut detail =
                format!("max |cycle − 4t| = {worst_cycle:.2e}; one cycle vs RUDD(N=2, 4t): max |Δt| = {seg_diff:.2e}");
            if !problems.is_empty() {
                detail.push_str("; ");
                detail.push_str(&problems.join("; "));
            }
            Ok(outcome(name, passed, detail))
        }
        StaticCheck::Fourier { family, n, theta_fraction, lmax, tol_odd, tol_even } => {
            let (mut odd, mut even): (f64, f64) = (0.0, 0.0);
            for &n in n {
                let (s, theta_p) = match family {
                    FourierFamily::Udd => (udd_schedule(n, 1.0, Axis::Y)?, 0.0),
                    FourierFamily::Rudd => {
                        let w = ThetaPulseWidth::fraction(*theta_fraction, n)?;
                        (rudd_schedule(n, 1.0, w, Axis::Y)?, w.value())
                    }
                };
                for l in 1..=*lmax {
                    let c = s.fourier_coefficient(l)?;
                    if l % 2 == 1 {
                        let lf = l as f64;
                        let expected = 4.0 * (lf * (n + 1) as f64 * theta_p).cos() / (std::f64::consts::PI * lf);
                        odd = odd.max((c - expected).abs());
                    } else {
                        even = even.max(c.abs());
                    }
                }
            }
            let detail = format!("max odd deviation {odd:.2e}, max even magnitude {even:.2e}");
            Ok(outcome(name, odd <= *tol_odd && even <= *tol_even, detail))
        }
    }
}

/// `0`, the midpoints of the interior 2π windows, and `T`.
fn cycle_boundaries(s: &Schedule) -> Vec<f64> {
    let two_pi: Vec<_> =
        s.windows().filter(|w| matches!(w.kind, SegmentKind::Pulse { angle: PulseAngle::TwoPi, .. })).collect();
    let mut out = vec![0.0];
    if two_pi.len() >= 2 {
        out.extend(two_pi[1..two_pi.len() - 1].iter().map(|w| 0.5 * (w.start + w.end)));
    }
    out.push(s.total);
    out
}

/// Largest endpoint difference of two schedules with equal segment kinds.
fn segment_distance(a: &Schedule, b: &Schedule) -> Option<f64> {
    if a.segments.len() != b.segments.len() {
        return None;
    }
    let mut worst: f64 = 0.0;
    for (x, y) in a.segments.iter().zip(&b.segments) {
        if x.kind != y.kind {
            return None;
        }
        worst = worst.max((x.start - y.start).abs()).max((x.end - y.end).abs());
    }
    Some(worst)
}
