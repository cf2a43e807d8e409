//! Evaluation of a single sweep point.

use std::sync::OnceLock;

use rudd_core::bath::{generate, Bath, BathSpec};
use rudd_core::metrics::{channel_error_to, distinguishability, BathState};
use rudd_core::propagation::{
    conditioned_propagators, full_propagator, pulse_deviation, DeviationVariant, PropagateOptions, PulseMode, ShapeMap,
};
use rudd_core::pulse::{naive_pulse, solve_shape, Profile, PulseShape};
use rudd_core::schedule::{
    centered_udd_schedule, cpmg_rudd_schedule, qrudd_schedule, rudd_durations, rudd_schedule, udd_schedule, PulseAngle,
    Schedule, ThetaPulseWidth,
};
use rudd_core::{Error, Result};

use crate::config::{BathStateName, ExperimentKind, Resolved, ShapeSource, VariantName};

/// Which of the paired sequences a point measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Primary,
    /// Centred constant-amplitude UDD of a rudd-vs-naive pair.
    Naive,
}

impl Track {
    pub fn of(kind: ExperimentKind) -> &'static [Track] {
        match kind {
            ExperimentKind::RuddVsNaive => &[Track::Primary, Track::Naive],
            _ => &[Track::Primary],
        }
    }

    pub fn suffix(self, kind: ExperimentKind) -> Option<&'static str> {
        match (kind, self) {
            (ExperimentKind::RuddVsNaive, Track::Primary) => Some("rudd"),
            (ExperimentKind::RuddVsNaive, Track::Naive) => Some("naive"),
            _ => None,
        }
    }
}

/// Solved π and 2π coefficients, computed at most once per process.
#[derive(Default)]
pub struct ShapeCache {
    pi: OnceLock<std::result::Result<[f64; 3], Error>>,
    two_pi: OnceLock<std::result::Result<[f64; 3], Error>>,
}

impl ShapeCache {
    pub fn solved(&self, angle: PulseAngle) -> Result<[f64; 3]> {
        let cell = match angle {
            PulseAngle::Pi => &self.pi,
            PulseAngle::TwoPi => &self.two_pi,
        };
        cell.get_or_init(|| {
            let sol = solve_shape(angle.radians(), 1.0)?;
            sol.primary()
                .coefficients()
                .ok_or_else(|| Error::InvalidArgument("solver returned a constant pulse".into()))
        })
        .clone()
    }

    fn profile(&self, source: ShapeSource, angle: PulseAngle) -> Result<Profile> {
        Ok(match source {
            ShapeSource::Naive => Profile::Constant,
            ShapeSource::Published => {
                let [a, b, c] = match angle {
                    PulseAngle::Pi => rudd_core::pulse::PUBLISHED_PI,
                    PulseAngle::TwoPi => rudd_core::pulse::PUBLISHED_TWO_PI,
                };
                Profile::Fourier { a, b, c }
            }
            ShapeSource::Solved => {
                let [a, b, c] = self.solved(angle)?;
                Profile::Fourier { a, b, c }
            }
        })
    }

    pub fn shape_map(&self, source: ShapeSource) -> Result<ShapeMap> {
        Ok(ShapeMap::Profiles {
            pi: self.profile(source, PulseAngle::Pi)?,
            two_pi: self.profile(source, PulseAngle::TwoPi)?,
        })
    }

    /// Single pulse of unit duration.
    pub fn pulse(&self, p: &Resolved) -> Result<PulseShape> {
        match self.profile(p.shape, p.angle)? {
            Profile::Constant => naive_pulse(p.angle.radians(), 1.0, p.axis),
            Profile::Fourier { a, b, c } => PulseShape::new(p.angle.radians(), 1.0, a, b, c, p.axis),
        }
    }
}

fn options(p: &Resolved) -> PropagateOptions {
    PropagateOptions { tol: p.integrator_tol, scheme: p.scheme, ..PropagateOptions::default() }
}

fn bath(p: &Resolved, gamma: f64, seed: u64) -> Result<Bath> {
    generate(&BathSpec { kind: p.bath.kind, dim: p.bath.dim, gamma, weights: p.bath.weights.clone(), seed })
}

/// Bath-state seeds are decorrelated from the bath-operator seeds.
const STATE_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

fn bath_state(p: &Resolved, seed: u64) -> Result<BathState> {
    match p.bath_state {
        BathStateName::MaximallyMixed => Ok(BathState::MaximallyMixed),
        BathStateName::RandomPure => BathState::random_pure(p.bath.dim, seed ^ STATE_SEED_MIX),
    }
}

/// The schedule a point propagates through; `None` for single-pulse kinds.
pub fn schedule(p: &Resolved, track: Track) -> Result<Option<Schedule>> {
    use ExperimentKind::*;
    let width = |n: usize| ThetaPulseWidth::fraction(p.theta_fraction, n);
    Ok(Some(match (p.kind, track) {
        (UddIdeal, _) => udd_schedule(p.n, p.total, p.axis)?,
        (RuddNoiseOff | RuddShaped, _) | (RuddVsNaive, Track::Primary) => {
            rudd_schedule(p.n, p.total, width(p.n)?, p.axis)?
        }
        (RuddVsNaive, Track::Naive) => {
            let durations = rudd_durations(p.n, p.total, width(p.n)?);
            centered_udd_schedule(p.n, p.total, &durations, p.axis)?
        }
        (Cpmg, _) => cpmg_rudd_schedule(p.cycles, p.total / (4 * p.cycles) as f64, width(2)?, p.axis)?,
        (Qrudd, _) => qrudd_schedule(
            p.n_z,
            p.n_perp,
            p.total,
            ThetaPulseWidth::fraction(p.inner_theta_fraction, p.n_z.max(1))?,
            width(p.n_perp)?,
        )?,
        (PulseOrder | Longitudinal, _) => return Ok(None),
    }))
}

/// Error of one sweep point.
pub fn measure(p: &Resolved, track: Track, seed: u64, shapes: &ShapeCache) -> Result<f64> {
    use ExperimentKind::*;
    match p.kind {
        UddIdeal | RuddNoiseOff => {
            let s = schedule(p, track)?.expect("schedule kinds");
            let b = bath(p, p.gamma_t / p.total, seed)?;
            let deph = b.as_dephasing().ok_or_else(|| Error::InvalidArgument("dephasing bath required".into()))?;
            let mode = if p.kind == UddIdeal { PulseMode::Ideal } else { PulseMode::NoiseOffWindows };
            Ok(distinguishability(&conditioned_propagators(&s, deph, mode)?))
        }
        PulseOrder | Longitudinal => {
            let shape = shapes.pulse(p)?;
            let variant = match p.variant {
                VariantName::Zero => DeviationVariant::Zero,
                VariantName::IdealAt => DeviationVariant::IdealAt(p.tau_s_fraction * shape.tau_p),
                VariantName::Longitudinal => DeviationVariant::Longitudinal,
            };
            pulse_deviation(&shape, &bath(p, p.gamma_tau / shape.tau_p, seed)?, variant, &options(p))
        }
        RuddShaped | RuddVsNaive | Cpmg | Qrudd => {
            let s = schedule(p, track)?.expect("schedule kinds");
            let map = if s.tau_max() == 0.0 {
                ShapeMap::Ideal
            } else if track == Track::Naive {
                ShapeMap::naive()
            } else {
                shapes.shape_map(p.shape)?
            };
            let b = bath(p, p.gamma_t / p.total, seed)?;
            let u = full_propagator(&s, &map, &b, &options(p))?;
            Ok(channel_error_to(&u, &s.net_rotation(), &bath_state(p, seed)?)?.epsilon)
        }
    }
}

/// Regressors `((γT)^{N+1}, N(γτ_mx)³)` of the two-term bound for a RUDD
/// point.
pub fn bound_terms(p: &Resolved) -> Result<(f64, f64)> {
    let s = rudd_schedule(p.n, p.total, ThetaPulseWidth::fraction(p.theta_fraction, p.n)?, p.axis)?;
    let gamma = p.gamma_t / p.total;
    Ok((p.gamma_t.powi(p.n as i32 + 1), p.n as f64 * (gamma * s.tau_max()).powi(3)))
}
