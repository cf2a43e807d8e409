//! Time-ordered propagation of `spin ⊗ bath`.
//!
//! Free segments are exact exponentials of the time-independent bath
//! Hamiltonian. A shaped pulse window is propagated in the control frame:
//! with `P(t) = exp(−iψ(t)/2 σ_axis) ⊗ 1`,
//!
//! ```text
//! U_window = P(τ_p) · T exp(−i ∫₀^{τ_p} G(t) dt),   G(t) = P(t)† H P(t).
//! ```
//!
//! `G(t)` has norm at most `γ`, so the time-ordered exponential is smooth on
//! the scale of the bath and not of the (much stronger) control field. It
//! is evaluated by uniform steps refined by halving until two successive
//! refinements agree in spectral norm.

use serde::{Deserialize, Serialize};

use crate::bath::{Bath, DephasingBath};
use crate::error::{Error, Result};
use crate::numerics::linalg::{
    expm_taylor, identity, kron, norm2, rotation, Axis, CMatrix, Hermitian, HermitianEigen, Unitary, C64, I,
};
use crate::numerics::quad::gauss_legendre;
use crate::pulse::{Profile, PulseShape, PUBLISHED_PI, PUBLISHED_TWO_PI};
use crate::schedule::{PulseAngle, Schedule, SegmentKind};

/// A Hermitian generator `H(t)` on a fixed-dimension space.
pub trait TimeDependentHamiltonian {
    fn dim(&self) -> usize;

    fn at(&self, t: f64) -> Result<CMatrix>;

    /// True when `H` does not depend on `t`.
    fn is_constant(&self) -> bool {
        false
    }

    /// Step moments `((1/h)∫H, (1/h²)∫(t − t_mid) H)` over `[a, b]`, by
    /// default from the two-point Gauss–Legendre rule.
    fn moments(&self, a: f64, b: f64) -> Result<(CMatrix, CMatrix)> {
        let h = b - a;
        let mid = 0.5 * (a + b);
        let d = h * 3f64.sqrt() / 6.0;
        let g1 = self.at(mid - d)?;
        let g2 = self.at(mid + d)?;
        let m0 = (&g1 + &g2) * C64::from(0.5);
        let m1 = (g2 - g1) * C64::from(3f64.sqrt() / 12.0);
        Ok((m0, m1))
    }
}

/// `H(t)` given by a closure.
pub struct FnHamiltonian<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> CMatrix> FnHamiltonian<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnHamiltonian { dim, f }
    }
}

impl<F: Fn(f64) -> CMatrix> TimeDependentHamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> Result<CMatrix> {
        Ok((self.f)(t))
    }
}

/// A time-independent generator.
pub struct ConstantHamiltonian(pub Hermitian);

impl TimeDependentHamiltonian for ConstantHamiltonian {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn at(&self, _t: f64) -> Result<CMatrix> {
        Ok(self.0.matrix().clone())
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// One-step integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `exp(−i h H(t_mid))`, second order.
    Midpoint,
    /// `exp(−i (h M0 − i h² [M1, M0]))` from the step moments, fourth order.
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Spectral-norm distance between successive refinements.
    pub tol: f64,
    pub scheme: Scheme,
    pub initial_steps: usize,
    pub max_halvings: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { tol: 1e-12, scheme: Scheme::Magnus4, initial_steps: 4, max_halvings: 16 }
    }
}

/// A converged propagation with its refinement record.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub unitary: Unitary,
    pub steps: usize,
    /// Distance between the last two refinements.
    pub distance: f64,
    /// `(steps, distance to the next refinement)` for each halving.
    pub history: Vec<(usize, f64)>,
}

fn uniform_product(
    h: &dyn TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<CMatrix> {
    let dt = (t1 - t0) / steps as f64;
    let mut u = identity(h.dim());
    for k in 0..steps {
        let a = t0 + k as f64 * dt;
        let b = if k + 1 == steps { t1 } else { a + dt };
        let generator = match scheme {
            Scheme::Midpoint => h.at(0.5 * (a + b))? * C64::from(b - a),
            Scheme::Magnus4 => {
                let (m0, m1) = h.moments(a, b)?;
                let comm = &m1 * &m0 - &m0 * &m1;
                m0 * C64::from(b - a) - comm * (I * (b - a) * (b - a))
            }
        };
        let herm = (&generator + generator.adjoint()) * C64::from(0.5);
        u = expm_taylor(&herm) * u;
    }
    Ok(u)
}

/// Time-ordered `U(t1, t0)` with step halving until refinements agree to
/// `opts.tol`; a constant generator is a single exact exponential.
pub fn propagate(h: &dyn TimeDependentHamiltonian, t0: f64, t1: f64, opts: &PropagateOptions) -> Result<Unitary> {
    propagate_report(h, t0, t1, opts).map(|p| p.unitary)
}

pub fn propagate_report(
    h: &dyn TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    opts: &PropagateOptions,
) -> Result<Propagation> {
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::InvalidArgument(format!("bad propagation interval [{t0}, {t1}]")));
    }
    if !(opts.tol > 0.0) || opts.initial_steps == 0 {
        return Err(Error::InvalidArgument("tolerance and initial step count must be positive".into()));
    }
    if t1 == t0 {
        return Ok(Propagation { unitary: Unitary::identity(h.dim()), steps: 0, distance: 0.0, history: Vec::new() });
    }
    if h.is_constant() {
        let m = h.at(t0)?;
        let herm = Hermitian::new(m)?;
        let u = HermitianEigen::new(&herm).exp_i(t1 - t0);
        return Ok(Propagation { unitary: Unitary::new(u)?, steps: 1, distance: 0.0, history: Vec::new() });
    }
    let mut steps = opts.initial_steps;
    let mut current = uniform_product(h, t0, t1, steps, opts.scheme)?;
    let mut history = Vec::new();
    for _ in 0..opts.max_halvings {
        let finer = uniform_product(h, t0, t1, 2 * steps, opts.scheme)?;
        let distance = norm2(&(&finer - &current));
        history.push((steps, distance));
        steps *= 2;
        current = finer;
        if distance <= opts.tol {
            return Ok(Propagation { unitary: Unitary::new(current)?, steps, distance, history });
        }
    }
    let distance = history.last().map_or(f64::INFINITY, |h| h.1);
    Err(Error::PropagationNotConverged { distance, tol: opts.tol, steps })
}

/// `G(t) = P(t)† H P(t)` for a shaped pulse, split as
/// `G = H_∥ + cos ψ(t) H_c + sin ψ(t) H_s`.
pub struct PulseFrame {
    shape: PulseShape,
    parallel: CMatrix,
    cos_part: CMatrix,
    sin_part: CMatrix,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MOMENT_ORDER: usize = 12;

impl PulseFrame {
    pub fn new(shape: &PulseShape, h: &Hermitian) -> Result<Self> {
        if !h.dim().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: 2 * (h.dim() / 2 + 1), got: h.dim() });
        }
        let dim_b = h.dim() / 2;
        let frame = |psi: f64| {
            let p = kron(&rotation(shape.axis, psi), &identity(dim_b));
            p.adjoint() * h.matrix() * p
        };
        let (g0, g_pi, g_half) = (frame(0.0), frame(std::f64::consts::PI), frame(0.5 * std::f64::consts::PI));
        let parallel = (&g0 + &g_pi) * C64::from(0.5);
        let cos_part = (&g0 - &g_pi) * C64::from(0.5);
        let sin_part = &g_half - &parallel;
        let (nodes, weights) = gauss_legendre(MOMENT_ORDER);
        Ok(PulseFrame { shape: *shape, parallel, cos_part, sin_part, nodes, weights })
    }

    fn combine(&self, one: f64, c: f64, s: f64) -> CMatrix {
        &self.parallel * C64::from(one) + &self.cos_part * C64::from(c) + &self.sin_part * C64::from(s)
    }
}

impl TimeDependentHamiltonian for PulseFrame {
    fn dim(&self) -> usize {
        self.parallel.nrows()
    }

    fn at(&self, t: f64) -> Result<CMatrix> {
        let (s, c) = self.shape.psi(t)?.sin_cos();
        Ok(self.combine(1.0, c, s))
    }

    fn moments(&self, a: f64, b: f64) -> Result<(CMatrix, CMatrix)> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let h = b - a;
        let (mut c0, mut s0, mut c1, mut s1) = (0.0, 0.0, 0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = mid + half * x;
            let (s, c) = self.shape.psi_at(t / self.shape.tau_p).sin_cos();
            c0 += w * c;
            s0 += w * s;
            c1 += w * (t - mid) * c;
            s1 += w * (t - mid) * s;
        }
        // ∫ = half · Σ w f; normalise by h and h².
        let (c0, s0) = (c0 * half / h, s0 * half / h);
        let (c1, s1) = (c1 * half / (h * h), s1 * half / (h * h));
        Ok((self.combine(1.0, c0, s0), self.combine(0.0, c1, s1)))
    }
}

/// Propagator of one shaped pulse acting on `spin ⊗ bath` with bath
/// Hamiltonian `h` switched on throughout.
pub fn pulse_propagator(shape: &PulseShape, h: &Hermitian, opts: &PropagateOptions) -> Result<Unitary> {
    let frame = PulseFrame::new(shape, h)?;
    let u_g = propagate(&frame, 0.0, shape.tau_p, opts)?;
    let dim_b = h.dim() / 2;
    let p = kron(&rotation(shape.axis, shape.theta), &identity(dim_b));
    Ok(Unitary::from_raw(p * u_g.into_matrix()))
}

/// How pulse windows of a schedule are realised.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeMap {
    /// Instantaneous rotations; every window must have zero width.
    Ideal,
    /// One profile per rotation angle, stretched to each window.
    Profiles { pi: Profile, two_pi: Profile },
    /// One shape per finite-width window, in time order.
    Explicit(Vec<PulseShape>),
}

impl ShapeMap {
    /// Published π and 2π shapes.
    pub fn published() -> Self {
        let [a, b, c] = PUBLISHED_PI;
        let [d, e, f] = PUBLISHED_TWO_PI;
        ShapeMap::Profiles { pi: Profile::Fourier { a, b, c }, two_pi: Profile::Fourier { a: d, b: e, c: f } }
    }

    /// Constant-amplitude pulses.
    pub fn naive() -> Self {
        ShapeMap::Profiles { pi: Profile::Constant, two_pi: Profile::Constant }
    }
}

/// Ideal rotation on `spin ⊗ bath`.
pub fn ideal_pulse(angle: PulseAngle, axis: Axis, dim_b: usize) -> CMatrix {
    kron(&rotation(axis, angle.radians()), &identity(dim_b))
}

/// Ordered product over the whole schedule with the bath Hamiltonian on at
/// all times and pulses realised per `shapes`.
pub fn full_propagator(
    schedule: &Schedule,
    shapes: &ShapeMap,
    bath: &Bath,
    opts: &PropagateOptions,
) -> Result<Unitary> {
    let h = bath.hamiltonian();
    let dim_b = bath.dim_b();
    let eig = h.eigen();
    let tol = 1e-12 * schedule.total.max(1.0);
    let mut explicit = match shapes {
        ShapeMap::Explicit(list) => Some(list.iter()),
        _ => None,
    };
    // Windows of equal shape and duration share one propagator.
    let mut cache: Vec<(PulseAngle, Axis, u64, CMatrix)> = Vec::new();
    let mut u = identity(h.dim());
    for seg in &schedule.segments {
        let dur = seg.duration();
        match seg.kind {
            SegmentKind::Free { .. } => u = eig.exp_i(dur) * u,
            SegmentKind::Pulse { angle, axis } => {
                if dur == 0.0 {
                    u = ideal_pulse(angle, axis, dim_b) * u;
                    continue;
                }
                let shape = match (shapes, explicit.as_mut()) {
                    (ShapeMap::Ideal, _) => {
                        return Err(Error::InvalidArgument(format!(
                            "ideal pulses need zero-width windows; window at {} lasts {dur}",
                            seg.start
                        )))
                    }
                    (ShapeMap::Profiles { pi, two_pi }, _) => {
                        let profile = if angle == PulseAngle::Pi { *pi } else { *two_pi };
                        PulseShape { theta: angle.radians(), tau_p: dur, profile, axis }
                    }
                    (ShapeMap::Explicit(_), Some(iter)) => {
                        let s = *iter.next().ok_or_else(|| {
                            Error::InvalidArgument("fewer explicit shapes than finite windows".into())
                        })?;
                        if (s.tau_p - dur).abs() > tol {
                            return Err(Error::InvalidArgument(format!(
                                "shape duration {} does not match window [{}, {}]",
                                s.tau_p, seg.start, seg.end
                            )));
                        }
                        if (s.theta - angle.radians()).abs() > 1e-12 || s.axis != axis {
                            return Err(Error::InvalidArgument(format!(
                                "shape (θ = {}, {}) does not match window ({}, {axis})",
                                s.theta,
                                s.axis,
                                angle.radians()
                            )));
                        }
                        s
                    }
                    (ShapeMap::Explicit(_), None) => unreachable!("explicit iterator exists"),
                };
                let key = dur.to_bits();
                let found = cache.iter().find(|(a, x, k, _)| {
                    *a == angle && *x == axis && *k == key && !matches!(shapes, ShapeMap::Explicit(_))
                });
                let w = match found {
                    Some((.., m)) => m.clone(),
                    None => {
                        let m = pulse_propagator(&shape, &h, opts)?.into_matrix();
                        cache.push((angle, axis, key, m.clone()));
                        m
                    }
                };
                u = w * u;
            }
        }
    }
    if let Some(mut rest) = explicit {
        if rest.next().is_some() {
            return Err(Error::InvalidArgument("more explicit shapes than finite windows".into()));
        }
    }
    Unitary::new(u)
}

/// How pulse windows enter the spin-conditioned propagators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseMode {
    /// Zero-width windows only.
    Ideal,
    /// The coupling is off inside windows; the bath evolves under `A0`.
    NoiseOffWindows,
}

/// `U₊` and `U₋` on the bath space.
#[derive(Debug, Clone)]
pub struct ConditionedPropagators {
    pub u_plus: Unitary,
    pub u_minus: Unitary,
}

/// `U± = Π exp(−i(A0 ± F̃ A1)Δt)` over the segments, `F̃ = 0` in windows.
pub fn conditioned_propagators(
    schedule: &Schedule,
    bath: &DephasingBath,
    mode: PulseMode,
) -> Result<ConditionedPropagators> {
    if schedule.axis == Axis::Z {
        return Err(Error::InvalidArgument("pulses about z do not flip the dephasing coupling".into()));
    }
    let plus = bath.conditioned(1.0).eigen();
    let minus = bath.conditioned(-1.0).eigen();
    let off = bath.a0.eigen();
    let mut up = identity(bath.dim_b());
    let mut um = identity(bath.dim_b());
    for seg in &schedule.segments {
        let dur = seg.duration();
        match seg.kind {
            SegmentKind::Free { sign } => {
                let (p, m) = if sign > 0 { (&plus, &minus) } else { (&minus, &plus) };
                up = p.exp_i(dur) * up;
                um = m.exp_i(dur) * um;
            }
            SegmentKind::Pulse { axis, .. } => {
                if axis != schedule.axis {
                    return Err(Error::InvalidArgument(format!(
                        "window about {axis} in a schedule about {}",
                        schedule.axis
                    )));
                }
                if dur == 0.0 {
                    continue;
                }
                if mode == PulseMode::Ideal {
                    return Err(Error::InvalidArgument(format!(
                        "finite window at {} mixes the σz eigenspaces; use full propagation",
                        seg.start
                    )));
                }
                let w = off.exp_i(dur);
                up = &w * up;
                um = w * um;
            }
        }
    }
    Ok(ConditionedPropagators { u_plus: Unitary::new(up)?, u_minus: Unitary::new(um)? })
}

/// Reference propagator for [`pulse_deviation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "tau_s")]
pub enum DeviationVariant {
    /// `(e^{−iτ_p A0}) · P_θ`: the coupling to the spin vanishes.
    Zero,
    /// `e^{−i(τ_p − τ_s)H} P_θ e^{−iτ_s H}`: an ideal pulse at `τ_s`.
    IdealAt(f64),
    /// `e^{−iτ_p B0} P_θ` with `B0 = A0 + σz A_z` for z-axis pulses.
    Longitudinal,
}

/// `‖U_p − reference‖` for a single pulse under the given bath.
pub fn pulse_deviation(
    shape: &PulseShape,
    bath: &Bath,
    variant: DeviationVariant,
    opts: &PropagateOptions,
) -> Result<f64> {
    let dim_b = bath.dim_b();
    let p = kron(&rotation(shape.axis, shape.theta), &identity(dim_b));
    let tau = shape.tau_p;
    let reference = match variant {
        DeviationVariant::Zero | DeviationVariant::IdealAt(_) => {
            let deph = bath
                .as_dephasing()
                .ok_or_else(|| Error::InvalidArgument("this deviation variant needs a dephasing bath".into()))?;
            if shape.axis == Axis::Z {
                return Err(Error::InvalidArgument("dephasing variants need pulses about x or y".into()));
            }
            match variant {
                DeviationVariant::Zero => kron(&identity(2), &deph.a0.eigen().exp_i(tau)) * &p,
                DeviationVariant::IdealAt(ts) => {
                    if !(0.0..=tau).contains(&ts) {
                        return Err(Error::InvalidArgument(format!("τ_s = {ts} outside [0, {tau}]")));
                    }
                    let eig = deph.hamiltonian().eigen();
                    eig.exp_i(tau - ts) * &p * eig.exp_i(ts)
                }
                DeviationVariant::Longitudinal => unreachable!(),
            }
        }
        DeviationVariant::Longitudinal => {
            let gen = bath
                .as_general()
                .ok_or_else(|| Error::InvalidArgument("the longitudinal variant needs a general bath".into()))?;
            if shape.axis != Axis::Z {
                return Err(Error::InvalidArgument("the longitudinal variant needs a z-axis pulse".into()));
            }
            gen.longitudinal_part(Axis::Z).eigen().exp_i(tau) * &p
        }
    };
    let u = pulse_propagator(shape, &bath.hamiltonian(), opts)?;
    Ok(norm2(&(u.matrix() - reference)))
}

/// Interaction picture with respect to the ideal pulses about one axis:
/// `H_eff(t) = R(t)† H R(t)` with `R(t)` the product of those pulses up to
/// `t`.
pub struct TogglingFrame {
    total: f64,
    hamiltonian: Hermitian,
    dim_b: usize,
    /// `(instant, accumulated 2×2 rotation from that instant on)`.
    switches: Vec<(f64, CMatrix)>,
}

impl TogglingFrame {
    /// Frame of the pulses about `axis` in `schedule`; those pulses must
    /// be ideal.
    pub fn new(schedule: &Schedule, hamiltonian: &Hermitian, axis: Axis) -> Result<Self> {
        if !hamiltonian.dim().is_multiple_of(2) {
            return Err(Error::InvalidArgument("joint Hamiltonian must have even dimension".into()));
        }
        let mut switches = Vec::new();
        let mut r = identity(2);
        for seg in &schedule.segments {
            if let SegmentKind::Pulse { angle, axis: a } = seg.kind {
                if a == axis {
                    if seg.duration() > 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "frame pulses must be ideal; window at {} lasts {}",
                            seg.start,
                            seg.duration()
                        )));
                    }
                    r = rotation(a, angle.radians()) * r;
                    switches.push((seg.start, r.clone()));
                }
            }
        }
        Ok(TogglingFrame {
            total: schedule.total,
            hamiltonian: hamiltonian.clone(),
            dim_b: hamiltonian.dim() / 2,
            switches,
        })
    }

    /// Accumulated frame rotation at `t` (pulses at exactly `t` included).
    pub fn rotation_at(&self, t: f64) -> Result<CMatrix> {
        if !(0.0..=self.total).contains(&t) {
            return Err(Error::InvalidArgument(format!("time {t} outside the frame span [0, {}]", self.total)));
        }
        let idx = self.switches.partition_point(|(s, _)| *s <= t);
        Ok(if idx == 0 { identity(2) } else { self.switches[idx - 1].1.clone() })
    }

    pub fn h_eff(&self, t: f64) -> Result<Hermitian> {
        let r = kron(&self.rotation_at(t)?, &identity(self.dim_b));
        Ok(self.hamiltonian.conjugated(&r))
    }
}

impl TimeDependentHamiltonian for TogglingFrame {
    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn at(&self, t: f64) -> Result<CMatrix> {
        Ok(self.h_eff(t)?.into_matrix())
    }
}

/// Propagator in the toggling frame of the pulses about `axis`, with every
/// other pulse ideal and conjugated into that frame. The lab-frame
/// propagator is `(R(T) ⊗ 1) · U_frame`; both factors are returned.
pub fn toggling_frame_propagator(schedule: &Schedule, bath: &Bath, axis: Axis) -> Result<(Unitary, CMatrix)> {
    let frame = TogglingFrame::new(schedule, &bath.hamiltonian(), axis)?;
    let dim_b = bath.dim_b();
    let mut u = identity(2 * dim_b);
    for seg in &schedule.segments {
        match seg.kind {
            SegmentKind::Free { .. } => {
                let h = frame.h_eff(0.5 * (seg.start + seg.end))?;
                u = h.eigen().exp_i(seg.duration()) * u;
            }
            SegmentKind::Pulse { angle, axis: a } => {
                if a == axis {
                    continue;
                }
                if seg.duration() > 0.0 {
                    return Err(Error::InvalidArgument("secondary pulses must be ideal in the toggling frame".into()));
                }
                let r = frame.rotation_at(seg.start)?;
                let toggled = r.adjoint() * rotation(a, angle.radians()) * r;
                u = kron(&toggled, &identity(dim_b)) * u;
            }
        }
    }
    Ok((Unitary::new(u)?, frame.rotation_at(schedule.total)?))
}
