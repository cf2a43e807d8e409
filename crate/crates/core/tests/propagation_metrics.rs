use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use rudd_core::bath::{generate, random_hermitian, Bath, BathKind, BathSpec};
use rudd_core::metrics::{channel_error_to, distinguishability, phase_gate, spin_channel_error, BathState};
use rudd_core::numerics::fit::fit_loglog;
use rudd_core::numerics::linalg::{expm, identity, kron, rotation, spectral_norm};
use rudd_core::propagation::{
    conditioned_propagators, full_propagator, propagate, propagate_report, pulse_deviation, toggling_frame_propagator,
    ConditionedPropagators, ConstantHamiltonian, DeviationVariant, FnHamiltonian, PropagateOptions, PulseMode, Scheme,
    ShapeMap, TogglingFrame,
};
use rudd_core::pulse::{naive_pulse, PulseShape};
use rudd_core::schedule::{qrudd_schedule, rudd_schedule, udd_instants, udd_schedule, PulseAngle, ThetaPulseWidth};
use rudd_core::{Axis, CMatrix, Hermitian, Unitary, C64};

/// `exp(−i t H)` from a truncated Taylor series with squaring.
fn taylor_exp(h: &CMatrix, t: f64) -> CMatrix {
    let mut s = 0;
    while h.norm() * t.abs() / f64::from(1u32 << s) > 0.05 {
        s += 1;
    }
    let a = h * C64::new(0.0, -t / f64::from(1u32 << s));
    let (mut sum, mut term) = (identity(h.nrows()), identity(h.nrows()));
    for k in 1..=16 {
        term = &term * &a / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn dephasing(dim: usize, gamma: f64, seed: u64) -> Bath {
    generate(&BathSpec::dephasing(dim, gamma, seed)).unwrap()
}

fn dephasing_weights(dim: usize, gamma: f64, seed: u64, weights: &[f64]) -> Bath {
    generate(&BathSpec::dephasing(dim, gamma, seed).with_weights(weights)).unwrap()
}

fn udd_distinguishability(n: usize, gamma_t: f64, seed: u64) -> f64 {
    let bath = dephasing(4, gamma_t, seed);
    let s = udd_schedule(n, 1.0, Axis::X).unwrap();
    distinguishability(&conditioned_propagators(&s, bath.as_dephasing().unwrap(), PulseMode::Ideal).unwrap())
}

#[test]
fn hahn_echo_cancels_a_static_scalar() {
    let spec = BathSpec { kind: BathKind::StaticScalar, dim: 1, gamma: 0.7, weights: vec![0.0, 1.0], seed: 0 };
    let bath = generate(&spec).unwrap();
    let s = udd_schedule(1, 2.3, Axis::X).unwrap();
    let cp = conditioned_propagators(&s, bath.as_dephasing().unwrap(), PulseMode::Ideal).unwrap();
    assert!(distinguishability(&cp) < 1e-15);
}

#[test]
fn no_coupling_means_no_distinguishability() {
    let bath = dephasing_weights(4, 1.0, 9, &[1.0, 0.0]);
    let w = ThetaPulseWidth::fraction(0.5, 3).unwrap();
    for s in [udd_schedule(3, 1.0, Axis::Y).unwrap(), rudd_schedule(3, 1.0, w, Axis::Y).unwrap()] {
        let mode = if s.tau_max() > 0.0 { PulseMode::NoiseOffWindows } else { PulseMode::Ideal };
        let cp = conditioned_propagators(&s, bath.as_dephasing().unwrap(), mode).unwrap();
        assert_eq!(distinguishability(&cp), 0.0);
    }
}

#[test]
fn conditioned_propagators_match_a_finer_product() {
    let bath = dephasing(4, 0.1, 11);
    let d = bath.as_dephasing().unwrap();
    let s = udd_schedule(2, 1.0, Axis::X).unwrap();
    let cp = conditioned_propagators(&s, d, PulseMode::Ideal).unwrap();
    let mut edges = vec![0.0];
    edges.extend(udd_instants(2, 1.0).unwrap());
    edges.push(1.0);
    let mut up = identity(4);
    let mut um = identity(4);
    for (k, w) in edges.windows(2).enumerate() {
        let f = if k % 2 == 0 { 1.0 } else { -1.0 };
        let hp = d.a0.matrix() + d.a1.matrix() * C64::from(f);
        let hm = d.a0.matrix() - d.a1.matrix() * C64::from(f);
        let dt = (w[1] - w[0]) / 10.0;
        for _ in 0..10 {
            up = taylor_exp(&hp, dt) * up;
            um = taylor_exp(&hm, dt) * um;
        }
    }
    assert!(spectral_norm(&(cp.u_plus.matrix() - &up)).unwrap() < 1e-12);
    let oracle = spectral_norm(&(up - um)).unwrap();
    assert!((distinguishability(&cp) - oracle).abs() < 1e-12);
}

#[test]
fn finite_windows_need_full_propagation() {
    let bath = dephasing(2, 0.1, 1);
    let s = rudd_schedule(2, 1.0, ThetaPulseWidth::fraction(0.5, 2).unwrap(), Axis::X).unwrap();
    assert!(conditioned_propagators(&s, bath.as_dephasing().unwrap(), PulseMode::Ideal).is_err());
}

#[test]
fn distinguishability_bounds() {
    let u = Unitary::identity(3);
    assert_eq!(distinguishability(&ConditionedPropagators { u_plus: u.clone(), u_minus: u }), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = expm(&Hermitian::new(random_hermitian(3, &mut rng)).unwrap(), 3.0).unwrap();
    let b = expm(&Hermitian::new(random_hermitian(3, &mut rng)).unwrap(), 3.0).unwrap();
    assert!(distinguishability(&ConditionedPropagators { u_plus: a, u_minus: b }) <= 2.0 + 1e-12);
}

#[test]
fn udd_three_scales_with_power_four() {
    let pts: Vec<(f64, f64)> = (0..7)
        .map(|k| 0.02 * 10f64.powf(k as f64 / 6.0))
        .map(|g| (g, (0..3).map(|seed| udd_distinguishability(3, g, seed).ln()).sum::<f64>() / 3.0))
        .map(|(g, l)| (g, l.exp()))
        .collect();
    let fit = fit_loglog(&pts).unwrap();
    assert!((fit.slope - 4.0).abs() < 0.2, "slope {}", fit.slope);
}

#[test]
fn constant_generator_propagates_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = Hermitian::new(random_hermitian(4, &mut rng)).unwrap();
    let u = propagate(&ConstantHamiltonian(h.clone()), 0.0, 1.7, &PropagateOptions::default()).unwrap();
    assert!(spectral_norm(&(u.matrix() - expm(&h, 1.7).unwrap().matrix())).unwrap() < 1e-14);
}

#[test]
fn lab_frame_published_pulse_is_the_target_rotation() {
    let shape = PulseShape::published(PulseAngle::Pi, 1.0, Axis::Y).unwrap();
    let sy = Axis::Y.pauli();
    let h = FnHamiltonian::new(2, move |t| &sy * C64::from(shape.amplitude(t.clamp(0.0, 1.0)).unwrap()));
    let u = propagate(&h, 0.0, 1.0, &PropagateOptions::default()).unwrap();
    assert!(spectral_norm(&(u.matrix() - rotation(Axis::Y, PI))).unwrap() < 1e-10);
}

#[test]
fn refinement_order_of_both_schemes() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (a, b) = (random_hermitian(3, &mut rng), random_hermitian(3, &mut rng));
    let h = FnHamiltonian::new(3, move |t| &a + &b * C64::from((2.0 * t).sin()));
    for (scheme, order) in [(Scheme::Midpoint, 2.0), (Scheme::Magnus4, 4.0)] {
        let opts = PropagateOptions { tol: 1e-9, scheme, initial_steps: 4, max_halvings: 16 };
        let p = propagate_report(&h, 0.0, 1.0, &opts).unwrap();
        // Successive distances shrink by 2^order once asymptotic.
        let d: Vec<f64> = p.history.iter().map(|h| h.1).filter(|&d| d > 1e-11).collect();
        let n = d.len();
        assert!(n >= 3, "{scheme:?}: {:?}", p.history);
        let measured = (d[n - 2] / d[n - 1]).log2();
        assert!((measured - order).abs() < 0.3, "{scheme:?}: order {measured}");
    }
}

#[test]
fn zero_bath_gives_the_net_rotation() {
    let bath = generate(&BathSpec::general(2, 0.0, 1)).unwrap();
    for n in [1, 2, 3] {
        let s = rudd_schedule(n, 1.0, ThetaPulseWidth::fraction(0.6, n).unwrap(), Axis::X).unwrap();
        let u = full_propagator(&s, &ShapeMap::published(), &bath, &PropagateOptions::default()).unwrap();
        let want = kron(&rotation(Axis::X, PI * n as f64), &identity(2));
        assert!(spectral_norm(&(u.matrix() - want)).unwrap() < 1e-10, "N = {n}");
    }
}

#[test]
fn narrow_shaped_rudd_approaches_ideal_udd() {
    let bath = dephasing(3, 1.0, 4);
    let n = 2;
    let rudd =
        rudd_schedule(n, 1.0, ThetaPulseWidth::new(1e-4 * ThetaPulseWidth::bound(n), n).unwrap(), Axis::X).unwrap();
    let udd = udd_schedule(n, 1.0, Axis::X).unwrap();
    let opts = PropagateOptions::default();
    let shaped = full_propagator(&rudd, &ShapeMap::published(), &bath, &opts).unwrap();
    let ideal = full_propagator(&udd, &ShapeMap::Ideal, &bath, &opts).unwrap();
    assert!(spectral_norm(&(shaped.matrix() - ideal.matrix())).unwrap() < 1e-4);
}

#[test]
fn pulse_deviation_vanishes_without_coupling() {
    let opts = PropagateOptions::default();
    let free = dephasing_weights(4, 1.0, 2, &[1.0, 0.0]);
    for shape in [PulseShape::published(PulseAngle::Pi, 0.3, Axis::X).unwrap(), naive_pulse(PI, 0.3, Axis::Y).unwrap()]
    {
        assert!(pulse_deviation(&shape, &free, DeviationVariant::Zero, &opts).unwrap() < 1e-13);
    }
    let longitudinal_only = generate(&BathSpec::general(4, 1.0, 2).with_weights(&[0.5, 0.0, 0.0, 0.5])).unwrap();
    let z = PulseShape::published(PulseAngle::Pi, 0.3, Axis::Z).unwrap();
    assert!(pulse_deviation(&z, &longitudinal_only, DeviationVariant::Longitudinal, &opts).unwrap() < 1e-13);
}

#[test]
fn pulse_deviation_rejects_mismatches() {
    let opts = PropagateOptions::default();
    let deph = dephasing(2, 1.0, 1);
    let gen = generate(&BathSpec::general(2, 1.0, 1)).unwrap();
    let x = PulseShape::published(PulseAngle::Pi, 0.1, Axis::X).unwrap();
    assert!(pulse_deviation(&x, &gen, DeviationVariant::Zero, &opts).is_err());
    assert!(pulse_deviation(&x, &deph, DeviationVariant::Longitudinal, &opts).is_err());
    assert!(pulse_deviation(&x.with_axis(Axis::Z), &deph, DeviationVariant::Zero, &opts).is_err());
    assert!(pulse_deviation(&x, &deph, DeviationVariant::IdealAt(0.2), &opts).is_err());
}

fn deviation_slope(shape: &PulseShape, bath: &Bath, variant: DeviationVariant) -> f64 {
    let opts = PropagateOptions { tol: 1e-13, ..PropagateOptions::default() };
    let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.04, 0.08]
        .iter()
        .map(|&t| (t, pulse_deviation(&shape.with_duration(t).unwrap(), bath, variant, &opts).unwrap()))
        .collect();
    fit_loglog(&pts).unwrap().slope
}

#[test]
fn pulse_deviation_slope_ladder_on_every_axis() {
    let deph = dephasing(4, 1.0, 21);
    for axis in [Axis::X, Axis::Y] {
        let naive = deviation_slope(&naive_pulse(PI, 1.0, axis).unwrap(), &deph, DeviationVariant::Zero);
        let shaped =
            deviation_slope(&PulseShape::published(PulseAngle::Pi, 1.0, axis).unwrap(), &deph, DeviationVariant::Zero);
        assert!((naive - 1.0).abs() < 0.15, "{axis}: naive slope {naive}");
        assert!((shaped - 3.0).abs() < 0.2, "{axis}: shaped slope {shaped}");
    }
    let gen = generate(&BathSpec::general(4, 1.0, 21)).unwrap();
    let z = deviation_slope(
        &PulseShape::published(PulseAngle::Pi, 1.0, Axis::Z).unwrap(),
        &gen,
        DeviationVariant::Longitudinal,
    );
    assert!((z - 3.0).abs() < 0.2, "longitudinal slope {z}");
}

#[test]
fn channel_error_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let v = expm(&Hermitian::new(random_hermitian(3, &mut rng)).unwrap(), 1.0).unwrap();
    for n in [1, 2, 3] {
        let r = rotation(Axis::X, PI * n as f64);
        let u = Unitary::new(kron(&r, v.matrix())).unwrap();
        assert!(spin_channel_error(&u, n, Axis::X, &BathState::MaximallyMixed).unwrap().epsilon < 1e-14);
    }
    let id = Unitary::identity(6);
    assert!((spin_channel_error(&id, 1, Axis::Y, &BathState::MaximallyMixed).unwrap().epsilon - 1.0).abs() < 1e-14);
}

#[test]
fn channel_error_of_a_phase_error() {
    // A z rotation by φ moves equatorial states by trace distance |sin(φ/2)|.
    for phi in [1e-3, 0.1, 0.7, 2.0] {
        let u = Unitary::new(kron(&phase_gate(phi), &identity(2))).unwrap();
        let e = channel_error_to(&u, &identity(2), &BathState::MaximallyMixed).unwrap().epsilon;
        assert!((e - (phi / 2.0).sin().abs()).abs() < 1e-14);
    }
}

#[test]
fn toggling_frame_examples() {
    let s = qrudd_schedule(0, 1, 1.0, ThetaPulseWidth::zero(), ThetaPulseWidth::zero()).unwrap();
    let free = generate(&BathSpec::general(2, 1.0, 3).with_weights(&[1.0, 0.0, 0.0, 0.0])).unwrap();
    let frame = TogglingFrame::new(&s, &free.hamiltonian(), Axis::X).unwrap();
    let h0 = frame.h_eff(0.0).unwrap();
    for t in [0.2, 0.5, 0.9, 1.0] {
        assert!(spectral_norm(&(frame.h_eff(t).unwrap().matrix() - h0.matrix())).unwrap() < 1e-15);
    }
    assert!(frame.h_eff(1.5).is_err());

    let bath = generate(&BathSpec::general(2, 1.0, 3)).unwrap();
    let q = qrudd_schedule(2, 2, 1.0, ThetaPulseWidth::zero(), ThetaPulseWidth::zero()).unwrap();
    let frame = TogglingFrame::new(&q, &bath.hamiltonian(), Axis::X).unwrap();
    let norm = spectral_norm(bath.hamiltonian().matrix()).unwrap();
    for k in 0..=20 {
        let h = frame.h_eff(k as f64 / 20.0).unwrap();
        assert!(Hermitian::new(h.matrix().clone()).is_ok());
        assert!((spectral_norm(h.matrix()).unwrap() - norm).abs() < 1e-12);
    }
}

#[test]
fn toggling_frame_matches_lab_frame_for_ideal_qrudd() {
    let bath = generate(&BathSpec::general(2, 0.4, 6)).unwrap();
    let q = qrudd_schedule(2, 2, 1.0, ThetaPulseWidth::zero(), ThetaPulseWidth::zero()).unwrap();
    let lab = full_propagator(&q, &ShapeMap::Ideal, &bath, &PropagateOptions::default()).unwrap();
    let (frame_u, r) = toggling_frame_propagator(&q, &bath, Axis::X).unwrap();
    let rebuilt = kron(&r, &identity(2)) * frame_u.matrix();
    assert!(spectral_norm(&(lab.matrix() - rebuilt)).unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn full_propagators_are_unitary(seed in any::<u64>(), n in 1usize..4, fraction in 0.05f64..1.0, gamma_t in 0.01f64..1.0, naive in any::<bool>()) {
        let bath = dephasing(3, gamma_t, seed);
        let s = rudd_schedule(n, 1.0, ThetaPulseWidth::fraction(fraction, n).unwrap(), Axis::Y).unwrap();
        let shapes = if naive { ShapeMap::naive() } else { ShapeMap::published() };
        let u = full_propagator(&s, &shapes, &bath, &PropagateOptions::default()).unwrap();
        prop_assert!(u.defect() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conditioned_propagators_are_unitary(seed in any::<u64>(), n in 1usize..8, gamma_t in 0.01f64..5.0) {
        let bath = dephasing(4, gamma_t, seed);
        let s = udd_schedule(n, 1.0, Axis::X).unwrap();
        let cp = conditioned_propagators(&s, bath.as_dephasing().unwrap(), PulseMode::Ideal).unwrap();
        prop_assert!(cp.u_plus.defect() < 1e-10 && cp.u_minus.defect() < 1e-10);
        prop_assert!(distinguishability(&cp) <= 2.0 + 1e-12);
    }
}
