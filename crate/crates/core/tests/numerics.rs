use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use rudd_core::bath::random_hermitian;
use rudd_core::numerics::fit::fit_loglog;
use rudd_core::numerics::linalg::{expm, identity, spectral_norm};
use rudd_core::numerics::quad::quad;
use rudd_core::numerics::roots::solve_roots;
use rudd_core::{CMatrix, Hermitian, C64};

/// `exp(−i t H)` from a 10-term Taylor series on `t/2^s`, squared `s` times.
fn taylor_oracle(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    let norm = h.norm() * t.abs();
    let mut s = 0;
    while norm / f64::from(1u32 << s) > 0.1 {
        s += 1;
    }
    let a = h * C64::new(0.0, -t / f64::from(1u32 << s));
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=10 {
        term = &term * &a / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Largest singular value from power iteration on `M†M`.
fn power_iteration_norm(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let mut v = CMatrix::from_fn(m.ncols(), 1, |r, _| C64::new(1.0 + r as f64 * 0.37, 0.5 - r as f64 * 0.11));
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let nw = w.norm();
        v = w / C64::from(nw);
        let next = (v.adjoint() * &g * &v)[(0, 0)].re;
        if (next - lambda).abs() <= 1e-15 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

fn random_matrix(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_hermitian(dim, &mut rng);
    let b = random_hermitian(dim, &mut rng);
    a + b * C64::new(0.0, 1.0)
}

fn random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = Hermitian::new(random_hermitian(dim, &mut rng)).unwrap();
    expm(&h, 1.0).unwrap().into_matrix()
}

#[test]
fn expm_of_zero_is_identity() {
    for dim in [1, 3, 8] {
        let u = expm(&Hermitian::zeros(dim), 1.0).unwrap();
        assert!((u.matrix() - identity(dim)).norm() < 1e-15);
    }
}

#[test]
fn expm_of_sigma_z_is_diagonal_phase() {
    let tau = 0.83;
    let h = Hermitian::new(rudd_core::Axis::Z.pauli()).unwrap();
    let u = expm(&h, tau).unwrap();
    let expected = DMatrix::from_row_slice(
        2,
        2,
        &[C64::from_polar(1.0, -tau), C64::from(0.0), C64::from(0.0), C64::from_polar(1.0, tau)],
    );
    assert!((u.matrix() - expected).norm() < 1e-15);
}

#[test]
fn expm_matches_taylor_oracle_on_random_8x8() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = random_hermitian(8, &mut rng);
    let u = expm(&Hermitian::new(h.clone()).unwrap(), 0.3).unwrap();
    let oracle = taylor_oracle(&h, 0.3);
    assert!(spectral_norm(&(u.matrix() - &oracle)).unwrap() < 1e-10);
}

#[test]
fn spectral_norm_examples() {
    assert_eq!(spectral_norm(&identity(4)).unwrap(), 1.0);
    let d = DMatrix::from_row_slice(2, 2, &[C64::from(3.0), C64::from(0.0), C64::from(0.0), C64::from(-5.0)]);
    assert!((spectral_norm(&d).unwrap() - 5.0).abs() < 1e-14);
    assert!(spectral_norm(&CMatrix::zeros(0, 0)).is_err());
}

#[test]
fn spectral_norm_matches_power_iteration() {
    for seed in 0..5 {
        let m = random_matrix(6, seed);
        let a = spectral_norm(&m).unwrap();
        let b = power_iteration_norm(&m);
        assert!((a - b).abs() <= 1e-9 * a, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn quadrature_examples() {
    assert!((quad(f64::sin, 0.0, PI, 1e-12).unwrap() - 2.0).abs() < 1e-12);
    assert!((quad(|_| 1.0, 0.0, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-14);
    let tau = 2.0;
    let v = quad(|t| (PI * t / tau).sin(), 0.0, tau, 1e-12).unwrap();
    assert!((v - 4.0 / PI).abs() < 1e-12);
}

#[test]
fn root_examples() {
    let x = solve_roots(|x: &[f64]| Ok(vec![x[0] - 1.0]), &[0.0], 1e-12).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-12);
    let f = |v: &[f64]| vec![v[0] * v[0] - 4.0, v[1] - v[0]];
    let x = solve_roots(|v: &[f64]| Ok(f(v)), &[1.0, 1.0], 1e-12).unwrap();
    assert!((x[0] - 2.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
    assert!(f(&x).iter().all(|r| r.abs() <= 1e-12));
}

#[test]
fn fit_examples() {
    let cube: Vec<_> = [0.01, 0.02, 0.04].iter().map(|&x: &f64| (x, x.powi(3))).collect();
    let f = fit_loglog(&cube).unwrap();
    assert!((f.slope - 3.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    let lin: Vec<_> = [0.1, 0.2, 0.5].iter().map(|&x| (x, 5.0 * x)).collect();
    let f = fit_loglog(&lin).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-12 && (f.intercept - 5f64.ln()).abs() < 1e-12);
    let offset: Vec<_> = (0..8).map(|k| 1e-3 * 10f64.powf(k as f64 / 7.0)).map(|x| (x, x * x + 1e-9)).collect();
    assert!((fit_loglog(&offset).unwrap().slope - 2.0).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expm_is_a_one_parameter_group(seed in any::<u64>(), dim in 1usize..=16, t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Hermitian::new(random_hermitian(dim, &mut rng)).unwrap();
        let lhs = expm(&h, t).unwrap().into_matrix() * expm(&h, s).unwrap().into_matrix();
        let rhs = expm(&h, t + s).unwrap().into_matrix();
        prop_assert!(spectral_norm(&(lhs - rhs)).unwrap() < 1e-10);
    }

    #[test]
    fn expm_is_unitary(seed in any::<u64>(), dim in 1usize..=16, t in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Hermitian::new(random_hermitian(dim, &mut rng)).unwrap();
        prop_assert!(expm(&h, t).unwrap().defect() < 1e-10);
    }

    #[test]
    fn spectral_norm_is_unitarily_invariant(seed in any::<u64>(), dim in 1usize..=8) {
        let m = random_matrix(dim, seed);
        let u = random_unitary(dim, seed.wrapping_add(1));
        let v = random_unitary(dim, seed.wrapping_add(2));
        let a = spectral_norm(&m).unwrap();
        let b = spectral_norm(&(&u * &m * &v)).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn fit_recovers_exact_monomials(k in -4.0f64..6.0, c in 0.01f64..100.0, x0 in 1e-4f64..1.0) {
        let pts: Vec<_> = (0..6).map(|j| x0 * 1.7f64.powi(j)).map(|x| (x, c * x.powf(k))).collect();
        let f = fit_loglog(&pts).unwrap();
        prop_assert!((f.slope - k).abs() < 1e-10);
    }

    #[test]
    fn roots_resubstitute_below_tol(a in 0.5f64..4.0, b in -3.0f64..3.0) {
        // (x² − a², y − b x) has the root (a, a b) near the start.
        let f = move |v: &[f64]| vec![v[0] * v[0] - a * a, v[1] - b * v[0]];
        let x = solve_roots(|v: &[f64]| Ok(f(v)), &[a + 0.5, 1.0], 1e-12).unwrap();
        prop_assert!(f(&x).iter().all(|r| r.abs() <= 1e-12));
    }
}
