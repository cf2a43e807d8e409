//! Bounded bath Hamiltonians.
//!
//! A [`DephasingBath`] realises `H = A0 + σz A1`; a [`GeneralBath`] realises
//! `H = A0 + σx Ax + σy Ay + σz Az`. Every operator acts on a bath of
//! dimension `dim_b` and the norms obey `Σ ‖A_i‖ ≤ γ`, which bounds the
//! joint Hamiltonian by `γ` in spectral norm.
//!
//! Random operators come from a fixed recipe so that a seed pins them down
//! bit for bit: a `ChaCha8Rng` seeded with `seed_from_u64(seed)` draws, for
//! each operator in declaration order, a `dim_b × dim_b` matrix `G` whose
//! entries (row-major, real part then imaginary part) are standard normal.
//! The operator is `(G + G†)/2` rescaled to spectral norm `weight · γ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::linalg::{identity, Axis, CMatrix, Hermitian, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    Dephasing,
    General,
    /// c-number operators `A_i = w_i γ · 1`.
    StaticScalar,
}

impl BathKind {
    /// Number of bath operators, including `A0`.
    pub fn operator_count(self) -> usize {
        match self {
            BathKind::Dephasing | BathKind::StaticScalar => 2,
            BathKind::General => 4,
        }
    }
}

/// Recipe for a reproducible bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub kind: BathKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Relative norms of `(A0, A1)` or `(A0, Ax, Ay, Az)`; equal split when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    4
}

fn default_gamma() -> f64 {
    1.0
}

impl BathSpec {
    pub fn dephasing(dim: usize, gamma: f64, seed: u64) -> Self {
        BathSpec { kind: BathKind::Dephasing, dim, gamma, weights: Vec::new(), seed }
    }

    pub fn general(dim: usize, gamma: f64, seed: u64) -> Self {
        BathSpec { kind: BathKind::General, dim, gamma, weights: Vec::new(), seed }
    }

    pub fn with_weights(mut self, weights: &[f64]) -> Self {
        self.weights = weights.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Weights after defaulting, checked to be non-negative and sum to one.
    pub fn resolved_weights(&self) -> Result<Vec<f64>> {
        let n = self.kind.operator_count();
        let w = if self.weights.is_empty() { vec![1.0 / n as f64; n] } else { self.weights.clone() };
        if w.len() != n {
            return Err(invalid(format!("{:?} bath needs {n} weights, got {}", self.kind, w.len())));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("bath weights must be non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("bath weights must sum to 1, got {sum}")));
        }
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("bath dimension must be at least 1"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid(format!("gamma must be finite and non-negative, got {}", self.gamma)));
        }
        self.resolved_weights().map(|_| ())
    }
}

/// Pure-dephasing bath `H = A0 + σz A1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingBath {
    pub a0: Hermitian,
    pub a1: Hermitian,
    pub gamma: f64,
}

/// General-decoherence bath `H = A0 + σ·A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralBath {
    pub a0: Hermitian,
    pub ax: Hermitian,
    pub ay: Hermitian,
    pub az: Hermitian,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bath {
    Dephasing(DephasingBath),
    General(GeneralBath),
}

fn check_budget(ops: &[&Hermitian], gamma: f64) -> Result<()> {
    let dim = ops[0].dim();
    if ops.iter().any(|o| o.dim() != dim) {
        return Err(invalid("bath operators must share one dimension"));
    }
    let total: f64 = ops.iter().map(|o| o.norm()).sum();
    if total > gamma * (1.0 + 1e-12) + 1e-300 {
        return Err(invalid(format!("bath norms sum to {total}, above gamma = {gamma}")));
    }
    Ok(())
}

impl DephasingBath {
    pub fn new(a0: Hermitian, a1: Hermitian, gamma: f64) -> Result<Self> {
        check_budget(&[&a0, &a1], gamma)?;
        Ok(DephasingBath { a0, a1, gamma })
    }

    pub fn dim_b(&self) -> usize {
        self.a0.dim()
    }

    /// `A0 + sign · A1`, the bath generator seen by a σz eigenstate.
    pub fn conditioned(&self, sign: f64) -> Hermitian {
        self.a0.plus(&self.a1.scaled(sign))
    }

    /// `1 ⊗ A0 + σz ⊗ A1` on the joint space.
    pub fn hamiltonian(&self) -> Hermitian {
        let id = identity(2);
        self.a0.kron_left(&id).plus(&self.a1.kron_left(&Axis::Z.pauli()))
    }

    /// `1 ⊗ A0`: the spin-free part.
    pub fn bath_only(&self) -> Hermitian {
        self.a0.kron_left(&identity(2))
    }
}

impl GeneralBath {
    pub fn new(a0: Hermitian, ax: Hermitian, ay: Hermitian, az: Hermitian, gamma: f64) -> Result<Self> {
        check_budget(&[&a0, &ax, &ay, &az], gamma)?;
        Ok(GeneralBath { a0, ax, ay, az, gamma })
    }

    pub fn dim_b(&self) -> usize {
        self.a0.dim()
    }

    pub fn coupling(&self, axis: Axis) -> &Hermitian {
        match axis {
            Axis::X => &self.ax,
            Axis::Y => &self.ay,
            Axis::Z => &self.az,
        }
    }

    pub fn hamiltonian(&self) -> Hermitian {
        Axis::ALL
            .iter()
            .fold(self.a0.kron_left(&identity(2)), |h, &axis| h.plus(&self.coupling(axis).kron_left(&axis.pauli())))
    }

    /// `1 ⊗ A0 + σ_axis ⊗ A_axis`: the part that commutes with rotations
    /// about `axis`.
    pub fn longitudinal_part(&self, axis: Axis) -> Hermitian {
        self.a0.kron_left(&identity(2)).plus(&self.coupling(axis).kron_left(&axis.pauli()))
    }
}

impl Bath {
    pub fn dim_b(&self) -> usize {
        match self {
            Bath::Dephasing(b) => b.dim_b(),
            Bath::General(b) => b.dim_b(),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Bath::Dephasing(b) => b.gamma,
            Bath::General(b) => b.gamma,
        }
    }

    /// The bath Hamiltonian on the joint `spin ⊗ bath` space.
    pub fn hamiltonian(&self) -> Hermitian {
        match self {
            Bath::Dephasing(b) => b.hamiltonian(),
            Bath::General(b) => b.hamiltonian(),
        }
    }

    pub fn as_dephasing(&self) -> Option<&DephasingBath> {
        match self {
            Bath::Dephasing(b) => Some(b),
            Bath::General(_) => None,
        }
    }

    pub fn as_general(&self) -> Option<&GeneralBath> {
        match self {
            Bath::General(b) => Some(b),
            Bath::Dephasing(_) => None,
        }
    }

    /// Every operator and `γ` multiplied by `factor ≥ 0`.
    pub fn scale(&self, factor: f64) -> Result<Bath> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(invalid(format!("scale factor must be finite and non-negative, got {factor}")));
        }
        Ok(match self {
            Bath::Dephasing(b) => Bath::Dephasing(DephasingBath {
                a0: b.a0.scaled(factor),
                a1: b.a1.scaled(factor),
                gamma: b.gamma * factor,
            }),
            Bath::General(b) => Bath::General(GeneralBath {
                a0: b.a0.scaled(factor),
                ax: b.ax.scaled(factor),
                ay: b.ay.scaled(factor),
                az: b.az.scaled(factor),
                gamma: b.gamma * factor,
            }),
        })
    }
}

/// Draw `(G + G†)/2` with standard-normal complex entries.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(r, c)] = C64::new(re, im);
        }
    }
    (&g + g.adjoint()) * C64::from(0.5)
}

fn normalised(m: CMatrix, norm: f64) -> Hermitian {
    let h = Hermitian::from_raw(m);
    let current = h.norm();
    if norm == 0.0 || current == 0.0 {
        Hermitian::zeros(h.dim())
    } else {
        h.scaled(norm / current)
    }
}

/// Build the bath described by `spec`.
pub fn generate(spec: &BathSpec) -> Result<Bath> {
    spec.validate()?;
    let weights = spec.resolved_weights()?;
    let dim = spec.dim;
    let ops: Vec<Hermitian> = match spec.kind {
        BathKind::StaticScalar => weights.iter().map(|w| Hermitian::identity(dim).scaled(w * spec.gamma)).collect(),
        BathKind::Dephasing | BathKind::General => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            weights
                .iter()
                .map(|w| {
                    let m = random_hermitian(dim, &mut rng);
                    normalised(m, w * spec.gamma)
                })
                .collect()
        }
    };
    let gamma = spec.gamma;
    let mut it = ops.into_iter();
    let mut next = || it.next().ok_or_else(|| Error::InvalidArgument("operator count".into()));
    Ok(match spec.kind {
        BathKind::Dephasing | BathKind::StaticScalar => {
            Bath::Dephasing(DephasingBath { a0: next()?, a1: next()?, gamma })
        }
        BathKind::General => Bath::General(GeneralBath { a0: next()?, ax: next()?, ay: next()?, az: next()?, gamma }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::norm2;

    #[test]
    fn static_scalar_c_numbers() {
        let spec = BathSpec { kind: BathKind::StaticScalar, dim: 1, gamma: 1.0, weights: vec![0.0, 1.0], seed: 0 };
        let bath = generate(&spec).unwrap();
        let b = bath.as_dephasing().unwrap();
        assert_eq!(b.a0.matrix()[(0, 0)], C64::from(0.0));
        assert_eq!(b.a1.matrix()[(0, 0)], C64::from(1.0));
    }

    #[test]
    fn zero_gamma_gives_zero_operators() {
        let bath = generate(&BathSpec::general(3, 0.0, 11)).unwrap();
        let g = bath.as_general().unwrap();
        for op in [&g.a0, &g.ax, &g.ay, &g.az] {
            assert_eq!(op.norm(), 0.0);
        }
    }

    #[test]
    fn equal_split_norms() {
        let bath = generate(&BathSpec::dephasing(4, 1.0, 7)).unwrap();
        let b = bath.as_dephasing().unwrap();
        assert!((norm2(b.a0.matrix()) - 0.5).abs() < 1e-12);
        assert!((norm2(b.a1.matrix()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = BathSpec::general(5, 0.3, 99);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.clone().with_seed(100)).unwrap());
    }

    #[test]
    fn joint_hamiltonian_respects_budget() {
        for seed in 0..5 {
            for spec in [BathSpec::dephasing(4, 0.7, seed), BathSpec::general(4, 0.7, seed)] {
                let h = generate(&spec).unwrap().hamiltonian();
                assert!(norm2(h.matrix()) <= 0.7 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(generate(&BathSpec::dephasing(0, 1.0, 0)).is_err());
        assert!(generate(&BathSpec::dephasing(2, 1.0, 0).with_weights(&[0.7, 0.7])).is_err());
        assert!(generate(&BathSpec::dephasing(2, 1.0, 0).with_weights(&[-0.5, 1.5])).is_err());
        assert!(generate(&BathSpec::general(2, 1.0, 0).with_weights(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn scaling() {
        let bath = generate(&BathSpec::dephasing(4, 1.0, 3)).unwrap();
        assert_eq!(bath.scale(1.0).unwrap(), bath);
        let zero = bath.scale(0.0).unwrap();
        assert_eq!(zero.hamiltonian().norm(), 0.0);
        let twice = bath.scale(2.0).unwrap();
        let (b, b2) = (bath.as_dephasing().unwrap(), twice.as_dephasing().unwrap());
        assert!((b2.a1.norm() - 2.0 * b.a1.norm()).abs() < 1e-12);
        assert!((b2.a0.norm() - 2.0 * b.a0.norm()).abs() < 1e-12);
        assert_eq!(twice.gamma(), 2.0);
        assert!(bath.scale(-1.0).is_err());
    }
}
