//! Error measures on propagators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{
    identity, kron, norm2, partial_trace_bath, rotation, Axis, CMatrix, Hermitian, Unitary, C64, I,
};
use crate::propagation::ConditionedPropagators;

/// `‖U₊ − U₋‖`, at most 2.
pub fn distinguishability(cp: &ConditionedPropagators) -> f64 {
    norm2(&(cp.u_plus.matrix() - cp.u_minus.matrix()))
}

/// Initial bath state for channel metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum BathState {
    MaximallyMixed,
    Density(CMatrix),
}

impl BathState {
    /// Checked density matrix: Hermitian, unit trace, no eigenvalue below
    /// `−1e-12`.
    pub fn density(rho: CMatrix) -> Result<Self> {
        let h = Hermitian::new(rho)?;
        let trace: C64 = h.matrix().trace();
        if (trace.re - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("bath state trace {} != 1", trace.re)));
        }
        if h.eigen().values().iter().any(|&l| l < -1e-12) {
            return Err(Error::InvalidArgument("bath state is not positive semidefinite".into()));
        }
        Ok(BathState::Density(h.into_matrix()))
    }

    /// `|φ⟩⟨φ|` with complex Gaussian amplitudes drawn from `seed`.
    pub fn random_pure(dim_b: usize, seed: u64) -> Result<Self> {
        if dim_b == 0 {
            return Err(Error::InvalidArgument("bath dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = CMatrix::from_fn(dim_b, 1, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        });
        let n = v.norm();
        v /= C64::from(n);
        let rho = &v * v.adjoint();
        Ok(BathState::Density((&rho + rho.adjoint()) * C64::from(0.5)))
    }

    fn matrix(&self, dim_b: usize) -> Result<CMatrix> {
        match self {
            BathState::MaximallyMixed => Ok(identity(dim_b) / C64::from(dim_b as f64)),
            BathState::Density(rho) => {
                if rho.nrows() != dim_b {
                    return Err(Error::DimensionMismatch { expected: dim_b, got: rho.nrows() });
                }
                Ok(rho.clone())
            }
        }
    }
}

/// Worst-case spin error against an ideal target rotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelError {
    pub epsilon: f64,
    #[serde(skip)]
    pub target: CMatrix,
}

/// The six Bloch-sphere poles `|±x⟩, |±y⟩, |±z⟩` as density matrices.
pub fn cardinal_states() -> Vec<CMatrix> {
    let half = C64::from(0.5);
    let mut out = Vec::with_capacity(6);
    for axis in Axis::ALL {
        for sign in [1.0, -1.0] {
            out.push((identity(2) + axis.pauli() * C64::from(sign)) * half);
        }
    }
    out
}

/// `½‖a − b‖₁` for 2×2 Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let mean = 0.5 * (d[(0, 0)].re + d[(1, 1)].re);
    let half_gap = 0.5 * (d[(0, 0)].re - d[(1, 1)].re);
    let r = (half_gap * half_gap + d[(0, 1)].norm_sqr()).sqrt();
    0.5 * ((mean + r).abs() + (mean - r).abs())
}

/// `Tr_B[U (ρ_S ⊗ ρ_B) U†]`.
pub fn reduced_spin_state(u: &Unitary, rho_s: &CMatrix, rho_b: &BathState) -> Result<CMatrix> {
    let dim = u.dim();
    if !dim.is_multiple_of(2) || dim < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dim });
    }
    let rb = rho_b.matrix(dim / 2)?;
    let joint = kron(rho_s, &rb);
    let evolved = u.matrix() * joint * u.matrix().adjoint();
    Ok(partial_trace_bath(&evolved, 2))
}

/// `ε = max` over the cardinal states of the trace distance between the
/// reduced spin state and `R ρ R†`.
pub fn channel_error_to(u: &Unitary, target: &CMatrix, rho_b: &BathState) -> Result<ChannelError> {
    if target.nrows() != 2 || target.ncols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: target.nrows() });
    }
    let mut epsilon: f64 = 0.0;
    for rho in cardinal_states() {
        let out = reduced_spin_state(u, &rho, rho_b)?;
        let ideal = target * &rho * target.adjoint();
        epsilon = epsilon.max(trace_distance(&out, &ideal));
    }
    Ok(ChannelError { epsilon, target: target.clone() })
}

/// Channel error against `N` ideal π rotations about `axis`.
pub fn spin_channel_error(u: &Unitary, n: usize, axis: Axis, rho_b: &BathState) -> Result<ChannelError> {
    let target = rotation(axis, std::f64::consts::PI * n as f64);
    channel_error_to(u, &target, rho_b)
}

/// `|ψ⟩⟨ψ|` for the cardinal state along `±axis`.
pub fn pole(axis: Axis, sign: f64) -> CMatrix {
    (identity(2) + axis.pauli() * C64::from(sign)) * C64::from(0.5)
}

/// `exp(−iφσz/2)`; helper for tests and callers building targets.
pub fn phase_gate(phi: f64) -> CMatrix {
    let mut m = identity(2);
    m[(0, 0)] = (-I * 0.5 * phi).exp();
    m[(1, 1)] = (I * 0.5 * phi).exp();
    m
}
