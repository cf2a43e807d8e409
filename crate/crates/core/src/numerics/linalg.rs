//! Small dense complex linear algebra.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>` (column-major).
//! Dimensions in this crate stay below ~128, so the algorithms favour
//! exactness over speed: exponentials of Hermitian generators go through a
//! full eigendecomposition and norms through an SVD.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance in spectral norm.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute unitarity tolerance `‖U†U − 1‖`.
pub const UNITARY_TOL: f64 = 1e-10;

pub const I: C64 = C64::new(0.0, 1.0);

/// Spin axis of a rotation or a coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// The 2×2 Pauli matrix along this axis.
    pub fn pauli(self) -> CMatrix {
        let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), I);
        match self {
            Axis::X => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Axis::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Axis::Z => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

/// Spin rotation `exp(−i angle/2 σ_axis)`, closed form.
pub fn rotation(axis: Axis, angle: f64) -> CMatrix {
    let (s, c) = (0.5 * angle).sin_cos();
    let id = CMatrix::identity(2, 2);
    id * C64::from(c) - axis.pauli() * (I * s)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

/// Commutator `[a, b]`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    check_finite(m)?;
    Ok(norm2(m))
}

/// Spectral norm without input validation.
pub(crate) fn norm2(m: &CMatrix) -> f64 {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// A validated Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Checks `‖M − M†‖ ≤ 1e-12 ‖M‖` and symmetrises the remainder away.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let skew = &m - m.adjoint();
        let skew_f = skew.norm();
        if skew_f > 0.0 {
            // Frobenius bounds the spectral norm from both sides within √n.
            let n = (m.nrows() as f64).sqrt();
            if skew_f > HERMITIAN_TOL * m.norm() / n {
                let defect = norm2(&skew);
                let scale = norm2(&m);
                if defect > HERMITIAN_TOL * scale {
                    return Err(Error::NotHermitian { defect });
                }
            }
        }
        Ok(Self::from_raw((&m + m.adjoint()) * C64::from(0.5)))
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_raw(m: CMatrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Hermitian(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Hermitian(zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Hermitian(identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Hermitian(&self.0 * C64::from(factor))
    }

    /// Sum of two Hermitian operators of equal dimension.
    pub fn plus(&self, other: &Hermitian) -> Self {
        Hermitian(&self.0 + &other.0)
    }

    /// `a ⊗ self` for a Hermitian 2×2 (or any) left factor.
    pub fn kron_left(&self, left: &CMatrix) -> Self {
        Hermitian(kron(left, &self.0))
    }

    /// `V† H V` for unitary `V`.
    pub fn conjugated(&self, v: &CMatrix) -> Self {
        let m = v.adjoint() * &self.0 * v;
        Hermitian((&m + m.adjoint()) * C64::from(0.5))
    }

    pub fn eigen(&self) -> HermitianEigen {
        HermitianEigen::new(self)
    }
}

/// Eigendecomposition `H = V diag(λ) V†`, reusable for many exponentials.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &Hermitian) -> Self {
        let eig = SymmetricEigen::new(h.0.clone());
        HermitianEigen { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `exp(−i t H)`.
    pub fn exp_i(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * t);
            let mut col = scaled.column_mut(j);
            col *= phase;
        }
        scaled * self.vectors.adjoint()
    }
}

/// A validated unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(CMatrix);

impl Unitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let defect = unitarity_defect(&m);
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Unitary(m))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Unitary(m)
    }

    pub fn identity(dim: usize) -> Self {
        Unitary(identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `self · other`: `other` acts first.
    pub fn then_after(&self, other: &Unitary) -> Unitary {
        Unitary(&self.0 * &other.0)
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

/// `‖U†U − 1‖` in spectral norm.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    norm2(&(m.adjoint() * m - identity(n)))
}

/// `exp(−i t H)` through the Hermitian eigendecomposition of `H`.
///
/// The result is unitary to working precision because the eigenvector
/// matrix is; relative accuracy is ~1e-14 for the dimensions used here.
pub fn expm(h: &Hermitian, t: f64) -> Result<Unitary> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite time {t}")));
    }
    Ok(Unitary(HermitianEigen::new(h).exp_i(t)))
}

/// `exp(−i K)` for Hermitian `K` by scaled Taylor series and squaring.
///
/// For the near-identity steps of a time-stepping integrator the absolute
/// error is `O(ε ‖K‖)`, whereas an eigendecomposition costs `O(ε)` per call
/// regardless of `‖K‖`.
pub(crate) fn expm_taylor(k: &CMatrix) -> CMatrix {
    let n = k.nrows();
    // Frobenius norm bounds the spectral norm.
    let norm = k.norm();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = k * (-I * scale);
    // 0.25^15 / 15! < 1e-20
    let mut result = identity(n);
    let mut term = identity(n);
    for j in 1..=14 {
        term = &term * &a / C64::from(j as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Partial trace over the second tensor factor of `spin ⊗ bath`.
pub fn partial_trace_bath(m: &CMatrix, spin_dim: usize) -> CMatrix {
    let n = m.nrows();
    let bath_dim = n / spin_dim;
    CMatrix::from_fn(spin_dim, spin_dim, |r, c| (0..bath_dim).map(|b| m[(r * bath_dim + b, c * bath_dim + b)]).sum())
}
