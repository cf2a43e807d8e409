//! Dynamical decoupling with finite-duration pulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex linear algebra, matrix exponentials,
//!   adaptive quadrature, damped Newton root finding and log-log fits.
//! * [`bath`]: reproducible bounded bath Hamiltonians (pure dephasing and
//!   general decoherence).
//! * [`schedule`]: UDD, RUDD, CPMG-RUDD and QRUDD timelines together with
//!   their switching functions and Fourier diagnostics.
//! * [`pulse`]: the four-harmonic pulse family, its Magnus-condition
//!   integrals and a solver for second-order clean shapes.
//! * [`propagation`]: exact time-ordered propagation of spin and bath.
//! * [`metrics`]: the distinguishability of the spin-conditioned bath
//!   evolutions and the reduced spin channel error.
//!
//! Conventions: the spin is the first tensor factor, so operators on the
//! joint space are `spin ⊗ bath` and basis index `s * dim_b + b`. Matrices
//! are `nalgebra::DMatrix`, stored column-major. Times and inverse times use
//! a common arbitrary unit; only the products `γT` and `γτ_p` matter.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod propagation;
pub mod pulse;
pub mod schedule;

pub use error::{Error, Result};
pub use numerics::linalg::{Axis, CMatrix, Hermitian, Unitary, C64};
