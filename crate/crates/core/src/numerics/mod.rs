//! Numerical building blocks shared by all other modules.

pub mod fit;
pub mod linalg;
pub mod quad;
pub mod roots;

pub use fit::{fit_loglog, LogLogFit};
pub use linalg::{expm, spectral_norm};
pub use quad::{quad, quad_with, QuadOptions, QuadResult};
pub use roots::{solve_roots, NewtonOptions, NewtonOutcome, StartGrid};
