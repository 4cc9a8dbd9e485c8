//! Disentangled time evolution for two coupled, linearly driven bosonic modes.
//!
//! The Hamiltonian is `H = Σ w_σλ a†_σ a_λ + Σ (F_σ a†_σ + F*_σ a_σ) + B` with ħ = 1.
//! Its propagator factors as a displacement, a scalar phase and a number
//! conserving part `U0 = e^{-iαN} e^{-iρJ3} e^{ΛJ+} e^{ΩJ3} e^{ΓJ-}` whose
//! coefficients follow from a complex Riccati equation.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod oracle;
pub mod riccati;
pub mod scenario;
pub mod smatrix;
pub mod special;

mod numeric;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub use numeric::spline::Spline;
pub use numeric::uniform_grid;
