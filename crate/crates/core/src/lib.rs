//! Exact residue calculus for Iwahori-spherical Plancherel integrals.
//!
//! Values are rational functions of `v = q^(1/2)` over `Q(zeta_12)`. Torus
//! integrals are evaluated by iterated residues, with an independent
//! floating-point quadrature for cross-checks.

pub mod engine;
pub mod error;
pub mod gln;
pub mod integrand;
pub mod oracle;
pub mod rank2;
pub mod qfield;

pub use error::{Error, Result};
pub use qfield::{CycRational, LaurentPoly, RatFunc};
