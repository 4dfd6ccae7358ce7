//! Mutual energies, equilibrium measures and heights for Lattès maps over the rationals,
//! computed place by place on the Berkovich projective line.

pub mod adelic;
pub mod energy_arch;
pub mod energy_ua;
pub mod error;
pub mod green;
pub mod lattes;
pub mod places;
pub mod quartic;
pub mod tree;

pub use error::{Error, Result};

/// Exact rational numbers.
pub type Rational = num_rational::BigRational;
/// Real scalar used for lengths and energies.
pub type Real = f64;
/// Complex scalar used at the archimedean place.
pub type Complex = num_complex::Complex64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
