//! Vacuum energy of Pauli operators in external magnetic fields.

pub mod ehdensity;
pub mod error;
pub mod fields;
pub mod landau;
pub mod lattice;
pub mod pvscheme;
pub mod quad;
pub mod renorm;

pub use error::{Error, Result};
