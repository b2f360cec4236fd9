//! Pseudo-spectral solver for compressible, viscous, non-resistive MHD on
//! the unit torus, linearised around a constant Diophantine background
//! field, with the energy and decay diagnostics used to check its
//! long-time stability.

pub mod diagnostics;
pub mod diophantine;
pub mod error;
pub mod integrate;
pub mod model;
pub mod spectral;
#[doc(hidden)]
pub mod testing;

pub use error::{MhdError, Result};
