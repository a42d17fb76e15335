//! Numerical workbench for the bosonized correlation energy of the
//! mean-field Fermi gas on the torus.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bogo;
pub mod energy;
pub mod error;
pub mod fockoracle;
pub mod lattice;
pub mod model;
pub mod patches;
pub mod quad;

pub use error::{Error, Result};
