//! Casimir free energy and entropy between two spheres and between two
//! parallel planes at finite temperature, resolved into polarization and
//! multipole scattering channels.

pub mod cli;
pub mod error;
pub mod lifshitz;
pub mod logval;
pub mod matsubara;
pub mod mie;
pub mod quad;
pub mod roundtrip;
pub mod specfun;
pub mod sum;
pub mod thermo;
pub mod translation;

pub use error::{Error, Result};
