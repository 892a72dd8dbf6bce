//! Multiphoton subradiance in arrays of two-level atoms.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod kernel;
pub mod krylov;
pub mod output;
pub mod spectral;

pub use error::{Error, Result};
