//! Simulator and fitting toolkit for a superconducting microwave cavity
//! coupled to NV⁻ and P1 spin ensembles in diamond.
//!
//! Internally every frequency is an angular frequency in rad/s; the
//! configuration layer and file formats use Hz.

pub mod cavity;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod error;
pub mod fit;
pub mod nonlinear;
pub mod numerics;
pub mod polarization;
pub mod scenario;
pub mod spectra;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
