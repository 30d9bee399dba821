//! Least-squares extraction of field orientation, cavity lineshape and
//! Lorentzian dip parameters.

mod data;
mod lineshape;
mod lm;
mod orientation;

pub use data::{read_odmr_csv, read_trace_csv, OdmrDataset, OdmrRecord};
pub use lineshape::{fit_cavity_lineshape, fit_lorentzian_fwhm, lorentzian_dip, CavityGuess, CouplingRegime};
pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};
pub use orientation::{
    fit_orientation, monte_carlo_orientation, synthesize_odmr, MonteCarloSummary, OrientationFitOptions,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub unit: String,
    /// One standard deviation from the covariance estimate.
    pub std_error: Option<f64>,
    /// Held at its initial value.
    #[serde(default)]
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    /// Residual norm relative to the norm of the fitted signal.
    pub residual_norm: f64,
    /// `‖Jᵀr‖ / (‖J‖·‖data‖)` at the returned parameters.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Covariance of the free parameters, in their order of appearance.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Gradient tolerance behind the `converged` flag of a stalled fit.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

fn covariance_rows(out: &LmOutcome) -> Option<Vec<Vec<f64>>> {
    out.covariance
        .as_ref()
        .map(|c| (0..c.nrows()).map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect()).collect())
}

fn std_errors(out: &LmOutcome) -> Vec<Option<f64>> {
    (0..out.params.len())
        .map(|i| out.covariance.as_ref().map(|c| c[(i, i)].max(0.0).sqrt()))
        .collect()
}
