//! Spin-dressed cavity response: photon number, complex frequency shifts with
//! saturation, and reflectivity.

mod sweep;
mod table;

pub use sweep::{
    bare_reflectivity, cdmr_sweep, extract_effective_resonance, GroupTemplate, SweepResult, SweepSpec, TransitionSource,
};
pub use table::{read_omega_eff_csv, read_sweep_csv, write_omega_eff_csv, write_sweep_csv, OmegaEffTable, SweepTable};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{power_ratio_db, PhysicalConstants};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    /// rad/s
    pub omega_c: f64,
    /// Intrinsic damping, rad/s.
    pub gamma_c: f64,
    /// Coupling to the feedline, rad/s.
    pub gamma_f: f64,
    /// Intrinsic Kerr coefficient K_c, rad/s per photon.
    pub kerr: f64,
    /// Intrinsic cubic damping G_c, rad/s per photon.
    pub cubic_damping: f64,
}

impl CavityMode {
    pub fn new(omega_c: f64, gamma_c: f64, gamma_f: f64) -> Result<Self> {
        let mode = Self { omega_c, gamma_c, gamma_f, kerr: 0.0, cubic_damping: 0.0 };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        for (name, v) in [("omega_c", self.omega_c), ("gamma_c", self.gamma_c), ("gamma_f", self.gamma_f)] {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("{name} must be > 0, got {v}"));
            }
        }
        if !self.kerr.is_finite() {
            errors.push(format!("kerr must be finite, got {}", self.kerr));
        }
        if !(self.cubic_damping.is_finite() && self.cubic_damping >= 0.0) {
            errors.push(format!("cubic_damping must be >= 0, got {}", self.cubic_damping));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// `Υ_c = ω_c − iγ_c + (K_c − iG_c)·E_c`
    pub fn intrinsic(&self, e_c: f64) -> Complex64 {
        Complex64::new(self.omega_c + self.kerr * e_c, -(self.gamma_c + self.cubic_damping * e_c))
    }
}

/// A complex angular frequency `Ω − iΓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexShift {
    /// rad/s
    pub omega: f64,
    /// rad/s
    pub gamma: f64,
}

impl ComplexShift {
    pub fn from_complex(z: Complex64) -> Self {
        Self { omega: z.re, gamma: -z.im }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.omega, -self.gamma)
    }
}

/// One homogeneous spin population resonant at `omega_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsembleGroup {
    pub label: String,
    /// rad/s
    pub omega_s: f64,
    /// `Δ = ω_c − ω_s`, rad/s.
    pub detuning: f64,
    /// rad/s
    pub g_s: f64,
    pub n_eff: f64,
    /// s
    pub t1: f64,
    /// s
    pub t2: f64,
}

impl SpinEnsembleGroup {
    pub fn new(label: impl Into<String>, omega_c: f64, omega_s: f64, g_s: f64, n_eff: f64, t1: f64, t2: f64) -> Result<Self> {
        let group = Self { label: label.into(), omega_s, detuning: omega_c - omega_s, g_s, n_eff, t1, t2 };
        group.validate()?;
        Ok(group)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            errors.push(format!("{}: T1 must be > 0, got {}", self.label, self.t1));
        }
        if !(self.t2.is_finite() && self.t2 > 0.0) {
            errors.push(format!("{}: T2 must be > 0, got {}", self.label, self.t2));
        }
        if !(self.n_eff.is_finite() && self.n_eff >= 0.0) {
            errors.push(format!("{}: N_eff must be >= 0, got {}", self.label, self.n_eff));
        }
        if !(self.g_s.is_finite() && self.g_s >= 0.0) {
            errors.push(format!("{}: g_s must be >= 0, got {}", self.label, self.g_s));
        }
        if !self.detuning.is_finite() {
            errors.push(format!("{}: detuning must be finite", self.label));
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        if 2.0 * self.t1 < self.t2 {
            log::warn!("{}: 2·T1/T2 = {} < 1", self.label, 2.0 * self.t1 / self.t2);
        }
        Ok(())
    }

    /// `E_cc = (4 g_s² T1 T2)⁻¹`
    pub fn critical_photon_number(&self) -> f64 {
        1.0 / (4.0 * self.g_s * self.g_s * self.t1 * self.t2)
    }
}

/// `E_c = (4γ_f P_p/ħω_c) / [(ω_p − ω_c)² + (γ_f + γ_c)²]`
pub fn intracavity_photon_number(omega_p: f64, power_w: f64, cavity: &CavityMode, c: &PhysicalConstants) -> f64 {
    let d = omega_p - cavity.omega_c;
    let w = cavity.gamma_f + cavity.gamma_c;
    drive_strength(power_w, cavity, c) / (d * d + w * w)
}

/// Lorentzian numerator `4γ_f P_p/ħω_c`, photons·rad²/s².
pub fn drive_strength(power_w: f64, cavity: &CavityMode, c: &PhysicalConstants) -> f64 {
    4.0 * cavity.gamma_f * power_w / (c.hbar * cavity.omega_c)
}

/// Single-spin contribution, in the form with the common denominator
/// `Δ²T2² + 1 + 4g²T1T2E_c`, finite at `Δ = 0`:
/// `Υ_n = −g²P_z(ΔT2² − iT2) / (Δ²T2² + 1 + 4g²T1T2E_c)`.
pub fn per_spin_shift(g_n: f64, detuning: f64, t1: f64, t2: f64, p_z: f64, e_c: f64) -> Complex64 {
    saturated_shift(-g_n * g_n * p_z, detuning, t2, 4.0 * g_n * g_n * t1 * t2 * e_c)
}

/// `Υ_s = N_eff g_s²(ΔT2² − iT2) / (Δ²T2² + 1 + E_c/E_cc)`.
pub fn ensemble_shift(group: &SpinEnsembleGroup, e_c: f64) -> Complex64 {
    let g2 = group.g_s * group.g_s;
    saturated_shift(group.n_eff * g2, group.detuning, group.t2, 4.0 * g2 * group.t1 * group.t2 * e_c)
}

fn saturated_shift(strength: f64, detuning: f64, t2: f64, saturation: f64) -> Complex64 {
    if strength == 0.0 || saturation.is_infinite() {
        return Complex64::new(0.0, 0.0);
    }
    let x = detuning * t2;
    let denom = x * x + 1.0 + saturation;
    Complex64::new(strength * x * t2 / denom, -strength * t2 / denom)
}

/// `Υ_eff = Υ_c + Σ Υ_s`
pub fn effective_frequency(cavity: &CavityMode, groups: &[SpinEnsembleGroup], e_c: f64) -> ComplexShift {
    let mut total = cavity.intrinsic(e_c);
    for g in groups {
        total += ensemble_shift(g, e_c);
    }
    ComplexShift::from_complex(total)
}

/// `R_c = [(ω_p − Ω_c)² + (γ_f − Γ_c)²] / [(ω_p − Ω_c)² + (γ_f + Γ_c)²]`
pub fn reflectivity(omega_p: f64, shift: &ComplexShift, gamma_f: f64) -> f64 {
    let d2 = (omega_p - shift.omega).powi(2);
    (d2 + (gamma_f - shift.gamma).powi(2)) / (d2 + (gamma_f + shift.gamma).powi(2))
}

pub fn reflectivity_db(omega_p: f64, shift: &ComplexShift, gamma_f: f64) -> f64 {
    power_ratio_db(reflectivity(omega_p, shift, gamma_f))
}
