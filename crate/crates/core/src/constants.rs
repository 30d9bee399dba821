//! Physical constants and unit conversions.
//!
//! Every frequency handled by the library is an angular frequency in rad/s.
//! Conversions to Hz, dBm and the lab units used in configuration files
//! live here so that the factor-of-2π bookkeeping happens in one place.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// `P[W] = 1e-3 · 10^(dBm/10)`.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// `10·log10(R)` for a power ratio.
#[inline]
pub fn power_ratio_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// mW/mm² to W/m².
#[inline]
pub fn mw_per_mm2_to_w_per_m2(x: f64) -> f64 {
    x * 1e3
}

/// Constants entering the spin Hamiltonians and the cavity model.
///
/// Spectroscopic parameters (`gamma_e`, `zero_field_splitting`, ...) are
/// angular frequencies; the remaining entries are CODATA SI values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Electron gyromagnetic ratio, rad·s⁻¹·T⁻¹.
    pub gamma_e: f64,
    /// NV ground-state zero-field splitting D, rad/s.
    pub zero_field_splitting: f64,
    /// NV strain splitting E, rad/s.
    pub strain_splitting: f64,
    /// P1 longitudinal hyperfine constant, rad/s.
    pub hyperfine_parallel: f64,
    /// P1 transverse hyperfine constant, rad/s.
    pub hyperfine_perpendicular: f64,
    pub hbar: f64,
    pub boltzmann: f64,
    pub mu_0: f64,
    pub planck: f64,
    pub speed_of_light: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gamma_e: hz_to_rad(28.03e9),
            zero_field_splitting: hz_to_rad(2.87e9),
            strain_splitting: hz_to_rad(10e6),
            hyperfine_parallel: hz_to_rad(114.03e6),
            hyperfine_perpendicular: hz_to_rad(81.33e6),
            hbar: 1.054_571_817e-34,
            boltzmann: 1.380_649e-23,
            mu_0: 1.256_637_062_12e-6,
            planck: 6.626_070_15e-34,
            speed_of_light: 299_792_458.0,
        }
    }
}

impl PhysicalConstants {
    /// Rejects non-positive or non-finite entries, listing every offender.
    pub fn validate(&self) -> Result<()> {
        let entries = [
            ("gamma_e", self.gamma_e),
            ("zero_field_splitting", self.zero_field_splitting),
            ("strain_splitting", self.strain_splitting),
            ("hyperfine_parallel", self.hyperfine_parallel),
            ("hyperfine_perpendicular", self.hyperfine_perpendicular),
            ("hbar", self.hbar),
            ("boltzmann", self.boltzmann),
            ("mu_0", self.mu_0),
            ("planck", self.planck),
            ("speed_of_light", self.speed_of_light),
        ];
        let bad: Vec<String> = entries
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(k, v)| format!("{k} must be positive, got {v}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_lab_values() {
        let c = PhysicalConstants::default();
        c.validate().unwrap();
        assert!((rad_to_hz(c.gamma_e) - 28.03e9).abs() < 1e-3);
        assert!((rad_to_hz(c.zero_field_splitting) - 2.87e9).abs() < 1e-3);
        assert!((rad_to_hz(c.strain_splitting) - 10e6).abs() < 1e-6);
        assert!((rad_to_hz(c.hyperfine_parallel) - 114.03e6).abs() < 1e-6);
        assert!((rad_to_hz(c.hyperfine_perpendicular) - 81.33e6).abs() < 1e-6);
        assert!((c.planck / (TWO_PI * c.hbar) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation_lists_all_bad_entries() {
        let c = PhysicalConstants {
            hbar: 0.0,
            mu_0: -1.0,
            ..Default::default()
        };
        match c.validate() {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dbm_conversion() {
        let expect = [(-90.0, 1e-12), (-70.0, 1e-10), (-60.0, 1e-9), (-50.0, 1e-8)];
        for (dbm, w) in expect {
            assert!((dbm_to_watts(dbm) / w - 1.0).abs() < 1e-12);
        }
        assert!((power_ratio_db(0.5) + 3.0103).abs() < 1e-4);
    }
}
