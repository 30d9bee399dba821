//! Thermal and optically induced spin polarization.
//!
//! Thermal relaxation (rate `1/T1_T` toward `P_zST`) and optical pumping
//! (rate `1/T1_O` toward `P_zSO`) act in parallel, so the longitudinal
//! dynamics reduce to a single channel with the summed rate and the
//! rate-weighted steady-state polarization.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Laser illumination driving optically induced spin polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// W/m²
    pub intensity: f64,
    /// m²
    pub cross_section: f64,
    /// m
    pub wavelength: f64,
    /// Fraction of absorption events that pump the spin.
    pub efficiency: f64,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            intensity: 0.0,
            cross_section: 3e-17 * 1e-4,
            wavelength: 532e-9,
            efficiency: 0.16,
        }
    }
}

impl OpticalParams {
    pub fn with_intensity(intensity: f64) -> Self {
        Self {
            intensity,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            bad.push(format!("intensity must be >= 0, got {}", self.intensity));
        }
        if !(self.cross_section.is_finite() && self.cross_section > 0.0) {
            bad.push(format!("cross_section must be > 0, got {}", self.cross_section));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            bad.push(format!("wavelength must be > 0, got {}", self.wavelength));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            bad.push(format!("efficiency must lie in (0, 1], got {}", self.efficiency));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// `P_zST = −tanh(ħω_s / 2k_BT)`.
pub fn thermal_polarization(omega_s: f64, temperature: f64, c: &PhysicalConstants) -> Result<f64> {
    ensure_positive("temperature", temperature)?;
    ensure_finite("omega_s", omega_s)?;
    if omega_s < 0.0 {
        return Err(Error::invalid(format!("omega_s must be >= 0, got {omega_s}")));
    }
    Ok(-(c.hbar * omega_s / (2.0 * c.boltzmann * temperature)).tanh())
}

/// Absorption rate `γ_O = I·σ·λ/(hc)`, s⁻¹.
pub fn optical_absorption_rate(opt: &OpticalParams, c: &PhysicalConstants) -> Result<f64> {
    opt.validate()?;
    Ok(opt.intensity * opt.cross_section * opt.wavelength / (c.planck * c.speed_of_light))
}

/// Pumping rate `1/T1_O = η·γ_O`, s⁻¹. Zero when the laser is off.
pub fn optical_pumping_rate(opt: &OpticalParams, c: &PhysicalConstants) -> Result<f64> {
    Ok(opt.efficiency * optical_absorption_rate(opt, c)?)
}

/// A relaxation channel: a rate (s⁻¹, zero meaning "absent") and the
/// polarization it drives toward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationChannel {
    pub rate: f64,
    pub polarization: f64,
}

impl RelaxationChannel {
    pub fn new(rate: f64, polarization: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid(format!("relaxation rate must be >= 0, got {rate}")));
        }
        if !(-1.0..=0.0).contains(&polarization) {
            return Err(Error::invalid(format!(
                "steady-state polarization must lie in [-1, 0], got {polarization}"
            )));
        }
        Ok(Self { rate, polarization })
    }

    /// From a relaxation time; `f64::INFINITY` gives a zero rate.
    pub fn from_time(time: f64, polarization: f64) -> Result<Self> {
        if !(time > 0.0) {
            return Err(Error::invalid(format!("relaxation time must be > 0, got {time}")));
        }
        Self::new(if time.is_infinite() { 0.0 } else { 1.0 / time }, polarization)
    }

    pub fn time(&self) -> f64 {
        if self.rate == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.rate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationState {
    pub thermal: RelaxationChannel,
    pub optical: RelaxationChannel,
    /// Effective longitudinal time, s.
    pub t1: f64,
    /// Effective steady-state polarization.
    pub polarization: f64,
}

impl RelaxationState {
    /// `γ_s1(P_z) = −(P_z − P_zST)/T1_T − (P_z − P_zSO)/T1_O`.
    pub fn longitudinal_damping(&self, p_z: f64) -> f64 {
        -(p_z - self.thermal.polarization) * self.thermal.rate
            - (p_z - self.optical.polarization) * self.optical.rate
    }
}

/// Combines the thermal and optical channels:
/// `1/T1 = 1/T1_T + 1/T1_O`, `P_zS/T1 = P_zST/T1_T + P_zSO/T1_O`.
pub fn effective_relaxation(
    thermal: RelaxationChannel,
    optical: RelaxationChannel,
) -> Result<RelaxationState> {
    let total = thermal.rate + optical.rate;
    if total <= 0.0 {
        return Err(Error::invalid("both relaxation rates are zero"));
    }
    let polarization = (thermal.rate * thermal.polarization + optical.rate * optical.polarization) / total;
    Ok(RelaxationState {
        thermal,
        optical,
        t1: 1.0 / total,
        polarization,
    })
}

/// Effective relaxation for a given illumination.
pub fn relaxation_under_illumination(
    t1_thermal: f64,
    p_thermal: f64,
    p_optical: f64,
    opt: &OpticalParams,
    c: &PhysicalConstants,
) -> Result<RelaxationState> {
    let thermal = RelaxationChannel::from_time(t1_thermal, p_thermal)?;
    let optical = RelaxationChannel::new(optical_pumping_rate(opt, c)?, p_optical)?;
    effective_relaxation(thermal, optical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;

    #[test]
    fn thermal_limits() {
        let c = PhysicalConstants::default();
        assert_eq!(thermal_polarization(0.0, 3.1, &c).unwrap(), -0.0);
        assert!(thermal_polarization(hz_to_rad(2.53e9), 1e12, &c).unwrap().abs() < 1e-10);
        let p = thermal_polarization(hz_to_rad(2.53e9), 3.1, &c).unwrap();
        // −tanh(hν/2kT), hν/kT = 6.62607015e-34·2.53e9/(1.380649e-23·3.1)
        let x: f64 = 6.626_070_15e-34 * 2.53e9 / (1.380_649e-23 * 3.1) / 2.0;
        assert!((p + x.tanh()).abs() < 1e-10);
        assert!((p + 0.0196).abs() < 5e-5);
        assert!(thermal_polarization(1.0, 0.0, &c).is_err());
    }

    #[test]
    fn pumping_rate_at_thirty_mw_per_mm2() {
        let c = PhysicalConstants::default();
        assert_eq!(optical_pumping_rate(&OpticalParams::with_intensity(0.0), &c).unwrap(), 0.0);
        let opt = OpticalParams::with_intensity(30.0 * 1e3);
        let absorb = optical_absorption_rate(&opt, &c).unwrap();
        let expect = 3e4 * 3e-21 * 532e-9 / (6.626_070_15e-34 * 299_792_458.0);
        assert!((absorb / expect - 1.0).abs() < 1e-14);
        assert!((absorb - 241.0).abs() < 1.0);
        let pump = optical_pumping_rate(&opt, &c).unwrap();
        assert!((pump - 38.6).abs() < 0.1);
        let doubled = optical_pumping_rate(&OpticalParams::with_intensity(6e4), &c).unwrap();
        assert!((doubled / pump - 2.0).abs() < 1e-15);
    }

    #[test]
    fn effective_combination() {
        let off = effective_relaxation(
            RelaxationChannel::from_time(0.023, -0.035).unwrap(),
            RelaxationChannel::from_time(f64::INFINITY, -0.55).unwrap(),
        )
        .unwrap();
        assert_eq!(off.t1, 0.023);
        assert_eq!(off.polarization, -0.035);

        let on = effective_relaxation(
            RelaxationChannel::from_time(0.023, -0.035).unwrap(),
            RelaxationChannel::new(38.6, -0.55).unwrap(),
        )
        .unwrap();
        // (43.478·(−0.035) + 38.6·(−0.55)) / 82.078
        let rt = 1.0 / 0.023;
        let expect_p = (rt * -0.035 + 38.6 * -0.55) / (rt + 38.6);
        assert!((on.polarization - expect_p).abs() < 1e-15);
        assert!((on.polarization + 0.277).abs() < 1e-3);
        assert!((on.t1 - 12.18e-3).abs() < 0.01e-3);

        let dominated = effective_relaxation(
            RelaxationChannel::new(1e-9, -0.035).unwrap(),
            RelaxationChannel::new(1e9, -0.55).unwrap(),
        )
        .unwrap();
        assert!((dominated.polarization + 0.55).abs() < 1e-15);

        assert!(effective_relaxation(
            RelaxationChannel::new(0.0, 0.0).unwrap(),
            RelaxationChannel::new(0.0, 0.0).unwrap()
        )
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn steady_state_and_symmetry(
            rt in 0.1..1e3f64, pt in -1.0..0.0f64, ro in 0.0..1e3f64, po in -1.0..0.0f64
        ) {
            let a = RelaxationChannel::new(rt, pt).unwrap();
            let b = RelaxationChannel::new(ro, po).unwrap();
            let s = effective_relaxation(a, b).unwrap();
            let t = effective_relaxation(b, a).unwrap();
            proptest::prop_assert!((s.t1 - t.t1).abs() <= 1e-15 * s.t1);
            proptest::prop_assert!((s.polarization - t.polarization).abs() <= 1e-15);
            proptest::prop_assert!(s.polarization >= pt.min(po) - 1e-15 && s.polarization <= pt.max(po) + 1e-15);
            let damping = s.longitudinal_damping(s.polarization);
            proptest::prop_assert!(damping.abs() <= 1e-12 * (rt + ro));
        }

        #[test]
        fn monotone_in_intensity(i1 in 0.0..1e5f64, di in 1.0..1e5f64) {
            let c = PhysicalConstants::default();
            let lo = relaxation_under_illumination(0.023, -0.035, -0.55, &OpticalParams::with_intensity(i1), &c).unwrap();
            let hi = relaxation_under_illumination(0.023, -0.035, -0.55, &OpticalParams::with_intensity(i1 + di), &c).unwrap();
            proptest::prop_assert!(hi.polarization < lo.polarization);
            proptest::prop_assert!(hi.t1 < lo.t1);
        }
    }
}
