//! Weak-nonlinearity expansion of the spin-induced shift, Duffing steady
//! states and bistability, detection sensitivity and cooperativity.

mod duffing;

pub use duffing::{bistability_onset, duffing_steady_states, BistabilityOnset, DuffingParams};

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityMode, SpinEnsembleGroup};
use crate::error::{ensure_positive, Error, Result};

/// First-order expansion `Υ_s ≈ ω_cs − iγ_cs + (K_cs − iG_cs)·E_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakExpansion {
    /// rad/s
    pub omega_cs: f64,
    /// rad/s
    pub gamma_cs: f64,
    /// rad/s per photon
    pub kerr: f64,
    /// rad/s per photon
    pub cubic_damping: f64,
    /// `ζ₂ = 1/(ΔT2)`
    pub zeta2: f64,
}

/// `ω_cs = (N g²/Δ)/(1 + ζ₂²)`, `K_cs = −(N g²/(Δ E_cc))·(ζ₂/(1 + ζ₂²))²`,
/// `γ_cs = ζ₂ω_cs`, `G_cs = ζ₂K_cs`.
pub fn weak_expansion(group: &SpinEnsembleGroup) -> Result<WeakExpansion> {
    group.validate()?;
    if group.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let zeta2 = 1.0 / (group.detuning * group.t2);
    let ng2_over_delta = group.n_eff * group.g_s * group.g_s / group.detuning;
    let lorentz = 1.0 / (1.0 + zeta2 * zeta2);
    let omega_cs = ng2_over_delta * lorentz;
    let kerr = -ng2_over_delta / group.critical_photon_number() * (zeta2 * lorentz).powi(2);
    Ok(WeakExpansion {
        omega_cs,
        gamma_cs: zeta2 * omega_cs,
        kerr,
        cubic_damping: zeta2 * kerr,
        zeta2,
    })
}

impl WeakExpansion {
    /// Duffing parameters for a cavity dressed by this expansion.
    pub fn duffing(&self, cavity: &CavityMode, drive: f64) -> DuffingParams {
        DuffingParams {
            resonance: cavity.omega_c + self.omega_cs,
            damping: cavity.gamma_c + cavity.gamma_f + self.gamma_cs,
            kerr: cavity.kerr + self.kerr,
            cubic_damping: cavity.cubic_damping + self.cubic_damping,
            drive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOnset {
    /// Spin detuning Δ giving the lowest onset drive, rad/s.
    pub detuning: f64,
    pub expansion: WeakExpansion,
    pub onset: BistabilityOnset,
    pub e_cc: f64,
}

/// Lowest bistability onset over spin detunings `Δ = x/T2` with
/// `x ∈ [x_min, x_max]`, using the expanded Kerr and cubic-damping terms of
/// a single group (its own detuning is ignored).
pub fn ensemble_bistability_onset(
    cavity: &CavityMode,
    group: &SpinEnsembleGroup,
    x_min: f64,
    x_max: f64,
) -> Result<Option<EnsembleOnset>> {
    ensure_positive("x_min", x_min)?;
    if !(x_max > x_min) {
        return Err(Error::invalid("x_max must exceed x_min"));
    }
    let evaluate = |x: f64| -> Result<Option<EnsembleOnset>> {
        let g = SpinEnsembleGroup { detuning: x / group.t2, ..group.clone() };
        let exp = weak_expansion(&g)?;
        let p = exp.duffing(cavity, 0.0);
        if p.kerr == 0.0 || !(p.damping > 0.0) {
            return Ok(None);
        }
        Ok(bistability_onset(&p)?.map(|onset| EnsembleOnset {
            detuning: g.detuning,
            expansion: exp,
            onset,
            e_cc: g.critical_photon_number(),
        }))
    };
    let n = 2000;
    let ratio = (x_max / x_min).ln();
    let xs: Vec<f64> = (0..=n).map(|i| x_min * (ratio * i as f64 / n as f64).exp()).collect();
    let mut best: Option<(usize, EnsembleOnset)> = None;
    for (i, &x) in xs.iter().enumerate() {
        if let Some(o) = evaluate(x)? {
            if best.as_ref().map_or(true, |(_, b)| o.onset.drive < b.onset.drive) {
                best = Some((i, o));
            }
        }
    }
    let Some((i, mut found)) = best else { return Ok(None) };
    // Golden-section refinement in log x between the neighbouring samples.
    let (mut a, mut b) = (xs[i.saturating_sub(1)].ln(), xs[(i + 1).min(n)].ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let drive_at = |lx: f64| -> Result<f64> { Ok(evaluate(lx.exp())?.map_or(f64::INFINITY, |o| o.onset.drive)) };
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (drive_at(c)?, drive_at(d)?);
    for _ in 0..100 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = drive_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = drive_at(d)?;
        }
    }
    if let Some(o) = evaluate((0.5 * (a + b)).exp())? {
        if o.onset.drive <= found.onset.drive {
            found = o;
        }
    }
    Ok(Some(found))
}

/// Shot-noise-limited spin-number sensitivity
/// `S_N = (2/|P_zST|^{3/2})·√(γ_c/g_s² · 2T1/T2)`, Hz^{-1/2}.
pub fn sensitivity(p_zst: f64, gamma_c: f64, g_s: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(-1.0..=0.0).contains(&p_zst) {
        return Err(Error::invalid(format!("thermal polarization must lie in [-1, 0], got {p_zst}")));
    }
    if p_zst == 0.0 {
        return Err(Error::DivergentSensitivity);
    }
    ensure_positive("gamma_c", gamma_c)?;
    ensure_positive("g_s", g_s)?;
    ensure_positive("T1", t1)?;
    ensure_positive("T2", t2)?;
    Ok(2.0 / p_zst.abs().powf(1.5) * (gamma_c / (g_s * g_s) * 2.0 * t1 / t2).sqrt())
}

/// `C = N_eff g_s²/(γ_c γ_2)`.
pub fn cooperativity(n_eff: f64, g_s: f64, gamma_c: f64, gamma_2: f64) -> Result<f64> {
    if !(n_eff.is_finite() && n_eff >= 0.0) {
        return Err(Error::invalid(format!("N_eff must be >= 0, got {n_eff}")));
    }
    ensure_positive("gamma_c", gamma_c)?;
    ensure_positive("gamma_2", gamma_2)?;
    Ok(n_eff * g_s * g_s / (gamma_c * gamma_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::ensemble_shift;
    use crate::constants::hz_to_rad;
    use num_complex::Complex64;

    fn group(detuning: f64) -> SpinEnsembleGroup {
        SpinEnsembleGroup { label: "g".into(), omega_s: 0.0, detuning, g_s: 17.0, n_eff: 8e11, t1: 0.565, t2: 219e-9 }
    }

    #[test]
    fn identities_and_far_detuned_limit() {
        let e = weak_expansion(&group(3e6)).unwrap();
        assert_eq!(e.gamma_cs, e.zeta2 * e.omega_cs);
        assert_eq!(e.cubic_damping, e.zeta2 * e.kerr);
        assert!(e.kerr < 0.0);
        let g = group(1e12);
        let far = weak_expansion(&g).unwrap();
        let ng2 = g.n_eff * g.g_s.powi(2);
        assert!((far.omega_cs / (ng2 / g.detuning) - 1.0).abs() < 1e-9);
        assert!(far.gamma_cs.abs() < 1e-5 * far.omega_cs.abs());
        assert!(matches!(weak_expansion(&group(0.0)), Err(Error::ZeroDetuning)));
    }

    #[test]
    fn first_order_matches_full_shift() {
        let g = group(-2e6);
        let exp = weak_expansion(&g).unwrap();
        let e = 1e-6 * g.critical_photon_number();
        let full = ensemble_shift(&g, e);
        let lin = Complex64::new(exp.omega_cs, -exp.gamma_cs) + Complex64::new(exp.kerr, -exp.cubic_damping) * e;
        assert!((full - lin).norm() / ensemble_shift(&g, 0.0).norm() < 1e-6);
    }

    #[test]
    fn sensitivity_at_laser_off() {
        let s = sensitivity(-0.035, hz_to_rad(0.253e6), hz_to_rad(2.72), 0.565, 219e-9).unwrap();
        assert!((s / 5e7 - 1.0).abs() < 0.1, "{s}");
        let q = sensitivity(-0.035, hz_to_rad(0.253e6), 4.0 * hz_to_rad(2.72), 0.565, 219e-9).unwrap();
        assert!((s / q - 4.0).abs() < 1e-12);
        let unit = sensitivity(-1.0, 4.0, 2.0, 0.5, 1.0).unwrap();
        assert!((unit - 2.0).abs() < 1e-15);
        assert!(matches!(sensitivity(0.0, 1.0, 1.0, 1.0, 1.0), Err(Error::DivergentSensitivity)));
    }

    #[test]
    fn cooperativity_is_linear() {
        assert_eq!(cooperativity(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        let a = cooperativity(1e10, 17.0, 1.6e6, 4.6e6).unwrap();
        let b = cooperativity(2e10, 17.0, 1.6e6, 4.6e6).unwrap();
        assert!((b / a - 2.0).abs() < 1e-15);
    }

    #[test]
    fn laser_off_onset_near_twice_critical() {
        let cav = CavityMode::new(hz_to_rad(2.53e9), hz_to_rad(0.253e6), hz_to_rad(0.367e6)).unwrap();
        let n_eff = 1.23e23 * 0.76e-9 * 0.035 / 4.0;
        let g = SpinEnsembleGroup { n_eff, g_s: hz_to_rad(2.72), ..group(1.0) };
        let on = ensemble_bistability_onset(&cav, &g, 1e-2, 1e2).unwrap().unwrap();
        let ratio = on.onset.e_co / on.e_cc;
        assert!((1.0..=4.0).contains(&ratio), "{ratio}");
    }

    proptest::proptest! {
        #[test]
        fn kerr_is_red_for_positive_detuning(d in 1.0..1e9f64, n in 1.0..1e14f64, t2 in 1e-8..1e-5f64) {
            let g = SpinEnsembleGroup { detuning: d, n_eff: n, t2, ..group(1.0) };
            let e = weak_expansion(&g).unwrap();
            proptest::prop_assert!(e.kerr < 0.0);
        }

        #[test]
        fn sensitivity_monotonicity(p in -0.9..-0.01f64, f in 1.01..3.0f64) {
            let base = sensitivity(p, 1e6, 17.0, 0.5, 2e-7).unwrap();
            proptest::prop_assert!(sensitivity((p * f).max(-1.0), 1e6, 17.0, 0.5, 2e-7).unwrap() <= base);
            proptest::prop_assert!(sensitivity(p, 1e6, 17.0 * f, 0.5, 2e-7).unwrap() < base);
            proptest::prop_assert!(sensitivity(p, 1e6, 17.0, 0.5, 2e-7 * f).unwrap() < base);
            proptest::prop_assert!(sensitivity(p, 1e6 * f, 17.0, 0.5, 2e-7).unwrap() > base);
            proptest::prop_assert!(sensitivity(p, 1e6, 17.0, 0.5 * f, 2e-7).unwrap() > base);
        }
    }
}
