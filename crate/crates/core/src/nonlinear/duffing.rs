//! Driven Kerr resonator with cubic damping.
//!
//! The steady-state photon number solves
//! `E·[(ω_p − ω₀ − K·E)² + (γ_t + G·E)²] = F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    /// Linear resonance ω₀, rad/s.
    pub resonance: f64,
    /// Total linear damping γ_t, rad/s.
    pub damping: f64,
    /// Kerr coefficient K, rad/s per photon.
    pub kerr: f64,
    /// Cubic damping G, rad/s per photon. Spin saturation makes it negative.
    pub cubic_damping: f64,
    /// Drive F = 4γ_f P_p/ħω_c, photons·rad²/s².
    pub drive: f64,
}

impl DuffingParams {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.damping.is_finite() && self.damping > 0.0) {
            errors.push(format!("damping must be > 0, got {}", self.damping));
        }
        if !(self.drive.is_finite() && self.drive >= 0.0) {
            errors.push(format!("drive must be >= 0, got {}", self.drive));
        }
        for (name, v) in [("resonance", self.resonance), ("kerr", self.kerr), ("cubic_damping", self.cubic_damping)] {
            if !v.is_finite() {
                errors.push(format!("{name} must be finite, got {v}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// Left-hand side minus the drive at photon number `e`.
    pub fn residual(&self, omega_p: f64, e: f64) -> f64 {
        let d = omega_p - self.resonance - self.kerr * e;
        let g = self.damping + self.cubic_damping * e;
        e * (d * d + g * g) - self.drive
    }

    /// Drive required to hold `e` photons at probe frequency `omega_p`.
    pub fn drive_for(&self, omega_p: f64, e: f64) -> f64 {
        self.residual(omega_p, e) + self.drive
    }
}

/// Real roots of the monic cubic `u³ + a·u² + b·u + c`, ascending.
fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let scale = (a * a).max(b.abs()).max(c.abs().powf(2.0 / 3.0)).max(f64::MIN_POSITIVE);
    let mut roots = if disc > 1e-12 * scale.powi(3) {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p.abs() <= 1e-300 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (3.0 * *r + 2.0 * a) * *r + b;
            if df == 0.0 || !f.is_finite() {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Non-negative steady-state photon numbers, ascending (one or three).
pub fn duffing_steady_states(p: &DuffingParams, omega_p: f64) -> Result<Vec<f64>> {
    p.validate()?;
    if p.drive == 0.0 {
        return Ok(vec![0.0]);
    }
    let delta = omega_p - p.resonance;
    let kappa = p.kerr.hypot(p.cubic_damping);
    if kappa == 0.0 {
        return Ok(vec![p.drive / (delta * delta + p.damping * p.damping)]);
    }
    // E = u·γ/κ, δ = d·γ turns the cubic into
    // u³ + 2(G/κ − d·K/κ)u² + (d² + 1)u − Fκ/γ³ = 0.
    let g = p.damping;
    let d = delta / g;
    let a = 2.0 * (p.cubic_damping / kappa - d * p.kerr / kappa);
    let b = d * d + 1.0;
    let c = -p.drive * kappa / (g * g * g);
    let scale = g / kappa;
    let mut roots: Vec<f64> = monic_cubic_roots(a, b, c)
        .into_iter()
        .filter(|u| *u > 0.0)
        .map(|u| u * scale)
        .collect();
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs());
    if roots.is_empty() {
        return Err(Error::Numerical("no positive steady state found".into()));
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistabilityOnset {
    /// Photon number at the onset.
    pub e_co: f64,
    /// Probe frequency at the onset, rad/s.
    pub omega_p: f64,
    /// `ω_p − ω₀` at the onset, rad/s.
    pub detuning: f64,
    /// Smallest drive giving three steady states.
    pub drive: f64,
}

/// Onset of bistability: the drive at which `F(E) = E·[...]` first develops
/// a point with `dF/dE = d²F/dE² = 0`. Vanishing discriminant of `dF/dE`
/// gives `(K² − 3G²)δ² − 8KGγδ + (G² − 3K²)γ² = 0`, with the inflection at
/// `E = 2(Kδ − Gγ)/(3(K² + G²))`. `None` when no root has `E > 0`.
///
/// For `G ≥ 0` this cusp is the smallest drive with three steady states.
/// With `G < 0` the total damping `γ + G·E` vanishes at large `E`, which
/// adds a separate fold at lower drive; the cusp is then only local.
pub fn bistability_onset(p: &DuffingParams) -> Result<Option<BistabilityOnset>> {
    p.validate()?;
    let (k, g, gam) = (p.kerr, p.cubic_damping, p.damping);
    if k == 0.0 {
        return Err(Error::invalid("bistability needs a non-zero Kerr coefficient"));
    }
    let k2g2 = k * k + g * g;
    let lead = k * k - 3.0 * g * g;
    let root3 = 3f64.sqrt();
    let candidates: Vec<f64> = if lead.abs() <= 1e-14 * k2g2 {
        if k * g == 0.0 {
            vec![]
        } else {
            vec![(g * g - 3.0 * k * k) * gam / (8.0 * k * g)]
        }
    } else {
        vec![
            gam * (4.0 * k * g + root3 * k2g2) / lead,
            gam * (4.0 * k * g - root3 * k2g2) / lead,
        ]
    };
    let mut best: Option<BistabilityOnset> = None;
    for delta in candidates {
        let e = 2.0 * (k * delta - g * gam) / (3.0 * k2g2);
        if !(e > 0.0 && e.is_finite()) {
            continue;
        }
        let omega_p = p.resonance + delta;
        let drive = p.drive_for(omega_p, e);
        if best.map_or(true, |b| drive < b.drive) {
            best = Some(BistabilityOnset { e_co: e, omega_p, detuning: delta, drive });
        }
    }
    Ok(best)
}
