use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{effective_frequency, intracavity_photon_number, reflectivity, CavityMode, SpinEnsembleGroup};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::spectra::{nv_class_frequencies, p1_transition_frequencies, NvBranch, NvClass, P1Line};

/// Which transition a spin group follows as the field changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransitionSource {
    Nv { class: NvClass, branch: NvBranch },
    P1 { axis: Vector3<f64>, line: P1Line },
}

impl TransitionSource {
    pub fn frequency(&self, field: &Vector3<f64>, c: &PhysicalConstants) -> Result<f64> {
        match self {
            TransitionSource::Nv { class, branch } => Ok(nv_class_frequencies(field, *class, c)?.branch(*branch)),
            TransitionSource::P1 { axis, line } => Ok(p1_transition_frequencies(field, axis, c)?.line(*line)),
        }
    }
}

/// Field-independent part of a spin group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTemplate {
    pub label: String,
    pub source: TransitionSource,
    /// rad/s
    pub g_s: f64,
    pub n_eff: f64,
    /// s
    pub t1: f64,
    /// s
    pub t2: f64,
}

impl GroupTemplate {
    pub fn at_field(&self, field: &Vector3<f64>, omega_c: f64, c: &PhysicalConstants) -> Result<SpinEnsembleGroup> {
        let omega_s = self.source.frequency(field, c)?;
        Ok(SpinEnsembleGroup {
            label: self.label.clone(),
            omega_s,
            detuning: omega_c - omega_s,
            g_s: self.g_s,
            n_eff: self.n_eff,
            t1: self.t1,
            t2: self.t2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub cavity: CavityMode,
    /// Unit vector of the static field.
    pub field_direction: Vector3<f64>,
    /// Field magnitudes, T.
    pub fields: Vec<f64>,
    /// Probe angular frequencies, rad/s.
    pub probe: Vec<f64>,
    /// W
    pub power_w: f64,
    pub groups: Vec<GroupTemplate>,
    pub constants: PhysicalConstants,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.fields.is_empty() || !strictly_increasing(&self.fields) {
            errors.push("field axis must be non-empty, finite and strictly increasing".to_string());
        }
        if self.probe.is_empty() || !strictly_increasing(&self.probe) {
            errors.push("probe axis must be non-empty, finite and strictly increasing".to_string());
        }
        if !(self.power_w.is_finite() && self.power_w >= 0.0) {
            errors.push(format!("probe power must be >= 0 W, got {}", self.power_w));
        }
        if !((self.field_direction.norm() - 1.0).abs() < 1e-9) {
            errors.push("field direction must be a unit vector".to_string());
        }
        if let Err(Error::Validation(e)) = self.cavity.validate() {
            errors.extend(e);
        }
        for g in &self.groups {
            if !(g.t1 > 0.0 && g.t2 > 0.0 && g.n_eff >= 0.0 && g.g_s >= 0.0) {
                errors.push(format!("{}: need T1, T2 > 0 and N_eff, g_s >= 0", g.label));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }
}

/// Reflectivity over `(|B|, ω_p)`, stored row-major with one row per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// T
    pub fields: Vec<f64>,
    /// rad/s
    pub probe: Vec<f64>,
    pub reflectivity: Vec<f64>,
    /// Reflectivity minimum per field, rad/s.
    pub omega_eff: Vec<f64>,
}

impl SweepResult {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.probe.len();
        &self.reflectivity[i * n..(i + 1) * n]
    }

    pub fn get(&self, field_index: usize, probe_index: usize) -> f64 {
        self.reflectivity[field_index * self.probe.len() + probe_index]
    }

    /// Largest `|R − R_bare|` over the whole map.
    pub fn max_deviation_from(&self, bare: &[f64]) -> f64 {
        (0..self.fields.len())
            .flat_map(|i| self.row(i).iter().zip(bare).map(|(r, b)| (r - b).abs()))
            .fold(0.0, f64::max)
    }

    /// Spin-dip depth: the largest rise of `R(ω_p ≈ ω_c, B)` above the bare
    /// cavity at the probe point nearest `ω_c`.
    pub fn spin_dip_depth(&self, bare: &[f64], omega_c: f64) -> f64 {
        let Some(j) = (0..self.probe.len()).min_by(|a, b| {
            (self.probe[*a] - omega_c).abs().total_cmp(&(self.probe[*b] - omega_c).abs())
        }) else {
            return 0.0;
        };
        (0..self.fields.len()).map(|i| self.get(i, j) - bare[j]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|ω_eff − ω_c|`, rad/s.
    pub fn max_pull(&self, omega_c: f64) -> f64 {
        self.omega_eff.iter().map(|w| (w - omega_c).abs()).fold(0.0, f64::max)
    }

    /// Field values where `ω_eff − ω_c` turns from negative to positive as
    /// the field increases: one per spin branch crossing the cavity line.
    pub fn upward_crossings(&self, omega_c: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut last_neg: Option<usize> = None;
        for (i, w) in self.omega_eff.iter().enumerate() {
            let d = w - omega_c;
            if d < 0.0 {
                last_neg = Some(i);
            } else if d > 0.0 {
                if let Some(j) = last_neg.take() {
                    out.push(0.5 * (self.fields[j] + self.fields[i]));
                }
            }
        }
        out
    }
}

/// Bare-cavity reflectivity along the probe axis.
pub fn bare_reflectivity(cavity: &CavityMode, probe: &[f64], power_w: f64, c: &PhysicalConstants) -> Vec<f64> {
    probe
        .iter()
        .map(|&wp| {
            let e = intracavity_photon_number(wp, power_w, cavity, c);
            reflectivity(wp, &effective_frequency(cavity, &[], e), cavity.gamma_f)
        })
        .collect()
}

fn sweep_row(spec: &SweepSpec, b: f64) -> Result<Vec<f64>> {
    let field = spec.field_direction * b;
    let c = &spec.constants;
    let groups = spec
        .groups
        .iter()
        .map(|g| g.at_field(&field, spec.cavity.omega_c, c))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.with_context(format!("B = {b} T")))?;
    spec.probe
        .iter()
        .map(|&wp| {
            let e_c = intracavity_photon_number(wp, spec.power_w, &spec.cavity, c);
            let shift = effective_frequency(&spec.cavity, &groups, e_c);
            let r = reflectivity(wp, &shift, spec.cavity.gamma_f);
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::Numerical(format!("non-finite reflectivity at B = {b} T, omega_p = {wp} rad/s")))
            }
        })
        .collect()
}

/// Reflectivity map over the field and probe axes, rows evaluated in
/// parallel and assembled in axis order.
pub fn cdmr_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows: Vec<Vec<f64>> = spec
        .fields
        .par_iter()
        .map(|&b| sweep_row(spec, b))
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult {
        fields: spec.fields.clone(),
        probe: spec.probe.clone(),
        reflectivity: rows.concat(),
        omega_eff: Vec::new(),
    };
    result.omega_eff = extract_effective_resonance(&result);
    Ok(result)
}

/// `ω_eff(B) = argmin_{ω_p} R_c(ω_p, B)`; ties go to the lowest `ω_p`.
pub fn extract_effective_resonance(result: &SweepResult) -> Vec<f64> {
    (0..result.fields.len())
        .map(|i| {
            let row = result.row(i);
            let mut best = 0;
            for (j, r) in row.iter().enumerate() {
                if *r < row[best] {
                    best = j;
                }
            }
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - row[best] <= 1e-15 {
                log::warn!("flat reflectivity row at B = {} T; taking the lowest probe frequency", result.fields[i]);
            }
            result.probe[best]
        })
        .collect()
}
