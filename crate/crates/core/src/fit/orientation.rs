use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{OdmrDataset, OdmrRecord};
use super::lm::{levenberg_marquardt, LmOptions};
use super::{covariance_rows, std_errors, FitParameter, FitResult};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::spectra::{nv_transition_frequencies, rotate_to_unit_vector};

const ANGLE_NAMES: [&str; 3] = ["theta_x", "theta_y", "theta_z"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationFitOptions {
    /// Angle (0 = x, 1 = y, 2 = z) held at its initial value. The lines
    /// depend only on the field direction, which has two degrees of freedom,
    /// so one of the three angles must be fixed.
    pub fixed_angle: usize,
    pub max_iterations: usize,
}

impl Default for OrientationFitOptions {
    fn default() -> Self {
        Self { fixed_angle: 2, max_iterations: 500 }
    }
}

/// All eight model lines at one field, ascending.
fn sorted_model_lines(angles: &[f64; 3], field: f64, c: &PhysicalConstants) -> Result<[f64; 8]> {
    let b = rotate_to_unit_vector(angles[0], angles[1], angles[2])? * field;
    let t = nv_transition_frequencies(&b, c)?;
    let mut out = [0.0; 8];
    for (i, tr) in t.iter().enumerate() {
        out[2 * i] = tr.omega_minus;
        out[2 * i + 1] = tr.omega_plus;
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Residuals of the least-squares order-preserving match of `obs` (ascending)
/// onto a subsequence of `model` (ascending).
fn matched_residuals(obs: &[f64], model: &[f64; 8], out: &mut Vec<f64>) {
    let (k, n) = (obs.len(), model.len());
    if k == n {
        out.extend(obs.iter().zip(model).map(|(o, m)| m - o));
        return;
    }
    // cost[i][j]: best cost of matching obs[..i] into model[..j].
    let mut cost = vec![vec![f64::INFINITY; n + 1]; k + 1];
    cost[0].iter_mut().for_each(|v| *v = 0.0);
    for i in 1..=k {
        for j in i..=n {
            let take = cost[i - 1][j - 1] + (model[j - 1] - obs[i - 1]).powi(2);
            cost[i][j] = cost[i][j - 1].min(take);
        }
    }
    let mut picked = vec![0; k];
    let (mut i, mut j) = (k, n);
    while i > 0 {
        if cost[i][j] == cost[i][j - 1] && j > i {
            j -= 1;
        } else {
            picked[i - 1] = j - 1;
            i -= 1;
            j -= 1;
        }
    }
    out.extend(obs.iter().zip(picked).map(|(o, m)| model[m] - o));
}

fn residuals(data: &OdmrDataset, angles: &[f64; 3], c: &PhysicalConstants) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for r in &data.records {
        matched_residuals(&r.lines, &sorted_model_lines(angles, r.field, c)?, &mut out);
    }
    Ok(out)
}

fn check_identifiable(data: &OdmrDataset) -> Result<()> {
    let mut fields: Vec<f64> = data.records.iter().filter(|r| r.field > 0.0 && r.lines.len() >= 2).map(|r| r.field).collect();
    fields.sort_by(f64::total_cmp);
    fields.dedup();
    if fields.len() < 3 {
        return Err(Error::Identifiability(format!(
            "orientation needs at least 3 non-zero field values with 2 or more lines each, got {}",
            fields.len()
        )));
    }
    Ok(())
}

/// Field rotation angles `(θx, θy, θz)` from ODMR dip frequencies.
///
/// Records are put in canonical order first, so the result does not depend
/// on the order of the input. At every evaluation the observed lines of a
/// record are matched in order to the sorted model lines (a subsequence of
/// them when fewer than eight are observed), which keeps the objective
/// continuous where branches cross.
pub fn fit_orientation(
    data: &OdmrDataset,
    c: &PhysicalConstants,
    initial: [f64; 3],
    opts: &OrientationFitOptions,
) -> Result<FitResult> {
    data.validate()?;
    c.validate()?;
    if opts.fixed_angle > 2 {
        return Err(Error::invalid(format!("fixed_angle must be 0, 1 or 2, got {}", opts.fixed_angle)));
    }
    if initial.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("initial angles must be finite"));
    }
    check_identifiable(data)?;
    let data = data.canonical();
    let free: Vec<usize> = (0..3).filter(|i| *i != opts.fixed_angle).collect();
    let zeeman_norm = data
        .records
        .iter()
        .flat_map(|r| r.lines.iter().map(|f| (f - c.zero_field_splitting).powi(2)))
        .sum::<f64>()
        .sqrt();
    if zeeman_norm == 0.0 {
        return Err(Error::Identifiability("all lines sit at the zero-field splitting".into()));
    }
    let lm_opts = LmOptions { max_iterations: opts.max_iterations, data_norm: zeeman_norm, ..LmOptions::default() };

    let mut angles = initial;
    let offset: Vec<f64> = free.iter().map(|i| initial[*i]).collect();
    let f = |x: &[f64]| {
        let mut a = initial;
        for (k, i) in free.iter().enumerate() {
            a[*i] = x[k];
        }
        residuals(&data, &a, c)
    };
    let out = levenberg_marquardt(f, &offset, &vec![1e-2; free.len()], &lm_opts)?;
    for (k, i) in free.iter().enumerate() {
        angles[*i] = out.params[k];
    }
    let mut diagnostics = Vec::new();
    if !out.converged {
        diagnostics.push("orientation fit did not converge; angles are the last iterate".to_string());
    }
    diagnostics.push(out.message.clone());
    let iterations = out.iterations;
    let errs = std_errors(&out);
    let mut parameters = Vec::new();
    for i in 0..3 {
        let k = free.iter().position(|j| *j == i);
        parameters.push(FitParameter {
            name: ANGLE_NAMES[i].into(),
            value: angles[i],
            unit: "rad".into(),
            std_error: k.and_then(|k| errs[k]),
            fixed: k.is_none(),
        });
    }
    Ok(FitResult {
        parameters,
        residual_norm: out.residual_norm / zeeman_norm,
        gradient_norm: out.relative_gradient,
        iterations,
        converged: out.converged,
        covariance: covariance_rows(&out),
        diagnostics,
    })
}

/// Noiseless ODMR records with all eight lines per field.
pub fn synthesize_odmr(angles: [f64; 3], fields: &[f64], c: &PhysicalConstants) -> Result<OdmrDataset> {
    let records = fields
        .iter()
        .map(|&b| {
            Ok(OdmrRecord { field: b, lines: sorted_model_lines(&angles, b, c)?.to_vec() })
        })
        .collect::<Result<Vec<_>>>()?;
    OdmrDataset::new(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub seed: u64,
    /// Noise standard deviation as a fraction of each line's `|ω − D|`.
    pub noise_fraction: f64,
    pub truth: [f64; 3],
    pub mean: [f64; 3],
    /// Root-mean-square deviation from the truth per angle.
    pub rms_error: [f64; 3],
    /// Mean of the per-fit standard errors (fixed angle: 0).
    pub mean_reported_std: [f64; 3],
    /// Fraction of trials with every free angle within three RMS errors of
    /// the truth.
    pub fraction_within_3sigma: f64,
    pub converged_fraction: f64,
}

/// Refits noisy copies of synthetic data generated at `truth`. Trial `i`
/// draws its noise from a ChaCha8 stream seeded with `seed + i`, so the
/// summary is reproducible whatever the thread count.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_orientation(
    truth: [f64; 3],
    fields: &[f64],
    noise_fraction: f64,
    trials: usize,
    seed: u64,
    initial: [f64; 3],
    opts: &OrientationFitOptions,
    c: &PhysicalConstants,
) -> Result<MonteCarloSummary> {
    if !(noise_fraction.is_finite() && noise_fraction >= 0.0) {
        return Err(Error::invalid(format!("noise fraction must be >= 0, got {noise_fraction}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let clean = synthesize_odmr(truth, fields, c)?;
    let fits: Vec<FitResult> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut noisy = clean.clone();
            for r in &mut noisy.records {
                for f in &mut r.lines {
                    let z: f64 = rng.sample(StandardNormal);
                    *f = (*f + z * noise_fraction * (*f - c.zero_field_splitting).abs()).max(f64::MIN_POSITIVE);
                }
            }
            fit_orientation(&noisy, c, initial, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let mut mean = [0.0; 3];
    let mut rms = [0.0; 3];
    let mut reported = [0.0; 3];
    for f in &fits {
        for (i, p) in f.parameters.iter().enumerate() {
            mean[i] += p.value / n;
            rms[i] += (p.value - truth[i]).powi(2) / n;
            reported[i] += p.std_error.unwrap_or(0.0) / n;
        }
    }
    let rms = rms.map(f64::sqrt);
    let within = fits
        .iter()
        .filter(|f| f.parameters.iter().enumerate().all(|(i, p)| p.fixed || (p.value - truth[i]).abs() <= 3.0 * rms[i]))
        .count();
    Ok(MonteCarloSummary {
        trials,
        seed,
        noise_fraction,
        truth,
        mean,
        rms_error: rms,
        mean_reported_std: reported,
        fraction_within_3sigma: within as f64 / n,
        converged_fraction: fits.iter().filter(|f| f.converged).count() as f64 / n,
    })
}
