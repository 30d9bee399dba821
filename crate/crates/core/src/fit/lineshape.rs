use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use super::{covariance_rows, std_errors, FitParameter, FitResult};
use crate::cavity::{reflectivity, ComplexShift};
use crate::error::{Error, Result};

/// Which of the two swap-symmetric solutions to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingRegime {
    /// `γ_f ≥ γ_c`
    Overcoupled,
    /// `γ_f ≤ γ_c`
    Undercoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGuess {
    /// rad/s
    pub omega_c: f64,
    /// rad/s
    pub gamma_c: f64,
    /// rad/s
    pub gamma_f: f64,
}

fn check_trace(trace: &[(f64, f64)], min_points: usize) -> Result<()> {
    if trace.len() < min_points {
        return Err(Error::Identifiability(format!("need at least {min_points} trace points, got {}", trace.len())));
    }
    if trace.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::invalid("trace values must be finite"));
    }
    Ok(())
}

fn sorted(trace: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut t = trace.to_vec();
    t.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    t
}

fn span(trace: &[(f64, f64)]) -> (f64, f64) {
    trace.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| (lo.min(*y), hi.max(*y)))
}

fn argmin(trace: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in trace.iter().enumerate() {
        if p.1 < trace[best].1 {
            best = i;
        }
    }
    best
}

/// `(ω_c, γ_c, γ_f)` from a bare reflectivity trace in linear units.
///
/// The lineshape is unchanged by swapping `γ_c` and `γ_f`; `regime` picks
/// the reported solution.
pub fn fit_cavity_lineshape(trace: &[(f64, f64)], guess: &CavityGuess, regime: CouplingRegime) -> Result<FitResult> {
    check_trace(trace, 4)?;
    for (name, v) in [("omega_c", guess.omega_c), ("gamma_c", guess.gamma_c), ("gamma_f", guess.gamma_f)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("initial {name} must be > 0, got {v}")));
        }
    }
    let trace = sorted(trace);
    let (lo, hi) = span(&trace);
    if hi - lo <= 1e-9 * hi.abs().max(1.0) {
        return Err(Error::Identifiability("reflectivity trace has no dip".into()));
    }
    let mut diagnostics = Vec::new();
    let i_min = argmin(&trace);
    if i_min == 0 || i_min + 1 == trace.len() {
        diagnostics.push("reflectivity minimum lies at the edge of the trace".to_string());
        log::warn!("reflectivity minimum lies at the edge of the trace");
    }
    let data_norm = trace.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    let f = |x: &[f64]| {
        Ok(trace
            .iter()
            .map(|(w, r)| reflectivity(*w, &ComplexShift { omega: x[0], gamma: x[1] }, x[2]) - r)
            .collect())
    };
    let width = guess.gamma_c + guess.gamma_f;
    let out = levenberg_marquardt(
        f,
        &[guess.omega_c, guess.gamma_c, guess.gamma_f],
        &[width, guess.gamma_c, guess.gamma_f],
        &LmOptions { data_norm, ..LmOptions::default() },
    )?;
    // Flipping both signs or swapping the two rates leaves R unchanged.
    let (a, b) = (out.params[1].abs(), out.params[2].abs());
    let swap = match regime {
        CouplingRegime::Overcoupled => b < a,
        CouplingRegime::Undercoupled => b > a,
    };
    let (gamma_c, gamma_f) = if swap { (b, a) } else { (a, b) };
    let mut errs = std_errors(&out);
    let mut covariance = covariance_rows(&out);
    if swap {
        errs.swap(1, 2);
        if let Some(c) = covariance.as_mut() {
            c.swap(1, 2);
            for row in c.iter_mut() {
                row.swap(1, 2);
            }
        }
    }
    if !out.converged {
        diagnostics.push("cavity lineshape fit did not converge".to_string());
    }
    diagnostics.push(out.message.clone());
    let names = ["omega_c", "gamma_c", "gamma_f"];
    let values = [out.params[0], gamma_c, gamma_f];
    Ok(FitResult {
        parameters: (0..3)
            .map(|i| FitParameter { name: names[i].into(), value: values[i], unit: "rad/s".into(), std_error: errs[i], fixed: false })
            .collect(),
        residual_norm: out.residual_norm / data_norm,
        gradient_norm: out.relative_gradient,
        iterations: out.iterations,
        converged: out.converged,
        covariance,
        diagnostics,
    })
}

/// `offset − depth/(1 + (2(x − center)/fwhm)²)`
pub fn lorentzian_dip(x: f64, center: f64, fwhm: f64, depth: f64, offset: f64) -> f64 {
    let u = 2.0 * (x - center) / fwhm;
    offset - depth / (1.0 + u * u)
}

/// Contiguous runs of points below `level`, as index ranges.
fn runs_below(trace: &[(f64, f64)], level: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, p) in trace.iter().enumerate() {
        match (p.1 < level, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, trace.len() - 1));
    }
    runs
}

/// Center, FWHM, depth and offset of a single Lorentzian dip. The trace
/// abscissa may be in any unit; the FWHM comes back in the same unit.
pub fn fit_lorentzian_fwhm(trace: &[(f64, f64)]) -> Result<FitResult> {
    check_trace(trace, 5)?;
    let trace = sorted(trace);
    let (lo, hi) = span(&trace);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::Identifiability("trace has zero dip depth".into()));
    }
    let n = trace.len();
    let offset0 = 0.5 * (trace[0].1 + trace[n - 1].1);
    let i_min = argmin(&trace);
    let depth0 = offset0 - trace[i_min].1;
    if !(depth0 > 0.0) {
        return Err(Error::Identifiability("trace has no dip below its edges".into()));
    }
    let mut diagnostics = Vec::new();
    let runs = runs_below(&trace, offset0 - 0.5 * depth0);
    if runs.len() > 1 {
        let msg = format!("{} separate dips found; fitting the deepest", runs.len());
        log::warn!("{msg}");
        diagnostics.push(msg);
    }
    let (s, e) = runs.iter().copied().find(|(s, e)| (*s..=*e).contains(&i_min)).unwrap_or((i_min, i_min));
    let step = (trace[n - 1].0 - trace[0].0) / (n - 1) as f64;
    let fwhm0 = (trace[e].0 - trace[s].0).max(step);
    let center0 = trace[i_min].0;

    let y_mean = trace.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let data_norm = trace.iter().map(|p| (p.1 - y_mean).powi(2)).sum::<f64>().sqrt();
    let f = |x: &[f64]| Ok(trace.iter().map(|(t, y)| lorentzian_dip(*t, x[0], x[1], x[2], x[3]) - y).collect());
    let out = levenberg_marquardt(
        f,
        &[center0, fwhm0, depth0, offset0],
        &[fwhm0, fwhm0, depth0, depth0],
        &LmOptions { data_norm, ..LmOptions::default() },
    )?;
    if !out.converged {
        diagnostics.push("Lorentzian fit did not converge".to_string());
    }
    diagnostics.push(out.message.clone());
    let errs = std_errors(&out);
    let names = ["center", "fwhm", "depth", "offset"];
    let units = ["x", "x", "signal", "signal"];
    let mut values = out.params.clone();
    values[1] = values[1].abs();
    Ok(FitResult {
        parameters: (0..4)
            .map(|i| FitParameter { name: names[i].into(), value: values[i], unit: units[i].into(), std_error: errs[i], fixed: false })
            .collect(),
        residual_norm: out.residual_norm / data_norm,
        gradient_norm: out.relative_gradient,
        iterations: out.iterations,
        converged: out.converged,
        covariance: covariance_rows(&out),
        diagnostics,
    })
}
