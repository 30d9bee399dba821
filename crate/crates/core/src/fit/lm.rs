//! Levenberg–Marquardt with a central-difference Jacobian.
//!
//! Parameters are mapped as `x = offset + scale·z` and the solver works on
//! the dimensionless `z`, starting from `z = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which (together with `cost_tol`) the fit stops.
    pub step_tol: f64,
    /// Relative change of the residual norm.
    pub cost_tol: f64,
    pub jacobian_step: f64,
    /// Norm of the data the residuals are measured against; sets the scale
    /// of the reported gradient and the rounding floor of the residual.
    pub data_norm: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, step_tol: 1e-10, cost_tol: 1e-10, jacobian_step: 1e-6, data_norm: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    /// Fitted parameters in physical units.
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    /// `‖Jᵀr‖ / (‖J‖_F·max(data_norm, ‖r‖))`, zero for an exact fit.
    pub relative_gradient: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(JᵀJ)⁻¹·‖r‖²/(m − n)` in physical units, when defined.
    pub covariance: Option<DMatrix<f64>>,
    pub message: String,
}

fn eval<F>(f: &F, offset: &[f64], scale: &[f64], z: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let x: Vec<f64> = (0..z.len()).map(|i| offset[i] + scale[i] * z[i]).collect();
    let r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("residual is not finite".into()));
    }
    Ok(DVector::from_vec(r))
}

fn jacobian<F>(f: &F, offset: &[f64], scale: &[f64], z: &DVector<f64>, m: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = z.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let step = h * z[j].abs().max(1.0);
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += step;
        zm[j] -= step;
        let rp = eval(f, offset, scale, &zp)?;
        let rm = eval(f, offset, scale, &zm)?;
        jac.set_column(j, &((rp - rm) / (2.0 * step)));
    }
    Ok(jac)
}

pub fn levenberg_marquardt<F>(f: F, offset: &[f64], scale: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = offset.len();
    if scale.len() != n || n == 0 {
        return Err(Error::invalid("offset and scale must be non-empty and of equal length"));
    }
    if scale.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
        return Err(Error::invalid("parameter scales must be finite and non-zero"));
    }
    let mut z = DVector::zeros(n);
    let mut r = eval(&f, offset, scale, &z)?;
    let m = r.len();
    if m < n {
        return Err(Error::Identifiability(format!("{m} residuals cannot determine {n} parameters")));
    }
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;
    let mut message = if converged { "exact fit at the initial guess".to_string() } else { String::new() };
    let mut jac = jacobian(&f, offset, scale, &z, m, opts.jacobian_step)?;
    let norm_x = |z: &DVector<f64>| (0..n).map(|i| (offset[i] / scale[i] + z[i]).powi(2)).sum::<f64>().sqrt();
    let rel_gradient = |jac: &DMatrix<f64>, r: &DVector<f64>| {
        let denom = jac.norm() * opts.data_norm.max(r.norm());
        if denom == 0.0 { 0.0 } else { (jac.transpose() * r).norm() / denom }
    };

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let z_new = &z + &step;
            let r_new = match eval(&f, offset, scale, &z_new) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cost_new = r_new.norm_squared();
            if cost_new <= cost {
                let rel_step = step.norm() / (norm_x(&z_new) + 1e-30);
                let rel_change = (cost.sqrt() - cost_new.sqrt()) / cost.sqrt().max(1e-300);
                z = z_new;
                r = r_new;
                cost = cost_new;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if cost == 0.0 {
                    converged = true;
                    message = "exact fit".into();
                } else if rel_step < opts.step_tol && rel_change < opts.cost_tol {
                    converged = true;
                    message = "relative step and residual change below tolerance".into();
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No downhill step exists at any damping: a stationary point.
            let g = rel_gradient(&jac, &r);
            converged = g < 1e-8;
            message = format!("no further decrease possible (relative gradient {g:.3e})");
            break;
        }
        jac = jacobian(&f, offset, scale, &z, m, opts.jacobian_step)?;
    }
    if !converged && message.is_empty() {
        message = format!("stopped after {} iterations without convergence", opts.max_iterations);
    }

    let relative_gradient = rel_gradient(&jac, &r);
    let covariance = if m > n {
        (jac.transpose() * &jac).try_inverse().map(|inv| {
            let s2 = cost / (m - n) as f64;
            let d = DMatrix::from_diagonal(&DVector::from_column_slice(scale));
            &d * inv * &d * s2
        })
    } else {
        None
    };
    Ok(LmOutcome {
        params: (0..n).map(|i| offset[i] + scale[i] * z[i]).collect(),
        residuals: r.as_slice().to_vec(),
        residual_norm: cost.sqrt(),
        relative_gradient,
        iterations,
        converged,
        covariance,
        message,
    })
}
