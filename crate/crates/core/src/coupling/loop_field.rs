//! Field of a circular current loop, used as a stand-in for a resonator's
//! mode profile when no simulated map is available.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fieldmap::FieldMap;
use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Loop of radius `radius` in the plane `z = center.z`, axis along `ẑ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentLoop {
    /// m
    pub radius: f64,
    /// A
    pub current: f64,
    /// m
    pub center: Vector3<f64>,
}

impl CurrentLoop {
    pub fn new(radius: f64, current: f64, center: Vector3<f64>) -> Result<Self> {
        ensure_positive("loop radius", radius)?;
        ensure_finite("loop current", current)?;
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("loop center must be finite"));
        }
        Ok(Self { radius, current, center })
    }
}

/// One axis of a grid of cell centres: `n` cells tiling `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl AxisSpec {
    pub fn centers(&self) -> Vec<f64> {
        let h = (self.max - self.min) / self.cells as f64;
        (0..self.cells).map(|i| self.min + (i as f64 + 0.5) * h).collect()
    }

    fn validate(&self, name: &str, errors: &mut Vec<String>) {
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            errors.push(format!("{name}: need finite min < max, got [{}, {}]", self.min, self.max));
        }
        if self.cells == 0 {
            errors.push(format!("{name}: need at least one cell"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub z: AxisSpec,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.x.validate("x", &mut errors);
        self.y.validate("y", &mut errors);
        self.z.validate("z", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// Same box with every cell split in two along each axis.
    pub fn refined(&self) -> Self {
        let r = |a: AxisSpec| AxisSpec { cells: a.cells * 2, ..a };
        Self { x: r(self.x), y: r(self.y), z: r(self.z) }
    }
}

/// Complete elliptic integrals `K(m)` and `E(m)`, `m = k²`, by the
/// arithmetic-geometric mean.
pub fn elliptic_ke(m: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

const NEAR_AXIS: f64 = 1e-6;
const ON_WIRE: f64 = 1e-9;

/// Closed-form field of the loop at `point`, tesla.
pub fn loop_field_at(lp: &CurrentLoop, point: &Vector3<f64>, mu_0: f64) -> Option<Vector3<f64>> {
    let a = lp.radius;
    let d = point - lp.center;
    let rho2 = d.x * d.x + d.y * d.y;
    let rho = rho2.sqrt();
    let z = d.z;
    let r2 = rho2 + z * z;
    let alpha2 = a * a + r2 - 2.0 * a * rho;
    if alpha2.max(0.0).sqrt() < ON_WIRE * a {
        return None;
    }
    if rho < NEAR_AXIS * a {
        // Expansion to first order in ρ about the axis.
        let s = a * a + z * z;
        let bz = mu_0 * lp.current * a * a / (2.0 * s.powf(1.5));
        let b_rho_over_rho = 3.0 * mu_0 * lp.current * a * a * z / (4.0 * s.powf(2.5));
        return Some(Vector3::new(b_rho_over_rho * d.x, b_rho_over_rho * d.y, bz));
    }
    let beta2 = a * a + r2 + 2.0 * a * rho;
    let beta = beta2.sqrt();
    let m = 1.0 - alpha2 / beta2;
    let (kk, ee) = elliptic_ke(m);
    let c = mu_0 * lp.current / PI;
    let b_rho = c * z / (2.0 * alpha2 * beta * rho) * ((a * a + r2) * ee - alpha2 * kk);
    let bz = c / (2.0 * alpha2 * beta) * ((a * a - r2) * ee + alpha2 * kk);
    Some(Vector3::new(b_rho * d.x / rho, b_rho * d.y / rho, bz))
}

/// Biot–Savart line integral around the loop with `segments` equally spaced
/// trapezoid nodes. Spectrally accurate away from the wire.
pub fn loop_field_quadrature(lp: &CurrentLoop, point: &Vector3<f64>, mu_0: f64, segments: usize) -> Vector3<f64> {
    let a = lp.radius;
    let h = 2.0 * PI / segments as f64;
    let mut acc = Vector3::zeros();
    for i in 0..segments {
        let t = i as f64 * h;
        let src = lp.center + Vector3::new(a * t.cos(), a * t.sin(), 0.0);
        let dl = Vector3::new(-a * t.sin(), a * t.cos(), 0.0) * h;
        let r = point - src;
        acc += dl.cross(&r) / r.norm().powi(3);
    }
    acc * (mu_0 * lp.current / (4.0 * PI))
}

/// Samples the loop field on the cell centres of `grid`.
pub fn generate_loop_field(lp: &CurrentLoop, grid: &GridSpec, mu_0: f64) -> Result<FieldMap> {
    grid.validate()?;
    let xs = grid.x.centers();
    let ys = grid.y.centers();
    let zs = grid.z.centers();
    let (nx, ny) = (xs.len(), ys.len());
    let total = nx * ny * zs.len();
    let field: Vec<Result<Vector3<f64>>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let p = Vector3::new(xs[idx % nx], ys[(idx / nx) % ny], zs[idx / (nx * ny)]);
            loop_field_at(lp, &p, mu_0).ok_or(Error::Singularity { index: idx, x: p.x, y: p.y, z: p.z })
        })
        .collect();
    let field = field.into_iter().collect::<Result<Vec<_>>>()?;
    FieldMap::new(xs, ys, zs, field)
}
