//! Effective ensemble coupling from a cavity-mode field map.

mod fieldmap;
mod loop_field;

pub use fieldmap::{load_field_map, read_field_map, FieldMap};
pub use loop_field::{
    elliptic_ke, generate_loop_field, loop_field_at, loop_field_quadrature, AxisSpec, CurrentLoop, GridSpec,
};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{ensure_positive, Error, Result};
use crate::numerics::pairwise_sum;

/// Axis-aligned box holding uniformly distributed, uniformly polarized spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    /// m
    pub min: Vector3<f64>,
    /// m
    pub max: Vector3<f64>,
    /// m⁻³
    pub density: f64,
    pub polarization: f64,
}

impl SampleRegion {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>, density: f64, polarization: f64) -> Result<Self> {
        let mut errors = Vec::new();
        if !(min.iter().chain(max.iter()).all(|v| v.is_finite()) && (0..3).all(|i| max[i] > min[i])) {
            errors.push(format!("region bounds must satisfy min < max on every axis, got {min:?}..{max:?}"));
        }
        if !(density.is_finite() && density > 0.0) {
            errors.push(format!("density must be > 0, got {density}"));
        }
        if !(-1.0..=1.0).contains(&polarization) {
            errors.push(format!("polarization must lie in [-1, 1], got {polarization}"));
        }
        if errors.is_empty() {
            Ok(Self { min, max, density, polarization })
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x * d.y * d.z
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    /// rad/s
    pub g_s: f64,
    /// rad²/s²
    pub g_s_squared: f64,
    pub n_eff: f64,
    /// Critical photon number `(4 g_s² T1 T2)⁻¹`.
    pub e_cc: f64,
    /// Summed volume of the cells counted inside the region, m³.
    pub region_volume: f64,
    pub region_cells: usize,
}

/// `g_n = γ_e·|B_c|·|sin φ|` for a single-photon field amplitude.
pub fn single_spin_coupling(b_per_sqrt_photon: f64, phi: f64, c: &PhysicalConstants) -> f64 {
    c.gamma_e * b_per_sqrt_photon.abs() * phi.sin().abs()
}

/// `E_cc = (4 g_s² T1 T2)⁻¹`.
pub fn critical_photon_number(g_s: f64, t1: f64, t2: f64) -> f64 {
    1.0 / (4.0 * g_s * g_s * t1 * t2)
}

/// Mean of `|B|² sin²φ` over the given defect axes.
fn transverse_weight(b: &Vector3<f64>, axes: &[Vector3<f64>]) -> f64 {
    let b2 = b.norm_squared();
    let sum: f64 = axes.iter().map(|a| (b2 - b.dot(a).powi(2)).max(0.0)).sum();
    sum / axes.len() as f64
}

/// Ensemble coupling
/// `g_s² = γ_e²μ₀ħω_c·∫ρ|B|²sin²φ·P dr / (∫_map |B|² dr · ∫ρP dr)`.
///
/// Integrals use the midpoint rule: a cell belongs to the region when its
/// centre does. `sin²φ` is averaged over `axes` (unit vectors).
pub fn effective_coupling(
    map: &FieldMap,
    region: &SampleRegion,
    axes: &[Vector3<f64>],
    omega_c: f64,
    t1: f64,
    t2: f64,
    c: &PhysicalConstants,
) -> Result<CouplingResult> {
    ensure_positive("omega_c", omega_c)?;
    ensure_positive("T1", t1)?;
    ensure_positive("T2", t2)?;
    if axes.is_empty() {
        return Err(Error::invalid("at least one defect axis is required"));
    }
    let axes: Vec<Vector3<f64>> = axes.iter().map(|a| a.normalize()).collect();
    if axes.iter().any(|a| !a.iter().all(|v| v.is_finite())) {
        return Err(Error::invalid("defect axes must be finite and non-zero"));
    }
    if region.polarization == 0.0 {
        return Err(Error::NoPolarization);
    }

    let volumes = map.cell_volumes();
    let field = map.field();
    let mode_terms: Vec<f64> = field.par_iter().zip(volumes.par_iter()).map(|(b, v)| b.norm_squared() * v).collect();
    let inside: Vec<usize> = (0..map.len()).filter(|&i| region.contains(&map.position(i))).collect();
    if inside.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let overlap_terms: Vec<f64> = inside.par_iter().map(|&i| transverse_weight(&field[i], &axes) * volumes[i]).collect();
    let volume_terms: Vec<f64> = inside.iter().map(|&i| volumes[i]).collect();

    let mode_norm = pairwise_sum(&mode_terms);
    let region_volume = pairwise_sum(&volume_terms);
    // ρ and P are uniform, so they cancel between numerator and denominator.
    let overlap = pairwise_sum(&overlap_terms) / region_volume;
    let g2 = c.gamma_e.powi(2) * c.mu_0 * c.hbar * omega_c * overlap / mode_norm;
    let g_s = g2.sqrt();
    Ok(CouplingResult {
        g_s,
        g_s_squared: g2,
        n_eff: -region.density * region.polarization * region_volume,
        e_cc: critical_photon_number(g_s, t1, t2),
        region_volume,
        region_cells: inside.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;

    fn uniform_map(b: Vector3<f64>) -> FieldMap {
        let ax: Vec<f64> = (0..4).map(|i| 0.125e-3 + 0.25e-3 * i as f64).collect();
        FieldMap::new(ax.clone(), ax.clone(), ax, vec![b; 64]).unwrap()
    }

    fn whole(map_len: f64) -> SampleRegion {
        SampleRegion::new(Vector3::zeros(), Vector3::repeat(map_len), 1e23, -0.1).unwrap()
    }

    #[test]
    fn uniform_field_closed_form() {
        let c = PhysicalConstants::default();
        let map = uniform_map(Vector3::new(2e-9, 0.0, 0.0));
        let w = hz_to_rad(2.53e9);
        let r = effective_coupling(&map, &whole(1e-3), &[Vector3::z()], w, 0.5, 2e-7, &c).unwrap();
        let v = 1e-9;
        let expect = c.gamma_e.powi(2) * c.mu_0 * c.hbar * w / v;
        assert!((r.g_s_squared / expect - 1.0).abs() < 1e-12);
        assert!((r.n_eff - 1e23 * 0.1 * v).abs() < 1e-9 * r.n_eff);
        assert!((r.e_cc * 4.0 * r.g_s_squared * 0.5 * 2e-7 - 1.0).abs() < 1e-14);
        assert_eq!(r.region_cells, 64);
    }

    #[test]
    fn parallel_field_does_not_couple() {
        let c = PhysicalConstants::default();
        let map = uniform_map(Vector3::new(0.0, 0.0, 1.0));
        let r = effective_coupling(&map, &whole(1e-3), &[Vector3::z()], 1e10, 1.0, 1e-7, &c).unwrap();
        assert_eq!(r.g_s, 0.0);
    }

    #[test]
    fn error_paths() {
        let c = PhysicalConstants::default();
        let map = uniform_map(Vector3::x());
        let far = SampleRegion::new(Vector3::repeat(1.0), Vector3::repeat(2.0), 1e23, -0.1).unwrap();
        assert!(matches!(
            effective_coupling(&map, &far, &[Vector3::z()], 1e10, 1.0, 1e-7, &c),
            Err(Error::EmptyRegion)
        ));
        let unpolarized = SampleRegion { polarization: 0.0, ..whole(1e-3) };
        assert!(matches!(
            effective_coupling(&map, &unpolarized, &[Vector3::z()], 1e10, 1.0, 1e-7, &c),
            Err(Error::NoPolarization)
        ));
        assert!(SampleRegion::new(Vector3::zeros(), Vector3::zeros(), 1.0, 0.0).is_err());
    }

    #[test]
    fn single_spin() {
        let c = PhysicalConstants::default();
        assert_eq!(single_spin_coupling(1e-9, 0.0, &c), 0.0);
        let g = single_spin_coupling(1e-9, std::f64::consts::FRAC_PI_2, &c);
        assert!((g - hz_to_rad(28.03)).abs() < 1e-12);
        assert_eq!(single_spin_coupling(1e-9, 0.3, &c), single_spin_coupling(1e-9, -0.3, &c));
    }

    proptest::proptest! {
        #[test]
        fn invariant_under_field_rescaling(scale in 1e-6..1e6f64, density in 1e20..1e26f64) {
            let c = PhysicalConstants::default();
            let lp = CurrentLoop::new(0.5e-3, 1.0, Vector3::new(0.0, 0.0, -0.1e-3)).unwrap();
            let grid = GridSpec {
                x: AxisSpec { min: -1e-3, max: 1e-3, cells: 8 },
                y: AxisSpec { min: -1e-3, max: 1e-3, cells: 8 },
                z: AxisSpec { min: 0.0, max: 1e-3, cells: 4 },
            };
            let map = generate_loop_field(&lp, &grid, c.mu_0).unwrap();
            let region = SampleRegion::new(Vector3::new(-0.5e-3, -0.5e-3, 0.0), Vector3::new(0.5e-3, 0.5e-3, 0.5e-3), density, -0.2).unwrap();
            let axes = [Vector3::new(1.0, 1.0, 1.0)];
            let a = effective_coupling(&map, &region, &axes, 1e10, 0.1, 1e-7, &c).unwrap();
            let b = effective_coupling(&map.scaled(scale), &region, &axes, 1e10, 0.1, 1e-7, &c).unwrap();
            proptest::prop_assert!((a.g_s_squared / b.g_s_squared - 1.0).abs() < 1e-12);
            proptest::prop_assert!((a.e_cc / b.e_cc - 1.0).abs() < 1e-12);
            proptest::prop_assert_eq!(a.n_eff, b.n_eff);
            proptest::prop_assert!(a.n_eff > 0.0);
        }
    }
}
