//! Builds model objects from a [`RunConfig`].

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cavity::{cdmr_sweep, CavityMode, GroupTemplate, SpinEnsembleGroup, SweepResult, SweepSpec, TransitionSource};
use crate::config::{RunConfig, Scenario};
use crate::constants::{hz_to_rad, PhysicalConstants};
use crate::coupling::{
    effective_coupling, generate_loop_field, load_field_map, AxisSpec, CouplingResult, CurrentLoop, GridSpec, SampleRegion,
};
use crate::error::{Error, Result};
use crate::polarization::{relaxation_under_illumination, OpticalParams};
use crate::spectra::{bond_axes, classes_by_alignment, nv_class_frequencies, rotate_to_unit_vector, NvBranch, NvClass, P1Line};

const MM: f64 = 1e-3;

/// Spin parameters at one laser intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserLevel {
    pub label: String,
    pub intensity_w_per_m2: f64,
    /// Effective longitudinal time, s.
    pub t1: f64,
    /// Effective steady-state polarization.
    pub p_zs: f64,
    /// rad/s
    pub g_s: f64,
}

pub fn cavity_mode(cfg: &RunConfig) -> Result<CavityMode> {
    let c = &cfg.cavity;
    let mut mode = CavityMode::new(hz_to_rad(c.omega_c_hz), hz_to_rad(c.gamma_c_hz), hz_to_rad(c.gamma_f_hz))?;
    mode.kerr = hz_to_rad(c.kerr_hz);
    mode.cubic_damping = hz_to_rad(c.cubic_damping_hz);
    mode.validate()?;
    Ok(mode)
}

pub fn field_direction(cfg: &RunConfig) -> Result<Vector3<f64>> {
    let [x, y, z] = cfg.field_sweep.angles_pi.map(|a| a * std::f64::consts::PI);
    rotate_to_unit_vector(x, y, z)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Field magnitudes, T.
pub fn field_axis(cfg: &RunConfig) -> Vec<f64> {
    let f = &cfg.field_sweep;
    linspace(f.min_t, f.max_t, f.steps)
}

/// Probe frequencies, rad/s.
pub fn probe_axis(cfg: &RunConfig) -> Vec<f64> {
    let f = &cfg.frequency_sweep;
    linspace(f.min_hz, f.max_hz, f.steps).into_iter().map(hz_to_rad).collect()
}

/// Effective T1, polarization and coupling at every configured intensity.
/// Zero intensity uses the laser-off values; any other intensity combines
/// the laser-on thermal channel with optical pumping.
pub fn laser_levels(cfg: &RunConfig, c: &PhysicalConstants) -> Result<Vec<LaserLevel>> {
    cfg.laser
        .levels()
        .into_iter()
        .enumerate()
        .map(|(i, intensity)| {
            let label = format!("L{i}");
            if intensity == 0.0 {
                return Ok(LaserLevel {
                    label,
                    intensity_w_per_m2: 0.0,
                    t1: cfg.laser_off.t1t_s,
                    p_zs: cfg.ensemble.p_zst,
                    g_s: hz_to_rad(cfg.laser_off.g_s_hz),
                });
            }
            let on = cfg.laser_on.as_ref().ok_or_else(|| Error::invalid("laser_on is required for a non-zero level"))?;
            let opt = OpticalParams {
                intensity,
                cross_section: cfg.laser.cross_section_m2,
                wavelength: cfg.laser.wavelength_m,
                efficiency: cfg.laser.pumping_efficiency,
            };
            let state = relaxation_under_illumination(on.t1t_s, cfg.ensemble.p_zst, cfg.ensemble.p_zso, &opt, c)?;
            Ok(LaserLevel { label, intensity_w_per_m2: intensity, t1: state.t1, p_zs: state.polarization, g_s: hz_to_rad(on.g_s_hz) })
        })
        .collect()
}

/// Polarized spins in the illuminated volume, `ρ·V·|P_zS|`.
pub fn polarized_spins(cfg: &RunConfig, level: &LaserLevel) -> f64 {
    cfg.ensemble.density_per_cm3 * 1e6 * cfg.ensemble.volume_mm3 * 1e-9 * level.p_zs.abs()
}

/// NV: four classes × two branches, a quarter of the polarized spins per
/// class. P1: four Jahn–Teller axes × three hyperfine lines, a twelfth each.
pub fn spin_groups(cfg: &RunConfig, level: &LaserLevel) -> Result<Vec<GroupTemplate>> {
    let n = polarized_spins(cfg, level);
    let t2 = cfg.ensemble.t2_s;
    let mut out = Vec::new();
    match cfg.scenario {
        Scenario::Nv => {
            for class in NvClass::ALL {
                for branch in [NvBranch::Minus, NvBranch::Plus] {
                    let sign = if branch == NvBranch::Minus { "-" } else { "+" };
                    out.push(GroupTemplate {
                        label: format!("nv{}{}", class.label(), sign),
                        source: TransitionSource::Nv { class, branch },
                        g_s: level.g_s,
                        n_eff: n / 4.0,
                        t1: level.t1,
                        t2,
                    });
                }
            }
        }
        Scenario::P1 => {
            for (i, axis) in bond_axes().into_iter().enumerate() {
                for line in P1Line::ALL {
                    out.push(GroupTemplate {
                        label: format!("p1axis{i}m{}", line.nuclear_m()),
                        source: TransitionSource::P1 { axis, line },
                        g_s: level.g_s,
                        n_eff: n / 12.0,
                        t1: level.t1,
                        t2,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn sweep_spec(cfg: &RunConfig, level: &LaserLevel, power_w: f64, c: &PhysicalConstants) -> Result<SweepSpec> {
    Ok(SweepSpec {
        cavity: cavity_mode(cfg)?,
        field_direction: field_direction(cfg)?,
        fields: field_axis(cfg),
        probe: probe_axis(cfg),
        power_w,
        groups: spin_groups(cfg, level)?,
        constants: *c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub power_dbm: f64,
    pub level: LaserLevel,
    pub result: SweepResult,
}

impl Panel {
    /// File stem such as `P1_L0`.
    pub fn name(&self, power_index: usize) -> String {
        format!("P{}_{}", power_index + 1, self.level.label)
    }
}

/// One reflectivity map per (power, laser level), power-major.
pub fn cdmr_panels(cfg: &RunConfig, c: &PhysicalConstants) -> Result<Vec<Panel>> {
    let levels = laser_levels(cfg, c)?;
    let mut panels = Vec::new();
    for (&dbm, &w) in cfg.powers_dbm.iter().zip(&cfg.powers_w()) {
        for level in &levels {
            let spec = sweep_spec(cfg, level, w, c)?;
            let result = cdmr_sweep(&spec).map_err(|e| e.with_context(format!("{dbm} dBm, {}", level.label)))?;
            panels.push(Panel { power_dbm: dbm, level: level.clone(), result });
        }
    }
    Ok(panels)
}

/// Axes whose `sin²φ` enters the coupling integral: the two NV classes
/// best aligned with the field, or the field direction itself for P1.
pub fn coupling_axes(cfg: &RunConfig) -> Result<Vec<Vector3<f64>>> {
    let b = field_direction(cfg)?;
    Ok(match cfg.scenario {
        Scenario::Nv => classes_by_alignment(&b)[..2].iter().map(|k| k.axis()).collect(),
        Scenario::P1 => vec![b],
    })
}

pub fn loop_grid(cfg: &RunConfig) -> Result<(CurrentLoop, GridSpec)> {
    let fm = &cfg.field_map;
    let lp = CurrentLoop::new(fm.loop_radius_mm * MM, 1.0, Vector3::new(0.0, 0.0, fm.loop_z_mm * MM))?;
    let lateral = (2.0 * fm.map_half_width_mm / fm.cell_mm).round() as usize;
    let vertical = (fm.map_height_mm / fm.cell_mm).round() as usize;
    let w = fm.map_half_width_mm * MM;
    let grid = GridSpec {
        x: AxisSpec { min: -w, max: w, cells: lateral },
        y: AxisSpec { min: -w, max: w, cells: lateral },
        z: AxisSpec { min: 0.0, max: fm.map_height_mm * MM, cells: vertical },
    };
    grid.validate()?;
    Ok((lp, grid))
}

pub fn sample_region(cfg: &RunConfig, level: &LaserLevel) -> Result<SampleRegion> {
    let fm = &cfg.field_map;
    let w = fm.region_half_width_mm * MM;
    SampleRegion::new(
        Vector3::new(-w, -w, 0.0),
        Vector3::new(w, w, fm.region_depth_mm * MM),
        cfg.ensemble.density_per_cm3 * 1e6,
        level.p_zs,
    )
}

/// Coupling from the configured field map (file, or loop surrogate),
/// evaluated with laser-off relaxation.
pub fn coupling_from_config(cfg: &RunConfig, c: &PhysicalConstants) -> Result<CouplingResult> {
    let map = match &cfg.field_map.path {
        Some(p) => load_field_map(std::path::Path::new(p))?,
        None => {
            let (lp, grid) = loop_grid(cfg)?;
            generate_loop_field(&lp, &grid, c.mu_0)?
        }
    };
    let level = laser_levels(cfg, c)?
        .into_iter()
        .find(|l| l.intensity_w_per_m2 == 0.0)
        .unwrap_or(LaserLevel {
            label: "L0".into(),
            intensity_w_per_m2: 0.0,
            t1: cfg.laser_off.t1t_s,
            p_zs: cfg.ensemble.p_zst,
            g_s: hz_to_rad(cfg.laser_off.g_s_hz),
        });
    effective_coupling(
        &map,
        &sample_region(cfg, &level)?,
        &coupling_axes(cfg)?,
        hz_to_rad(cfg.cavity.omega_c_hz),
        level.t1,
        cfg.ensemble.t2_s,
        c,
    )
}

/// The group responsible for one spin dip at a given spin detuning: one
/// orientation class (NV) or one axis-line pair (P1).
pub fn single_dip_group(cfg: &RunConfig, level: &LaserLevel, detuning: f64) -> Result<SpinEnsembleGroup> {
    let share = match cfg.scenario {
        Scenario::Nv => 4.0,
        Scenario::P1 => 12.0,
    };
    let omega_c = hz_to_rad(cfg.cavity.omega_c_hz);
    SpinEnsembleGroup::new(
        format!("single dip, {}", level.label),
        omega_c,
        omega_c - detuning,
        level.g_s,
        polarized_spins(cfg, level) / share,
        level.t1,
        cfg.ensemble.t2_s,
    )
}

/// Fields where the aligned NV ω₋ branches meet the cavity frequency.
pub fn nv_crossing_fields(cfg: &RunConfig, c: &PhysicalConstants) -> Result<Vec<f64>> {
    let b = field_direction(cfg)?;
    let wc = hz_to_rad(cfg.cavity.omega_c_hz);
    let (lo, hi) = (cfg.field_sweep.min_t, cfg.field_sweep.max_t);
    let mut out = Vec::new();
    for class in NvClass::ALL {
        let f = |x: f64| nv_class_frequencies(&(b * x), class, c).map(|t| t.omega_minus - wc).unwrap_or(f64::NAN);
        if let Some(x) = crate::numerics::bisect(f, lo, hi, 1e-12) {
            out.push(x);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
