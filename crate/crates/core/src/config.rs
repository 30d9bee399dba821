//! Run configuration: JSON with unit-suffixed keys, shipped presets,
//! dotted-path overrides and a content hash for provenance headers.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const NV_PRESET: &str = include_str!("../presets/nv_fig3.json");
const P1_PRESET: &str = include_str!("../presets/p1_fig4.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Nv,
    P1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Overcoupled,
    Undercoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub omega_c_hz: f64,
    pub gamma_c_hz: f64,
    pub gamma_f_hz: f64,
    #[serde(default)]
    pub kerr_hz: f64,
    #[serde(default)]
    pub cubic_damping_hz: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub density_per_cm3: f64,
    /// Illuminated sample volume.
    pub volume_mm3: f64,
    pub t2_s: f64,
    pub p_zst: f64,
    /// Steady-state polarization of optical pumping alone.
    pub p_zso: f64,
}

/// Thermal T1 and coupling used with the laser off or on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub t1t_s: f64,
    pub g_s_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    /// Levels L0, L1, ... in mW/mm². Exclusive with `levels_w_per_m2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels_mw_per_mm2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels_w_per_m2: Option<Vec<f64>>,
    pub cross_section_m2: f64,
    pub wavelength_m: f64,
    pub pumping_efficiency: f64,
}

impl LaserConfig {
    /// Intensities in W/m².
    pub fn levels(&self) -> Vec<f64> {
        match (&self.levels_mw_per_mm2, &self.levels_w_per_m2) {
            (Some(mw), _) => mw.iter().map(|x| crate::constants::mw_per_mm2_to_w_per_m2(*x)).collect(),
            (None, Some(w)) => w.clone(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSweepConfig {
    pub min_t: f64,
    pub max_t: f64,
    pub steps: usize,
    /// Rotation angles `(θx, θy, θz)` in units of π.
    pub angles_pi: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySweepConfig {
    pub min_hz: f64,
    pub max_hz: f64,
    pub steps: usize,
}

/// Mode-shape source for the coupling integral: a field-map file when
/// `path` is set, otherwise the current-loop surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub loop_radius_mm: f64,
    pub loop_z_mm: f64,
    pub map_half_width_mm: f64,
    pub map_height_mm: f64,
    pub cell_mm: f64,
    pub region_half_width_mm: f64,
    pub region_depth_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub temperature_k: f64,
    pub cavity: CavityConfig,
    pub ensemble: EnsembleConfig,
    pub laser_off: RelaxationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_on: Option<RelaxationConfig>,
    pub laser: LaserConfig,
    pub powers_dbm: Vec<f64>,
    pub field_sweep: FieldSweepConfig,
    pub frequency_sweep: FrequencySweepConfig,
    pub field_map: FieldMapConfig,
    pub output_dir: String,
}

pub fn preset_names() -> [&'static str; 2] {
    ["nv_fig3", "p1_fig4"]
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    match name.trim_end_matches(".json") {
        "nv_fig3" | "nv" => Ok(NV_PRESET),
        "p1_fig4" | "p1" => Ok(P1_PRESET),
        other => Err(Error::invalid(format!("unknown preset {other:?}; available: {:?}", preset_names()))),
    }
}

fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
}

/// Replaces the value at a dotted path (`cavity.gamma_c_hz=2.6e5`). The
/// right-hand side is read as JSON, or as a plain string if that fails.
/// Paths must already exist, so a misspelt key is an error.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("override {assignment:?} must look like key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        let here = keys[..=depth].join(".");
        node = match node {
            Value::Object(map) => map.get_mut(*key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::invalid(format!("unknown config key {here:?}")))?;
    }
    *node = value;
    Ok(())
}

/// Parses a config from JSON text, applies overrides and validates.
pub fn load_config_text(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut value = parse_value(text)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Validation(vec![e.to_string()]))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn load_preset(name: &str, overrides: &[String]) -> Result<RunConfig> {
    load_config_text(preset_text(name)?, overrides)
}

pub fn load_config_file(path: &std::path::Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).with_context(path.display().to_string()))?;
    load_config_text(&text, overrides).map_err(|e| e.with_context(path.display().to_string()))
}

struct Checks(Vec<String>);

impl Checks {
    fn positive(&mut self, name: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.0.push(format!("{name} must be finite and > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, name: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.0.push(format!("{name} must be finite and >= 0, got {v}"));
        }
    }

    fn finite(&mut self, name: &str, v: f64) {
        if !v.is_finite() {
            self.0.push(format!("{name} must be finite, got {v}"));
        }
    }

    fn within(&mut self, name: &str, v: f64, lo: f64, hi: f64) {
        if !(lo..=hi).contains(&v) {
            self.0.push(format!("{name} must lie in [{lo}, {hi}], got {v}"));
        }
    }

    fn sweep(&mut self, name: &str, min: f64, max: f64, steps: usize) {
        if !(min.is_finite() && max.is_finite() && max > min) {
            self.0.push(format!("{name}: need finite min < max, got [{min}, {max}]"));
        }
        if steps < 2 {
            self.0.push(format!("{name}.steps must be >= 2, got {steps}"));
        }
    }
}

/// Cross-field validation; every problem is reported, not just the first.
pub fn validate_config(cfg: &RunConfig) -> Result<()> {
    let mut c = Checks(Vec::new());
    c.positive("temperature_k", cfg.temperature_k);
    let cav = &cfg.cavity;
    c.positive("cavity.omega_c_hz", cav.omega_c_hz);
    c.positive("cavity.gamma_c_hz", cav.gamma_c_hz);
    c.positive("cavity.gamma_f_hz", cav.gamma_f_hz);
    c.finite("cavity.kerr_hz", cav.kerr_hz);
    c.finite("cavity.cubic_damping_hz", cav.cubic_damping_hz);
    match cav.regime {
        Regime::Overcoupled if cav.gamma_f_hz < cav.gamma_c_hz => {
            c.0.push("cavity.regime is overcoupled but gamma_f_hz < gamma_c_hz".into())
        }
        Regime::Undercoupled if cav.gamma_f_hz > cav.gamma_c_hz => {
            c.0.push("cavity.regime is undercoupled but gamma_f_hz > gamma_c_hz".into())
        }
        _ => {}
    }
    let ens = &cfg.ensemble;
    c.non_negative("ensemble.density_per_cm3", ens.density_per_cm3);
    c.positive("ensemble.volume_mm3", ens.volume_mm3);
    c.positive("ensemble.t2_s", ens.t2_s);
    c.within("ensemble.p_zst", ens.p_zst, -1.0, 0.0);
    c.within("ensemble.p_zso", ens.p_zso, -1.0, 0.0);
    c.positive("laser_off.t1t_s", cfg.laser_off.t1t_s);
    c.non_negative("laser_off.g_s_hz", cfg.laser_off.g_s_hz);
    if let Some(on) = &cfg.laser_on {
        c.positive("laser_on.t1t_s", on.t1t_s);
        c.non_negative("laser_on.g_s_hz", on.g_s_hz);
    }
    let laser = &cfg.laser;
    match (&laser.levels_mw_per_mm2, &laser.levels_w_per_m2) {
        (Some(_), Some(_)) => c.0.push("laser: give levels_mw_per_mm2 or levels_w_per_m2, not both".into()),
        (None, None) => c.0.push("laser: one of levels_mw_per_mm2, levels_w_per_m2 is required".into()),
        _ => {}
    }
    let levels = laser.levels();
    if levels.is_empty() {
        c.0.push("laser: at least one level is required".into());
    }
    for (i, l) in levels.iter().enumerate() {
        c.non_negative(&format!("laser level L{i}"), *l);
    }
    if levels.iter().any(|l| *l > 0.0) && cfg.laser_on.is_none() {
        c.0.push("laser_on is required when a laser level is above zero".into());
    }
    if levels.iter().any(|l| *l > 0.0) && cfg.scenario == Scenario::P1 {
        c.0.push("optical pumping is only modelled for the nv scenario".into());
    }
    c.positive("laser.cross_section_m2", laser.cross_section_m2);
    c.positive("laser.wavelength_m", laser.wavelength_m);
    c.within("laser.pumping_efficiency", laser.pumping_efficiency, 0.0, 1.0);
    if cfg.powers_dbm.is_empty() {
        c.0.push("powers_dbm must not be empty".into());
    }
    for (i, p) in cfg.powers_dbm.iter().enumerate() {
        c.finite(&format!("powers_dbm[{i}]"), *p);
    }
    let fs = &cfg.field_sweep;
    c.sweep("field_sweep", fs.min_t, fs.max_t, fs.steps);
    if fs.min_t < 0.0 {
        c.0.push(format!("field_sweep.min_t must be >= 0, got {}", fs.min_t));
    }
    for (i, a) in fs.angles_pi.iter().enumerate() {
        c.finite(&format!("field_sweep.angles_pi[{i}]"), *a);
    }
    let ws = &cfg.frequency_sweep;
    c.sweep("frequency_sweep", ws.min_hz, ws.max_hz, ws.steps);
    if ws.min_hz <= 0.0 {
        c.0.push(format!("frequency_sweep.min_hz must be > 0, got {}", ws.min_hz));
    }
    let fm = &cfg.field_map;
    c.positive("field_map.loop_radius_mm", fm.loop_radius_mm);
    c.finite("field_map.loop_z_mm", fm.loop_z_mm);
    c.positive("field_map.map_half_width_mm", fm.map_half_width_mm);
    c.positive("field_map.map_height_mm", fm.map_height_mm);
    c.positive("field_map.cell_mm", fm.cell_mm);
    c.positive("field_map.region_half_width_mm", fm.region_half_width_mm);
    c.positive("field_map.region_depth_mm", fm.region_depth_mm);
    if fm.region_half_width_mm > fm.map_half_width_mm || fm.region_depth_mm > fm.map_height_mm {
        c.0.push("field_map: sample region must fit inside the map".into());
    }
    if fm.loop_z_mm >= 0.0 && fm.loop_z_mm <= fm.map_height_mm && fm.path.is_none() {
        c.0.push("field_map.loop_z_mm must lie outside the map slab [0, map_height_mm]".into());
    }
    if cfg.output_dir.trim().is_empty() {
        c.0.push("output_dir must not be empty".into());
    }
    if c.0.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(c.0))
    }
}

impl RunConfig {
    /// Canonical JSON: struct field order, no whitespace.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Lower-case hex SHA-256 of [`Self::canonical_json`].
    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header lines embedded in every output file.
    pub fn provenance(&self) -> Vec<String> {
        vec![format!("config_sha256={}", self.sha256()), format!("tool_version={TOOL_VERSION}")]
    }

    pub fn powers_w(&self) -> Vec<f64> {
        self.powers_dbm.iter().map(|p| crate::constants::dbm_to_watts(*p)).collect()
    }
}
