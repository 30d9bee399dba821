use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde_json::{json, to_value, Value};
use spincav_core::cavity::{
    bare_reflectivity, write_omega_eff_csv, write_sweep_csv, OmegaEffTable, SweepTable,
};
use spincav_core::config::{Regime, RunConfig};
use spincav_core::constants::{dbm_to_watts, hz_to_rad, rad_to_hz};
use spincav_core::fit::{
    self,
    fit_cavity_lineshape, fit_lorentzian_fwhm, monte_carlo_orientation, read_odmr_csv,
    read_trace_csv, CavityGuess, CouplingRegime, FitResult, OrientationFitOptions,
};
use spincav_core::nonlinear::{cooperativity, ensemble_bistability_onset, sensitivity as shot_noise_sensitivity, weak_expansion};
use spincav_core::scenario::{
    cavity_mode, coupling_from_config, field_axis, field_direction, laser_levels, loop_grid, single_dip_group,
    cdmr_panels, LaserLevel,
};
use spincav_core::spectra::{bond_axes, nv_transition_frequencies, p1_transition_frequencies, NvClass};
use spincav_core::coupling::generate_loop_field;
use spincav_core::{Error, PhysicalConstants, Result};

use crate::output::Output;

fn constants() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::from(e).with_context(path.display().to_string()))
}

fn level(cfg: &RunConfig, label: &str, c: &PhysicalConstants) -> Result<LaserLevel> {
    let levels = laser_levels(cfg, c)?;
    let names: Vec<String> = levels.iter().map(|l| l.label.clone()).collect();
    levels
        .into_iter()
        .find(|l| l.label.eq_ignore_ascii_case(label))
        .ok_or_else(|| Error::invalid(format!("unknown laser level {label:?}; configured: {names:?}")))
}

fn nv_header() -> String {
    let mut h = String::from("B_T");
    for class in NvClass::ALL {
        write!(h, ",nv{0}_minus_Hz,nv{0}_plus_Hz", class.label()).unwrap();
    }
    h.push('\n');
    h
}

fn nv_row(b: f64, dir: &Vector3<f64>, c: &PhysicalConstants) -> Result<String> {
    let mut row = format!("{b:e}");
    for t in nv_transition_frequencies(&(dir * b), c)? {
        write!(row, ",{:e},{:e}", rad_to_hz(t.omega_minus), rad_to_hz(t.omega_plus)).unwrap();
    }
    row.push('\n');
    Ok(row)
}

pub fn nv_freqs(cfg: &RunConfig, out: &Output, field_mt: Option<f64>) -> Result<()> {
    let c = constants();
    let dir = field_direction(cfg)?;
    let fields = match field_mt {
        Some(mt) => vec![mt * 1e-3],
        None => field_axis(cfg),
    };
    let mut body = nv_header();
    for b in fields {
        body += &nv_row(b, &dir, &c)?;
    }
    out.csv("nv_freqs", &body)
}

pub fn odmr_lines(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = constants();
    let dir = field_direction(cfg)?;
    let mut body = nv_header();
    for b in field_axis(cfg) {
        body += &nv_row(b, &dir, &c)?;
    }
    out.csv("odmr_lines", &body)
}

pub fn p1_freqs(cfg: &RunConfig, out: &Output, field_mt: f64, cos2_theta: Option<f64>) -> Result<()> {
    let c = constants();
    if !field_mt.is_finite() {
        return Err(Error::invalid("field must be finite"));
    }
    let b = field_mt * 1e-3;
    let mut body = String::from("axis,cos2_theta,B_T,low_Hz,center_Hz,high_Hz,splitting_Hz\n");
    let (field, axes): (Vector3<f64>, Vec<(String, Vector3<f64>)>) = match cos2_theta {
        Some(x) => {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::invalid(format!("cos2_theta must lie in [0, 1], got {x}")));
            }
            let axis = Vector3::new((1.0 - x).sqrt(), 0.0, x.sqrt());
            (Vector3::z() * b, vec![("custom".into(), axis)])
        }
        None => {
            let dir = field_direction(cfg)?;
            (dir * b, bond_axes().iter().enumerate().map(|(i, a)| (format!("axis{i}"), *a)).collect())
        }
    };
    for (name, axis) in axes {
        let lines = p1_transition_frequencies(&field, &axis, &c)?;
        let cos2 = (field.normalize().dot(&axis.normalize())).powi(2);
        writeln!(
            body,
            "{name},{cos2:e},{b:e},{:e},{:e},{:e},{:e}",
            rad_to_hz(lines.low),
            rad_to_hz(lines.center),
            rad_to_hz(lines.high),
            rad_to_hz(lines.splitting)
        )
        .unwrap();
    }
    out.csv("p1_freqs", &body)
}

pub fn cdmr(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = constants();
    let dir = out.dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let cav = cavity_mode(cfg)?;
    let panels = cdmr_panels(cfg, &c)?;
    let levels = laser_levels(cfg, &c)?.len();
    let mut summary = Vec::new();
    for (k, panel) in panels.iter().enumerate() {
        let name = panel.name(k / levels);
        let mut comments = out.provenance.clone();
        comments.push(format!("power_dbm={:e}", panel.power_dbm));
        comments.push(format!("laser={} intensity_w_per_m2={:e}", panel.level.label, panel.level.intensity_w_per_m2));
        let mut text = Vec::new();
        write_sweep_csv(&mut text, &SweepTable::from_result(&panel.result, &comments))?;
        out.file(&dir.join(format!("cdmr_{name}.csv")), std::str::from_utf8(&text).expect("utf-8"))?;
        let mut text = Vec::new();
        write_omega_eff_csv(&mut text, &OmegaEffTable::from_result(&panel.result, cav.omega_c, &comments))?;
        out.file(&dir.join(format!("omega_eff_{name}.csv")), std::str::from_utf8(&text).expect("utf-8"))?;
        let bare = bare_reflectivity(&cav, &panel.result.probe, dbm_to_watts(panel.power_dbm), &c);
        summary.push(json!({
            "panel": name,
            "power_dbm": panel.power_dbm,
            "laser": panel.level.label,
            "t1_s": panel.level.t1,
            "p_zs": panel.level.p_zs,
            "spin_dip_depth": panel.result.spin_dip_depth(&bare, cav.omega_c),
            "max_pull_over_omega_c": panel.result.max_pull(cav.omega_c) / cav.omega_c,
            "dip_branch_fields_t": panel.result.upward_crossings(cav.omega_c),
        }));
    }
    let out = out.with_dir(dir);
    out.json("cdmr_summary", json!({ "panels": summary }))
}

pub fn coupling(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = constants();
    let r = coupling_from_config(cfg, &c)?;
    let mut v = to_value(r).expect("serializable");
    v["g_s_hz"] = Value::from(rad_to_hz(r.g_s));
    v["source"] = Value::from(cfg.field_map.path.clone().unwrap_or_else(|| "current loop".into()));
    out.json("coupling", v)
}

pub fn sensitivity(cfg: &RunConfig, out: &Output, label: &str) -> Result<()> {
    let c = constants();
    let lv = level(cfg, label, &c)?;
    let cav = cavity_mode(cfg)?;
    let s_n = shot_noise_sensitivity(lv.p_zs, cav.gamma_c, lv.g_s, lv.t1, cfg.ensemble.t2_s)?;
    let group = single_dip_group(cfg, &lv, 1.0)?;
    let coop = cooperativity(group.n_eff, lv.g_s, cav.gamma_c, 1.0 / cfg.ensemble.t2_s)?;
    out.json(
        "sensitivity",
        json!({
            "laser": lv.label,
            "s_n_per_sqrt_hz": s_n,
            "cooperativity": coop,
            "n_eff": group.n_eff,
            "p_zs": lv.p_zs,
            "gamma_c_hz": cfg.cavity.gamma_c_hz,
            "g_s_hz": rad_to_hz(lv.g_s),
            "t1_s": lv.t1,
            "t2_s": cfg.ensemble.t2_s,
        }),
    )
}

pub fn expand(cfg: &RunConfig, out: &Output, label: &str, detuning_mhz: Option<f64>) -> Result<()> {
    let c = constants();
    let lv = level(cfg, label, &c)?;
    let detuning = match detuning_mhz {
        Some(mhz) => hz_to_rad(mhz * 1e6),
        None => 1.0 / cfg.ensemble.t2_s,
    };
    let group = single_dip_group(cfg, &lv, detuning)?;
    let e = weak_expansion(&group)?;
    out.json(
        "expand",
        json!({
            "laser": lv.label,
            "detuning_hz": rad_to_hz(detuning),
            "zeta2": e.zeta2,
            "omega_cs_hz": rad_to_hz(e.omega_cs),
            "gamma_cs_hz": rad_to_hz(e.gamma_cs),
            "kerr_hz_per_photon": rad_to_hz(e.kerr),
            "cubic_damping_hz_per_photon": rad_to_hz(e.cubic_damping),
            "e_cc": group.critical_photon_number(),
            "n_eff": group.n_eff,
        }),
    )
}

pub fn bistability(cfg: &RunConfig, out: &Output, label: &str) -> Result<()> {
    let c = constants();
    let lv = level(cfg, label, &c)?;
    let cav = cavity_mode(cfg)?;
    let group = single_dip_group(cfg, &lv, 1.0 / cfg.ensemble.t2_s)?;
    let Some(on) = ensemble_bistability_onset(&cav, &group, 1e-2, 1e2)? else {
        return out.json("bistability", json!({ "laser": lv.label, "bistable": false }));
    };
    let power_w = on.onset.drive * c.hbar * cav.omega_c / (4.0 * cav.gamma_f);
    out.json(
        "bistability",
        json!({
            "laser": lv.label,
            "bistable": true,
            "e_co": on.onset.e_co,
            "e_cc": on.e_cc,
            "e_co_over_e_cc": on.onset.e_co / on.e_cc,
            "spin_detuning_hz": rad_to_hz(on.detuning),
            "probe_offset_hz": rad_to_hz(on.onset.detuning),
            "kerr_hz_per_photon": rad_to_hz(on.expansion.kerr),
            "cubic_damping_hz_per_photon": rad_to_hz(on.expansion.cubic_damping),
            "onset_power_dbm": 10.0 * (power_w / 1e-3).log10(),
        }),
    )
}

fn fit_json(fit: &FitResult) -> Value {
    to_value(fit).expect("serializable")
}

pub fn fit_orientation(
    cfg: &RunConfig,
    out: &Output,
    data: Option<&Path>,
    monte_carlo: Option<usize>,
    noise_fraction: f64,
    seed: u64,
    fixed_angle: char,
) -> Result<()> {
    let c = constants();
    let fixed = match fixed_angle.to_ascii_lowercase() {
        'x' => 0,
        'y' => 1,
        'z' => 2,
        other => return Err(Error::invalid(format!("fixed angle must be x, y or z, got {other:?}"))),
    };
    let opts = OrientationFitOptions { fixed_angle: fixed, ..OrientationFitOptions::default() };
    let angles = cfg.field_sweep.angles_pi.map(|a| a * std::f64::consts::PI);
    if let Some(trials) = monte_carlo {
        let f = &cfg.field_sweep;
        let fields: Vec<f64> = (0..5).map(|i| f.min_t + (f.max_t - f.min_t) * i as f64 / 4.0).collect();
        let s = monte_carlo_orientation(angles, &fields, noise_fraction, trials, seed, angles, &opts, &c)?;
        return out.json("fit_orientation_monte_carlo", to_value(s).expect("serializable"));
    }
    let path = data.ok_or_else(|| Error::invalid("fit-orientation needs --data or --monte-carlo"))?;
    let dataset = read_odmr_csv(open(path)?).map_err(|e| e.with_context(path.display().to_string()))?;
    let fit = fit::fit_orientation(&dataset, &c, angles, &opts)?;
    let mut v = fit_json(&fit);
    v["angles_pi"] = json!(fit.parameters.iter().map(|p| p.value / std::f64::consts::PI).collect::<Vec<_>>());
    out.json("fit_orientation", v)
}

pub fn fit_cavity(cfg: &RunConfig, out: &Output, data: &Path) -> Result<()> {
    let trace = read_trace_csv(open(data)?).map_err(|e| e.with_context(data.display().to_string()))?;
    let guess = CavityGuess {
        omega_c: hz_to_rad(cfg.cavity.omega_c_hz),
        gamma_c: hz_to_rad(cfg.cavity.gamma_c_hz),
        gamma_f: hz_to_rad(cfg.cavity.gamma_f_hz),
    };
    let regime = match cfg.cavity.regime {
        Regime::Overcoupled => CouplingRegime::Overcoupled,
        Regime::Undercoupled => CouplingRegime::Undercoupled,
    };
    let fit = fit_cavity_lineshape(&trace, &guess, regime)?;
    let mut v = fit_json(&fit);
    for name in ["omega_c", "gamma_c", "gamma_f"] {
        v[format!("{name}_hz")] = Value::from(rad_to_hz(fit.get(name).unwrap_or(f64::NAN)));
    }
    out.json("fit_cavity", v)
}

pub fn fit_fwhm(out: &Output, data: &Path) -> Result<()> {
    let trace = read_trace_csv(open(data)?).map_err(|e| e.with_context(data.display().to_string()))?;
    let fit = fit_lorentzian_fwhm(&trace)?;
    let mut v = fit_json(&fit);
    v["center_hz"] = Value::from(rad_to_hz(fit.get("center").unwrap_or(f64::NAN)));
    v["fwhm_hz"] = Value::from(rad_to_hz(fit.get("fwhm").unwrap_or(f64::NAN)));
    out.json("fit_fwhm", v)
}

pub fn fieldmap_gen_loop(cfg: &RunConfig, out: &Output) -> Result<()> {
    let c = constants();
    let (lp, grid) = loop_grid(cfg)?;
    let map = generate_loop_field(&lp, &grid, c.mu_0)?;
    let mut text = Vec::new();
    let mut comments = out.provenance.clone();
    comments.push(format!("loop radius_m={:e} z_m={:e} current_a={:e}", lp.radius, lp.center.z, lp.current));
    map.write_csv(&mut text, &comments)?;
    let text = String::from_utf8(text).expect("utf-8");
    match &out.dir {
        Some(dir) => {
            let path = dir.join("fieldmap_loop.csv");
            out.file(&path, &text)?;
            println!("{}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
