//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spincav_core::cavity::{
    bare_reflectivity, effective_frequency, ensemble_shift, CavityMode, ComplexShift, SpinEnsembleGroup,
};
use spincav_core::config::load_preset;
use spincav_core::constants::{dbm_to_watts, hz_to_rad, rad_to_hz};
use spincav_core::coupling::{effective_coupling, generate_loop_field, FieldMap, SampleRegion};
use spincav_core::fit::{
    fit_cavity_lineshape, fit_lorentzian_fwhm, fit_orientation, lorentzian_dip, synthesize_odmr, CavityGuess,
    CouplingRegime, OrientationFitOptions,
};
use spincav_core::nonlinear::{bistability_onset, weak_expansion, DuffingParams};
use spincav_core::scenario::{cavity_mode, coupling_axes, laser_levels, loop_grid, sample_region};
use spincav_core::spectra::{
    bond_axes, nv_class_frequencies, nv_exact_levels, nv_transition_frequencies, p1_exact_levels,
    p1_transition_frequencies, NvClass,
};
use spincav_core::PhysicalConstants;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn spincav(args: &[&str]) -> std::result::Result<(String, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_spincav"))
        .args(args)
        .output()
        .map_err(|e| format!("could not start spincav: {e}"))?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!("spincav {args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok((String::from_utf8_lossy(&out.stdout).into_owned(), elapsed))
}

fn json_of(text: &str) -> std::result::Result<Value, String> {
    serde_json::from_str(text).map_err(|e| format!("bad JSON output: {e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn p1_splitting() -> Outcome {
    let (stdout, t) = spincav(&["p1-freqs", "--field-mt", "89", "--cos2-theta", "0.3333333333333333"])?;
    let row = stdout
        .lines()
        .find(|l| l.starts_with("custom,"))
        .ok_or("no data row in p1-freqs output")?;
    let hz: f64 = row.rsplit(',').next().unwrap().parse().map_err(|e| format!("{e}"))?;
    let mhz = hz / 1e6;
    check(
        (mhz - 93.5).abs() <= 0.05 && t < Duration::from_secs(1),
        format!("ω_en/2π = {mhz:.4} MHz (target 93.5 ± 0.05), {:.2} s", t.as_secs_f64()),
    )
}

fn sensitivity_bound() -> Outcome {
    let (stdout, t) = spincav(&["sensitivity", "--level", "L0"])?;
    let s = json_of(&stdout)?["s_n_per_sqrt_hz"].as_f64().ok_or("missing s_n_per_sqrt_hz")?;
    check(
        rel(s, 5e7) <= 0.1 && t < Duration::from_secs(1),
        format!("S_N = {s:.4e} Hz^-1/2 (target 5e7 ± 10%), {:.2} s", t.as_secs_f64()),
    )
}

fn nv_zero_field() -> Outcome {
    let c = PhysicalConstants::default();
    let zero = Vector3::zeros();
    let d = rad_to_hz(c.zero_field_splitting);
    let e = rad_to_hz(c.strain_splitting);
    let mut worst = 0.0f64;
    for t in nv_transition_frequencies(&zero, &c).map_err(|e| e.to_string())? {
        worst = worst.max((rad_to_hz(t.omega_minus) - (2.87e9 - 10e6)).abs());
        worst = worst.max((rad_to_hz(t.omega_plus) - (2.87e9 + 10e6)).abs());
    }
    let mut exact_worst = 0.0f64;
    for class in NvClass::ALL {
        let x = nv_exact_levels(&zero, class, &c).map_err(|e| e.to_string())?;
        exact_worst = exact_worst.max((rad_to_hz(x.omega_minus) - (d - e)).abs());
        exact_worst = exact_worst.max((rad_to_hz(x.omega_plus) - (d + e)).abs());
    }
    // A few ulps of 2.9e9 Hz after the rad/s round trip.
    let ulp = 2.87e9 * f64::EPSILON * 4.0;
    check(
        worst <= ulp && exact_worst <= 1e3 * ulp,
        format!("|ω±/2π − (2.87 GHz ∓ 10 MHz)| = {worst:.2e} Hz closed form, {exact_worst:.2e} Hz exact"),
    )
}

fn bare_dip() -> Outcome {
    let cfg = load_preset("nv_fig3", &[]).map_err(|e| e.to_string())?;
    let c = PhysicalConstants::default();
    let cav = cavity_mode(&cfg).map_err(|e| e.to_string())?;
    let r = bare_reflectivity(&cav, &[cav.omega_c], dbm_to_watts(cfg.powers_dbm[0]), &c)[0];
    let db = 10.0 * r.log10();
    let oracle = 20.0 * ((cav.gamma_f - cav.gamma_c) / (cav.gamma_f + cav.gamma_c)).abs().log10();
    check(
        (db + 14.7).abs() <= 0.1 && (db - oracle).abs() < 1e-9,
        format!("R(ω_c) = {db:.3} dB (target −14.7 ± 0.1, closed form {oracle:.3})"),
    )
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

fn cdmr_reproduction(dir: &Path) -> Outcome {
    let cfg = load_preset("nv_fig3", &[]).map_err(|e| e.to_string())?;
    if cfg.field_sweep.steps != 200 || cfg.frequency_sweep.steps != 200 {
        return Err("preset grid is not 200×200".into());
    }
    let out = dir.join("cdmr");
    let (_, t) = spincav(&["cdmr", "--out", out.to_str().unwrap()])?;
    let text = std::fs::read_to_string(out.join("cdmr_summary.json")).map_err(|e| e.to_string())?;
    let summary = json_of(&text)?;
    let panels = summary["panels"].as_array().ok_or("no panels")?;
    let powers = &cfg.powers_dbm;
    let levels = ["L0", "L1", "L2", "L3"];
    let find = |p: f64, l: &str| {
        panels.iter().find(|x| x["power_dbm"].as_f64() == Some(p) && x["laser"].as_str() == Some(l))
    };
    let mut depth = vec![vec![f64::NAN; levels.len()]; powers.len()];
    let mut pull = depth.clone();
    for (i, &p) in powers.iter().enumerate() {
        for (j, l) in levels.iter().enumerate() {
            let x = find(p, l).ok_or(format!("missing panel {p} dBm {l}"))?;
            depth[i][j] = x["spin_dip_depth"].as_f64().ok_or("missing depth")?;
            pull[i][j] = x["max_pull_over_omega_c"].as_f64().ok_or("missing pull")?;
        }
    }
    let branches: Vec<f64> = find(powers[0], "L0").unwrap()["dip_branch_fields_t"]
        .as_array()
        .ok_or("missing branch fields")?
        .iter()
        .filter_map(Value::as_f64)
        .filter(|b| (0.014..=0.020).contains(b))
        .collect();
    let a = branches.len() >= 2;
    let b = (0..levels.len()).all(|j| non_increasing(&depth.iter().map(|row| row[j]).collect::<Vec<_>>()));
    let c = (0..powers.len()).all(|i| non_decreasing(&depth[i]) && non_decreasing(&pull[i]));
    let fast = t < Duration::from_secs(60);
    check(
        a && b && c && fast,
        format!(
            "(a) branches at {:?} mT: {a}; (b) depth non-increasing in power: {b}; (c) depth and pull non-decreasing in laser level: {c}; {} panels in {:.2} s",
            branches.iter().map(|x| (x * 1e5).round() / 1e2).collect::<Vec<_>>(),
            panels.len(),
            t.as_secs_f64()
        ),
    )
}

fn weak_expansion_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let mut worst = 0.0f64;
    let mut identities = true;
    for _ in 0..1000 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let g = SpinEnsembleGroup {
            label: "draw".into(),
            omega_s: 0.0,
            detuning: sign * 10f64.powf(rng.random_range(3.0..9.0)),
            g_s: 10f64.powf(rng.random_range(-1.0..3.0)),
            n_eff: 10f64.powf(rng.random_range(0.0..15.0)),
            t1: 10f64.powf(rng.random_range(-4.0..0.0)),
            t2: 10f64.powf(rng.random_range(-8.0..-5.0)),
        };
        let e = weak_expansion(&g).map_err(|e| e.to_string())?;
        identities &= e.gamma_cs == e.zeta2 * e.omega_cs && e.cubic_damping == e.zeta2 * e.kerr;
        // Step chosen so E_c/E_cc is 1e-3 of the unsaturated denominator.
        let x = g.detuning * g.t2;
        let h = 1e-3 * (1.0 + x * x) * g.critical_photon_number();
        let diff = |h: f64| (ensemble_shift(&g, h) - ensemble_shift(&g, -h)) / (2.0 * h);
        let d = (diff(0.5 * h) * 4.0 - diff(h)) / 3.0;
        let (re, im) = (e.kerr, -e.cubic_damping);
        let err = ((d.re - re).powi(2) + (d.im - im).powi(2)).sqrt() / (re * re + im * im).sqrt();
        worst = worst.max(err);
    }
    check(
        worst <= 1e-10 && identities,
        format!("max relative |FD − (K_cs − iG_cs)| = {worst:.2e} over 1000 draws; γ_cs = ζ₂ω_cs, G_cs = ζ₂K_cs exact: {identities}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let c = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p1_worst = 0.0f64;
    for _ in 0..200 {
        let (ct, phi) = (rng.random_range(-1.0..1.0f64), rng.random_range(0.0..2.0 * PI));
        let st = (1.0 - ct * ct).sqrt();
        let field = Vector3::new(st * phi.cos(), st * phi.sin(), ct) * 0.089;
        for axis in bond_axes() {
            let first = p1_transition_frequencies(&field, &axis, &c).map_err(|e| e.to_string())?;
            let exact = p1_exact_levels(&field, &axis, &c).map_err(|e| e.to_string())?;
            for (x, f) in exact.transitions.iter().zip([first.low, first.center, first.high]) {
                p1_worst = p1_worst.max(rad_to_hz((x - f).abs()));
            }
        }
    }
    let mut nv_worst = 0.0f64;
    for class in NvClass::ALL {
        for i in 0..=100 {
            let field = class.axis() * (-5e-3 + 1e-4 * i as f64);
            let a = nv_class_frequencies(&field, class, &c).map_err(|e| e.to_string())?;
            let x = nv_exact_levels(&field, class, &c).map_err(|e| e.to_string())?;
            nv_worst = nv_worst.max(rad_to_hz((a.omega_minus - x.omega_minus).abs()));
            nv_worst = nv_worst.max(rad_to_hz((a.omega_plus - x.omega_plus).abs()));
        }
    }
    check(
        p1_worst < 5e6 && nv_worst < 0.1e6,
        format!("P1 at 89 mT: max {:.3} MHz (limit 5); NV axial ≤ 5 mT: max {:.3e} MHz (limit 0.1)", p1_worst / 1e6, nv_worst / 1e6),
    )
}

fn duffing_onset() -> Outcome {
    let mut worst = 0.0f64;
    for (gamma, kerr) in [(1.0, 1.0), (3.7e6, -2.0e-3), (1e5, 4.2), (2.5, -1e-9)] {
        let p = DuffingParams { resonance: 1e10, damping: gamma, kerr, cubic_damping: 0.0, drive: 0.0 };
        let on = bistability_onset(&p).map_err(|e| e.to_string())?.ok_or("pure Kerr gave no onset")?;
        worst = worst.max(rel(on.e_co, 2.0 * gamma / (3f64.sqrt() * kerr.abs())));
        worst = worst.max(rel(on.detuning.abs(), 3f64.sqrt() * gamma));
    }
    let (stdout, _) = spincav(&["bistability", "--level", "L0"])?;
    let ratio = json_of(&stdout)?["e_co_over_e_cc"].as_f64().ok_or("laser-off model is not bistable")?;
    let factor = ratio / 2.0;
    check(
        worst <= 1e-6 && (0.5..=2.0).contains(&factor),
        format!("pure Kerr max relative error {worst:.2e}; laser-off E_co/E_cc = {ratio:.3} (within ×2 of 2)"),
    )
}

fn uniform_map(b: Vector3<f64>, n: usize, side: f64) -> FieldMap {
    let ax: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * side / n as f64).collect();
    FieldMap::new(ax.clone(), ax.clone(), ax, vec![b; n * n * n]).unwrap()
}

fn coupling_properties() -> Outcome {
    let c = PhysicalConstants::default();
    let w = hz_to_rad(2.53e9);
    let side = 1e-3;
    let whole = SampleRegion::new(Vector3::zeros(), Vector3::repeat(side), 1e23, -0.035).map_err(|e| e.to_string())?;
    let r = effective_coupling(&uniform_map(Vector3::new(3e-9, 0.0, 0.0), 6, side), &whole, &[Vector3::z()], w, 0.5, 2e-7, &c)
        .map_err(|e| e.to_string())?;
    let closed = c.gamma_e.powi(2) * c.mu_0 * c.hbar * w / side.powi(3);
    let uniform_err = rel(r.g_s_squared, closed);

    let cfg = load_preset("nv_fig3", &[]).map_err(|e| e.to_string())?;
    let (lp, grid) = loop_grid(&cfg).map_err(|e| e.to_string())?;
    let level = laser_levels(&cfg, &c).map_err(|e| e.to_string())?.remove(0);
    let region = sample_region(&cfg, &level).map_err(|e| e.to_string())?;
    let axes = coupling_axes(&cfg).map_err(|e| e.to_string())?;
    let couple = |m: &FieldMap| effective_coupling(m, &region, &axes, w, level.t1, cfg.ensemble.t2_s, &c).map_err(|e| e.to_string());
    let map = generate_loop_field(&lp, &grid, c.mu_0).map_err(|e| e.to_string())?;
    let base = couple(&map)?;
    let mut scale_err = 0.0f64;
    for s in [1e-6, 0.37, 2.0, 1e5] {
        scale_err = scale_err.max(rel(couple(&map.scaled(s))?.g_s_squared, base.g_s_squared));
    }
    let fine = couple(&generate_loop_field(&lp, &grid.refined(), c.mu_0).map_err(|e| e.to_string())?)?;
    let refine = rel(fine.g_s, base.g_s);
    check(
        uniform_err <= 1e-10 && scale_err <= 1e-12 && refine < 0.01,
        format!(
            "uniform closed form {uniform_err:.1e}; scale invariance {scale_err:.1e}; refinement change {:.3}% (g_s/2π = {:.3} Hz)",
            100.0 * refine,
            rad_to_hz(base.g_s)
        ),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn fit_round_trips() -> Outcome {
    let c = PhysicalConstants::default();
    let truth = [-0.02 * PI, 0.002 * PI, 0.05 * PI];
    let fields = [0.005, 0.010, 0.015, 0.020, 0.025];
    let data = synthesize_odmr(truth, &fields, &c).map_err(|e| e.to_string())?;
    let start = [truth[0] * 1.2, truth[1] * 0.8, truth[2]];
    let (fit, t_orient) = timed(|| fit_orientation(&data, &c, start, &OrientationFitOptions::default()));
    let fit = fit.map_err(|e| e.to_string())?;
    let angle_err = (0..3).map(|i| (fit.parameters[i].value - truth[i]).abs()).fold(0.0, f64::max);

    let (wc, gc, gf) = (hz_to_rad(2.53e9), hz_to_rad(0.253e6), hz_to_rad(0.367e6));
    let trace: Vec<(f64, f64)> = (0..401)
        .map(|i| {
            let w = wc + (i as f64 - 200.0) * 0.01 * (gc + gf);
            let r = ((w - wc).powi(2) + (gf - gc).powi(2)) / ((w - wc).powi(2) + (gf + gc).powi(2));
            (w, r)
        })
        .collect();
    let guess = CavityGuess { omega_c: wc + 0.2 * gc, gamma_c: 1.2 * gc, gamma_f: 0.8 * gf };
    let (cav, t_cav) = timed(|| fit_cavity_lineshape(&trace, &guess, CouplingRegime::Overcoupled));
    let cav = cav.map_err(|e| e.to_string())?;
    let cav_err = [("omega_c", wc), ("gamma_c", gc), ("gamma_f", gf)]
        .iter()
        .map(|(n, v)| rel(cav.get(n).unwrap_or(f64::NAN), *v))
        .fold(0.0, f64::max);

    let lor: Vec<(f64, f64)> = (0..301)
        .map(|i| {
            let f = 2.80e9 + i as f64 * 0.5e6;
            (f, lorentzian_dip(f, 2.8705e9, 13.5e6, 0.015, 1.0))
        })
        .collect();
    let (fw, t_fw) = timed(|| fit_lorentzian_fwhm(&lor));
    let fw = fw.map_err(|e| e.to_string())?;
    let fwhm_err = rel(fw.get("fwhm").unwrap_or(f64::NAN), 13.5e6);

    let limit = Duration::from_secs(5);
    check(
        angle_err < 1e-3 && cav_err < 1e-3 && fwhm_err < 1e-3 && t_orient < limit && t_cav < limit && t_fw < limit,
        format!(
            "angles {angle_err:.1e} rad ({:.2} s); cavity {cav_err:.1e} rel ({:.2} s); FWHM {fwhm_err:.1e} rel ({:.2} s)",
            t_orient.as_secs_f64(),
            t_cav.as_secs_f64(),
            t_fw.as_secs_f64()
        ),
    )
}

fn saturation_property() -> Outcome {
    let cav = CavityMode::new(hz_to_rad(2.53e9), hz_to_rad(0.253e6), hz_to_rad(0.367e6)).map_err(|e| e.to_string())?;
    let strategy = (
        -1e9..1e9f64,
        prop_oneof![Just(0.0), 1.0..1e16f64],
        0.0..1e3f64,
        1e-5..10.0f64,
        1e-9..1e-4f64,
        0.0..1e6f64,
        1e-6..1e6f64,
    );
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let result = runner.run(&strategy, |(detuning, n_eff, g_s, t1, t2, s1, ds)| {
        let g = SpinEnsembleGroup { label: "p".into(), omega_s: 0.0, detuning, g_s, n_eff, t1, t2 };
        let shifted: ComplexShift = effective_frequency(&cav, std::slice::from_ref(&g), s1 * g.critical_photon_number());
        prop_assert!(shifted.gamma >= cav.gamma_c);
        if n_eff > 0.0 && g_s > 0.0 {
            // Saturation levels s = E_c/E_cc with s2 − s1 well above rounding.
            let ecc = g.critical_photon_number();
            let s2 = s1 * (1.0 + 1e-3) + ds;
            let a = ensemble_shift(&g, s1 * ecc).norm();
            let b = ensemble_shift(&g, s2 * ecc).norm();
            prop_assert!(b < a, "|Υ| {a} -> {b}");
            let far = ensemble_shift(&g, 1e200 * ecc).norm();
            prop_assert!(far <= 1e-150 * a);
        }
        Ok(())
    });
    match result {
        Ok(()) => Ok("|Υ_s| strictly decreasing, → 0, and Γ_c ≥ γ_c over 10⁴ cases".into()),
        Err(e) => Err(format!("property failed: {e}")),
    }
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("P1 hyperfine splitting", Box::new(p1_splitting)),
        ("Sensitivity bound", Box::new(sensitivity_bound)),
        ("NV zero-field lines", Box::new(nv_zero_field)),
        ("Bare-cavity dip", Box::new(bare_dip)),
        ("CDMR qualitative reproduction", Box::new(|| cdmr_reproduction(dir.path()))),
        ("Weak-expansion consistency", Box::new(weak_expansion_consistency)),
        ("Oracle equivalence", Box::new(oracle_equivalence)),
        ("Duffing onset", Box::new(duffing_onset)),
        ("Coupling-integral properties", Box::new(coupling_properties)),
        ("Fit round-trips", Box::new(fit_round_trips)),
        ("Saturation/decoupling property", Box::new(saturation_property)),
    ];
    let mut failed = Vec::new();
    // Written past the test harness capture so the lines always show.
    let mut err = std::io::stderr();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let line = match run() {
            Ok(msg) => format!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed.push(i + 1);
                format!("FAIL {:>2} {name}: {msg}", i + 1)
            }
        };
        writeln!(err, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
