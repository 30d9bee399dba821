use std::f64::consts::PI;

use spincav_core::fit::{monte_carlo_orientation, OrientationFitOptions};
use spincav_core::PhysicalConstants;

#[test]
fn monte_carlo_orientation_is_calibrated() {
    let c = PhysicalConstants::default();
    let truth = [-0.02 * PI, 0.002 * PI, 0.05 * PI];
    let fields = [0.004, 0.008, 0.012, 0.016, 0.020];
    let start = [truth[0] * 1.2, truth[1] * 0.8, truth[2]];
    let s = monte_carlo_orientation(truth, &fields, 0.05, 100, 7, start, &OrientationFitOptions::default(), &c).unwrap();
    assert!(s.converged_fraction >= 0.95);
    assert!(s.fraction_within_3sigma >= 0.95);
    let again = monte_carlo_orientation(truth, &fields, 0.05, 100, 7, start, &OrientationFitOptions::default(), &c).unwrap();
    assert_eq!(s, again);
}

#[test]
fn reported_errors_match_the_spread_at_low_noise() {
    let c = PhysicalConstants::default();
    let truth = [-0.02 * PI, 0.002 * PI, 0.05 * PI];
    let fields = [0.004, 0.008, 0.012, 0.016, 0.020];
    let s = monte_carlo_orientation(truth, &fields, 0.002, 100, 11, truth, &OrientationFitOptions::default(), &c).unwrap();
    println!("{s:?}");
    for i in 0..2 {
        let ratio = s.mean_reported_std[i] / s.rms_error[i];
        assert!((0.5..2.0).contains(&ratio), "angle {i}: {s:?}");
    }
}
