use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Direction of the static field, `T_z(θz)·T_y(θy)·T_x(θx)·ẑ`, right-handed
/// active rotations applied to the crystal `[001]` axis.
///
/// For example `(0, π/2, 0)` turns `ẑ` into `x̂`, and `(π/2, 0, 0)` turns it
/// into `−ŷ`.
pub fn rotate_to_unit_vector(theta_x: f64, theta_y: f64, theta_z: f64) -> Result<Vector3<f64>> {
    ensure_finite("theta_x", theta_x)?;
    ensure_finite("theta_y", theta_y)?;
    ensure_finite("theta_z", theta_z)?;
    let r = Rotation3::from_axis_angle(&Vector3::z_axis(), theta_z)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), theta_y)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), theta_x);
    Ok((r * Vector3::z()).normalize())
}

/// Static field given as rotation angles (rad) and a magnitude (T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOrientation {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    pub magnitude: f64,
}

impl FieldOrientation {
    pub fn new(theta_x: f64, theta_y: f64, theta_z: f64, magnitude: f64) -> Result<Self> {
        ensure_finite("magnitude", magnitude)?;
        if magnitude < 0.0 {
            return Err(Error::invalid(format!("field magnitude must be >= 0, got {magnitude}")));
        }
        rotate_to_unit_vector(theta_x, theta_y, theta_z)?;
        Ok(Self {
            theta_x,
            theta_y,
            theta_z,
            magnitude,
        })
    }

    /// Angles given in units of π, as quoted in lab notebooks.
    pub fn from_pi_units(x: f64, y: f64, z: f64, magnitude: f64) -> Result<Self> {
        use std::f64::consts::PI;
        Self::new(x * PI, y * PI, z * PI, magnitude)
    }

    pub fn unit_vector(&self) -> Vector3<f64> {
        rotate_to_unit_vector(self.theta_x, self.theta_y, self.theta_z)
            .expect("angles validated at construction")
    }

    pub fn field(&self) -> Vector3<f64> {
        self.unit_vector() * self.magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use std::f64::consts::PI;

    // Independent oracle: explicit rotation matrices, multiplied by hand.
    fn explicit(tx: f64, ty: f64, tz: f64) -> Vector3<f64> {
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, tx.cos(), -tx.sin(), 0.0, tx.sin(), tx.cos());
        let ry = Matrix3::new(ty.cos(), 0.0, ty.sin(), 0.0, 1.0, 0.0, -ty.sin(), 0.0, ty.cos());
        let rz = Matrix3::new(tz.cos(), -tz.sin(), 0.0, tz.sin(), tz.cos(), 0.0, 0.0, 0.0, 1.0);
        rz * ry * rx * Vector3::z()
    }

    #[test]
    fn identity_and_quarter_turns() {
        let b = rotate_to_unit_vector(0.0, 0.0, 0.0).unwrap();
        assert_eq!(b, Vector3::z());
        let b = rotate_to_unit_vector(0.0, PI / 2.0, 0.0).unwrap();
        assert!((b - Vector3::x()).norm() < 1e-15);
        let b = rotate_to_unit_vector(PI / 2.0, 0.0, 0.0).unwrap();
        assert!((b + Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn fitted_angles_match_explicit_matrices() {
        let (tx, ty, tz) = (-0.02 * PI, 0.002 * PI, 0.05 * PI);
        let b = rotate_to_unit_vector(tx, ty, tz).unwrap();
        let oracle = explicit(tx, ty, tz);
        assert!((b - oracle).norm() < 1e-15);
        assert!((b.z - (0.02 * PI).cos() * (0.002 * PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(rotate_to_unit_vector(f64::NAN, 0.0, 0.0).is_err());
        assert!(FieldOrientation::new(0.0, 0.0, 0.0, -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn unit_norm(tx in -10.0..10.0f64, ty in -10.0..10.0f64, tz in -10.0..10.0f64) {
            let b = rotate_to_unit_vector(tx, ty, tz).unwrap();
            proptest::prop_assert!((b.norm() - 1.0).abs() < 1e-12);
            proptest::prop_assert!((b - explicit(tx, ty, tz)).norm() < 1e-12);
        }
    }
}
