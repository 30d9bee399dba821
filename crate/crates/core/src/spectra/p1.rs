//! P1 (substitutional ¹⁴N) electron-spin resonances.
//!
//! The electron spin-1/2 is hyperfine coupled to the nuclear spin-1 with an
//! axially symmetric tensor about the defect's ⟨111⟩ axis. Nuclear Zeeman and
//! quadrupole terms are not included.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{assign_by_overlap, defect_frame, hermitian_eigen, project, spin_half, spin_one, CMatrix};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Nuclear projection conserved by a P1 transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum P1Line {
    Low,
    Center,
    High,
}

impl P1Line {
    pub const ALL: [P1Line; 3] = [P1Line::Low, P1Line::Center, P1Line::High];

    /// Nuclear magnetic quantum number along the effective hyperfine field.
    pub fn nuclear_m(self) -> i32 {
        match self {
            P1Line::Low => -1,
            P1Line::Center => 0,
            P1Line::High => 1,
        }
    }
}

/// First-order resonances `γB − ω_en, γB, γB + ω_en`, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1Lines {
    pub low: f64,
    pub center: f64,
    pub high: f64,
    /// `ω_en = √(A∥²cos²θ + A⊥²sin²θ)`
    pub splitting: f64,
}

impl P1Lines {
    pub fn line(&self, line: P1Line) -> f64 {
        match line {
            P1Line::Low => self.low,
            P1Line::Center => self.center,
            P1Line::High => self.high,
        }
    }
}

/// Hyperfine splitting for a given `cos²θ` between field and defect axis.
pub fn hyperfine_splitting(cos2_theta: f64, c: &PhysicalConstants) -> f64 {
    let cos2 = cos2_theta.clamp(0.0, 1.0);
    (c.hyperfine_parallel.powi(2) * cos2 + c.hyperfine_perpendicular.powi(2) * (1.0 - cos2)).sqrt()
}

pub fn p1_transition_frequencies(
    field: &Vector3<f64>,
    axis: &Vector3<f64>,
    c: &PhysicalConstants,
) -> Result<P1Lines> {
    if !field.iter().chain(axis.iter()).all(|v| v.is_finite()) {
        return Err(Error::invalid("field and axis must be finite"));
    }
    let b = field.norm();
    if b == 0.0 {
        return Err(Error::DegenerateField);
    }
    let cos = field.dot(axis) / (b * axis.norm());
    let w_en = hyperfine_splitting(cos * cos, c);
    let center = c.gamma_e * b;
    Ok(P1Lines {
        low: center - w_en,
        center,
        high: center + w_en,
        splitting: w_en,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1ExactLevels {
    /// Ascending eigenvalues of the 6×6 Hamiltonian, rad/s.
    pub levels: [f64; 6],
    /// Nuclear-spin-conserving transitions for `m_I = −1, 0, +1`, rad/s.
    pub transitions: [f64; 3],
}

/// Exact diagonalization of `γ_e·B·S + A⊥(SxIx + SyIy) + A∥·SzIz`.
///
/// Eigenstates are labeled by their largest overlap with `|m_S⟩ ⊗ |m_I⟩`,
/// where the electron is quantized along the field and the nucleus along the
/// effective hyperfine field `A·b̂`.
pub fn p1_exact_levels(
    field: &Vector3<f64>,
    axis: &Vector3<f64>,
    c: &PhysicalConstants,
) -> Result<P1ExactLevels> {
    if !field.iter().chain(axis.iter()).all(|v| v.is_finite()) || axis.norm() == 0.0 {
        return Err(Error::invalid("field and axis must be finite, axis non-zero"));
    }
    let [fx, fy, fz] = defect_frame(axis);
    let local = Vector3::new(field.dot(&fx), field.dot(&fy), field.dot(&fz));
    let s = spin_half();
    let i = spin_one();
    let eye3 = CMatrix::identity(3, 3);
    let re = |x: f64| Complex64::new(x, 0.0);

    let zeeman = project(&s, &local).kronecker(&eye3) * re(c.gamma_e);
    let hf = (s[0].kronecker(&i[0]) + s[1].kronecker(&i[1])) * re(c.hyperfine_perpendicular)
        + s[2].kronecker(&i[2]) * re(c.hyperfine_parallel);
    let h = zeeman + hf;
    let (values, vectors) = hermitian_eigen(&h);

    let b_hat = if local.norm() > 0.0 { local.normalize() } else { Vector3::z() };
    let a_b = Vector3::new(
        c.hyperfine_perpendicular * b_hat.x,
        c.hyperfine_perpendicular * b_hat.y,
        c.hyperfine_parallel * b_hat.z,
    );
    let u_hat = a_b.normalize();
    let (_, e_states) = hermitian_eigen(&project(&s, &b_hat));
    let (_, n_states) = hermitian_eigen(&project(&i, &u_hat));

    // reference index = 3·(m_S index) + (m_I index), both ascending in m.
    let mut refs: Vec<DVector<Complex64>> = Vec::with_capacity(6);
    for e in &e_states {
        for n in &n_states {
            refs.push(e.kronecker(n));
        }
    }
    let assigned = assign_by_overlap(&refs, &vectors);
    let mut transitions = [0.0; 3];
    for (k, t) in transitions.iter_mut().enumerate() {
        let down = values[assigned[k]];
        let up = values[assigned[3 + k]];
        *t = up - down;
    }
    let mut levels = [0.0; 6];
    levels.copy_from_slice(&values);
    Ok(P1ExactLevels { levels, transitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{hz_to_rad, rad_to_hz};

    fn at_magic_angle(b: f64) -> (Vector3<f64>, Vector3<f64>) {
        let axis = Vector3::z();
        let cos = (1.0f64 / 3.0).sqrt();
        (Vector3::new((1.0 - cos * cos).sqrt(), 0.0, cos) * b, axis)
    }

    #[test]
    fn splitting_at_magic_angle() {
        let c = PhysicalConstants::default();
        let (b, axis) = at_magic_angle(0.089);
        let lines = p1_transition_frequencies(&b, &axis, &c).unwrap();
        let expect = (114.03f64.powi(2) / 3.0 + 81.33f64.powi(2) * 2.0 / 3.0).sqrt();
        assert!((rad_to_hz(lines.splitting) / 1e6 - expect).abs() < 1e-9);
        assert!((expect - 93.5).abs() < 0.05);
    }

    #[test]
    fn hyperfine_off_and_axial() {
        let c0 = PhysicalConstants {
            hyperfine_parallel: 0.0,
            hyperfine_perpendicular: 0.0,
            ..Default::default()
        };
        let b = Vector3::new(0.01, 0.02, 0.03);
        let l = p1_transition_frequencies(&b, &Vector3::z(), &c0).unwrap();
        assert_eq!(l.low, l.center);
        assert_eq!(l.high, l.center);
        assert_eq!(l.center, c0.gamma_e * b.norm());

        let c = PhysicalConstants::default();
        let l = p1_transition_frequencies(&(Vector3::z() * 0.05), &Vector3::z(), &c).unwrap();
        assert_eq!(l.splitting, c.hyperfine_parallel);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let c = PhysicalConstants::default();
        assert!(matches!(
            p1_transition_frequencies(&Vector3::zeros(), &Vector3::z(), &c),
            Err(Error::DegenerateField)
        ));
    }

    #[test]
    fn isotropic_zero_field_multiplets() {
        // A·S·I for S = 1/2, I = 1: F = 3/2 at +A/2 (×4), F = 1/2 at −A (×2).
        let a = hz_to_rad(100e6);
        let c = PhysicalConstants {
            hyperfine_parallel: a,
            hyperfine_perpendicular: a,
            ..Default::default()
        };
        let ex = p1_exact_levels(&Vector3::zeros(), &Vector3::z(), &c).unwrap();
        for l in &ex.levels[..2] {
            assert!((l + a).abs() < 1e-9 * a);
        }
        for l in &ex.levels[2..] {
            assert!((l - a / 2.0).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn exact_agrees_with_first_order_at_89_mt() {
        let c = PhysicalConstants::default();
        let (b, axis) = at_magic_angle(0.089);
        let first = p1_transition_frequencies(&b, &axis, &c).unwrap();
        let ex = p1_exact_levels(&b, &axis, &c).unwrap();
        let expect = [first.low, first.center, first.high];
        for (e, f) in ex.transitions.iter().zip(expect) {
            assert!((e - f).abs() < hz_to_rad(5e6), "{} vs {} MHz", rad_to_hz(*e) / 1e6, rad_to_hz(f) / 1e6);
        }
    }

    #[test]
    fn high_field_center_line() {
        let c = PhysicalConstants::default();
        let (b, axis) = at_magic_angle(1.0);
        let ex = p1_exact_levels(&b, &axis, &c).unwrap();
        let gb = c.gamma_e * 1.0;
        assert!((ex.transitions[1] / gb - 1.0).abs() < 1e-3);
    }

    proptest::proptest! {
        #[test]
        fn exact_within_second_order_bound(
            scale in 10.0..300.0f64,
            theta in 0.0..std::f64::consts::PI,
            phi in 0.0..std::f64::consts::TAU,
        ) {
            let c = PhysicalConstants::default();
            let bmag = scale * c.hyperfine_parallel / c.gamma_e;
            let dir = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let axis = Vector3::new(1.0, 1.0, 1.0).normalize();
            let first = p1_transition_frequencies(&(dir * bmag), &axis, &c).unwrap();
            let ex = p1_exact_levels(&(dir * bmag), &axis, &c).unwrap();
            let bound = c.hyperfine_parallel.powi(2) / (c.gamma_e * bmag);
            for (e, f) in ex.transitions.iter().zip([first.low, first.center, first.high]) {
                proptest::prop_assert!((e - f).abs() < bound);
            }
        }
    }
}
