//! NV⁻ ground-state transition frequencies.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{defect_frame, hermitian_eigen, project, spin_one, CMatrix};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// One of the four ⟨111⟩ orientations of the NV axis in the crystal frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NvClass(u8);

const AXES: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

impl NvClass {
    pub const ALL: [NvClass; 4] = [NvClass(0), NvClass(1), NvClass(2), NvClass(3)];

    pub fn new(index: usize) -> Result<Self> {
        if index < 4 {
            Ok(NvClass(index as u8))
        } else {
            Err(Error::invalid(format!("NV class index must be 0..4, got {index}")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn axis(self) -> Vector3<f64> {
        let a = AXES[self.index()];
        Vector3::new(a[0], a[1], a[2]) / 3f64.sqrt()
    }

    pub fn label(self) -> &'static str {
        ["[111]", "[1-1-1]", "[-11-1]", "[-1-11]"][self.index()]
    }
}

/// Classes ordered by decreasing `|b̂·axis|`, ties by index.
pub fn classes_by_alignment(direction: &Vector3<f64>) -> [NvClass; 4] {
    let mut classes = NvClass::ALL;
    classes.sort_by(|a, b| {
        let ca = direction.dot(&a.axis()).abs();
        let cb = direction.dot(&b.axis()).abs();
        cb.total_cmp(&ca).then(a.cmp(b))
    });
    classes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NvBranch {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvTransitions {
    pub class: NvClass,
    /// rad/s
    pub omega_minus: f64,
    /// rad/s
    pub omega_plus: f64,
}

impl NvTransitions {
    pub fn branch(&self, branch: NvBranch) -> f64 {
        match branch {
            NvBranch::Minus => self.omega_minus,
            NvBranch::Plus => self.omega_plus,
        }
    }
}

fn check_field(field: &Vector3<f64>) -> Result<()> {
    if field.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("field vector must be finite, got {field:?}")))
    }
}

/// Closed-form `ω± = D ± √(γ²B∥² + E²) + (3/2)·γ²B⊥²/D` for one class.
pub fn nv_class_frequencies(
    field: &Vector3<f64>,
    class: NvClass,
    c: &PhysicalConstants,
) -> Result<NvTransitions> {
    check_field(field)?;
    let b_par = field.dot(&class.axis());
    let b_perp_sq = (field.norm_squared() - b_par * b_par).max(0.0);
    let g = c.gamma_e;
    let d = c.zero_field_splitting;
    let split = (g * g * b_par * b_par + c.strain_splitting.powi(2)).sqrt();
    let second_order = 1.5 * g * g * b_perp_sq / d;
    Ok(NvTransitions {
        class,
        omega_minus: d - split + second_order,
        omega_plus: d + split + second_order,
    })
}

/// Closed-form transition frequencies for all four orientation classes.
pub fn nv_transition_frequencies(
    field: &Vector3<f64>,
    c: &PhysicalConstants,
) -> Result<[NvTransitions; 4]> {
    let mut out = [NvTransitions {
        class: NvClass(0),
        omega_minus: 0.0,
        omega_plus: 0.0,
    }; 4];
    for class in NvClass::ALL {
        out[class.index()] = nv_class_frequencies(field, class, c)?;
    }
    Ok(out)
}

/// Exact eigenvalues of `D·Sz² + E·(Sx² − Sy²) + γ_e·B·S` in the defect frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvExactLevels {
    /// Ascending eigenvalues, rad/s.
    pub levels: [f64; 3],
    /// Index of the level with the largest `|m = 0⟩` weight.
    pub zero_index: usize,
    /// Lower and upper transition frequencies measured from that level.
    pub omega_minus: f64,
    pub omega_plus: f64,
}

pub fn nv_exact_levels(
    field: &Vector3<f64>,
    class: NvClass,
    c: &PhysicalConstants,
) -> Result<NvExactLevels> {
    check_field(field)?;
    let [fx, fy, fz] = defect_frame(&class.axis());
    let local = Vector3::new(field.dot(&fx), field.dot(&fy), field.dot(&fz));
    let s = spin_one();
    let re = |x: f64| Complex64::new(x, 0.0);
    let sz2 = &s[2] * &s[2];
    let anis = &s[0] * &s[0] - &s[1] * &s[1];
    let h: CMatrix = sz2 * re(c.zero_field_splitting)
        + anis * re(c.strain_splitting)
        + project(&s, &local) * re(c.gamma_e);
    let (values, vectors) = hermitian_eigen(&h);

    let m0 = DVector::from_vec(vec![re(0.0), re(1.0), re(0.0)]);
    let weights: Vec<f64> = vectors.iter().map(|v| v.dotc(&m0).norm_sqr()).collect();
    let mut zero_index = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > weights[zero_index] {
            zero_index = i;
        }
    }
    let mut others: Vec<f64> = (0..3)
        .filter(|&i| i != zero_index)
        .map(|i| values[i] - values[zero_index])
        .collect();
    others.sort_by(f64::total_cmp);
    Ok(NvExactLevels {
        levels: [values[0], values[1], values[2]],
        zero_index,
        omega_minus: others[0],
        omega_plus: others[1],
    })
}
