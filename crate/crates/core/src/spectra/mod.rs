//! Transition frequencies of NV⁻ and P1 defects in an arbitrarily oriented
//! static field, with exact-diagonalization cross-checks.

mod nv;
mod operators;
mod p1;
mod rotation;

pub use nv::{
    classes_by_alignment, nv_class_frequencies, nv_exact_levels, nv_transition_frequencies, NvBranch,
    NvClass, NvExactLevels, NvTransitions,
};
pub use p1::{
    hyperfine_splitting, p1_exact_levels, p1_transition_frequencies, P1ExactLevels, P1Line, P1Lines,
};
pub use rotation::{rotate_to_unit_vector, FieldOrientation};

/// The four ⟨111⟩ directions, shared by NV axes and P1 Jahn–Teller axes.
pub fn bond_axes() -> [nalgebra::Vector3<f64>; 4] {
    NvClass::ALL.map(|c| c.axis())
}
