//! Spin operators and a sorted Hermitian eigensolver used by the
//! exact-diagonalization routines.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

pub(crate) type CMatrix = DMatrix<Complex64>;

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spin-1 operators in the basis `|+1⟩, |0⟩, |−1⟩`.
pub(crate) fn spin_one() -> [CMatrix; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let sx = CMatrix::from_row_slice(3, 3, &[z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z]);
    let sy = CMatrix::from_row_slice(
        3,
        3,
        &[z, c(0.0, -s), z, c(0.0, s), z, c(0.0, -s), z, c(0.0, s), z],
    );
    let sz = CMatrix::from_row_slice(3, 3, &[c(1.0, 0.0), z, z, z, z, z, z, z, c(-1.0, 0.0)]);
    [sx, sy, sz]
}

/// Spin-1/2 operators in the basis `|+½⟩, |−½⟩`.
pub(crate) fn spin_half() -> [CMatrix; 3] {
    let z = c(0.0, 0.0);
    let sx = CMatrix::from_row_slice(2, 2, &[z, c(0.5, 0.0), c(0.5, 0.0), z]);
    let sy = CMatrix::from_row_slice(2, 2, &[z, c(0.0, -0.5), c(0.0, 0.5), z]);
    let sz = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), z, z, c(-0.5, 0.0)]);
    [sx, sy, sz]
}

/// `n·S` for a spin with operators `ops`.
pub(crate) fn project(ops: &[CMatrix; 3], n: &Vector3<f64>) -> CMatrix {
    &ops[0] * c(n.x, 0.0) + &ops[1] * c(n.y, 0.0) + &ops[2] * c(n.z, 0.0)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, vectors)
}

pub(crate) fn overlap(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm_sqr()
}

/// Greedy one-to-one assignment of eigenvectors to reference states by
/// largest overlap; ties go to the lower index. Returns `ref -> eigen index`.
pub(crate) fn assign_by_overlap(
    references: &[DVector<Complex64>],
    eigenvectors: &[DVector<Complex64>],
) -> Vec<usize> {
    let n = references.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (r, rv) in references.iter().enumerate() {
        for (e, ev) in eigenvectors.iter().enumerate() {
            pairs.push((overlap(rv, ev), r, e));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![usize::MAX; n];
    let mut used = vec![false; eigenvectors.len()];
    for (_, r, e) in pairs {
        if out[r] == usize::MAX && !used[e] {
            out[r] = e;
            used[e] = true;
        }
    }
    out
}

/// Orthonormal frame `(x, y, z)` with `z` along `axis`. The `x` direction is
/// the crystal `[001]` projected onto the plane normal to `axis` (or `[100]`
/// when `axis` is along `[001]`).
pub(crate) fn defect_frame(axis: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let z = axis.normalize();
    let mut seed = Vector3::z();
    if (seed - z * z.dot(&seed)).norm() < 1e-6 {
        seed = Vector3::x();
    }
    let x = (seed - z * z.dot(&seed)).normalize();
    let y = z.cross(&x);
    [x, y, z]
}
