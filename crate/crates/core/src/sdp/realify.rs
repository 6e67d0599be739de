//! Real embedding of complex Hermitian matrices.
//!
//! `H = A + iB  ↦  [[A, −B], [B, A]]`. The map preserves positive
//! semidefiniteness and doubles traces and inner products:
//! `⟨realify(G), realify(H)⟩ = 2 tr(GH)`.

use nalgebra::DMatrix;

use crate::linalg::{c64, CMatrix, HermitianOperator};

pub fn realify(h: &HermitianOperator) -> DMatrix<f64> {
    realify_matrix(h.matrix())
}

pub fn realify_matrix(h: &CMatrix) -> DMatrix<f64> {
    let d = h.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Left inverse of [`realify`]; on an arbitrary symmetric `2d x 2d` input it
/// returns the Hermitian matrix whose embedding is closest in Frobenius norm.
pub fn derealify(r: &DMatrix<f64>) -> HermitianOperator {
    let d = r.nrows() / 2;
    assert_eq!(r.nrows(), 2 * d);
    let m = CMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (r[(i, j)] + r[(i + d, j + d)]);
        let im = 0.5 * (r[(i + d, j)] - r[(i, j + d)]);
        c64(re, im)
    });
    HermitianOperator::from_matrix_unchecked(m)
}
