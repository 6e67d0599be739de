use nalgebra::{DMatrix, DVector};
use revud_core::random::{self, slater_sdp, RandomSdp};
use revud_core::HermitianOperator;

/// Real coordinates of a Hermitian matrix in which the Frobenius inner
/// product becomes the Euclidean one.
fn coords(h: &HermitianOperator) -> Vec<f64> {
    let d = h.dim();
    let m = h.matrix();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
        for j in i + 1..d {
            v.push(std::f64::consts::SQRT_2 * m[(i, j)].re);
            v.push(std::f64::consts::SQRT_2 * m[(i, j)].im);
        }
    }
    v
}

/// Verifies the returned primal point and dual slack directly against the
/// problem data; the dual multipliers of the equalities are recovered by
/// least squares. Returns (primal residual, dual residual, gap).
fn certificate(inst: &RandomSdp) -> (f64, f64, f64) {
    let sol = inst.problem.solve().unwrap();
    assert!(sol.is_optimal(), "{:?}", sol.status);
    let x = sol.value(inst.x);
    let z = sol.multiplier(inst.psd);
    let scale_b = 1.0 + inst.constraints.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
    let mut pres = (-x.min_eigenvalue()).max(0.0);
    for (a, b) in &inst.constraints {
        pres = pres.max((a.inner(x) - b).abs() / scale_b);
    }
    let cols: Vec<Vec<f64>> = inst.constraints.iter().map(|(a, _)| coords(a)).collect();
    let n = cols[0].len();
    let amat = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let rhs = DVector::from_vec(coords(&(&inst.cost - z)));
    let y = amat.clone().svd(true, true).solve(&rhs, 1e-12).unwrap();
    let scale_c = 1.0 + inst.cost.frobenius_norm();
    let dres = ((&amat * &y - &rhs).norm() / scale_c).max((-z.min_eigenvalue()).max(0.0));
    let pobj = inst.cost.inner(x);
    let dobj: f64 = inst.constraints.iter().zip(y.iter()).map(|((_, b), yi)| b * yi).sum();
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
    (pres, dres, gap)
}

#[test]
fn random_slater_problems_certify() {
    let mut rng = random::rng(2024);
    for i in 0..40 {
        let complex = i % 2 == 0;
        let dim = if complex { 2 + i % 5 } else { 2 + i % 7 };
        let m = 1 + (dim * dim) / 3;
        let inst = slater_sdp(&mut rng, dim, m, complex);
        let (p, d, g) = certificate(&inst);
        assert!(p <= 1e-7 && d <= 1e-7 && g <= 1e-7, "instance {i}: dim {dim}, m {m}: {p:e} {d:e} {g:e}");
    }
}
