//! Dense complex-Hermitian linear algebra.
//!
//! Everything here operates on small dense matrices (dimension up to a few
//! dozen). Matrix functions act on the numerical support only: eigenvalues
//! whose magnitude is below `support_tol * ‖H‖_∞` are treated as exact zeros
//! and excluded from the scalar map.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;
/// Tolerance on trace and eigenvalue negativity for [`DensityMatrix`].
pub const STATE_TOL: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A dense complex Hermitian matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianOperator({}x{}) {}", self.dim(), self.dim(), self.mat)
    }
}

fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

impl HermitianOperator {
    /// Validates `mat` against the default hermiticity tolerance and
    /// stores its exact Hermitian part.
    pub fn new(mat: CMatrix) -> Result<Self, LinalgError> {
        Self::with_tol(mat, DEFAULT_HERMITICITY_TOL)
    }

    pub fn with_tol(mat: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        if mat.nrows() != mat.ncols() {
            return Err(LinalgError::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
        }
        if mat.nrows() == 0 {
            return Err(LinalgError::Empty);
        }
        let deviation = hermiticity_deviation(&mat);
        if deviation > tol {
            return Err(LinalgError::NonHermitian { deviation, tol });
        }
        Ok(Self::from_matrix_unchecked(mat))
    }

    /// Projects onto the Hermitian part `(M + M†)/2` without validation.
    pub fn from_matrix_unchecked(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        Self { mat: (mat + adj).scale(0.5) }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mat = CMatrix::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| c64(rows[i][j], 0.0));
        Self::new(mat)
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0)));
        Self { mat: CMatrix::from_diagonal(&d) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: CMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: CMatrix::zeros(dim, dim) }
    }

    /// `|v⟩⟨v|` for the given (not necessarily normalized) vector.
    pub fn projector(v: &DVector<C64>) -> Self {
        Self::from_matrix_unchecked(v * v.adjoint())
    }

    /// `|i⟩⟨i|` in dimension `dim`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = c64(1.0, 0.0);
        Self { mat: m }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real inner product `tr(A B)`.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: self.mat.scale(s) }
    }

    /// `B A B` for Hermitian `B`.
    pub fn sandwich(&self, outer: &HermitianOperator) -> Self {
        Self::from_matrix_unchecked(&outer.mat * &self.mat * &outer.mat)
    }

    /// `V A V†` for an arbitrary (possibly rectangular) `V`.
    pub fn conjugate_by(&self, v: &CMatrix) -> Self {
        Self::from_matrix_unchecked(v * &self.mat * v.adjoint())
    }

    pub fn eig(&self) -> Spectrum {
        eig(self)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eig().eigenvalues.last().expect("dim >= 1")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig().eigenvalues[0]
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { mat: &self.mat - &rhs.mat }
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        HermitianOperator { mat: -&self.mat }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// A positive semidefinite operator of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianOperator);

impl DensityMatrix {
    pub fn new(h: HermitianOperator) -> Result<Self, LinalgError> {
        let tr = h.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(LinalgError::TraceNotOne { trace: tr });
        }
        let min = h.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(LinalgError::NotDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(h))
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self, LinalgError> {
        Self::new(HermitianOperator::new(mat)?)
    }

    /// Divides a nonzero PSD operator by its trace.
    pub fn normalized(h: &HermitianOperator) -> Result<Self, LinalgError> {
        let tr = h.trace();
        if tr.abs() < f64::MIN_POSITIVE {
            return Err(LinalgError::NotDensity("zero trace".into()));
        }
        Self::new(h.scale(1.0 / tr))
    }

    pub fn pure(v: &DVector<C64>) -> Self {
        let n = v.norm();
        Self(HermitianOperator::projector(&v.unscale(n)))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        Self(HermitianOperator::basis_projector(dim, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianOperator::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn diag(probs: &[f64]) -> Result<Self, LinalgError> {
        Self::new(HermitianOperator::diag(probs))
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianOperator {
        self.0
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(tensor(&self.0, &other.0))
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.0
    }
}

impl From<DensityMatrix> for TraceOneHermitian {
    fn from(d: DensityMatrix) -> Self {
        TraceOneHermitian(d.0)
    }
}

/// A Hermitian operator of unit trace; negative eigenvalues are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceOneHermitian(HermitianOperator);

impl TraceOneHermitian {
    pub fn new(h: HermitianOperator) -> Result<Self, LinalgError> {
        let tr = h.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(LinalgError::TraceNotOne { trace: tr });
        }
        Ok(Self(h))
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianOperator {
        self.0
    }
}

impl Deref for TraceOneHermitian {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.0
    }
}

/// Eigendecomposition `H = V diag(λ) V†` with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> HermitianOperator {
        self.reconstruct_with(|l| l)
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        HermitianOperator::from_matrix_unchecked(scaled * self.eigenvectors.adjoint())
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Eigenvalue magnitude below which an eigenvalue counts as zero.
    pub fn kernel_threshold(&self, support_tol: f64) -> f64 {
        support_tol * self.spectral_radius()
    }

    /// Columns of `V` spanning the numerical support.
    pub fn support_basis(&self, support_tol: f64) -> CMatrix {
        let thr = self.kernel_threshold(support_tol);
        let cols: Vec<usize> = (0..self.eigenvalues.len()).filter(|&i| self.eigenvalues[i].abs() > thr).collect();
        self.eigenvectors.select_columns(&cols)
    }

    pub fn kernel_projector(&self, support_tol: f64) -> HermitianOperator {
        let thr = self.kernel_threshold(support_tol);
        self.reconstruct_with(|l| if l.abs() <= thr { 1.0 } else { 0.0 })
    }
}

pub fn eig(h: &HermitianOperator) -> Spectrum {
    let n = h.dim();
    let se = h.mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let eigenvectors = se.eigenvectors.select_columns(&order);
    Spectrum { eigenvalues, eigenvectors }
}

/// Applies `f` to the eigenvalues on the numerical support of `h`; the
/// kernel is mapped to zero. Returns [`LinalgError::Domain`] if `f` yields a
/// non-finite value at a retained eigenvalue.
pub fn matrix_function_on_support(
    h: &HermitianOperator,
    f: impl Fn(f64) -> f64,
    support_tol: f64,
) -> Result<HermitianOperator, LinalgError> {
    let spec = eig(h);
    matrix_function_of_spectrum(&spec, f, support_tol)
}

pub fn matrix_function_of_spectrum(
    spec: &Spectrum,
    f: impl Fn(f64) -> f64,
    support_tol: f64,
) -> Result<HermitianOperator, LinalgError> {
    let thr = spec.kernel_threshold(support_tol);
    for &l in &spec.eigenvalues {
        if l.abs() > thr && !f(l).is_finite() {
            return Err(LinalgError::Domain { eigenvalue: l });
        }
    }
    Ok(spec.reconstruct_with(|l| if l.abs() <= thr { 0.0 } else { f(l) }))
}

/// Fractional power of a nominally PSD operator on its support. Slightly
/// negative eigenvalues (within `support_tol`) are dropped with the kernel.
pub fn psd_power(h: &HermitianOperator, p: f64, support_tol: f64) -> Result<HermitianOperator, LinalgError> {
    matrix_function_on_support(h, |l| if l < 0.0 { f64::NAN } else { l.powf(p) }, support_tol)
}

pub fn psd_log(h: &HermitianOperator, support_tol: f64) -> Result<HermitianOperator, LinalgError> {
    matrix_function_on_support(h, |l| if l < 0.0 { f64::NAN } else { l.ln() }, support_tol)
}

pub fn pseudo_inverse(h: &HermitianOperator, support_tol: f64) -> HermitianOperator {
    matrix_function_on_support(h, |l| 1.0 / l, support_tol).expect("1/x is finite off the kernel")
}

/// Whether `supp(b) ⊆ supp(a)` for PSD `a`: the projector onto `ker(a)` must
/// annihilate `b` up to `tol·‖b‖_∞`.
pub fn support_contains(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> bool {
    let spec = eig(a);
    let pk = spec.kernel_projector(tol.max(DEFAULT_SUPPORT_TOL));
    let leak = &pk.mat * &b.mat;
    let leak_norm = spectral_norm(&leak);
    let bn = operator_norm(b);
    leak_norm <= tol * bn.max(f64::MIN_POSITIVE)
}

/// Largest singular value of an arbitrary complex matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = HermitianOperator::from_matrix_unchecked(m.adjoint() * m);
    g.max_eigenvalue().max(0.0).sqrt()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator { mat: a.mat.kronecker(&b.mat) }
}

/// Which tensor factor a partial trace keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `A ⊗ B` (A is the first factor).
pub fn partial_trace_matrix(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix, LinalgError> {
    let (da, db) = dims;
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(LinalgError::DimensionMismatch { expected: da * db, found: m.nrows() });
    }
    Ok(match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()),
        Keep::B => CMatrix::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum()),
    })
}

pub fn partial_trace(
    h: &HermitianOperator,
    dims: (usize, usize),
    keep: Keep,
) -> Result<HermitianOperator, LinalgError> {
    Ok(HermitianOperator::from_matrix_unchecked(partial_trace_matrix(&h.mat, dims, keep)?))
}

/// Schatten `alpha`-norm; `alpha = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(h: &HermitianOperator, alpha: f64) -> f64 {
    assert!(alpha >= 1.0, "Schatten norm needs alpha >= 1");
    let spec = eig(h);
    if alpha.is_infinite() {
        return spec.spectral_radius();
    }
    // Scale by the largest singular value to avoid overflow for large alpha.
    let smax = spec.spectral_radius();
    if smax == 0.0 {
        return 0.0;
    }
    let s: f64 = spec.eigenvalues.iter().map(|l| (l.abs() / smax).powf(alpha)).sum();
    smax * s.powf(1.0 / alpha)
}

pub fn operator_norm(h: &HermitianOperator) -> f64 {
    eig(h).spectral_radius()
}

/// Maximally entangled vector `Σ_i |i⟩|i⟩` (unnormalized).
pub fn max_entangled_vector(d: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = c64(1.0, 0.0);
    }
    v
}

/// Projects a nominally PSD operator onto the density matrices: negative
/// eigenvalues are clipped and the trace renormalized.
pub fn nearest_state(h: &HermitianOperator) -> Result<DensityMatrix, LinalgError> {
    let spec = eig(h);
    let clipped = spec.reconstruct_with(|l| l.max(0.0));
    DensityMatrix::normalized(&clipped)
}

/// `V† H V` for an isometry (or any) matrix `V`.
pub fn compress(h: &HermitianOperator, v: &CMatrix) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(v.adjoint() * h.matrix() * v)
}

/// Largest weight outside the supports for a vector to count as common.
pub const COMMON_SUPPORT_TOL: f64 = 1e-9;

/// Orthonormal basis (as columns) of the intersection of the supports of
/// PSD operators, i.e. the kernel of `Σ_x Π_ker(ρ_x)`. Has zero columns when
/// the intersection is trivial.
pub fn common_support(ops: &[&HermitianOperator], support_tol: f64) -> CMatrix {
    assert!(!ops.is_empty());
    let d = ops[0].dim();
    let mut k = HermitianOperator::zeros(d);
    for op in ops {
        k = &k + &eig(op).kernel_projector(support_tol);
    }
    let spec = eig(&k);
    // ⟨v|Σ Π_ker|v⟩ is the total squared weight of v outside the supports,
    // so only numerically zero eigenvalues qualify. Non-commuting kernels
    // give sums with eigenvalues anywhere in (0, k).
    let cols: Vec<usize> = (0..d).filter(|&i| spec.eigenvalues[i] < COMMON_SUPPORT_TOL).collect();
    spec.eigenvectors.select_columns(&cols)
}

/// Adjoint Fréchet derivative of the spectral function `f` at `X` applied
/// to `A`: `U (Γ ∘ U†AU) U†` with `Γ_ij = (f(λ_i) − f(λ_j))/(λ_i − λ_j)`
/// and `Γ_ii = f'(λ_i)`. Since the derivative is self-adjoint for the trace
/// inner product, this is also `∇_X tr(A f(X))`.
pub fn frechet_derivative(
    spec: &Spectrum,
    f: impl Fn(f64) -> f64,
    fprime: impl Fn(f64) -> f64,
    a: &HermitianOperator,
) -> HermitianOperator {
    let n = spec.eigenvalues.len();
    let u = &spec.eigenvectors;
    let mut b = u.adjoint() * a.matrix() * u;
    let fl: Vec<f64> = spec.eigenvalues.iter().map(|&l| f(l)).collect();
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (spec.eigenvalues[i], spec.eigenvalues[j]);
            let scale = li.abs().max(lj.abs()).max(f64::MIN_POSITIVE);
            let g =
                if (li - lj).abs() <= 1e-10 * scale { fprime(0.5 * (li + lj)) } else { (fl[i] - fl[j]) / (li - lj) };
            b[(i, j)] *= g;
        }
    }
    HermitianOperator::from_matrix_unchecked(u * b * u.adjoint())
}
