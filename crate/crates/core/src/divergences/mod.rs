//! Quantum divergences (all in nats) and divergence radii.
//!
//! Supports are handled explicitly: a divergence whose first argument is not
//! supported inside the second is `+∞`, and all matrix powers and logarithms
//! act on the numerical support only.

mod radius;

pub use radius::{
    hermitian_sandwiched_radius, radius, radius_value, RadiusMethod, RadiusObjective, RadiusResult, RadiusSettings,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    eig, matrix_function_on_support, psd_log, psd_power, pseudo_inverse, support_contains, CMatrix, DensityMatrix,
    HermitianOperator, TraceOneHermitian, DEFAULT_SUPPORT_TOL,
};
use crate::sdp::{AffineExpr, LinearMap, SdpProblem, Sense, VarId};

/// `1 − γ` below this counts as zero when converting to a divergence.
const GAMMA_ONE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence {
    Sandwiched { alpha: f64 },
    Geometric { alpha: f64 },
    Umegaki,
    BelavkinStaszewski,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Sandwiched { alpha } => write!(f, "sandwiched(alpha={alpha})"),
            Divergence::Geometric { alpha } => write!(f, "geometric(alpha={alpha})"),
            Divergence::Umegaki => write!(f, "umegaki"),
            Divergence::BelavkinStaszewski => write!(f, "belavkin-staszewski"),
        }
    }
}

impl Divergence {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Divergence::Sandwiched { alpha } => check_sandwiched_alpha(alpha),
            Divergence::Geometric { alpha } => check_geometric_alpha(alpha),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
        match *self {
            Divergence::Sandwiched { alpha } => sandwiched_renyi(rho, sigma, alpha),
            Divergence::Geometric { alpha } => geometric_renyi(rho, sigma, alpha),
            Divergence::Umegaki => umegaki(rho, sigma),
            Divergence::BelavkinStaszewski => belavkin_staszewski(rho, sigma),
        }
    }
}

/// Parameters shared by the divergence front ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub support_tol: f64,
}

impl Default for DivergenceParams {
    fn default() -> Self {
        Self { alpha: 2.0, epsilon: 0.1, support_tol: DEFAULT_SUPPORT_TOL }
    }
}

impl DivergenceParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be a finite number > 1, got {alpha}")));
        }
        Ok(Self { alpha, epsilon, support_tol: DEFAULT_SUPPORT_TOL })
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

fn check_sandwiched_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sandwiched divergence needs alpha > 1, got {alpha}")))
    }
}

pub(crate) fn check_geometric_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("geometric divergence needs alpha in (1, 2], got {alpha}")))
    }
}

fn check_dims(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(crate::LinalgError::DimensionMismatch { expected: a.dim(), found: b.dim() }.into());
    }
    Ok(())
}

fn check_psd(h: &HermitianOperator, what: &str) -> Result<()> {
    let scale = h.operator_norm().max(1.0);
    if h.min_eigenvalue() < -DEFAULT_SUPPORT_TOL * scale {
        return Err(Error::InvalidParameter(format!("{what} must be positive semidefinite")));
    }
    Ok(())
}

/// `l` with `alpha = 1 + 2^{-l}`, if `alpha` has that form (`l ≤ 10`).
pub fn cascade_level(alpha: f64) -> Option<u32> {
    (0..=10u32).find(|&l| (alpha - (1.0 + 0.5f64.powi(l as i32))).abs() <= 1e-12)
}

// ---------------------------------------------------------------------------
// Hypothesis testing.

fn hypothesis_sdp(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    sense: Sense,
    constraint: impl FnOnce(&mut SdpProblem, VarId) -> Result<()>,
) -> Result<f64> {
    check_dims(rho, sigma)?;
    let d = rho.dim();
    let mut p = SdpProblem::new(sense);
    let (q, _) = p.add_psd_variable("Q", d);
    p.add_lmi("I - Q", AffineExpr::constant(&HermitianOperator::identity(d)).plus_var(q, -1.0))?;
    p.add_objective(q, sigma);
    constraint(&mut p, q)?;
    let sol = p.solve()?.require_optimal()?;
    Ok(sol.primal_value)
}

/// `γ_ε(ρ‖σ) = sup { tr Qσ : tr Qρ ≤ ε, 0 ⪯ Q ⪯ I }`.
pub fn gamma_eps(rho: &TraceOneHermitian, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let r = rho.as_hermitian().clone();
    let v = hypothesis_sdp(rho, sigma, Sense::Maximize, |p, q| {
        let d = r.dim();
        p.add_lmi(
            "eps - tr(Q rho)",
            AffineExpr::constant(&HermitianOperator::diag(&[eps]))
                .plus(q, LinearMap::custom(d, 1, move |x| CMatrix::from_element(1, 1, -(x * r.matrix()).trace()))),
        )?;
        Ok(())
    })?;
    Ok(v.clamp(0.0, 1.0))
}

/// `β_ε(ρ‖σ) = inf { tr Qσ : tr Qρ ≥ 1 − ε, 0 ⪯ Q ⪯ I }` for states.
pub fn beta_eps(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let r = rho.as_hermitian().clone();
    let v = hypothesis_sdp(rho, sigma, Sense::Minimize, |p, q| {
        let d = r.dim();
        p.add_lmi(
            "tr(Q rho) - (1 - eps)",
            AffineExpr::constant(&HermitianOperator::diag(&[-(1.0 - eps)]))
                .plus(q, LinearMap::custom(d, 1, move |x| CMatrix::from_element(1, 1, (x * r.matrix()).trace()))),
        )?;
        Ok(())
    })?;
    Ok(v.clamp(0.0, 1.0))
}

/// `−ln(1 − γ_ε(ρ‖σ))`, `+∞` when `γ_ε = 1`.
pub fn hypothesis_testing_divergence(rho: &TraceOneHermitian, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    let g = gamma_eps(rho, sigma, eps)?;
    Ok(gamma_to_divergence(g))
}

pub fn gamma_to_divergence(gamma: f64) -> f64 {
    if 1.0 - gamma <= GAMMA_ONE_TOL {
        f64::INFINITY
    } else {
        -(1.0 - gamma).ln()
    }
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Sandwiched Rényi divergence `(1/(α−1)) ln ‖σ^a β σ^a‖_α^α`,
/// `a = (1−α)/(2α)`, for Hermitian `β` (trace one in the intended use).
pub fn sandwiched_renyi(beta: &HermitianOperator, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    check_sandwiched_alpha(alpha)?;
    check_dims(beta, sigma)?;
    check_psd(sigma, "sigma")?;
    if !support_contains(sigma, beta, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let a = (1.0 - alpha) / (2.0 * alpha);
    let s = psd_power(sigma, a, DEFAULT_SUPPORT_TOL)?;
    let y = beta.sandwich(&s);
    let ev = eig(&y).eigenvalues;
    let q: f64 = ev.iter().map(|l| l.abs().powf(alpha)).sum();
    Ok(q.ln() / (alpha - 1.0))
}

/// `Q̂_α(ρ‖σ) = tr σ (σ^{−1/2} ρ σ^{−1/2})^α`; `+∞` on support failure.
pub fn geometric_quasi(rho: &HermitianOperator, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    check_geometric_alpha(alpha)?;
    check_dims(rho, sigma)?;
    check_psd(rho, "rho")?;
    check_psd(sigma, "sigma")?;
    if !support_contains(sigma, rho, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let s = psd_power(sigma, -0.5, DEFAULT_SUPPORT_TOL)?;
    let x = rho.sandwich(&s);
    let xa = matrix_function_on_support(&x, |l| l.max(0.0).powf(alpha), DEFAULT_SUPPORT_TOL)?;
    Ok(sigma.inner(&xa))
}

/// Geometric Rényi divergence `(1/(α−1)) ln Q̂_α(ρ‖σ)`, `α ∈ (1, 2]`.
pub fn geometric_renyi(rho: &HermitianOperator, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    let q = geometric_quasi(rho, sigma, alpha)?;
    Ok(q.ln() / (alpha - 1.0))
}

/// Umegaki relative entropy `tr ρ (ln ρ − ln σ)`.
pub fn umegaki(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    check_psd(rho, "rho")?;
    check_psd(sigma, "sigma")?;
    if !support_contains(sigma, rho, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let thr = DEFAULT_SUPPORT_TOL * rho.operator_norm();
    let ent: f64 = eig(rho).eigenvalues.iter().filter(|&&l| l > thr).map(|&l| l * l.ln()).sum();
    let log_sigma = psd_log(sigma, DEFAULT_SUPPORT_TOL)?;
    Ok(ent - rho.inner(&log_sigma))
}

/// Belavkin–Staszewski relative entropy `tr ρ ln(ρ^{1/2} σ^{−1} ρ^{1/2})`,
/// with `σ^{−1}` the inverse on the support.
pub fn belavkin_staszewski(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    check_dims(rho, sigma)?;
    check_psd(rho, "rho")?;
    check_psd(sigma, "sigma")?;
    if !support_contains(sigma, rho, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let r = psd_power(rho, 0.5, DEFAULT_SUPPORT_TOL)?;
    let inner = pseudo_inverse(sigma, DEFAULT_SUPPORT_TOL).sandwich(&r);
    let l = matrix_function_on_support(&inner, |x| if x > 0.0 { x.ln() } else { f64::NAN }, DEFAULT_SUPPORT_TOL)?;
    Ok(rho.inner(&l))
}

// ---------------------------------------------------------------------------
// SDP representation of the geometric mean cascade.

/// Either a fixed operator or an SDP variable of matching dimension.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Operand<'a> {
    Const(&'a HermitianOperator),
    Var(VarId),
}

fn two_by_two(dim: usize, diag0: Operand, off: Operand, diag1: Operand) -> AffineExpr {
    let mut e = AffineExpr::zero(2 * dim);
    for (op, r, c) in [(diag0, 0, 0), (off, 0, dim), (diag1, dim, dim)] {
        e = match op {
            Operand::Const(h) => e.plus_const_block(h, r, c),
            Operand::Var(v) => e.plus_block(v, dim, r, c),
        };
    }
    e
}

/// Adds the constraints `[[M, X], [X, N_l]] ⪰ 0`, `[[X, N_i], [N_i, N_{i−1}]] ⪰ 0`
/// (`i = 1..l`, `N_0 = σ`) and returns `M`. At the optimum of `min tr M`,
/// `tr M = Q̂_α(X‖σ)` with `α = 1 + 2^{−l}`. `σ` should be positive
/// definite for the program to be strictly feasible.
pub(crate) fn add_cascade(
    p: &mut SdpProblem,
    tag: &str,
    x: Operand,
    sigma: Operand,
    dim: usize,
    l: u32,
) -> Result<VarId> {
    let mut prev = sigma;
    for i in 1..=l {
        let n = p.add_variable(format!("{tag}.N{i}"), dim);
        p.add_lmi(format!("{tag}.level{i}"), two_by_two(dim, x, Operand::Var(n), prev))?;
        prev = Operand::Var(n);
    }
    let m = p.add_variable(format!("{tag}.M"), dim);
    p.add_lmi(format!("{tag}.top"), two_by_two(dim, Operand::Var(m), x, prev))?;
    Ok(m)
}

/// Support basis `V` of `rho` and the reduced pair `(V†ρV, (V†σ⁺V)^{−1})`.
/// For any `τ` supported in `range V`, `Q̂_α(τ‖σ) = Q̂_α(V†τV‖(V†σ⁺V)^{−1})`.
pub(crate) fn reduce_to_subspace(sigma: &HermitianOperator, v: &CMatrix) -> Result<HermitianOperator> {
    let sp = pseudo_inverse(sigma, DEFAULT_SUPPORT_TOL);
    let c = crate::linalg::compress(&sp, v);
    let spec = eig(&c);
    if spec.eigenvalues.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::SupportEmpty);
    }
    Ok(spec.reconstruct_with(|l| 1.0 / l))
}

/// Geometric Rényi divergence at `α = 1 + 2^{−l}` from the cascade SDP.
pub fn geometric_renyi_sdp(rho: &HermitianOperator, sigma: &HermitianOperator, l: u32) -> Result<f64> {
    check_dims(rho, sigma)?;
    check_psd(rho, "rho")?;
    check_psd(sigma, "sigma")?;
    let alpha = 1.0 + 0.5f64.powi(l as i32);
    if !support_contains(sigma, rho, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let v = eig(rho).support_basis(DEFAULT_SUPPORT_TOL);
    if v.ncols() == 0 {
        return Err(Error::InvalidParameter("rho is zero".into()));
    }
    let rho_r = crate::linalg::compress(rho, &v);
    let sigma_r = reduce_to_subspace(sigma, &v)?;
    let s = v.ncols();
    let mut p = SdpProblem::new(Sense::Minimize);
    let m = add_cascade(&mut p, "geo", Operand::Const(&rho_r), Operand::Const(&sigma_r), s, l)?;
    p.add_objective(m, &HermitianOperator::identity(s));
    let sol = p.solve()?.require_optimal()?;
    Ok(sol.primal_value.ln() / (alpha - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, DensityMatrix};
    use crate::random;
    use nalgebra::DVector;

    const LN2: f64 = std::f64::consts::LN_2;

    fn plus() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::pure(&DVector::from_vec(vec![c64(s, 0.0), c64(s, 0.0)]))
    }

    fn t1(d: &DensityMatrix) -> TraceOneHermitian {
        TraceOneHermitian::from(d.clone())
    }

    #[test]
    fn gamma_eps_examples() {
        let rho = random::full_rank_state(&mut random::rng(5), 3);
        assert!((gamma_eps(&t1(&rho), &rho, 0.3).unwrap() - 0.3).abs() < 1e-6);
        let e0 = DensityMatrix::basis(2, 0);
        let e1 = DensityMatrix::basis(2, 1);
        assert!((gamma_eps(&t1(&e0), &e1, 0.2).unwrap() - 1.0).abs() < 1e-6);
        // |0⟩⟨0| vs I/2, ε = 0.1: grid over diagonal Q
        let mixed = DensityMatrix::maximally_mixed(2);
        let mut best = 0.0f64;
        for i in 0..=1000 {
            let q0 = 0.1 * i as f64 / 1000.0; // tr Qρ = q0 ≤ ε
            best = best.max(0.5 * q0 + 0.5);
        }
        assert!((gamma_eps(&t1(&e0), &mixed, 0.1).unwrap() - best).abs() < 1e-6);
    }

    #[test]
    fn beta_is_one_minus_gamma() {
        let mut rng = random::rng(8);
        let rho = random::density_matrix(&mut rng, 3, 2);
        let sigma = random::full_rank_state(&mut rng, 3);
        let g = gamma_eps(&t1(&rho), &sigma, 0.25).unwrap();
        let b = beta_eps(&rho, &sigma, 0.25).unwrap();
        assert!((g + b - 1.0).abs() < 1e-6, "{g} {b}");
    }

    #[test]
    fn hypothesis_divergence_examples() {
        let rho = random::full_rank_state(&mut random::rng(2), 2);
        let v = hypothesis_testing_divergence(&t1(&rho), &rho, 0.4).unwrap();
        assert!((v + (0.6f64).ln()).abs() < 1e-6);
        let e0 = DensityMatrix::basis(2, 0);
        let e1 = DensityMatrix::basis(2, 1);
        assert!(hypothesis_testing_divergence(&t1(&e0), &e1, 0.4).unwrap().is_infinite());
    }

    #[test]
    fn sandwiched_examples() {
        let rho = random::full_rank_state(&mut random::rng(4), 3);
        assert!(sandwiched_renyi(&rho, &rho, 1.7).unwrap().abs() < 1e-10);
        let e0 = DensityMatrix::basis(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((sandwiched_renyi(&e0, &mixed, 2.0).unwrap() - LN2).abs() < 1e-10);
        let e1 = DensityMatrix::basis(2, 1);
        assert!(sandwiched_renyi(&e0, &e1, 2.0).unwrap().is_infinite());
    }

    #[test]
    fn geometric_examples() {
        let rho = random::full_rank_state(&mut random::rng(6), 3);
        assert!(geometric_renyi(&rho, &rho, 1.5).unwrap().abs() < 1e-10);
        let e0 = DensityMatrix::basis(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((geometric_renyi(&e0, &mixed, 2.0).unwrap() - LN2).abs() < 1e-10);
        assert!(geometric_renyi(&mixed, &e0, 2.0).unwrap().is_infinite());
        assert!(geometric_renyi(&e0, &mixed, 2.5).is_err());
    }

    #[test]
    fn umegaki_and_bs_examples() {
        let rho = random::full_rank_state(&mut random::rng(9), 3);
        assert!(umegaki(&rho, &rho).unwrap().abs() < 1e-10);
        assert!(belavkin_staszewski(&rho, &rho).unwrap().abs() < 1e-10);
        let e0 = DensityMatrix::basis(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((umegaki(&e0, &mixed).unwrap() - LN2).abs() < 1e-10);
        assert!((belavkin_staszewski(&e0, &mixed).unwrap() - LN2).abs() < 1e-10);
        // non-commuting pair: BS dominates Umegaki
        let sigma = random::full_rank_state(&mut random::rng(10), 2);
        let p = plus();
        assert!(umegaki(&p, &sigma).unwrap() <= belavkin_staszewski(&p, &sigma).unwrap() + 1e-10);
    }

    #[test]
    fn geometric_sdp_matches_closed_form() {
        let e0 = DensityMatrix::basis(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        for l in [0u32, 1, 2] {
            let alpha = 1.0 + 0.5f64.powi(l as i32);
            let sdp = geometric_renyi_sdp(&e0, &mixed, l).unwrap();
            let cf = geometric_renyi(&e0, &mixed, alpha).unwrap();
            assert!((sdp - cf).abs() < 1e-6, "l={l}: {sdp} vs {cf}");
        }
        let mut rng = random::rng(12);
        for _ in 0..3 {
            let rho = random::full_rank_state(&mut rng, 2);
            let sigma = random::full_rank_state(&mut rng, 2);
            for l in [1u32, 2] {
                let alpha = 1.0 + 0.5f64.powi(l as i32);
                let sdp = geometric_renyi_sdp(&rho, &sigma, l).unwrap();
                let cf = geometric_renyi(&rho, &sigma, alpha).unwrap();
                assert!((sdp - cf).abs() < 1e-5, "l={l}: {sdp} vs {cf}");
            }
        }
        assert!(geometric_renyi_sdp(&mixed, &mixed, 1).unwrap().abs() < 1e-6);
    }

    #[test]
    fn cascade_levels() {
        assert_eq!(cascade_level(2.0), Some(0));
        assert_eq!(cascade_level(1.5), Some(1));
        assert_eq!(cascade_level(1.25), Some(2));
        assert_eq!(cascade_level(1.3), None);
    }
}
