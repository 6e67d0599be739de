//! State discrimination with a mandatory abstention weight.
//!
//! The player measures with a POVM `{Q_1..Q_k, Q_0}` whose abstention
//! element satisfies `Q_0 ⪰ ηI`, and wins when outcome `x` matches the
//! prepared state `ρ_x`. The optimal success probability is the SDP
//!
//! ```text
//! max Σ_x p_x tr(ρ_x Q_x)  s.t.  Σ_x Q_x ⪯ (1−η) I,  Q_x ⪰ 0
//! = min (1−η) tr M          s.t.  M ⪰ p_x ρ_x.
//! ```

use log::warn;

use crate::divergences::{gamma_eps, radius, radius_value, Divergence, RadiusResult};
use crate::error::{Error, Result};
use crate::linalg::{tensor, CMatrix, DensityMatrix, HermitianOperator, TraceOneHermitian};
use crate::sdp::{AffineExpr, SdpProblem, Sense};

/// `η_*` values below this are solver noise and reported as zero.
pub const ETA_STAR_ZERO: f64 = 1e-7;

/// Tolerance on `Σ p_x = 1`.
pub const PRIOR_TOL: f64 = 1e-10;

/// States `ρ_x` with prior probabilities `p_x`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
}

impl Ensemble {
    pub fn new(states: Vec<DensityMatrix>, priors: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("an ensemble needs at least one state".into()));
        }
        if priors.len() != states.len() {
            return Err(Error::InvalidParameter(format!("{} priors given for {} states", priors.len(), states.len())));
        }
        let d = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(crate::LinalgError::DimensionMismatch { expected: d, found: s.dim() }.into());
        }
        if priors.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("priors must be positive".into()));
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidParameter(format!("priors sum to {sum}, not 1")));
        }
        Ok(Self { states, priors })
    }

    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let k = states.len().max(1);
        Self::new(states, vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn p_min(&self) -> f64 {
        self.priors.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn with_priors(&self, priors: Vec<f64>) -> Result<Self> {
        Self::new(self.states.clone(), priors)
    }

    /// The ensemble of `n`-fold tensor powers `ρ_x^{⊗n}` (same priors).
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
        }
        if self.dim().pow(n as u32) > 64 {
            return Err(Error::InvalidParameter(format!("{}^{} is too large to materialize", self.dim(), n)));
        }
        let states = self.states.iter().map(|s| (1..n).fold(s.clone(), |acc, _| acc.tensor(s))).collect();
        Self::new(states, self.priors.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameConfig {
    pub eta: f64,
    pub alpha: f64,
    pub n_copies: usize,
}

impl GameConfig {
    pub fn new(eta: f64, alpha: f64, n_copies: usize) -> Result<Self> {
        check_eta(eta)?;
        if n_copies == 0 {
            return Err(Error::InvalidParameter("n_copies must be at least 1".into()));
        }
        Ok(Self { eta, alpha, n_copies })
    }

    pub fn with_eta(eta: f64) -> Result<Self> {
        Self::new(eta, 2.0, 1)
    }

    /// Type-I budget `(1−η)/k` used by the hypothesis testing form.
    pub fn epsilon(&self, k: usize) -> f64 {
        (1.0 - self.eta) / k as f64
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eta must lie in [0, 1), got {eta}")))
    }
}

/// Classical-quantum operator `Σ_x w_x |x⟩⟨x| ⊗ B_x` (register first).
#[derive(Clone, Debug)]
pub struct CqState {
    pub weights: Vec<f64>,
    pub blocks: Vec<HermitianOperator>,
}

impl CqState {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self { weights: e.priors.clone(), blocks: e.states.iter().map(|s| s.as_hermitian().clone()).collect() }
    }

    /// `π_X ⊗ τ` with the uniform register state.
    pub fn uniform_times(k: usize, tau: &HermitianOperator) -> Self {
        Self { weights: vec![1.0 / k as f64; k], blocks: vec![tau.clone(); k] }
    }

    pub fn register_dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn to_operator(&self) -> HermitianOperator {
        let k = self.blocks.len();
        let d = self.blocks[0].dim();
        let mut m = CMatrix::zeros(k * d, k * d);
        for (x, (w, b)) in self.weights.iter().zip(&self.blocks).enumerate() {
            m.view_mut((x * d, x * d), (d, d)).copy_from(&b.matrix().scale(*w));
        }
        HermitianOperator::from_matrix_unchecked(m)
    }
}

#[derive(Clone, Debug)]
pub struct GameResult {
    pub success_probability: f64,
    /// `Q_1..Q_k`.
    pub optimal_povm: Vec<HermitianOperator>,
    /// `Q_0 = I − Σ_x Q_x`.
    pub abstention: HermitianOperator,
    /// `M` with `M ⪰ p_x ρ_x` and `(1−η) tr M` equal to the success probability.
    pub dual_certificate: HermitianOperator,
    /// Relative duality gap of the solve.
    pub gap: f64,
    pub iterations: usize,
}

fn abstention_of(povm: &[HermitianOperator], d: usize) -> HermitianOperator {
    povm.iter().fold(HermitianOperator::identity(d), |acc, q| &acc - q)
}

/// Optimal success probability from the measurement side.
pub fn succ_prob_primal(e: &Ensemble, cfg: &GameConfig) -> Result<GameResult> {
    check_eta(cfg.eta)?;
    let d = e.dim();
    let mut p = SdpProblem::new(Sense::Maximize);
    let mut vars = Vec::with_capacity(e.k());
    let mut budget = AffineExpr::constant(&HermitianOperator::identity(d).scale(1.0 - cfg.eta));
    for (x, (rho, px)) in e.states.iter().zip(&e.priors).enumerate() {
        let (q, _) = p.add_psd_variable(format!("Q{}", x + 1), d);
        p.add_objective(q, &rho.scale(*px));
        budget = budget.plus_var(q, -1.0);
        vars.push(q);
    }
    let c = p.add_lmi("(1-eta)I - sum Q", budget)?;
    let sol = p.solve()?.require_optimal()?;
    let povm: Vec<HermitianOperator> = vars.iter().map(|v| sol.value(*v).clone()).collect();
    Ok(GameResult {
        success_probability: sol.primal_value.clamp(0.0, 1.0),
        abstention: abstention_of(&povm, d),
        optimal_povm: povm,
        dual_certificate: sol.multiplier(c).clone(),
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

/// Optimal success probability from the dominating-operator side.
pub fn succ_prob_dual(e: &Ensemble, cfg: &GameConfig) -> Result<GameResult> {
    check_eta(cfg.eta)?;
    let d = e.dim();
    let mut p = SdpProblem::new(Sense::Minimize);
    let m = p.add_variable("M", d);
    p.add_objective(m, &HermitianOperator::identity(d).scale(1.0 - cfg.eta));
    let mut cons = Vec::with_capacity(e.k());
    for (x, (rho, px)) in e.states.iter().zip(&e.priors).enumerate() {
        let c = p.add_lmi(
            format!("M >= p{0} rho{0}", x + 1),
            AffineExpr::zero(d).plus_var(m, 1.0).plus_const(&rho.scale(-px)),
        )?;
        cons.push(c);
    }
    let sol = p.solve()?.require_optimal()?;
    let povm: Vec<HermitianOperator> = cons.iter().map(|c| sol.multiplier(*c).clone()).collect();
    Ok(GameResult {
        success_probability: sol.primal_value.clamp(0.0, 1.0),
        abstention: abstention_of(&povm, d),
        optimal_povm: povm,
        dual_certificate: sol.value(m).clone(),
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

#[derive(Clone, Debug)]
pub struct HypothesisTestCertificate {
    /// Normalized dual optimizer `M / tr M`.
    pub tau_hat: TraceOneHermitian,
    /// `γ_ε(π_X ⊗ τ̂ ‖ ρ_XA)` with `ε = (1−η)/k`.
    pub gamma_value: f64,
    pub success_probability: f64,
    pub epsilon: f64,
}

/// Hypothesis-testing form of the success probability, evaluated at the
/// normalized dual optimizer.
pub fn hypothesis_test_certificate(e: &Ensemble, cfg: &GameConfig) -> Result<HypothesisTestCertificate> {
    let dual = succ_prob_dual(e, cfg)?;
    let m = &dual.dual_certificate;
    let tr = m.trace();
    if !(tr > 0.0) {
        return Err(Error::InvalidParameter("dual certificate has nonpositive trace".into()));
    }
    let tau_hat = TraceOneHermitian::new(m.scale(1.0 / tr))?;
    let k = e.k();
    let eps = cfg.epsilon(k);
    let pi_tau = TraceOneHermitian::new(CqState::uniform_times(k, &tau_hat).to_operator())?;
    let rho_xa = DensityMatrix::new(CqState::from_ensemble(e).to_operator())?;
    let gamma_value = gamma_eps(&pi_tau, &rho_xa, eps)?;
    Ok(HypothesisTestCertificate { tau_hat, gamma_value, success_probability: dual.success_probability, epsilon: eps })
}

/// `−(α/(α−1))(ln p_min + ln(k−1+η))`; `+∞` when `k−1+η = 0`.
pub fn radius_bound_offset(e: &Ensemble, eta: f64, alpha: f64) -> f64 {
    let km = e.k() as f64 - 1.0 + eta;
    if km <= 0.0 {
        return f64::INFINITY;
    }
    -(alpha / (alpha - 1.0)) * (e.p_min().ln() + km.ln())
}

#[derive(Clone, Debug)]
pub struct RadiusBound {
    /// Radius term plus offset; `+∞` if either is infinite.
    pub bound: f64,
    pub radius: f64,
    pub offset: f64,
    /// The same bound with the radius taken over trace-one Hermitian centers.
    pub hermitian_bound: Option<f64>,
    pub radius_detail: Option<RadiusResult>,
}

/// Upper bound on `−ln(1 − P_succ)` from the sandwiched Rényi radius.
pub fn radius_bound(e: &Ensemble, cfg: &GameConfig) -> Result<RadiusBound> {
    check_eta(cfg.eta)?;
    if !(cfg.alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("the radius bound needs alpha > 1, got {}", cfg.alpha)));
    }
    let offset = radius_bound_offset(e, cfg.eta, cfg.alpha);
    let (radius_value, detail) = match radius(e.states(), Divergence::Sandwiched { alpha: cfg.alpha }) {
        Ok(r) => (r.value, Some(r)),
        Err(Error::SupportEmpty) => (f64::INFINITY, None),
        Err(err) => return Err(err),
    };
    let hermitian_bound = detail.as_ref().and_then(|r| r.hermitian_value).map(|h| h + offset);
    Ok(RadiusBound {
        bound: radius_value + offset,
        radius: radius_value,
        offset,
        hermitian_bound,
        radius_detail: detail,
    })
}

#[derive(Clone, Debug)]
pub struct AsymptoticBound {
    /// Relative entropy radius: the bound on the `n`-copy error exponent.
    pub value: f64,
    /// `(α, sandwiched radius)` for each requested `α`, each also a bound.
    pub sandwiched: Vec<(f64, f64)>,
}

/// Limit bound on `−(1/n) ln(1 − P_succ)` for `n`-copy ensembles.
pub fn asymptotic_state_bound(e: &Ensemble, alphas: &[f64]) -> Result<AsymptoticBound> {
    let value = radius_value(e.states(), Divergence::Umegaki)?;
    let sandwiched = alphas
        .iter()
        .map(|&a| Ok((a, radius_value(e.states(), Divergence::Sandwiched { alpha: a })?)))
        .collect::<Result<_>>()?;
    Ok(AsymptoticBound { value, sandwiched })
}

#[derive(Clone, Debug)]
pub struct QreResult {
    /// Minimal `tr P` over `P ⪰ Q_x` (primal optimum).
    pub value: f64,
    pub dual_value: f64,
    pub p: HermitianOperator,
    pub y: Vec<HermitianOperator>,
    /// `|primal − dual|`.
    pub gap: f64,
}

fn check_psd_family(ops: &[HermitianOperator]) -> Result<usize> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidParameter("empty operator family".into()));
    };
    let d = first.dim();
    for q in ops {
        if q.dim() != d {
            return Err(crate::LinalgError::DimensionMismatch { expected: d, found: q.dim() }.into());
        }
        if q.min_eigenvalue() < -1e-9 * q.operator_norm().max(1.0) {
            return Err(Error::InvalidParameter("operators must be positive semidefinite".into()));
        }
    }
    Ok(d)
}

/// `max Σ_x tr(Y_x Q_x)` s.t. `Σ_x Y_x ⪯ (1−η) I`, `Y_x ⪰ 0`.
fn qre_dual_program(ops: &[HermitianOperator], eta: f64) -> Result<(f64, Vec<HermitianOperator>)> {
    let d = check_psd_family(ops)?;
    let mut p = SdpProblem::new(Sense::Maximize);
    let mut budget = AffineExpr::constant(&HermitianOperator::identity(d).scale(1.0 - eta));
    let mut ys = Vec::new();
    for (x, q) in ops.iter().enumerate() {
        let (y, _) = p.add_psd_variable(format!("Y{}", x + 1), d);
        p.add_objective(y, q);
        budget = budget.plus_var(y, -1.0);
        ys.push(y);
    }
    p.add_lmi("(1-eta)I - sum Y", budget)?;
    let sol = p.solve()?.require_optimal()?;
    Ok((sol.primal_value, ys.iter().map(|y| sol.value(*y).clone()).collect()))
}

/// `q_re({Q_x}) = min { tr P : P ⪰ Q_x ∀x }`, solved together with its dual.
pub fn q_re(ops: &[HermitianOperator]) -> Result<QreResult> {
    let d = check_psd_family(ops)?;
    let mut p = SdpProblem::new(Sense::Minimize);
    let pv = p.add_variable("P", d);
    p.add_objective(pv, &HermitianOperator::identity(d));
    for (x, q) in ops.iter().enumerate() {
        p.add_lmi(format!("P >= Q{}", x + 1), AffineExpr::zero(d).plus_var(pv, 1.0).plus_const(&-q))?;
    }
    let sol = p.solve()?.require_optimal()?;
    let (dual_value, y) = qre_dual_program(ops, 0.0)?;
    Ok(QreResult {
        value: sol.primal_value,
        dual_value,
        p: sol.value(pv).clone(),
        gap: (sol.primal_value - dual_value).abs(),
        y,
    })
}

/// The dual program of `q_re` with the budget `Σ Y ⪯ (1−η) I`.
pub fn q_re_constrained(ops: &[HermitianOperator], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(qre_dual_program(ops, eta)?.0)
}

/// `η_* = 1 − ‖Σ_x Y_x‖_∞` at the dual optimum, clipped to `[0, 1)`.
pub fn eta_star(ops: &[HermitianOperator]) -> Result<f64> {
    let r = q_re(ops)?;
    Ok(eta_star_from(&r))
}

pub fn eta_star_from(r: &QreResult) -> f64 {
    let d = r.p.dim();
    let sum = r.y.iter().fold(HermitianOperator::zeros(d), |acc, y| &acc + y);
    let v = 1.0 - sum.operator_norm();
    // the dual optimum saturates ‖Σ Y‖ = 1 up to solver accuracy
    if v < ETA_STAR_ZERO {
        0.0
    } else {
        v.min(1.0 - f64::EPSILON)
    }
}

/// Best success probability without quantum side information:
/// `(1−η) max_x p_x`.
pub fn classical_success(priors: &[f64], eta: f64) -> f64 {
    (1.0 - eta) * priors.iter().cloned().fold(0.0, f64::max)
}

/// `P^q / P^c` for a given ensemble and `η`.
pub fn success_ratio(e: &Ensemble, eta: f64) -> Result<f64> {
    let cfg = GameConfig::with_eta(eta)?;
    let pq = succ_prob_primal(e, &cfg)?.success_probability;
    Ok(pq / classical_success(e.priors(), eta))
}

#[derive(Clone, Debug)]
pub struct Advantage {
    pub ratio_at_uniform: f64,
    pub q_re_value: f64,
    pub quantum_success: f64,
    pub classical_success: f64,
    pub eta_star: f64,
}

/// Quantum-over-classical success ratio at uniform priors, compared with
/// `q_re` of the states.
pub fn advantage_ratio(states: &[DensityMatrix], eta: f64) -> Result<Advantage> {
    let ops: Vec<HermitianOperator> = states.iter().map(|s| s.as_hermitian().clone()).collect();
    let qre = q_re(&ops)?;
    let es = eta_star_from(&qre);
    if eta < es {
        warn!("eta = {eta} is below eta_* = {es}");
    }
    let e = Ensemble::uniform(states.to_vec())?;
    let cfg = GameConfig::with_eta(eta)?;
    let pq = succ_prob_primal(&e, &cfg)?.success_probability;
    let pc = classical_success(e.priors(), eta);
    Ok(Advantage {
        ratio_at_uniform: pq / pc,
        q_re_value: qre.value,
        quantum_success: pq,
        classical_success: pc,
        eta_star: es,
    })
}

/// `π_X ⊗ τ` and `ρ_XA` as plain operators, for external checks.
pub fn cq_pair(e: &Ensemble, tau: &HermitianOperator) -> (HermitianOperator, HermitianOperator) {
    (CqState::uniform_times(e.k(), tau).to_operator(), CqState::from_ensemble(e).to_operator())
}

/// Kronecker product helper re-exported for callers building `n`-copy
/// operators.
pub fn kron_power(h: &HermitianOperator, n: usize) -> HermitianOperator {
    (1..n).fold(h.clone(), |acc, _| tensor(&acc, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::random;
    use nalgebra::DVector;

    fn plus() -> DensityMatrix {
        let s = 0.5f64.sqrt();
        DensityMatrix::pure(&DVector::from_vec(vec![c64(s, 0.0), c64(s, 0.0)]))
    }

    fn helstrom_pair() -> Ensemble {
        Ensemble::uniform(vec![DensityMatrix::basis(2, 0), plus()]).unwrap()
    }

    const HELSTROM: f64 = 0.853_553_390_593_273_8;

    #[test]
    fn orthogonal_states_are_perfectly_distinguishable() {
        let e = Ensemble::uniform(vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)]).unwrap();
        let r = succ_prob_primal(&e, &GameConfig::with_eta(0.0).unwrap()).unwrap();
        assert!((r.success_probability - 1.0).abs() < 1e-7);
    }

    #[test]
    fn helstrom_pair_and_eta_scaling() {
        let e = helstrom_pair();
        let p0 = succ_prob_primal(&e, &GameConfig::with_eta(0.0).unwrap()).unwrap();
        assert!((p0.success_probability - HELSTROM).abs() < 1e-7);
        let d0 = succ_prob_dual(&e, &GameConfig::with_eta(0.0).unwrap()).unwrap();
        assert!((d0.success_probability - HELSTROM).abs() < 1e-7);
        let p5 = succ_prob_primal(&e, &GameConfig::with_eta(0.5).unwrap()).unwrap();
        assert!((p5.success_probability - 0.5 * HELSTROM).abs() < 1e-7);
        // abstention element keeps weight at least η
        assert!(p5.abstention.min_eigenvalue() >= 0.5 - 1e-7);
    }

    #[test]
    fn identical_states_give_one_over_k() {
        let rho = random::full_rank_state(&mut random::rng(3), 3);
        let e = Ensemble::uniform(vec![rho.clone(), rho.clone(), rho.clone()]).unwrap();
        let d = succ_prob_dual(&e, &GameConfig::with_eta(0.0).unwrap()).unwrap();
        assert!((d.success_probability - 1.0 / 3.0).abs() < 1e-7);
        let cert = hypothesis_test_certificate(&e, &GameConfig::with_eta(0.0).unwrap()).unwrap();
        assert!((cert.gamma_value - 1.0 / 3.0).abs() < 1e-6);
        assert!((cert.tau_hat.as_hermitian() - rho.as_hermitian()).max_abs_entry() < 1e-6);
    }

    #[test]
    fn hypothesis_test_certificate_examples() {
        let cfg = GameConfig::with_eta(0.0).unwrap();
        let orth = Ensemble::uniform(vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)]).unwrap();
        assert!((hypothesis_test_certificate(&orth, &cfg).unwrap().gamma_value - 1.0).abs() < 1e-6);
        let c = hypothesis_test_certificate(&helstrom_pair(), &cfg).unwrap();
        assert!((c.gamma_value - HELSTROM).abs() < 1e-6, "{}", c.gamma_value);
    }

    #[test]
    fn radius_bound_examples() {
        let rho = random::full_rank_state(&mut random::rng(4), 2);
        let e = Ensemble::uniform(vec![rho.clone(), rho]).unwrap();
        let cfg = GameConfig::new(0.0, 2.0, 1).unwrap();
        let b = radius_bound(&e, &cfg).unwrap();
        assert!((b.bound - 2.0 * std::f64::consts::LN_2).abs() < 1e-9, "{}", b.bound);
        let p = succ_prob_primal(&e, &cfg).unwrap().success_probability;
        assert!((-(1.0 - p).ln() - std::f64::consts::LN_2).abs() < 1e-7);

        let orth = Ensemble::uniform(vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)]).unwrap();
        assert!(radius_bound(&orth, &cfg).unwrap().bound.is_infinite());

        let single = Ensemble::uniform(vec![DensityMatrix::basis(2, 0)]).unwrap();
        assert!(radius_bound(&single, &cfg).unwrap().bound.is_infinite());
    }

    #[test]
    fn q_re_examples() {
        let e0 = DensityMatrix::basis(2, 0).into_hermitian();
        let e1 = DensityMatrix::basis(2, 1).into_hermitian();
        let r = q_re(&[e0.clone(), e1]).unwrap();
        assert!((r.value - 2.0).abs() < 1e-7 && r.gap < 1e-7);
        let r = q_re(&[e0.clone(), plus().into_hermitian()]).unwrap();
        assert!((r.value - (1.0 + 0.5f64.sqrt())).abs() < 1e-7, "{}", r.value);
        let m = random::full_rank_state(&mut random::rng(1), 3).into_hermitian();
        let r = q_re(&[m.clone(), m.clone()]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-7);
        assert!(eta_star(&[m]).unwrap() < 1e-6);
    }

    #[test]
    fn classical_examples() {
        assert!((classical_success(&[0.7, 0.3], 0.2) - 0.56).abs() < 1e-15);
        assert!((classical_success(&[0.25; 4], 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn advantage_examples() {
        let a = advantage_ratio(&[DensityMatrix::basis(2, 0), plus()], 0.0).unwrap();
        assert!((a.ratio_at_uniform - a.q_re_value).abs() < 1e-6);
        assert!((a.ratio_at_uniform - (1.0 + 0.5f64.sqrt())).abs() < 1e-6);
        let rho = random::full_rank_state(&mut random::rng(7), 2);
        let a = advantage_ratio(&[rho.clone(), rho], 0.0).unwrap();
        assert!((a.ratio_at_uniform - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ensemble_validation() {
        let s = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
        assert!(Ensemble::new(s.clone(), vec![0.5, 0.6]).is_err());
        assert!(Ensemble::new(s.clone(), vec![1.0, 0.0]).is_err());
        assert!(Ensemble::new(s, vec![1.0]).is_err());
        assert!(GameConfig::with_eta(1.0).is_err());
    }
}
