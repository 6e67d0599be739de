//! Channels, Choi operators, the geometric Rényi channel divergence, and
//! adaptive channel discrimination.

use rand::Rng;

use crate::divergences::{add_cascade, cascade_level, check_geometric_alpha, reduce_to_subspace, Operand};
use crate::error::{Error, LinalgError, Result};
use crate::linalg::{
    c64, common_support, compress, eig, kron, matrix_function_on_support, partial_trace, partial_trace_matrix,
    psd_power, support_contains, CMatrix, DensityMatrix, HermitianOperator, Keep, DEFAULT_SUPPORT_TOL,
};
use crate::random;
use crate::sdp::{AffineExpr, LinearMap, SdpProblem, Sense, SolveStatus};
use crate::stategame::{succ_prob_primal, Ensemble, GameConfig};

/// Tolerance for `Σ K†K = I`.
pub const TP_TOL: f64 = 1e-9;

/// CPTP map given by Kraus operators of shape `dim_out x dim_in`.
#[derive(Clone, Debug)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
    choi: HermitianOperator,
}

impl Channel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("a channel needs at least one Kraus operator".into()));
        }
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim_out * dim_in,
                    found: k.nrows() * k.ncols(),
                }
                .into());
            }
        }
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = (sum - CMatrix::identity(dim_in, dim_in)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > TP_TOL {
            return Err(Error::InvalidParameter(format!(
                "Kraus operators are not trace preserving (deviation {dev:.3e})"
            )));
        }
        let choi = choi_from_kraus(dim_in, dim_out, &kraus);
        Ok(Self { dim_in, dim_out, kraus, choi })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(d, d, vec![CMatrix::identity(d, d)]).expect("identity is CPTP")
    }

    /// Unitary channel `ρ ↦ U ρ U†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let d = u.nrows();
        Self::new(d, d, vec![u])
    }

    /// Qubit depolarizing channel `ρ ↦ (1−q)ρ + q·tr(ρ)·I/2`.
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=4.0 / 3.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("depolarizing parameter {q} outside [0, 4/3]")));
        }
        let paulis = pauli_matrices();
        let mut kraus = vec![CMatrix::identity(2, 2).scale((1.0 - 3.0 * q / 4.0).sqrt())];
        for p in paulis {
            kraus.push(p.scale((q / 4.0).sqrt()));
        }
        Self::new(2, 2, kraus)
    }

    /// Qubit bit flip `ρ ↦ (1−p)ρ + p XρX`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("flip probability {p} outside [0, 1]")));
        }
        let [x, _, _] = pauli_matrices();
        Self::new(2, 2, vec![CMatrix::identity(2, 2).scale((1.0 - p).sqrt()), x.scale(p.sqrt())])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        if rho.dim() != self.dim_in {
            return Err(LinalgError::DimensionMismatch { expected: self.dim_in, found: rho.dim() }.into());
        }
        Ok(HermitianOperator::from_matrix_unchecked(self.apply_matrix(rho.matrix())))
    }

    /// `(id_R ⊗ N)(ρ)` for `ρ` on `R ⊗ A`.
    pub fn apply_on_second(&self, rho: &HermitianOperator, dim_ref: usize) -> Result<HermitianOperator> {
        if rho.dim() != dim_ref * self.dim_in {
            return Err(LinalgError::DimensionMismatch { expected: dim_ref * self.dim_in, found: rho.dim() }.into());
        }
        let id = CMatrix::identity(dim_ref, dim_ref);
        let mut out = CMatrix::zeros(dim_ref * self.dim_out, dim_ref * self.dim_out);
        for k in &self.kraus {
            let kk = kron(&id, k);
            out += &kk * rho.matrix() * kk.adjoint();
        }
        Ok(HermitianOperator::from_matrix_unchecked(out))
    }

    /// Choi operator `Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` on `A ⊗ B`; with `normalized`
    /// it is divided by `dim_in` (a state).
    pub fn choi(&self, normalized: bool) -> HermitianOperator {
        if normalized {
            self.choi.scale(1.0 / self.dim_in as f64)
        } else {
            self.choi.clone()
        }
    }

    /// Applies the channel through its Choi operator:
    /// `N(ρ) = tr_A[(ρᵀ ⊗ I) J]`.
    pub fn apply_via_choi(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        if rho.dim() != self.dim_in {
            return Err(LinalgError::DimensionMismatch { expected: self.dim_in, found: rho.dim() }.into());
        }
        let lhs = kron(&rho.matrix().transpose(), &CMatrix::identity(self.dim_out, self.dim_out));
        let prod = lhs * self.choi.matrix();
        let out = partial_trace_matrix(&prod, (self.dim_in, self.dim_out), Keep::B)?;
        Ok(HermitianOperator::from_matrix_unchecked(out))
    }

    /// Sequential composition: first `self`, then `next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.dim_in != self.dim_out {
            return Err(LinalgError::DimensionMismatch { expected: self.dim_out, found: next.dim_in }.into());
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Channel::new(self.dim_in, next.dim_out, kraus)
    }
}

fn pauli_matrices() -> [CMatrix; 3] {
    let o = c64(0.0, 0.0);
    let l = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

fn choi_from_kraus(dim_in: usize, dim_out: usize, kraus: &[CMatrix]) -> HermitianOperator {
    // J = Σ_K vec(K) vec(K)† with vec(K) = Σ_i |i⟩ ⊗ K|i⟩.
    let mut j = CMatrix::zeros(dim_in * dim_out, dim_in * dim_out);
    for k in kraus {
        let v = CMatrix::from_fn(dim_in * dim_out, 1, |r, _| k[(r % dim_out, r / dim_out)]);
        j += &v * v.adjoint();
    }
    HermitianOperator::from_matrix_unchecked(j)
}

fn check_same_dims(channels: &[&Channel]) -> Result<(usize, usize)> {
    let Some(first) = channels.first() else {
        return Err(Error::InvalidParameter("empty channel list".into()));
    };
    for c in channels {
        if c.dim_in != first.dim_in || c.dim_out != first.dim_out {
            return Err(LinalgError::DimensionMismatch {
                expected: first.dim_in * first.dim_out,
                found: c.dim_in * c.dim_out,
            }
            .into());
        }
    }
    Ok((first.dim_in, first.dim_out))
}

/// Weighted geometric mean `J_M^{1/2} (J_M^{−1/2} J_N J_M^{−1/2})^α J_M^{1/2}`
/// of unnormalized Choi operators, on the support of `J_M`.
fn choi_geometric_mean(jn: &HermitianOperator, jm: &HermitianOperator, alpha: f64) -> Result<HermitianOperator> {
    let inv_half = psd_power(jm, -0.5, DEFAULT_SUPPORT_TOL)?;
    let half = psd_power(jm, 0.5, DEFAULT_SUPPORT_TOL)?;
    let x = jn.sandwich(&inv_half);
    let xa = matrix_function_on_support(&x, |l| l.max(0.0).powf(alpha), DEFAULT_SUPPORT_TOL)?;
    Ok(xa.sandwich(&half))
}

/// Geometric Rényi channel divergence
/// `(1/(α−1)) ln ‖tr_B G_α(J_N, J_M)‖_∞` with unnormalized Choi operators;
/// `+∞` unless `supp J_N ⊆ supp J_M`.
pub fn channel_geometric_renyi(n: &Channel, m: &Channel, alpha: f64) -> Result<f64> {
    check_geometric_alpha(alpha)?;
    let (da, db) = check_same_dims(&[n, m])?;
    if !support_contains(&m.choi, &n.choi, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let g = choi_geometric_mean(&n.choi, &m.choi, alpha)?;
    let reduced = partial_trace(&g, (da, db), Keep::A)?;
    Ok(reduced.max_eigenvalue().ln() / (alpha - 1.0))
}

/// Result of the minimax channel SDP at `α = 1 + 2^{−l}`.
#[derive(Clone, Debug)]
pub struct ChannelRadius {
    pub alpha: f64,
    /// `inf_T max_x D̂_α(T‖N_x)` in nats; `+∞` if no channel has its Choi
    /// operator inside every `supp J_{N_x}`.
    pub value: f64,
    /// Unnormalized Choi operator of the optimal center channel.
    pub choi_center: Option<HermitianOperator>,
    pub gap: f64,
    pub iterations: usize,
}

impl ChannelRadius {
    fn infinite(alpha: f64) -> Self {
        Self { alpha, value: f64::INFINITY, choi_center: None, gap: 0.0, iterations: 0 }
    }
}

/// `m ↦ tr_B(V m V†)` for `V: C^s → A ⊗ B`.
fn lifted_partial_trace(v: &CMatrix, da: usize, db: usize) -> LinearMap {
    let v = v.clone();
    let s = v.ncols();
    LinearMap::custom(s, da, move |m| {
        partial_trace_matrix(&(&v * m * v.adjoint()), (da, db), Keep::A).expect("dimensions fixed at construction")
    })
}

/// Minimizes `max_x D̂_α(T‖N_x)` over channels `T` by the cascade SDP.
///
/// The center Choi operator is restricted to `S = ∩_x supp J_{N_x}` (outside
/// it the objective is infinite), written `J_T = V J' V†`, and every Choi
/// operator is replaced by its reduction to `S`, which keeps the program
/// strictly feasible when the channels have rank-deficient Choi operators.
pub fn channel_radius_sdp(channels: &[Channel], l: u32) -> Result<ChannelRadius> {
    let refs: Vec<&Channel> = channels.iter().collect();
    let (da, db) = check_same_dims(&refs)?;
    let alpha = 1.0 + 0.5f64.powi(l as i32);
    let chois: Vec<&HermitianOperator> = channels.iter().map(|c| &c.choi).collect();
    let v = common_support(&chois, DEFAULT_SUPPORT_TOL);
    let s = v.ncols();
    if s == 0 {
        return Ok(ChannelRadius::infinite(alpha));
    }
    let reduced: Vec<HermitianOperator> = chois.iter().map(|j| reduce_to_subspace(j, &v)).collect::<Result<_>>()?;

    let mut p = SdpProblem::new(Sense::Minimize);
    let (jt, _) = p.add_psd_variable("J_T", s);
    p.add_equality(
        "tr_B J_T = I_A",
        AffineExpr::constant(&HermitianOperator::identity(da).scale(-1.0)).plus(jt, lifted_partial_trace(&v, da, db)),
    )?;
    let lambda = p.add_scalar("lambda");
    p.add_objective(lambda, &HermitianOperator::identity(1));
    for (x, sigma) in reduced.iter().enumerate() {
        let m = add_cascade(&mut p, &format!("x{}", x + 1), Operand::Var(jt), Operand::Const(sigma), s, l)?;
        let map = lifted_partial_trace(&v, da, db).then(LinearMap::scaled(da, -1.0));
        p.add_lmi(
            format!("lambda I >= tr_B M{}", x + 1),
            AffineExpr::zero(da).plus(lambda, LinearMap::scalar_times(&HermitianOperator::identity(da))).plus(m, map),
        )?;
    }
    let sol = p.solve()?;
    if sol.status == SolveStatus::Infeasible {
        return Ok(ChannelRadius::infinite(alpha));
    }
    let sol = sol.require_optimal()?;
    let lam = sol.scalar(lambda);
    Ok(ChannelRadius {
        alpha,
        value: lam.ln() / (alpha - 1.0),
        choi_center: Some(sol.value(jt).conjugate_by(&v)),
        gap: sol.gap,
        iterations: sol.iterations,
    })
}

/// The same SDP with the center pinned to `n` and a single reference `m`:
/// reproduces [`channel_geometric_renyi`] at `α = 1 + 2^{−l}`.
pub fn channel_divergence_sdp(n: &Channel, m: &Channel, l: u32) -> Result<f64> {
    let (da, db) = check_same_dims(&[n, m])?;
    let alpha = 1.0 + 0.5f64.powi(l as i32);
    if !support_contains(&m.choi, &n.choi, DEFAULT_SUPPORT_TOL) {
        return Ok(f64::INFINITY);
    }
    let v = eig(&n.choi).support_basis(DEFAULT_SUPPORT_TOL);
    let s = v.ncols();
    let x = compress(&n.choi, &v);
    let sigma = reduce_to_subspace(&m.choi, &v)?;
    let mut p = SdpProblem::new(Sense::Minimize);
    let mv = add_cascade(&mut p, "pinned", Operand::Const(&x), Operand::Const(&sigma), s, l)?;
    let lambda = p.add_scalar("lambda");
    p.add_objective(lambda, &HermitianOperator::identity(1));
    p.add_lmi(
        "lambda I >= tr_B M",
        AffineExpr::zero(da)
            .plus(lambda, LinearMap::scalar_times(&HermitianOperator::identity(da)))
            .plus(mv, lifted_partial_trace(&v, da, db).then(LinearMap::scaled(da, -1.0))),
    )?;
    let sol = p.solve()?.require_optimal()?;
    Ok(sol.scalar(lambda).ln() / (alpha - 1.0))
}

/// `−(α/(n(α−1)))(ln p_min + ln(k−1+η))`; `+∞` when `k−1+η = 0`.
pub fn adaptive_bound_offset(priors: &[f64], eta: f64, n: usize, alpha: f64) -> f64 {
    let km = priors.len() as f64 - 1.0 + eta;
    if km <= 0.0 {
        return f64::INFINITY;
    }
    let p_min = priors.iter().cloned().fold(f64::INFINITY, f64::min);
    -(alpha / (n as f64 * (alpha - 1.0))) * (p_min.ln() + km.ln())
}

/// Upper bound on the `n`-round error exponent `−(1/n) ln(1 − p_succ)` of any
/// adaptive protocol: channel radius plus the prior-dependent offset.
/// `alpha` must be `1 + 2^{−l}`.
pub fn adaptive_bound(channels: &[Channel], priors: &[f64], eta: f64, n: usize, alpha: f64) -> Result<f64> {
    if priors.len() != channels.len() {
        return Err(Error::InvalidParameter(format!("{} priors for {} channels", priors.len(), channels.len())));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta must lie in [0, 1), got {eta}")));
    }
    let l = cascade_level(alpha)
        .ok_or_else(|| Error::InvalidParameter(format!("alpha = {alpha} is not of the form 1 + 2^-l")))?;
    let r = channel_radius_sdp(channels, l)?;
    Ok(r.value + adaptive_bound_offset(priors, eta, n, alpha))
}

/// Channel SDP values along `α = 1 + 2^{−l}`, `l = 1..=l_max`. The sequence
/// decreases towards the Belavkin–Staszewski limit; the last entry is the
/// best computable upper bound on it.
pub fn bs_limit_sequence(channels: &[Channel], l_max: u32) -> Result<(Vec<(f64, f64)>, f64)> {
    if !(1..=4).contains(&l_max) {
        return Err(Error::InvalidParameter(format!("l_max must be in 1..=4, got {l_max}")));
    }
    let seq: Vec<(f64, f64)> =
        (1..=l_max).map(|l| channel_radius_sdp(channels, l).map(|r| (r.alpha, r.value))).collect::<Result<_>>()?;
    let last = seq.last().map(|s| s.1).unwrap_or(f64::INFINITY);
    Ok((seq, last))
}

/// `n`-round adaptive strategy: an input state on `R_1 ⊗ A` and `n − 1`
/// processing channels `R_i ⊗ B → R_{i+1} ⊗ A`.
#[derive(Clone, Debug)]
pub struct AdaptiveProtocol {
    pub input: DensityMatrix,
    /// Reference dimensions `R_1..R_n`.
    pub ref_dims: Vec<usize>,
    pub adapters: Vec<Channel>,
    /// Optional fixed final measurement `M_1..M_k`; the abstention element
    /// is `I − Σ M_x`.
    pub final_povm: Option<Vec<HermitianOperator>>,
}

impl AdaptiveProtocol {
    pub fn rounds(&self) -> usize {
        self.adapters.len() + 1
    }

    pub fn check(&self, dim_in: usize, dim_out: usize) -> Result<()> {
        let n = self.rounds();
        if self.ref_dims.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: self.ref_dims.len() }.into());
        }
        if self.input.dim() != self.ref_dims[0] * dim_in {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ref_dims[0] * dim_in,
                found: self.input.dim(),
            }
            .into());
        }
        for (i, a) in self.adapters.iter().enumerate() {
            let (din, dout) = (self.ref_dims[i] * dim_out, self.ref_dims[i + 1] * dim_in);
            if a.dim_in != din || a.dim_out != dout {
                return Err(LinalgError::DimensionMismatch { expected: din * dout, found: a.dim_in * a.dim_out }.into());
            }
        }
        if let Some(povm) = &self.final_povm {
            let d = self.ref_dims[n - 1] * dim_out;
            if let Some(q) = povm.iter().find(|q| q.dim() != d) {
                return Err(LinalgError::DimensionMismatch { expected: d, found: q.dim() }.into());
            }
        }
        Ok(())
    }
}

/// States of every branch: `inputs[x][i] = ρ_{x,i}`, `outputs[x][i] = σ_{x,i}`.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub inputs: Vec<Vec<DensityMatrix>>,
    pub outputs: Vec<Vec<DensityMatrix>>,
}

impl ProtocolTrace {
    /// Final states `σ_{x,n}`.
    pub fn finals(&self) -> Vec<DensityMatrix> {
        self.outputs.iter().map(|o| o.last().expect("at least one round").clone()).collect()
    }
}

fn as_state(h: HermitianOperator) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new(h)?)
}

/// Exact propagation `σ_{x,i} = (id ⊗ N_x)(ρ_{x,i})`, `ρ_{x,i+1} = A_i(σ_{x,i})`.
pub fn simulate_protocol(p: &AdaptiveProtocol, channels: &[Channel]) -> Result<ProtocolTrace> {
    let refs: Vec<&Channel> = channels.iter().collect();
    let (da, db) = check_same_dims(&refs)?;
    p.check(da, db)?;
    let mut inputs = Vec::with_capacity(channels.len());
    let mut outputs = Vec::with_capacity(channels.len());
    for ch in channels {
        let mut rho = p.input.clone();
        let mut ins = Vec::with_capacity(p.rounds());
        let mut outs = Vec::with_capacity(p.rounds());
        for i in 0..p.rounds() {
            let sigma = as_state(ch.apply_on_second(&rho, p.ref_dims[i])?)?;
            ins.push(rho);
            if i + 1 < p.rounds() {
                rho = as_state(p.adapters[i].apply(&sigma)?)?;
            } else {
                rho = sigma.clone();
            }
            outs.push(sigma);
        }
        inputs.push(ins);
        outputs.push(outs);
    }
    Ok(ProtocolTrace { inputs, outputs })
}

/// Optimal success over final measurements with abstention weight `η`.
pub fn protocol_success(trace: &ProtocolTrace, priors: &[f64], eta: f64) -> Result<f64> {
    let e = Ensemble::new(trace.finals(), priors.to_vec())?;
    Ok(succ_prob_primal(&e, &GameConfig::with_eta(eta)?)?.success_probability)
}

/// Success of a fixed final measurement `Σ_x p_x tr(M_x σ_{x,n})`.
pub fn povm_success(trace: &ProtocolTrace, priors: &[f64], povm: &[HermitianOperator]) -> Result<f64> {
    let finals = trace.finals();
    if povm.len() != finals.len() || priors.len() != finals.len() {
        return Err(Error::InvalidParameter("POVM, priors and hypotheses must have the same count".into()));
    }
    Ok(finals.iter().zip(povm).zip(priors).map(|((s, m), p)| p * s.inner(m)).sum())
}

/// `−(1/n) ln(1 − p)`.
pub fn error_exponent(success: f64, n: usize) -> f64 {
    -(1.0 - success).ln() / n as f64
}

/// Random protocol with a Haar pure input on `R ⊗ A` and adapters induced by
/// random isometries (environment dimension 2).
pub fn random_protocol(
    rng: &mut impl Rng,
    dim_in: usize,
    dim_out: usize,
    n: usize,
    dim_ref: usize,
) -> Result<AdaptiveProtocol> {
    if n == 0 || dim_ref == 0 || dim_ref > 4 {
        return Err(Error::InvalidParameter("need n >= 1 and reference dimension in 1..=4".into()));
    }
    let input = random::pure_state(rng, dim_ref * dim_in);
    let adapters = (1..n).map(|_| random::channel(rng, dim_ref * dim_out, dim_ref * dim_in, 2)).collect();
    Ok(AdaptiveProtocol { input, ref_dims: vec![dim_ref; n], adapters, final_povm: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::geometric_renyi;
    use crate::linalg::max_entangled_vector;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn choi_examples() {
        let id = Channel::identity(2).choi(true);
        let phi = DensityMatrix::pure(&max_entangled_vector(2));
        assert!((&id - phi.as_hermitian()).max_abs_entry() < 1e-12);
        let full = Channel::depolarizing(1.0).unwrap().choi(true);
        assert!((&full - &HermitianOperator::identity(4).scale(0.25)).max_abs_entry() < 1e-12);
        let q = 0.3;
        let mut ev = Channel::depolarizing(q).unwrap().choi(false).eig().eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        let want = [q / 2.0, q / 2.0, q / 2.0, 2.0 - 1.5 * q];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn choi_partial_trace_is_identity() {
        let mut rng = random::rng(5);
        let c = random::channel(&mut rng, 2, 3, 3);
        let t = partial_trace(&c.choi(false), (2, 3), Keep::A).unwrap();
        assert!((&t - &HermitianOperator::identity(2)).max_abs_entry() < 1e-10);
    }

    #[test]
    fn kraus_and_choi_agree() {
        let mut rng = random::rng(6);
        for _ in 0..10 {
            let c = random::channel(&mut rng, 3, 2, 2);
            let rho = random::density_matrix(&mut rng, 3, 2);
            let a = c.apply(&rho).unwrap();
            let b = c.apply_via_choi(&rho).unwrap();
            assert!((&a - &b).max_abs_entry() < 1e-10);
        }
    }

    #[test]
    fn depolarizing_divergence_matches_commuting_formula() {
        let n = Channel::depolarizing(0.2).unwrap();
        let m = Channel::depolarizing(0.5).unwrap();
        let want = (0.5 * (1.7f64.powi(2) / 1.25 + 3.0 * 0.1f64.powi(2) / 0.25)).ln();
        let got = channel_geometric_renyi(&n, &m, 2.0).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        assert!((got - 0.1956).abs() < 1e-3);
        assert!(channel_geometric_renyi(&n, &n, 1.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn sampled_inputs_stay_below_channel_divergence() {
        let mut rng = random::rng(8);
        let n = Channel::bit_flip(0.1).unwrap();
        let m = Channel::depolarizing(0.4).unwrap();
        let alpha = 1.5;
        let value = channel_geometric_renyi(&n, &m, alpha).unwrap();
        for _ in 0..50 {
            let psi = random::pure_state(&mut rng, 4);
            let a = n.apply_on_second(&psi, 2).unwrap();
            let b = m.apply_on_second(&psi, 2).unwrap();
            assert!(geometric_renyi(&a, &b, alpha).unwrap() <= value + 1e-8);
        }
        // the maximally entangled input attains the sup for these covariant channels
        let phi = DensityMatrix::pure(&max_entangled_vector(2));
        let a = n.apply_on_second(&phi, 2).unwrap();
        let b = m.apply_on_second(&phi, 2).unwrap();
        assert!((geometric_renyi(&a, &b, alpha).unwrap() - value).abs() < 1e-8);
    }

    #[test]
    fn pinned_sdp_matches_closed_form() {
        let n = Channel::depolarizing(0.2).unwrap();
        let m = Channel::depolarizing(0.5).unwrap();
        for l in 0..=2 {
            let alpha = 1.0 + 0.5f64.powi(l as i32);
            let a = channel_divergence_sdp(&n, &m, l).unwrap();
            let b = channel_geometric_renyi(&n, &m, alpha).unwrap();
            assert!((a - b).abs() < 1e-5, "l={l}: {a} vs {b}");
        }
        let mut rng = random::rng(12);
        let n = random::channel(&mut rng, 2, 2, 2);
        let m = random::channel(&mut rng, 2, 2, 4);
        let a = channel_divergence_sdp(&n, &m, 1).unwrap();
        let b = channel_geometric_renyi(&n, &m, 1.5).unwrap();
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        // rank-one Choi operator on the left
        let id = Channel::identity(2);
        let a = channel_divergence_sdp(&id, &m, 1).unwrap();
        let b = channel_geometric_renyi(&id, &m, 1.5).unwrap();
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn channel_radius_examples() {
        let n = Channel::depolarizing(0.3).unwrap();
        let r = channel_radius_sdp(&[n.clone(), n.clone()], 1).unwrap();
        assert!(r.value.abs() < 1e-6, "{}", r.value);
        let jt = r.choi_center.unwrap();
        assert!((&jt - &n.choi(false)).max_abs_entry() < 1e-4);

        let pair = [Channel::depolarizing(0.2).unwrap(), Channel::depolarizing(0.5).unwrap()];
        let r = channel_radius_sdp(&pair, 0).unwrap();
        assert!(r.value <= channel_geometric_renyi(&pair[0], &pair[1], 2.0).unwrap() + 1e-6);
        assert!(r.value >= -1e-7);
        let jt = r.choi_center.unwrap();
        let t = partial_trace(&jt, (2, 2), Keep::A).unwrap();
        assert!((&t - &HermitianOperator::identity(2)).max_abs_entry() < 1e-7);

        let pair = [Channel::identity(2), Channel::depolarizing(1.0).unwrap()];
        let r = channel_radius_sdp(&pair, 1).unwrap();
        for y in &pair {
            let sup = pair.iter().map(|x| channel_geometric_renyi(y, x, 1.5).unwrap()).fold(0.0, f64::max);
            assert!(r.value <= sup + 1e-6);
        }
        assert!(r.value >= -1e-7);
    }

    #[test]
    fn identical_channels_bound() {
        let n = Channel::bit_flip(0.2).unwrap();
        let b = adaptive_bound(&[n.clone(), n.clone()], &[0.5, 0.5], 0.0, 1, 2.0).unwrap();
        assert!((b - 2.0 * LN2).abs() < 1e-6, "{b}");
        let mut rng = random::rng(2);
        let p = random_protocol(&mut rng, 2, 2, 1, 2).unwrap();
        let tr = simulate_protocol(&p, &[n.clone(), n]).unwrap();
        let s = protocol_success(&tr, &[0.5, 0.5], 0.0).unwrap();
        assert!((s - 0.5).abs() < 1e-7);
        assert!((error_exponent(s, 1) - LN2).abs() < 1e-6);
    }

    #[test]
    fn simulation_examples() {
        let tau = random::pure_state(&mut random::rng(1), 4);
        let p = AdaptiveProtocol { input: tau.clone(), ref_dims: vec![2], adapters: vec![], final_povm: None };
        let tr = simulate_protocol(&p, &[Channel::identity(2)]).unwrap();
        assert!((tr.finals()[0].as_hermitian() - tau.as_hermitian()).max_abs_entry() < 1e-12);

        // identity adapter: two uses compose on the A line
        let flip = Channel::bit_flip(0.3).unwrap();
        let p = AdaptiveProtocol {
            input: tau.clone(),
            ref_dims: vec![2, 2],
            adapters: vec![Channel::identity(4)],
            final_povm: None,
        };
        let tr = simulate_protocol(&p, std::slice::from_ref(&flip)).unwrap();
        let twice = flip.then(&flip).unwrap().apply_on_second(&tau, 2).unwrap();
        assert!((tr.finals()[0].as_hermitian() - &twice).max_abs_entry() < 1e-12);

        let mut rng = random::rng(9);
        let chans = [random::channel(&mut rng, 2, 2, 2), random::channel(&mut rng, 2, 2, 3)];
        let p = random_protocol(&mut rng, 2, 2, 3, 2).unwrap();
        let tr = simulate_protocol(&p, &chans).unwrap();
        for s in tr.inputs.iter().chain(&tr.outputs).flatten() {
            assert!((s.trace() - 1.0).abs() < 1e-9 && s.min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn random_protocols_respect_bound() {
        let chans = [Channel::identity(2), Channel::bit_flip(0.25).unwrap()];
        let priors = [0.5, 0.5];
        let mut rng = random::rng(21);
        for n in 1..=2 {
            let bound = adaptive_bound(&chans, &priors, 0.0, n, 1.5).unwrap();
            for _ in 0..5 {
                let p = random_protocol(&mut rng, 2, 2, n, 2).unwrap();
                let tr = simulate_protocol(&p, &chans).unwrap();
                let s = protocol_success(&tr, &priors, 0.0).unwrap();
                assert!(error_exponent(s, n) <= bound + 1e-6);
            }
        }
    }

    #[test]
    fn limit_sequence_is_nonincreasing() {
        let chans = [Channel::identity(2), Channel::depolarizing(0.5).unwrap()];
        let (seq, last) = bs_limit_sequence(&chans, 3).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-6, "{seq:?}");
        }
        assert!(seq.iter().all(|s| s.1 >= -1e-7));
        assert_eq!(last, seq[2].1);
        let same = [Channel::bit_flip(0.1).unwrap(), Channel::bit_flip(0.1).unwrap()];
        assert!(bs_limit_sequence(&same, 2).unwrap().0.iter().all(|s| s.1.abs() < 1e-6));
    }
}
