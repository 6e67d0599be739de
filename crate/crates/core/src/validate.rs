//! Numerical checks of the inequalities and identities that tie the
//! quantities of this crate together. Each check records both sides and
//! the slack it was judged at.

use rand::Rng;

use crate::channelgame::{
    adaptive_bound, bs_limit_sequence, channel_geometric_renyi, error_exponent, protocol_success, random_protocol,
    simulate_protocol, Channel,
};
use crate::divergences::{
    geometric_quasi, geometric_renyi, geometric_renyi_sdp, hypothesis_testing_divergence, sandwiched_renyi, Divergence,
};
use crate::error::Result;
use crate::linalg::{tensor, CMatrix, DensityMatrix, HermitianOperator, TraceOneHermitian};
use crate::random;
use crate::stategame::{
    eta_star_from, hypothesis_test_certificate, q_re, radius_bound, succ_prob_dual, succ_prob_primal, success_ratio,
    Ensemble, GameConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `lhs ≤ rhs + tol`.
    AtMost,
    /// `|lhs − rhs| ≤ tol`.
    Equal,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let passed = if lhs.is_nan() || rhs.is_nan() {
            false
        } else if rhs == f64::INFINITY || lhs == f64::NEG_INFINITY {
            true
        } else {
            lhs <= rhs + tol
        };
        Self { name: name.into(), lhs, rhs, relation: Relation::AtMost, tol, passed }
    }

    pub fn equal(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let passed = if lhs.is_infinite() || rhs.is_infinite() { lhs == rhs } else { (lhs - rhs).abs() <= tol };
        Self { name: name.into(), lhs, rhs, relation: Relation::Equal, tol, passed }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn failures(checks: &[Check]) -> Vec<&Check> {
    checks.iter().filter(|c| !c.passed).collect()
}

const DIV_SLACK: f64 = 1e-8;

fn block_diag(blocks: &[HermitianOperator]) -> HermitianOperator {
    let total: usize = blocks.iter().map(|b| b.dim()).sum();
    let mut m = CMatrix::zeros(total, total);
    let mut off = 0;
    for b in blocks {
        m.view_mut((off, off), (b.dim(), b.dim())).copy_from(b.matrix());
        off += b.dim();
    }
    HermitianOperator::from_matrix_unchecked(m)
}

fn divergence_family() -> [Divergence; 6] {
    [
        Divergence::Sandwiched { alpha: 1.5 },
        Divergence::Sandwiched { alpha: 2.0 },
        Divergence::Geometric { alpha: 1.5 },
        Divergence::Geometric { alpha: 2.0 },
        Divergence::Umegaki,
        Divergence::BelavkinStaszewski,
    ]
}

/// Ordering, monotonicity in `α`, data processing, additivity, direct sums,
/// the hypothesis-testing bound, joint quasi-convexity, and the cascade SDP,
/// all on the pair `(ρ, σ)`; auxiliary states and channels are drawn from
/// `rng`.
pub fn divergence_checks(rho: &DensityMatrix, sigma: &DensityMatrix, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let d = rho.dim();
    let mut out = Vec::new();
    let umegaki = Divergence::Umegaki.evaluate(rho, sigma)?;
    for alpha in [1.5, 2.0] {
        let s = sandwiched_renyi(rho, sigma, alpha)?;
        let g = geometric_renyi(rho, sigma, alpha)?;
        out.push(Check::at_most(format!("ordering: umegaki <= sandwiched({alpha})"), umegaki, s, DIV_SLACK));
        out.push(Check::at_most(format!("ordering: sandwiched({alpha}) <= geometric({alpha})"), s, g, DIV_SLACK));
    }
    out.push(Check::at_most(
        "ordering: umegaki <= belavkin-staszewski",
        umegaki,
        Divergence::BelavkinStaszewski.evaluate(rho, sigma)?,
        DIV_SLACK,
    ));

    let sw: Vec<f64> = [1.1, 1.5, 2.0, 4.0].iter().map(|&a| sandwiched_renyi(rho, sigma, a)).collect::<Result<_>>()?;
    for (w, a) in sw.windows(2).zip([1.1, 1.5, 2.0, 4.0].windows(2)) {
        out.push(Check::at_most(format!("alpha monotone: sandwiched {} -> {}", a[0], a[1]), w[0], w[1], DIV_SLACK));
    }
    let ge: Vec<f64> = [1.25, 1.5, 2.0].iter().map(|&a| geometric_renyi(rho, sigma, a)).collect::<Result<_>>()?;
    for (w, a) in ge.windows(2).zip([1.25, 1.5, 2.0].windows(2)) {
        out.push(Check::at_most(format!("alpha monotone: geometric {} -> {}", a[0], a[1]), w[0], w[1], DIV_SLACK));
    }

    let ch = random::channel(rng, d, d, 2);
    let (nr, ns) = (ch.apply(rho)?, ch.apply(sigma)?);
    for div in divergence_family() {
        out.push(Check::at_most(
            format!("data processing: {div}"),
            div.evaluate(&nr, &ns)?,
            div.evaluate(rho, sigma)?,
            DIV_SLACK,
        ));
    }

    let r2 = random::full_rank_state(rng, 2);
    let s2 = random::full_rank_state(rng, 2);
    for alpha in [1.5, 2.0] {
        let joint = geometric_renyi(&tensor(rho, &r2), &tensor(sigma, &s2), alpha)?;
        let sum = geometric_renyi(rho, sigma, alpha)? + geometric_renyi(&r2, &s2, alpha)?;
        out.push(Check::equal(format!("additivity: geometric({alpha})"), joint, sum, DIV_SLACK));
    }

    let p = random::priors(rng, 2, 0.1);
    let q = random::priors(rng, 2, 0.1);
    let pairs = [(rho.as_hermitian(), sigma.as_hermitian()), (&nr, &ns)];
    for alpha in [1.5, 2.0] {
        let cq_r = block_diag(&[pairs[0].0.scale(p[0]), pairs[1].0.scale(p[1])]);
        let cq_s = block_diag(&[pairs[0].1.scale(q[0]), pairs[1].1.scale(q[1])]);
        let lhs = geometric_quasi(&cq_r, &cq_s, alpha)?;
        let mut rhs = 0.0;
        for x in 0..2 {
            rhs += p[x].powf(alpha) * q[x].powf(1.0 - alpha) * geometric_quasi(pairs[x].0, pairs[x].1, alpha)?;
        }
        out.push(Check::equal(format!("direct sum: geometric({alpha})"), lhs, rhs, DIV_SLACK * (1.0 + rhs.abs())));
    }

    let rho_t = TraceOneHermitian::from(rho.clone());
    for eps in [0.1, 0.5] {
        let dh = hypothesis_testing_divergence(&rho_t, sigma, eps)?;
        for alpha in [1.5, 2.0] {
            let rhs = sandwiched_renyi(rho, sigma, alpha)? - alpha / (alpha - 1.0) * (1.0 - eps).ln();
            out.push(Check::at_most(format!("hypothesis bound: eps={eps}, alpha={alpha}"), dh, rhs, DIV_SLACK));
        }
    }

    let rho2 = random::full_rank_state(rng, d);
    let sigma2 = random::full_rank_state(rng, d);
    let t: f64 = rng.random_range(0.05..0.95);
    let mix_r = &rho.scale(t) + &rho2.scale(1.0 - t);
    let mix_s = &sigma.scale(t) + &sigma2.scale(1.0 - t);
    for alpha in [1.5, 2.0] {
        let lhs = sandwiched_renyi(&mix_r, &mix_s, alpha)?;
        let rhs = sandwiched_renyi(rho, sigma, alpha)?.max(sandwiched_renyi(&rho2, &sigma2, alpha)?);
        out.push(Check::at_most(format!("quasi-convexity: sandwiched({alpha})"), lhs, rhs, DIV_SLACK));
    }

    for l in [1u32, 2] {
        let alpha = 1.0 + 0.5f64.powi(l as i32);
        out.push(Check::equal(
            format!("cascade sdp vs closed form: l={l}"),
            geometric_renyi_sdp(rho, sigma, l)?,
            geometric_renyi(rho, sigma, alpha)?,
            1e-5,
        ));
    }
    Ok(out)
}

/// Duality, `η`-scaling, the hypothesis-testing certificate, the abstention
/// constraint, and the radius bound for one ensemble at one `η`.
pub fn state_game_checks(e: &Ensemble, eta: f64) -> Result<Vec<Check>> {
    let cfg = GameConfig::with_eta(eta)?;
    let primal = succ_prob_primal(e, &cfg)?;
    let dual = succ_prob_dual(e, &cfg)?;
    let p = primal.success_probability;
    let mut out = vec![Check::equal("game duality", p, dual.success_probability, 1e-6)];
    if eta > 0.0 {
        let p0 = succ_prob_primal(e, &GameConfig::with_eta(0.0)?)?.success_probability;
        out.push(Check::equal("eta scaling", p, (1.0 - eta) * p0, 1e-6));
    }
    let cert = hypothesis_test_certificate(e, &cfg)?;
    out.push(Check::equal("hypothesis-test certificate", cert.gamma_value, p, 1e-6));
    out.push(Check::at_most("abstention weight", eta, primal.abstention.min_eigenvalue(), 1e-7));
    for alpha in [1.5, 2.0] {
        let b = radius_bound(e, &GameConfig::new(eta, alpha, 1)?)?;
        let lhs = -(1.0 - p).ln();
        out.push(Check::at_most(format!("radius bound: alpha={alpha}"), lhs, b.bound, 1e-6));
        if let Some(h) = b.hermitian_bound {
            out.push(Check::at_most(format!("hermitian radius bound: alpha={alpha}"), lhs, h, 1e-6));
        }
    }
    Ok(out)
}

/// Duality of `q_re`, its lower bound by the largest trace, and monotonicity
/// under a random channel drawn from `rng`.
pub fn qre_operator_checks(ops: &[HermitianOperator], rng: &mut impl Rng) -> Result<Vec<Check>> {
    let r = q_re(ops)?;
    let mut out = vec![Check::equal("q_re duality", r.value, r.dual_value, 1e-7)];
    let max_tr = ops.iter().map(|q| q.trace()).fold(0.0, f64::max);
    out.push(Check::at_most("q_re >= max trace", max_tr, r.value, 1e-8));
    let d = ops[0].dim();
    let ch = random::channel(rng, d, d, 2);
    let mapped: Vec<HermitianOperator> = ops.iter().map(|q| ch.apply(q)).collect::<Result<_>>()?;
    out.push(Check::at_most("q_re channel monotone", q_re(&mapped)?.value, r.value, 1e-8));
    Ok(out)
}

/// The success ratio at uniform priors equals `q_re` (at `η_*` and halfway
/// to 1) and no prior vector beats it; `random_priors` prior vectors are
/// drawn from `rng`.
pub fn advantage_checks(states: &[DensityMatrix], random_priors: usize, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let ops: Vec<HermitianOperator> = states.iter().map(|s| s.as_hermitian().clone()).collect();
    let r = q_re(&ops)?;
    let es = eta_star_from(&r);
    let uniform = Ensemble::uniform(states.to_vec())?;
    let mut out = Vec::new();
    for eta in [es, 0.5 * (1.0 + es)] {
        out.push(Check::equal(
            format!("advantage at uniform priors: eta={eta:.6}"),
            success_ratio(&uniform, eta)?,
            r.value,
            1e-6,
        ));
    }
    for i in 0..random_priors {
        let p = random::priors(rng, states.len(), 0.05);
        let e = uniform.with_priors(p)?;
        out.push(Check::at_most(format!("advantage <= q_re: priors #{i}"), success_ratio(&e, es)?, r.value, 1e-6));
    }
    Ok(out)
}

/// [`qre_operator_checks`] on the states followed by [`advantage_checks`].
pub fn qre_checks(states: &[DensityMatrix], random_priors: usize, rng: &mut impl Rng) -> Result<Vec<Check>> {
    let ops: Vec<HermitianOperator> = states.iter().map(|s| s.as_hermitian().clone()).collect();
    let mut out = qre_operator_checks(&ops, rng)?;
    out.extend(advantage_checks(states, random_priors, rng)?);
    Ok(out)
}

/// Channel-level checks: self-divergence, monotonicity in `α`, Choi
/// consistency, sampled inputs, the chain rule, and the adaptive bound over
/// `protocols` random protocols for each number of rounds in `rounds`.
pub fn channel_checks(
    channels: &[Channel],
    priors: &[f64],
    eta: f64,
    rounds: &[usize],
    protocols: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let da = channels[0].dim_in();
    for (x, n) in channels.iter().enumerate() {
        out.push(Check::equal(format!("self divergence: channel {x}"), channel_geometric_renyi(n, n, 1.5)?, 0.0, 1e-7));
        let rho = random::density_matrix(rng, da, da);
        let dev = (&n.apply(&rho)? - &n.apply_via_choi(&rho)?).max_abs_entry();
        out.push(Check::at_most(format!("kraus vs choi: channel {x}"), dev, 0.0, 1e-10));
    }
    for (x, n) in channels.iter().enumerate() {
        for (y, m) in channels.iter().enumerate() {
            if x == y {
                continue;
            }
            let vals: Vec<f64> =
                [1.25, 1.5, 2.0].iter().map(|&a| channel_geometric_renyi(n, m, a)).collect::<Result<_>>()?;
            for w in vals.windows(2) {
                out.push(Check::at_most(format!("channel alpha monotone: {x} vs {y}"), w[0], w[1], 1e-8));
            }
            let value = vals[1];
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..samples {
                let psi = random::pure_state(rng, da * da);
                let a = n.apply_on_second(&psi, da)?;
                let b = m.apply_on_second(&psi, da)?;
                worst = worst.max(geometric_renyi(&a, &b, 1.5)?);
            }
            if samples > 0 {
                out.push(Check::at_most(format!("sampled inputs: {x} vs {y}"), worst, value, 1e-6));
            }
            let r = random::full_rank_state(rng, da * da);
            let s = random::full_rank_state(rng, da * da);
            let lhs = geometric_renyi(&n.apply_on_second(&r, da)?, &m.apply_on_second(&s, da)?, 1.5)?;
            let rhs = value + geometric_renyi(&r, &s, 1.5)?;
            out.push(Check::at_most(format!("chain rule: {x} vs {y}"), lhs, rhs, 1e-6));
        }
    }
    for &n in rounds {
        for alpha in [1.5, 2.0] {
            let bound = adaptive_bound(channels, priors, eta, n, alpha)?;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..protocols {
                let p = random_protocol(rng, da, channels[0].dim_out(), n, 2)?;
                let tr = simulate_protocol(&p, channels)?;
                worst = worst.max(error_exponent(protocol_success(&tr, priors, eta)?, n));
            }
            if protocols > 0 {
                out.push(Check::at_most(format!("adaptive bound: n={n}, alpha={alpha}"), worst, bound, 1e-6));
            }
        }
    }
    let (seq, _) = bs_limit_sequence(channels, 3)?;
    for w in seq.windows(2) {
        out.push(Check::at_most(format!("limit sequence: alpha {:.4} -> {:.4}", w[0].0, w[1].0), w[1].1, w[0].1, 1e-6));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", 1.0, f64::INFINITY, 0.0).passed);
        assert!(!Check::at_most("a", f64::INFINITY, 1.0, 0.0).passed);
        assert!(Check::at_most("a", 1.0 + 1e-9, 1.0, 1e-8).passed);
        assert!(!Check::equal("a", 1.0, 1.1, 1e-3).passed);
        assert!(Check::equal("a", f64::INFINITY, f64::INFINITY, 0.0).passed);
        assert!(!Check::at_most("a", f64::NAN, 1.0, 1.0).passed);
    }

    #[test]
    fn random_pair_passes_divergence_checks() {
        let mut rng = random::rng(17);
        let rho = random::full_rank_state(&mut rng, 2);
        let sigma = random::full_rank_state(&mut rng, 2);
        let checks = divergence_checks(&rho, &sigma, &mut rng).unwrap();
        assert!(all_passed(&checks), "{:?}", failures(&checks));
    }
}
