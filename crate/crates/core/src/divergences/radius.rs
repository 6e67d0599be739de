//! Divergence radius `R(ρ_1..ρ_k) = inf_τ max_x D(τ‖ρ_x)` over states `τ`.
//!
//! Every finite candidate `τ` lives in the common support `S` of the family,
//! so the search runs in coordinates of `S`. For the geometric divergence at
//! `α = 1 + 2^{−l}` the radius is one joint SDP. Otherwise the max is
//! smoothed by a log-sum-exp at increasing temperatures and minimized by
//! mirror descent over density matrices (`τ = exp(H)/tr exp(H)`). Each
//! divergence is a monotone function `h(φ_x)` of a convex surrogate `φ_x`,
//! and the surrogate max is what gets minimized; its Frank–Wolfe gap gives a
//! certified lower bound.

use log::debug;

use super::{add_cascade, cascade_level, reduce_to_subspace, Divergence, Operand};
use crate::error::{Error, Result};
use crate::linalg::{
    common_support, compress, eig, frechet_derivative, nearest_state, psd_log, psd_power, CMatrix, DensityMatrix,
    HermitianOperator, DEFAULT_SUPPORT_TOL,
};
use crate::sdp::{AffineExpr, LinearMap, SdpProblem, Sense};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusMethod {
    Sdp,
    MirrorDescent,
}

#[derive(Clone, Debug)]
pub struct RadiusResult {
    /// `max_x D(τ̂‖ρ_x)` at the returned center: an upper bound on the radius.
    pub value: f64,
    /// Certified lower bound on the radius.
    pub lower_bound: f64,
    pub optimizer_tau: DensityMatrix,
    pub per_state_divergences: Vec<f64>,
    pub iterations: usize,
    pub method: RadiusMethod,
    /// Sandwiched divergence only: the infimum over trace-one Hermitian
    /// centers instead of states (never larger than `value`).
    pub hermitian_value: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RadiusSettings {
    pub temperatures: Vec<f64>,
    pub max_iters: usize,
    /// Stop a temperature stage once the Frank–Wolfe gap drops below this.
    pub stationarity_tol: f64,
}

impl Default for RadiusSettings {
    fn default() -> Self {
        Self { temperatures: vec![10.0, 31.6, 100.0, 316.0, 1000.0], max_iters: 5000, stationarity_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
enum Part {
    /// `φ = tr τ ln τ − tr τ L`.
    Umegaki { log_rho: HermitianOperator },
    /// `φ = ‖B τ B†‖_α` with `B = ρ^{(1−α)/(2α)} V`.
    Sandwiched { b: CMatrix, alpha: f64 },
    /// `φ = tr σ̃ g(σ̃^{−1/2} τ σ̃^{−1/2})`, `g(x) = x^α` or `x ln x`.
    Perspective { sigma: HermitianOperator, sigma_mhalf: HermitianOperator, power: Option<f64> },
}

/// The smoothed radius objective in coordinates of the common support.
#[derive(Clone, Debug)]
pub struct RadiusObjective {
    divergence: Divergence,
    basis: CMatrix,
    parts: Vec<Part>,
}

fn validate_family(states: &[DensityMatrix]) -> Result<usize> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidParameter("radius of an empty family".into()));
    };
    let d = first.dim();
    for s in states {
        if s.dim() != d {
            return Err(crate::LinalgError::DimensionMismatch { expected: d, found: s.dim() }.into());
        }
    }
    Ok(d)
}

fn support_basis_of(states: &[DensityMatrix]) -> Result<CMatrix> {
    let ops: Vec<&HermitianOperator> = states.iter().map(|s| s.as_hermitian()).collect();
    let v = common_support(&ops, DEFAULT_SUPPORT_TOL);
    if v.ncols() == 0 {
        return Err(Error::SupportEmpty);
    }
    Ok(v)
}

impl RadiusObjective {
    pub fn new(states: &[DensityMatrix], divergence: Divergence) -> Result<Self> {
        divergence.validate()?;
        validate_family(states)?;
        let basis = support_basis_of(states)?;
        let mut parts = Vec::with_capacity(states.len());
        for rho in states {
            let part = match divergence {
                Divergence::Umegaki => Part::Umegaki { log_rho: compress(&psd_log(rho, DEFAULT_SUPPORT_TOL)?, &basis) },
                Divergence::Sandwiched { alpha } => {
                    let a = (1.0 - alpha) / (2.0 * alpha);
                    let ra = psd_power(rho, a, DEFAULT_SUPPORT_TOL)?;
                    Part::Sandwiched { b: ra.matrix() * &basis, alpha }
                }
                Divergence::Geometric { alpha } => {
                    let sigma = reduce_to_subspace(rho, &basis)?;
                    let sigma_mhalf = psd_power(&sigma, -0.5, DEFAULT_SUPPORT_TOL)?;
                    Part::Perspective { sigma, sigma_mhalf, power: Some(alpha) }
                }
                Divergence::BelavkinStaszewski => {
                    let sigma = reduce_to_subspace(rho, &basis)?;
                    let sigma_mhalf = psd_power(&sigma, -0.5, DEFAULT_SUPPORT_TOL)?;
                    Part::Perspective { sigma, sigma_mhalf, power: None }
                }
            };
            parts.push(part);
        }
        Ok(Self { divergence, basis, parts })
    }

    /// Dimension of the common support.
    pub fn reduced_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Support basis as columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Maps a reduced operator back to the full space: `V τ V†`.
    pub fn embed(&self, tau: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.basis * tau.matrix() * self.basis.adjoint())
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Converts a surrogate value to the divergence value.
    pub fn to_divergence(&self, phi: f64) -> f64 {
        match self.divergence {
            Divergence::Sandwiched { alpha } => alpha / (alpha - 1.0) * phi.ln(),
            Divergence::Geometric { alpha } => phi.ln() / (alpha - 1.0),
            Divergence::Umegaki | Divergence::BelavkinStaszewski => phi,
        }
    }

    /// Surrogate `φ_x(τ)` and its gradient at a reduced, positive definite `τ`.
    pub fn surrogate(&self, x: usize, tau: &HermitianOperator) -> Result<(f64, HermitianOperator)> {
        match &self.parts[x] {
            Part::Umegaki { log_rho } => {
                let spec = eig(tau);
                if spec.eigenvalues.iter().any(|&l| l <= 0.0) {
                    return Err(Error::InvalidParameter(
                        "relative entropy surrogate needs a positive definite center".into(),
                    ));
                }
                let log_tau = spec.reconstruct_with(f64::ln);
                let val = tau.inner(&log_tau) - tau.inner(log_rho);
                let grad = &(&log_tau - log_rho) + &HermitianOperator::identity(tau.dim());
                Ok((val, grad))
            }
            Part::Sandwiched { b, alpha } => {
                let y = HermitianOperator::from_matrix_unchecked(b * tau.matrix() * b.adjoint());
                let spec = eig(&y);
                let sum: f64 = spec.eigenvalues.iter().map(|l| l.abs().powf(*alpha)).sum();
                let norm = sum.powf(1.0 / alpha);
                let dpow = spec.reconstruct_with(|l| l.signum() * l.abs().powf(alpha - 1.0));
                let g = b.adjoint() * dpow.matrix() * b;
                let grad = HermitianOperator::from_matrix_unchecked(g).scale(1.0 / norm.powf(alpha - 1.0));
                Ok((norm, grad))
            }
            Part::Perspective { sigma, sigma_mhalf, power } => {
                let x = tau.sandwich(sigma_mhalf);
                let spec = eig(&x);
                let (val, dgrad) = match power {
                    Some(a) => {
                        let a = *a;
                        let f = move |l: f64| l.max(0.0).powf(a);
                        let fp = move |l: f64| a * l.max(0.0).powf(a - 1.0);
                        let fx = spec.reconstruct_with(f);
                        (sigma.inner(&fx), frechet_derivative(&spec, f, fp, sigma))
                    }
                    None => {
                        let f = |l: f64| if l > 0.0 { l * l.ln() } else { 0.0 };
                        let fp = |l: f64| l.ln() + 1.0;
                        let fx = spec.reconstruct_with(f);
                        (sigma.inner(&fx), frechet_derivative(&spec, f, fp, sigma))
                    }
                };
                Ok((val, dgrad.sandwich(sigma_mhalf)))
            }
        }
    }

    /// Log-sum-exp smoothing `F_T = (1/T) ln Σ_x exp(T φ_x)` and its gradient;
    /// also returns the individual surrogate values.
    pub fn smoothed(&self, tau: &HermitianOperator, temperature: f64) -> Result<(f64, HermitianOperator, Vec<f64>)> {
        let mut vals = Vec::with_capacity(self.parts.len());
        let mut grads = Vec::with_capacity(self.parts.len());
        for x in 0..self.parts.len() {
            let (v, g) = self.surrogate(x, tau)?;
            vals.push(v);
            grads.push(g);
        }
        let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = vals.iter().map(|v| (temperature * (v - m)).exp()).collect();
        let z: f64 = w.iter().sum();
        let f = m + z.ln() / temperature;
        let mut g = HermitianOperator::zeros(tau.dim());
        for (wi, gi) in w.iter().zip(&grads) {
            g = &g + &gi.scale(wi / z);
        }
        Ok((f, g, vals))
    }
}

fn exp_state(h: &HermitianOperator) -> HermitianOperator {
    let spec = eig(h);
    let top = spec.eigenvalues[0];
    let e = spec.reconstruct_with(|l| (l - top).exp());
    let tr = e.trace();
    e.scale(1.0 / tr)
}

struct DescentOutcome {
    best_tau: HermitianOperator,
    best_max: f64,
    lower: f64,
    iterations: usize,
}

fn mirror_descent(obj: &RadiusObjective, tau0: HermitianOperator, st: &RadiusSettings) -> Result<DescentOutcome> {
    let s = obj.reduced_dim();
    let k = obj.len() as f64;
    let mut tau = tau0;
    let mut h = eig(&tau).reconstruct_with(|l| l.max(1e-300).ln());
    let mut best_tau = tau.clone();
    let mut best_max = f64::INFINITY;
    let mut iterations = 0;
    let mut lower = f64::NEG_INFINITY;

    for &temp in &st.temperatures {
        let mut step = 1.0;
        let (mut f, mut g, mut vals) = obj.smoothed(&tau, temp)?;
        loop {
            let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if vmax < best_max {
                best_max = vmax;
                best_tau = tau.clone();
            }
            // Frank–Wolfe gap: F(τ) − min_σ [F(τ) + tr G(σ − τ)].
            let fw_gap = (tau.inner(&g) - g.min_eigenvalue()).max(0.0);
            lower = lower.max(f - fw_gap - k.ln() / temp);
            if fw_gap <= st.stationarity_tol || iterations >= st.max_iters {
                break;
            }
            iterations += 1;
            let mut accepted = false;
            while step > 1e-14 {
                let h_new = &h - &g.scale(step);
                let tau_new = exp_state(&h_new);
                match obj.smoothed(&tau_new, temp) {
                    Ok((f_new, g_new, vals_new)) if f_new <= f + 0.5 * g.inner(&(&tau_new - &tau)) => {
                        h = h_new;
                        tau = tau_new;
                        f = f_new;
                        g = g_new;
                        vals = vals_new;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !accepted {
                debug!("mirror descent stalled at T={temp} after {iterations} iterations");
                break;
            }
        }
        debug!("radius stage T={temp}: F={f:.10} iterations={iterations}");
        if iterations >= st.max_iters {
            break;
        }
    }
    if s == 1 {
        lower = best_max;
    }
    Ok(DescentOutcome { best_tau, best_max, lower, iterations })
}

fn finish(
    states: &[DensityMatrix],
    divergence: Divergence,
    tau_full: &HermitianOperator,
    lower_bound: f64,
    iterations: usize,
    method: RadiusMethod,
) -> Result<RadiusResult> {
    let tau = nearest_state(tau_full)?;
    let per: Vec<f64> = states.iter().map(|r| divergence.evaluate(&tau, r)).collect::<Result<_>>()?;
    let value = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(RadiusResult {
        value,
        lower_bound: lower_bound.min(value),
        optimizer_tau: tau,
        per_state_divergences: per,
        iterations,
        method,
        hermitian_value: None,
    })
}

fn start_point(states: &[DensityMatrix], basis: &CMatrix) -> HermitianOperator {
    let d = states[0].dim();
    let mut mean = HermitianOperator::zeros(d);
    for r in states {
        mean = &mean + r.as_hermitian();
    }
    let c = compress(&mean, basis);
    let tr = c.trace();
    c.scale(1.0 / tr)
}

/// Radius of a family of states under `divergence`.
///
/// Fails with [`Error::SupportEmpty`] when the states have no common support
/// vector (every center then has infinite divergence to some state).
pub fn radius(states: &[DensityMatrix], divergence: Divergence) -> Result<RadiusResult> {
    radius_with(states, divergence, &RadiusSettings::default())
}

pub fn radius_with(states: &[DensityMatrix], divergence: Divergence, st: &RadiusSettings) -> Result<RadiusResult> {
    divergence.validate()?;
    validate_family(states)?;
    if let Divergence::Geometric { alpha } = divergence {
        if let Some(l) = cascade_level(alpha) {
            return geometric_radius_sdp(states, alpha, l);
        }
    }
    let obj = RadiusObjective::new(states, divergence)?;
    let tau0 = start_point(states, obj.basis());
    let out = mirror_descent(&obj, tau0, st)?;
    let lower = if out.lower.is_finite() && out.lower > 0.0 { obj.to_divergence(out.lower).max(0.0) } else { 0.0 };
    let best_tau_full = obj.embed(&out.best_tau);
    let mut res = finish(states, divergence, &best_tau_full, lower, out.iterations, RadiusMethod::MirrorDescent)?;
    debug!("radius {divergence}: surrogate max {:.3e}, value {}", out.best_max, res.value);
    if let Divergence::Sandwiched { .. } = divergence {
        let h = hermitian_descent(&obj, &out.best_tau, st)?;
        res.hermitian_value = Some(h.min(res.value));
    }
    Ok(res)
}

/// Radius value with an empty common support mapped to `+∞`.
pub fn radius_value(states: &[DensityMatrix], divergence: Divergence) -> Result<f64> {
    match radius(states, divergence) {
        Ok(r) => Ok(r.value),
        Err(Error::SupportEmpty) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn geometric_radius_sdp(states: &[DensityMatrix], alpha: f64, l: u32) -> Result<RadiusResult> {
    let basis = support_basis_of(states)?;
    let s = basis.ncols();
    let mut p = SdpProblem::new(Sense::Minimize);
    let (tau, _) = p.add_psd_variable("tau", s);
    p.add_equality(
        "tr tau = 1",
        AffineExpr::constant(&HermitianOperator::diag(&[-1.0])).plus(tau, LinearMap::trace(s, 1.0)),
    )?;
    let mu = p.add_scalar("mu");
    p.add_objective(mu, &HermitianOperator::identity(1));
    let reduced: Vec<HermitianOperator> =
        states.iter().map(|r| reduce_to_subspace(r, &basis)).collect::<Result<_>>()?;
    for (x, sigma) in reduced.iter().enumerate() {
        let m = add_cascade(&mut p, &format!("x{x}"), Operand::Var(tau), Operand::Const(sigma), s, l)?;
        p.add_lmi(format!("mu >= tr M{x}"), AffineExpr::zero(1).plus_var(mu, 1.0).plus(m, LinearMap::trace(s, -1.0)))?;
    }
    let sol = p.solve()?.require_optimal()?;
    let lower = if sol.dual_value > 0.0 { (sol.dual_value.ln() / (alpha - 1.0)).max(0.0) } else { 0.0 };
    let tau_full = HermitianOperator::from_matrix_unchecked(&basis * sol.value(tau).matrix() * basis.adjoint());
    let div = Divergence::Geometric { alpha };
    finish(states, div, &tau_full, lower, sol.iterations, RadiusMethod::Sdp)
}

/// Projected gradient descent of the smoothed sandwiched surrogate over
/// trace-one Hermitian `τ` (in support coordinates), started at `tau0`.
/// Returns the best `max_x D̃_α(τ‖ρ_x)` seen.
fn hermitian_descent(obj: &RadiusObjective, tau0: &HermitianOperator, st: &RadiusSettings) -> Result<f64> {
    let s = obj.reduced_dim();
    let eye = HermitianOperator::identity(s);
    let project = |g: &HermitianOperator| g - &eye.scale(g.trace() / s as f64);
    let mut tau = tau0.clone();
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    for &temp in &st.temperatures {
        let mut step = 0.1;
        let (mut f, mut g, mut vals) = obj.smoothed(&tau, temp)?;
        loop {
            best = best.min(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            let pg = project(&g);
            let gn = pg.frobenius_norm();
            if gn <= st.stationarity_tol || iterations >= st.max_iters {
                break;
            }
            iterations += 1;
            let mut accepted = false;
            while step > 1e-14 {
                let cand = &tau - &pg.scale(step);
                let (f_new, g_new, vals_new) = obj.smoothed(&cand, temp)?;
                if f_new <= f - 0.5 * step * gn * gn {
                    tau = cand;
                    f = f_new;
                    g = g_new;
                    vals = vals_new;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if iterations >= st.max_iters {
            break;
        }
    }
    Ok(obj.to_divergence(best))
}

/// Sandwiched radius over trace-one Hermitian centers (the center is not
/// required to be positive semidefinite).
pub fn hermitian_sandwiched_radius(states: &[DensityMatrix], alpha: f64) -> Result<f64> {
    let div = Divergence::Sandwiched { alpha };
    let obj = RadiusObjective::new(states, div)?;
    let st = RadiusSettings::default();
    let tau0 = start_point(states, obj.basis());
    let out = mirror_descent(&obj, tau0, &st)?;
    hermitian_descent(&obj, &out.best_tau, &st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn diag_pair() -> Vec<DensityMatrix> {
        vec![DensityMatrix::diag(&[0.75, 0.25]).unwrap(), DensityMatrix::diag(&[0.25, 0.75]).unwrap()]
    }

    #[test]
    fn identical_states_have_zero_radius() {
        let rho = random::full_rank_state(&mut random::rng(1), 3);
        for div in [
            Divergence::Umegaki,
            Divergence::Sandwiched { alpha: 2.0 },
            Divergence::Geometric { alpha: 1.5 },
            Divergence::BelavkinStaszewski,
        ] {
            let r = radius(&[rho.clone(), rho.clone()], div).unwrap();
            assert!(r.value.abs() < 1e-9, "{div}: {}", r.value);
            assert!((r.optimizer_tau.as_hermitian() - rho.as_hermitian()).max_abs_entry() < 1e-4);
        }
    }

    #[test]
    fn orthogonal_pair_has_no_common_support() {
        let pair = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
        assert!(matches!(radius(&pair, Divergence::Umegaki), Err(Error::SupportEmpty)));
        assert!(radius_value(&pair, Divergence::Umegaki).unwrap().is_infinite());
        // distinct pure states never share support, orthogonal or not
        let s = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&nalgebra::DVector::from_vec(vec![crate::linalg::c64(s, 0.0); 2]));
        let pair = vec![DensityMatrix::basis(2, 0), plus];
        for div in [Divergence::Sandwiched { alpha: 2.0 }, Divergence::Geometric { alpha: 1.5 }] {
            assert!(matches!(radius(&pair, div), Err(Error::SupportEmpty)));
        }
    }

    #[test]
    fn commuting_pair_umegaki_radius() {
        let r = radius(&diag_pair(), Divergence::Umegaki).unwrap();
        let expected = 0.5 * (4.0f64 / 3.0).ln();
        assert!((r.value - expected).abs() < 1e-6, "{}", r.value);
        assert!(r.lower_bound <= r.value && r.lower_bound > expected - 1e-3);
        let max = r.per_state_divergences.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((max - r.value).abs() < 1e-12);
    }

    #[test]
    fn geometric_radius_sdp_and_descent_agree() {
        let mut rng = random::rng(21);
        let states: Vec<DensityMatrix> = (0..3).map(|_| random::full_rank_state(&mut rng, 2)).collect();
        let sdp = radius(&states, Divergence::Geometric { alpha: 1.5 }).unwrap();
        assert_eq!(sdp.method, RadiusMethod::Sdp);
        let obj = RadiusObjective::new(&states, Divergence::Geometric { alpha: 1.5 }).unwrap();
        let out = mirror_descent(&obj, start_point(&states, obj.basis()), &RadiusSettings::default()).unwrap();
        let md = obj.to_divergence(out.best_max);
        assert!(md >= sdp.lower_bound - 1e-6);
        assert!((md - sdp.value).abs() < 1e-3, "{md} vs {}", sdp.value);
    }

    #[test]
    fn smoothed_gradient_matches_finite_differences() {
        let mut rng = random::rng(33);
        let states: Vec<DensityMatrix> = (0..3).map(|_| random::full_rank_state(&mut rng, 3)).collect();
        for div in [
            Divergence::Umegaki,
            Divergence::Sandwiched { alpha: 1.5 },
            Divergence::Geometric { alpha: 1.3 },
            Divergence::BelavkinStaszewski,
        ] {
            let obj = RadiusObjective::new(&states, div).unwrap();
            for _ in 0..5 {
                let tau = random::full_rank_state(&mut rng, 3).into_hermitian();
                let dir = random::hermitian(&mut rng, 3);
                let (_, g, _) = obj.smoothed(&tau, 10.0).unwrap();
                let h = 1e-6;
                let fp = obj.smoothed(&(&tau + &dir.scale(h)), 10.0).unwrap().0;
                let fm = obj.smoothed(&(&tau - &dir.scale(h)), 10.0).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                let an = g.inner(&dir);
                assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "{div}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn hermitian_radius_not_above_state_radius() {
        let r = radius(&diag_pair(), Divergence::Sandwiched { alpha: 2.0 }).unwrap();
        let h = r.hermitian_value.unwrap();
        assert!(h <= r.value + 1e-12);
    }
}
