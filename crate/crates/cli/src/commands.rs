//! Subcommand implementations.

use revud_core::channelgame::{
    adaptive_bound_offset, bs_limit_sequence, channel_divergence_sdp, channel_geometric_renyi, channel_radius_sdp,
    error_exponent, protocol_success, random_protocol, simulate_protocol, Channel,
};
use revud_core::divergences::{
    belavkin_staszewski, cascade_level, gamma_eps, gamma_to_divergence, geometric_renyi, geometric_renyi_sdp, radius,
    sandwiched_renyi, umegaki, Divergence, RadiusMethod,
};
use revud_core::random;
use revud_core::stategame::{
    advantage_ratio, eta_star_from, hypothesis_test_certificate, q_re, radius_bound, succ_prob_dual, succ_prob_primal,
    Ensemble, GameConfig,
};
use revud_core::validate::{
    advantage_checks, channel_checks, divergence_checks, qre_operator_checks, state_game_checks,
};
use revud_core::{DensityMatrix, Error, HermitianOperator, TraceOneHermitian};
use serde_json::Value;

use crate::problem::{Payload, Problem};
use crate::report::{matrices, matrix, num, nums, opt_num, Record, Report};
use crate::{CliError, Command, Common, DivergenceKind, RadiusKind};

/// Parameters after merging command-line flags over the file's `params`.
#[derive(Clone, Debug)]
pub struct Params {
    pub eta: Vec<f64>,
    pub alpha: Option<f64>,
    pub l: Option<u32>,
    pub n: Vec<usize>,
    pub eps: f64,
    pub seed: u64,
    pub tol: f64,
    pub certificates: bool,
}

impl Params {
    fn resolve(c: &Common, p: &Problem, default_n: &[usize]) -> Result<Self, CliError> {
        let f = &p.params;
        let out = Self {
            eta: c.eta.clone().or_else(|| f.eta.clone()).unwrap_or_else(|| vec![0.0]),
            alpha: c.alpha.or(f.alpha),
            l: c.l.or(f.l),
            n: c.n.clone().or_else(|| f.n.clone()).unwrap_or_else(|| default_n.to_vec()),
            eps: c.eps.or(f.eps).unwrap_or(0.1),
            seed: c.seed.or(f.seed).unwrap_or(0),
            tol: c.tol.or(f.tol).unwrap_or(1e-6),
            certificates: c.certificates,
        };
        if let Some(e) = out.eta.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(CliError::Input(format!("eta: {e} is outside [0, 1)")));
        }
        if out.n.contains(&0) {
            return Err(CliError::Input("n: must be at least 1".into()));
        }
        if !(out.eps > 0.0 && out.eps < 1.0) {
            return Err(CliError::Input(format!("eps: {} is outside (0, 1)", out.eps)));
        }
        if !(out.tol > 0.0) {
            return Err(CliError::Input(format!("tol: {} must be positive", out.tol)));
        }
        if let Some(l) = out.l {
            if l > 10 {
                return Err(CliError::Input(format!("l: {l} is above 10")));
            }
        }
        Ok(out)
    }

    fn record(&self) -> Record {
        Record::new()
            .with("eta", nums(&self.eta))
            .with("alpha", opt_num(self.alpha))
            .with("l", self.l.map(Value::from).unwrap_or(Value::Null))
            .with("n", Value::Array(self.n.iter().map(|&n| Value::from(n)).collect()))
            .with("eps", num(self.eps))
            .with("seed", self.seed)
            .with("tol", num(self.tol))
            .with("certificates", self.certificates)
    }

    /// `α = 1 + 2^{−l}` from `--l`, or from a dyadic `--alpha`; `default_l`
    /// otherwise.
    fn cascade(&self, default_l: u32) -> Result<(u32, f64), CliError> {
        match (self.l, self.alpha) {
            (Some(l), Some(a)) if (1.0 + 0.5f64.powi(l as i32) - a).abs() > 1e-12 => {
                Err(CliError::Input(format!("alpha = {a} does not match l = {l}")))
            }
            (Some(l), _) => Ok((l, 1.0 + 0.5f64.powi(l as i32))),
            (None, Some(a)) => cascade_level(a)
                .map(|l| (l, a))
                .ok_or_else(|| CliError::Input(format!("alpha = {a} is not of the form 1 + 2^-l"))),
            (None, None) => Ok((default_l, 1.0 + 0.5f64.powi(default_l as i32))),
        }
    }
}

fn states(p: &Problem) -> Result<&[DensityMatrix], CliError> {
    match &p.payload {
        Payload::States(s) => Ok(s),
        other => Err(CliError::Input(format!("kind: this command needs states, the file has {}", other.kind()))),
    }
}

fn channels(p: &Problem) -> Result<&[Channel], CliError> {
    match &p.payload {
        Payload::Channels(c) => Ok(c),
        other => Err(CliError::Input(format!("kind: this command needs channels, the file has {}", other.kind()))),
    }
}

fn priors(p: &Problem, k: usize) -> Vec<f64> {
    p.priors.clone().unwrap_or_else(|| vec![1.0 / k as f64; k])
}

fn ensemble(p: &Problem) -> Result<Ensemble, CliError> {
    let s = states(p)?;
    Ensemble::new(s.to_vec(), priors(p, s.len())).map_err(|e| CliError::Input(format!("priors: {e}")))
}

fn need_at_least(count: usize, have: usize, what: &str) -> Result<(), CliError> {
    if have < count {
        return Err(CliError::Input(format!("{what}: need at least {count}, the file has {have}")));
    }
    Ok(())
}

pub fn dispatch(cmd: &Command, common: &Common, problem: &Problem, input: String) -> Result<Report, CliError> {
    let default_n: &[usize] = match cmd {
        Command::Simulate { .. } | Command::Validate { .. } => &[1, 2, 3],
        _ => &[1],
    };
    let params = Params::resolve(common, problem, default_n)?;
    let name = match cmd {
        Command::Divergence { .. } => "divergence",
        Command::Radius { .. } => "radius",
        Command::StateGame => "state-game",
        Command::Qre => "qre",
        Command::Advantage => "advantage",
        Command::ChannelDivergence => "channel-divergence",
        Command::ChannelBound { .. } => "channel-bound",
        Command::Simulate { .. } => "simulate",
        Command::Validate { .. } => "validate",
    };
    let mut report = Report::new(name, Some(input), params.record());
    match cmd {
        Command::Divergence { kind } => divergence(&mut report, problem, &params, *kind)?,
        Command::Radius { kind } => radius_cmd(&mut report, problem, &params, *kind)?,
        Command::StateGame => state_game(&mut report, problem, &params)?,
        Command::Qre => qre(&mut report, problem, &params)?,
        Command::Advantage => advantage(&mut report, problem, &params)?,
        Command::ChannelDivergence => channel_divergence(&mut report, problem, &params)?,
        Command::ChannelBound { sequence } => channel_bound(&mut report, problem, &params, *sequence)?,
        Command::Simulate { protocols, ref_dim } => simulate(&mut report, problem, &params, *protocols, *ref_dim)?,
        Command::Validate { protocols } => validate(&mut report, problem, &params, *protocols)?,
    }
    Ok(report)
}

fn divergence(report: &mut Report, p: &Problem, params: &Params, kind: DivergenceKind) -> Result<(), CliError> {
    let s = states(p)?;
    need_at_least(2, s.len(), "matrices")?;
    let (rho, sigma) = (&s[0], &s[1]);
    let alpha = params.alpha.unwrap_or(2.0);
    let rec = |name: &str, a: Option<f64>, v: f64| {
        Record::new().with("divergence", name).with("alpha", opt_num(a)).with("value", num(v))
    };
    let all = kind == DivergenceKind::All;
    if all || kind == DivergenceKind::Sandwiched {
        report.results.push(rec("sandwiched", Some(alpha), sandwiched_renyi(rho, sigma, alpha)?));
    }
    if all || kind == DivergenceKind::Geometric {
        report.results.push(rec("geometric", Some(alpha), geometric_renyi(rho, sigma, alpha)?));
    }
    if all || kind == DivergenceKind::GeometricSdp {
        let (l, a) = params.cascade(0)?;
        let r = rec("geometric-sdp", Some(a), geometric_renyi_sdp(rho, sigma, l)?).with("l", l);
        report.results.push(r);
    }
    if all || kind == DivergenceKind::Umegaki {
        report.results.push(rec("umegaki", None, umegaki(rho, sigma)?));
    }
    if all || kind == DivergenceKind::Bs {
        report.results.push(rec("belavkin-staszewski", None, belavkin_staszewski(rho, sigma)?));
    }
    if all || kind == DivergenceKind::Hypothesis {
        let g = gamma_eps(&TraceOneHermitian::from(rho.clone()), sigma, params.eps)?;
        report.results.push(
            rec("hypothesis-testing", None, gamma_to_divergence(g)).with("eps", num(params.eps)).with("gamma", num(g)),
        );
    }
    Ok(())
}

fn radius_cmd(report: &mut Report, p: &Problem, params: &Params, kind: RadiusKind) -> Result<(), CliError> {
    let s = states(p)?;
    let alpha = params.alpha.unwrap_or(2.0);
    let div = match kind {
        RadiusKind::Sandwiched => Divergence::Sandwiched { alpha },
        RadiusKind::Geometric => Divergence::Geometric { alpha },
        RadiusKind::Umegaki => Divergence::Umegaki,
        RadiusKind::Bs => Divergence::BelavkinStaszewski,
    };
    div.validate()?;
    let base = Record::new().with("divergence", div.to_string());
    match radius(s, div) {
        Ok(r) => {
            report.results.push(
                base.with("value", num(r.value))
                    .with("lower_bound", num(r.lower_bound))
                    .with("hermitian_value", opt_num(r.hermitian_value))
                    .with("per_state", nums(&r.per_state_divergences))
                    .with(
                        "method",
                        match r.method {
                            RadiusMethod::Sdp => "sdp",
                            RadiusMethod::MirrorDescent => "mirror-descent",
                        },
                    )
                    .with("iterations", r.iterations),
            );
            if params.certificates {
                report.certificates = Some(Record::new().with("optimizer_tau", matrix(&r.optimizer_tau)).into_value());
            }
        }
        Err(Error::SupportEmpty) => {
            report.results.push(base.with("value", num(f64::INFINITY)).with("note", "states share no support"));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn state_game(report: &mut Report, p: &Problem, params: &Params) -> Result<(), CliError> {
    let e = ensemble(p)?;
    let alpha = params.alpha.unwrap_or(2.0);
    let mut certs = Vec::new();
    for &eta in &params.eta {
        let cfg = GameConfig::new(eta, alpha, 1)?;
        let primal = succ_prob_primal(&e, &cfg)?;
        let dual = succ_prob_dual(&e, &cfg)?;
        let cert = hypothesis_test_certificate(&e, &cfg)?;
        let bound = radius_bound(&e, &cfg)?;
        let ps = primal.success_probability;
        let consistent =
            (ps - dual.success_probability).abs() <= params.tol && (cert.gamma_value - ps).abs() <= params.tol;
        report.results.push(
            Record::new()
                .with("eta", num(eta))
                .with("success_probability", num(ps))
                .with("dual_value", num(dual.success_probability))
                .with("certificate_gamma", num(cert.gamma_value))
                .with("epsilon", num(cert.epsilon))
                .with("error_exponent", num(-(1.0 - ps).ln()))
                .with("alpha", num(alpha))
                .with("radius", num(bound.radius))
                .with("radius_bound", num(bound.bound))
                .with("hermitian_radius_bound", opt_num(bound.hermitian_bound))
                .with("gap", num(primal.gap.max(dual.gap)))
                .with("iterations", primal.iterations + dual.iterations)
                .with("tolerance", num(params.tol))
                .with("consistent", consistent),
        );
        if params.certificates {
            certs.push(
                Record::new()
                    .with("eta", num(eta))
                    .with("povm", matrices(&primal.optimal_povm))
                    .with("abstention", matrix(&primal.abstention))
                    .with("dual_certificate", matrix(&dual.dual_certificate))
                    .with("tau_hat", matrix(&cert.tau_hat))
                    .into_value(),
            );
        }
    }
    if params.certificates {
        report.certificates = Some(Value::Array(certs));
    }
    Ok(())
}

fn operators(p: &Problem) -> Vec<HermitianOperator> {
    match &p.payload {
        Payload::States(s) => s.iter().map(|x| x.as_hermitian().clone()).collect(),
        Payload::Operators(o) => o.clone(),
        Payload::Channels(_) => Vec::new(),
    }
}

fn qre(report: &mut Report, p: &Problem, params: &Params) -> Result<(), CliError> {
    if let Payload::Channels(_) = p.payload {
        return Err(CliError::Input("kind: qre needs states or operators".into()));
    }
    let ops = operators(p);
    let r = q_re(&ops)?;
    report.results.push(
        Record::new()
            .with("value", num(r.value))
            .with("dual_value", num(r.dual_value))
            .with("gap", num(r.gap))
            .with("eta_star", num(eta_star_from(&r)))
            .with("tolerance", num(params.tol))
            .with("consistent", r.gap <= params.tol),
    );
    if params.certificates {
        report.certificates = Some(Record::new().with("p", matrix(&r.p)).with("y", matrices(&r.y)).into_value());
    }
    Ok(())
}

fn advantage(report: &mut Report, p: &Problem, params: &Params) -> Result<(), CliError> {
    let s = states(p)?;
    for &eta in &params.eta {
        let a = advantage_ratio(s, eta)?;
        report.results.push(
            Record::new()
                .with("eta", num(eta))
                .with("ratio_at_uniform", num(a.ratio_at_uniform))
                .with("q_re", num(a.q_re_value))
                .with("quantum_success", num(a.quantum_success))
                .with("classical_success", num(a.classical_success))
                .with("eta_star", num(a.eta_star))
                .with("below_eta_star", eta < a.eta_star)
                .with("tolerance", num(params.tol))
                .with("consistent", (a.ratio_at_uniform - a.q_re_value).abs() <= params.tol),
        );
    }
    Ok(())
}

fn channel_divergence(report: &mut Report, p: &Problem, params: &Params) -> Result<(), CliError> {
    let c = channels(p)?;
    need_at_least(2, c.len(), "channels")?;
    let alpha = params.alpha.unwrap_or(2.0);
    let sdp_level =
        if params.l.is_some() { Some(params.cascade(0)?) } else { cascade_level(alpha).map(|l| (l, alpha)) };
    for (x, n) in c.iter().enumerate() {
        for (y, m) in c.iter().enumerate() {
            if x == y {
                continue;
            }
            let mut r = Record::new()
                .with("first", x)
                .with("second", y)
                .with("alpha", num(alpha))
                .with("value", num(channel_geometric_renyi(n, m, alpha)?));
            if let Some((l, a)) = sdp_level {
                r.set("sdp_alpha", num(a));
                r.set("sdp_value", num(channel_divergence_sdp(n, m, l)?));
            }
            report.results.push(r);
        }
    }
    Ok(())
}

fn channel_bound(report: &mut Report, p: &Problem, params: &Params, sequence: bool) -> Result<(), CliError> {
    let c = channels(p)?;
    let pri = priors(p, c.len());
    let (l, alpha) = params.cascade(0)?;
    let r = channel_radius_sdp(c, l)?;
    for &eta in &params.eta {
        for &n in &params.n {
            let offset = adaptive_bound_offset(&pri, eta, n, alpha);
            report.results.push(
                Record::new()
                    .with("eta", num(eta))
                    .with("n", n)
                    .with("alpha", num(alpha))
                    .with("channel_radius", num(r.value))
                    .with("offset", num(offset))
                    .with("bound", num(r.value + offset))
                    .with("gap", num(r.gap))
                    .with("iterations", r.iterations),
            );
        }
    }
    let mut certs = Record::new();
    if params.certificates {
        certs.set("center_choi", r.choi_center.as_ref().map(matrix).unwrap_or(Value::Null));
    }
    if sequence {
        let (seq, best) = bs_limit_sequence(c, 3)?;
        let entries: Vec<Value> =
            seq.iter().map(|(a, v)| Record::new().with("alpha", num(*a)).with("value", num(*v)).into_value()).collect();
        let nonincreasing = seq.windows(2).all(|w| w[1].1 <= w[0].1 + params.tol);
        report.parameters.set("limit_sequence", Value::Array(entries));
        report.parameters.set("limit_upper_bound", num(best));
        report.parameters.set("limit_sequence_nonincreasing", nonincreasing);
    }
    if params.certificates {
        report.certificates = Some(certs.into_value());
    }
    Ok(())
}

fn simulate(
    report: &mut Report,
    p: &Problem,
    params: &Params,
    protocols: usize,
    ref_dim: usize,
) -> Result<(), CliError> {
    let c = channels(p)?;
    let pri = priors(p, c.len());
    let (l, alpha) = params.cascade(0)?;
    let radius = channel_radius_sdp(c, l)?.value;
    let mut rng = random::rng(params.seed);
    for &eta in &params.eta {
        for &n in &params.n {
            let bound = radius + adaptive_bound_offset(&pri, eta, n, alpha);
            let mut exps = Vec::with_capacity(protocols);
            for _ in 0..protocols {
                let proto = random_protocol(&mut rng, c[0].dim_in(), c[0].dim_out(), n, ref_dim)?;
                let tr = simulate_protocol(&proto, c)?;
                exps.push(error_exponent(protocol_success(&tr, &pri, eta)?, n));
            }
            let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = exps.iter().sum::<f64>() / exps.len().max(1) as f64;
            let violations = exps.iter().filter(|&&x| x > bound + params.tol).count();
            report.results.push(
                Record::new()
                    .with("eta", num(eta))
                    .with("n", n)
                    .with("alpha", num(alpha))
                    .with("bound", num(bound))
                    .with("max_exponent", num(max))
                    .with("mean_exponent", num(mean))
                    .with("protocols", protocols)
                    .with("violations", violations)
                    .with("tolerance", num(params.tol)),
            );
        }
    }
    Ok(())
}

fn validate(report: &mut Report, p: &Problem, params: &Params, protocols: usize) -> Result<(), CliError> {
    let mut rng = random::rng(params.seed);
    match &p.payload {
        Payload::States(s) => {
            if s.len() >= 2 {
                report.checks.extend(divergence_checks(&s[0], &s[1], &mut rng)?);
            }
            let e = ensemble(p)?;
            for &eta in &params.eta {
                report.checks.extend(state_game_checks(&e, eta)?);
            }
            let ops: Vec<HermitianOperator> = s.iter().map(|x| x.as_hermitian().clone()).collect();
            report.checks.extend(qre_operator_checks(&ops, &mut rng)?);
            report.checks.extend(advantage_checks(s, 20, &mut rng)?);
        }
        Payload::Operators(o) => report.checks.extend(qre_operator_checks(o, &mut rng)?),
        Payload::Channels(c) => {
            let pri = priors(p, c.len());
            for &eta in &params.eta {
                report.checks.extend(channel_checks(c, &pri, eta, &params.n, protocols, 50, &mut rng)?);
            }
        }
    }
    Ok(())
}
