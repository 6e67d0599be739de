//! Seeded random instances: states, unitaries, channels, Hermitian matrices.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channelgame::Channel;
use crate::linalg::{c64, CMatrix, DensityMatrix, HermitianOperator, C64};
use crate::sdp::{AffineExpr, LinearMap, LmiId, SdpProblem, Sense, VarId};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c(rng))
}

/// Haar-random pure state vector.
pub fn pure_vector(rng: &mut impl Rng, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| gaussian_c(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn pure_state(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    DensityMatrix::pure(&pure_vector(rng, dim))
}

/// Induced-measure mixed state `G G† / tr(G G†)` with `G` of shape `dim x rank`.
pub fn density_matrix(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, rank.max(1));
    let h = HermitianOperator::from_matrix_unchecked(&g * g.adjoint());
    DensityMatrix::normalized(&h).expect("Ginibre product has positive trace")
}

/// Full-rank state with eigenvalues bounded away from zero.
pub fn full_rank_state(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let base = density_matrix(rng, dim, dim);
    let mix: f64 = rng.random_range(0.05..0.3);
    let h = &base.scale(1.0 - mix) + &HermitianOperator::identity(dim).scale(mix / dim as f64);
    DensityMatrix::new(h).expect("convex combination of states")
}

pub fn hermitian(rng: &mut impl Rng, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_matrix_unchecked(g)
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    isometry(rng, dim, dim)
}

/// Random isometry `V: C^cols -> C^rows` (`rows >= cols`), `V†V = I`.
pub fn isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols);
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Random channel `C^d_in -> C^d_out` induced by an isometry into
/// `C^d_out ⊗ C^env`; Kraus operators are `(I ⊗ ⟨e|) V`.
pub fn channel(rng: &mut impl Rng, d_in: usize, d_out: usize, env: usize) -> Channel {
    let v = isometry(rng, d_out * env, d_in);
    let kraus = (0..env).map(|e| CMatrix::from_fn(d_out, d_in, |i, j| v[(i * env + e, j)])).collect();
    Channel::new(d_in, d_out, kraus).expect("isometry-induced Kraus set is trace preserving")
}

/// Random probability vector with entries bounded below by `floor`.
pub fn priors(rng: &mut impl Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0) + floor).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / s).collect()
}
/// Random standard-form SDP `min tr(CX)` s.t. `tr(A_i X) = b_i`, `X ⪰ 0`,
/// built around a strictly feasible primal point and a strictly feasible
/// dual slack, so both sides satisfy Slater's condition.
#[derive(Clone, Debug)]
pub struct RandomSdp {
    pub problem: SdpProblem,
    pub x: VarId,
    pub psd: LmiId,
    pub cost: HermitianOperator,
    pub constraints: Vec<(HermitianOperator, f64)>,
}

pub fn slater_sdp(rng: &mut impl Rng, dim: usize, n_constraints: usize, complex: bool) -> RandomSdp {
    let x0 = full_rank_state(rng, dim).scale(dim as f64);
    let s0 = full_rank_state(rng, dim).scale(dim as f64);
    let mut cost = s0;
    let mut constraints = Vec::with_capacity(n_constraints);
    for _ in 0..n_constraints {
        let h = hermitian(rng, dim);
        let a = if complex { h } else { HermitianOperator::from_matrix_unchecked(h.matrix().map(|z| c64(z.re, 0.0))) };
        let y: f64 = rng.sample(StandardNormal);
        cost = &cost + &a.scale(y);
        let b = a.inner(&x0);
        constraints.push((a, b));
    }
    let mut problem = SdpProblem::new(Sense::Minimize);
    let (x, psd) = problem.add_psd_variable("X", dim);
    problem.add_objective(x, &cost);
    for (i, (a, b)) in constraints.iter().enumerate() {
        let am = a.matrix().clone();
        let map = LinearMap::custom(dim, 1, move |m| CMatrix::from_element(1, 1, (&am * m).trace()));
        problem
            .add_equality(format!("row{i}"), AffineExpr::constant(&HermitianOperator::diag(&[-b])).plus(x, map))
            .expect("dimensions agree");
    }
    RandomSdp { problem, x, psd, cost, constraints }
}
