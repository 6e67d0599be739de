//! Primal-dual interior point method for real block SDPs in the pair
//!
//! ```text
//! (P)  min Σ_j ⟨C_j, X_j⟩   s.t.  Σ_j ⟨A_ij, X_j⟩ = b_i,   X_j ⪰ 0
//! (D)  max bᵀy             s.t.  S_j = C_j − Σ_i y_i A_ij ⪰ 0
//! ```
//!
//! Infeasible start, HKM search direction, Mehrotra predictor-corrector,
//! fraction-to-boundary 0.98. Farkas certificates are tested on every iterate.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::SolveStatus;

/// Sparse symmetric coefficient matrix, all nonzeros listed (both triangles).
pub(crate) type Triplets = Vec<(u32, u32, f64)>;

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub n: usize,
    pub c: DMatrix<f64>,
    /// (variable index, coefficient matrix A_ij)
    pub a: Vec<(usize, Triplets)>,
}

#[derive(Clone, Debug)]
pub(crate) struct ConicProblem {
    pub m: usize,
    pub b: DVector<f64>,
    pub blocks: Vec<Block>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct IpmSettings {
    pub gap_tol: f64,
    pub kkt_tol: f64,
    pub max_iters: usize,
    pub step_fraction: f64,
    /// Extra iterations allowed after convergence to tighten the gap by
    /// [`POLISH_FACTOR`]; the best converged iterate is returned.
    pub polish_iters: usize,
    /// Constant added to `bᵀy` to get the reported objective; the relative
    /// gap test uses its magnitude.
    pub value_offset: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct IpmResult {
    pub status: SolveStatus,
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    #[allow(dead_code)]
    pub s: Vec<DMatrix<f64>>,
    pub pobj: f64,
    pub dobj: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub iterations: usize,
}

const INFEAS_TOL: f64 = 1e-8;
pub(crate) const POLISH_FACTOR: f64 = 1e-3;

/// Merit, iteration, `X`, `y`, `S` of the best iterate meeting the tolerances.
type Snapshot = (f64, usize, Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>);

impl ConicProblem {
    fn apply_a(&self, z: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, zj) in self.blocks.iter().zip(z) {
            for (i, trip) in &blk.a {
                // tr(A Z) = Σ A[r,c] Z[c,r]
                out[*i] += trip.iter().map(|&(r, c, v)| v * zj[(c as usize, r as usize)]).sum::<f64>();
            }
        }
        out
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.n, blk.n);
                for (i, trip) in &blk.a {
                    let yi = y[*i];
                    if yi != 0.0 {
                        for &(r, c, v) in trip {
                            m[(r as usize, c as usize)] += yi * v;
                        }
                    }
                }
                m
            })
            .collect()
    }

    fn c_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Schur complement `M_li = tr(A_l X A_i S⁻¹)` of the HKM direction.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m, self.m);
        for ((blk, xj), sj) in self.blocks.iter().zip(x).zip(sinv) {
            let n = blk.n;
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (i, trip_i) in &blk.a {
                g.fill(0.0);
                // G = X A_i S⁻¹ = Σ v · X[:, r] ⊗ S⁻¹[c, :]
                for &(r, c, v) in trip_i {
                    let (r, c) = (r as usize, c as usize);
                    for q in 0..n {
                        let s_cq = v * sj[(c, q)];
                        if s_cq == 0.0 {
                            continue;
                        }
                        for p in 0..n {
                            g[(p, q)] += xj[(p, r)] * s_cq;
                        }
                    }
                }
                for (l, trip_l) in &blk.a {
                    if l < i {
                        continue;
                    }
                    let val: f64 = trip_l.iter().map(|&(r, c, v)| v * g[(c as usize, r as usize)]).sum();
                    m[(*l, *i)] += val;
                }
            }
        }
        // fill the upper triangle from the lower one
        for i in 0..self.m {
            for l in (i + 1)..self.m {
                m[(i, l)] = m[(l, i)];
            }
        }
        m
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// Largest `α` with `X + α ΔX ⪰ 0` (`f64::INFINITY` if unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(t) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let w = sym(w);
    let ev = SymmetricEigen::new(w).eigenvalues;
    let lmin = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn inverse_spd(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ch = Cholesky::new(s.clone())?;
    let inv = ch.inverse();
    Some(sym(inv))
}

/// Solves `M z = r` for symmetric PSD `M`, regularizing the diagonal when the
/// plain Cholesky factorization breaks down.
struct SchurFactor {
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Self {
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Self { chol: Some(ch), lu: None };
        }
        let scale = m.diagonal().iter().cloned().fold(0.0, f64::max).max(1e-300);
        let mut reg = 1e-14 * scale;
        for _ in 0..8 {
            let mut mr = m.clone();
            for i in 0..mr.nrows() {
                mr[(i, i)] += reg;
            }
            if let Some(ch) = Cholesky::new(mr) {
                return Self { chol: Some(ch), lu: None };
            }
            reg *= 100.0;
        }
        Self { chol: None, lu: Some(m.lu()) }
    }

    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        if let Some(ch) = &self.chol {
            ch.solve(r)
        } else {
            self.lu.as_ref().and_then(|lu| lu.solve(r)).unwrap_or_else(|| DVector::zeros(r.len()))
        }
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
}

pub(crate) fn solve(p: &ConicProblem, st: &IpmSettings) -> IpmResult {
    let nb = p.blocks.len();
    let ntot: usize = p.blocks.iter().map(|b| b.n).sum();
    let bnorm = p.b.norm();
    let cnorm = p.c_norm();

    // Starting point scaled to the data.
    let mut x = Vec::with_capacity(nb);
    let mut s = Vec::with_capacity(nb);
    for blk in &p.blocks {
        let n = blk.n as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt()).max(blk.c.norm());
        for (i, trip) in &blk.a {
            let an = trip.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt();
            xi = xi.max(n * (1.0 + p.b[*i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(DMatrix::identity(blk.n, blk.n) * xi);
        s.push(DMatrix::identity(blk.n, blk.n) * eta);
    }
    let mut y = DVector::zeros(p.m);

    let result = |status, x: &Vec<DMatrix<f64>>, y: &DVector<f64>, s: &Vec<DMatrix<f64>>, iters| {
        let rp = &p.b - p.apply_a(x);
        let aty = p.apply_at(y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|j| &p.blocks[j].c - &s[j] - &aty[j]).collect();
        IpmResult {
            status,
            x: x.clone(),
            y: y.clone(),
            s: s.clone(),
            pobj: inner(&p.blocks.iter().map(|b| b.c.clone()).collect::<Vec<_>>(), x),
            dobj: p.b.dot(y),
            pinf: rp.norm() / (1.0 + bnorm),
            dinf: fro(&rd) / (1.0 + cnorm),
            iterations: iters,
        }
    };

    if ntot == 0 {
        return result(SolveStatus::Optimal, &x, &y, &s, 0);
    }

    let cs: Vec<DMatrix<f64>> = p.blocks.iter().map(|b| b.c.clone()).collect();
    let mut stall = 0usize;
    let mut best_merit = f64::INFINITY;
    let mut converged_at: Option<usize> = None;
    let mut accepted: Option<Snapshot> = None;
    let finish = |status,
                  x: &Vec<DMatrix<f64>>,
                  y: &DVector<f64>,
                  s: &Vec<DMatrix<f64>>,
                  iter,
                  acc: &Option<Snapshot>| match acc {
        Some((_, it, ax, ay, as_)) => result(SolveStatus::Optimal, ax, ay, as_, *it),
        None => result(status, x, y, s, iter),
    };

    for iter in 0..st.max_iters {
        let ax = p.apply_a(&x);
        let rp = &p.b - &ax;
        let aty = p.apply_at(&y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|j| &cs[j] - &s[j] - &aty[j]).collect();
        let pobj = inner(&cs, &x);
        let dobj = p.b.dot(&y);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = fro(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs();
        let mu = inner(&x, &s) / ntot as f64;

        let scale = 1.0 + (dobj + st.value_offset).abs();
        let merit = pinf.max(dinf).max(gap / scale);
        if gap <= st.gap_tol * scale && pinf <= st.kkt_tol && dinf <= st.kkt_tol {
            converged_at.get_or_insert(iter);
            if accepted.as_ref().is_none_or(|a| merit < a.0) {
                accepted = Some((merit, iter, x.clone(), y.clone(), s.clone()));
            }
            let polished = gap <= POLISH_FACTOR * st.gap_tol * scale
                && pinf <= POLISH_FACTOR * st.kkt_tol
                && dinf <= POLISH_FACTOR * st.kkt_tol;
            if polished {
                return finish(SolveStatus::Optimal, &x, &y, &s, iter, &accepted);
            }
        }
        if converged_at.is_some_and(|first| iter >= first + st.polish_iters) {
            return finish(SolveStatus::Optimal, &x, &y, &s, iter, &accepted);
        }
        // Farkas certificate for (D): X ⪰ 0, A(X) = 0, ⟨C,X⟩ < 0.
        if pobj < 0.0 && ax.norm() <= INFEAS_TOL * (-pobj) && fro(&x) > 1e6 {
            return result(SolveStatus::Infeasible, &x, &y, &s, iter);
        }
        // Farkas certificate for (P): −Aᵀy ⪰ 0, bᵀy > 0.
        if dobj > 0.0 {
            let lhs: Vec<DMatrix<f64>> = (0..nb).map(|j| &cs[j] - &rd[j]).collect();
            if fro(&lhs) <= INFEAS_TOL * dobj && y.norm() > 1e6 {
                return result(SolveStatus::Unbounded, &x, &y, &s, iter);
            }
        }

        if merit < best_merit * 0.999 {
            best_merit = merit;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 20 {
                return finish(SolveStatus::Stalled, &x, &y, &s, iter, &accepted);
            }
        }

        let Some(sinv) = s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            return finish(SolveStatus::Stalled, &x, &y, &s, iter, &accepted);
        };
        let factor = SchurFactor::new(p.schur(&x, &sinv));

        // X Rd S⁻¹ is shared by both solves.
        let x_rd_sinv: Vec<DMatrix<f64>> = (0..nb).map(|j| &x[j] * &rd[j] * &sinv[j]).collect();
        let a_x_rd_sinv = p.apply_a(&x_rd_sinv);

        let direction = |rsinv: Vec<DMatrix<f64>>| -> Direction {
            let rhs = &rp - p.apply_a(&rsinv) + &a_x_rd_sinv;
            let dy = factor.solve(&rhs);
            let atdy = p.apply_at(&dy);
            let ds: Vec<DMatrix<f64>> = (0..nb).map(|j| &rd[j] - &atdy[j]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb).map(|j| sym(&rsinv[j] - &x[j] * &ds[j] * &sinv[j])).collect();
            Direction { dx, dy, ds }
        };

        let steps = |d: &Direction, frac: f64| -> (f64, f64) {
            let ap = (0..nb).map(|j| max_step(&x[j], &d.dx[j])).fold(f64::INFINITY, f64::min);
            let ad = (0..nb).map(|j| max_step(&s[j], &d.ds[j])).fold(f64::INFINITY, f64::min);
            ((frac * ap).min(1.0), (frac * ad).min(1.0))
        };

        // Predictor (σ = 0): R S⁻¹ = −X.
        let pred = direction(x.iter().map(|xj| -xj).collect());
        let (ap, ad) = steps(&pred, 1.0);
        let mu_aff =
            (0..nb).map(|j| (&x[j] + &pred.dx[j] * ap).dot(&(&s[j] + &pred.ds[j] * ad))).sum::<f64>() / ntot as f64;
        let expon = 1f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

        // Corrector: R = σμI − XS − ΔXa ΔSa.
        let rsinv: Vec<DMatrix<f64>> =
            (0..nb).map(|j| &sinv[j] * (sigma * mu) - &x[j] - &pred.dx[j] * &pred.ds[j] * &sinv[j]).collect();
        let corr = direction(rsinv);
        let (ap, ad) = steps(&corr, st.step_fraction);
        if ap < 1e-12 && ad < 1e-12 {
            return finish(SolveStatus::Stalled, &x, &y, &s, iter, &accepted);
        }
        for j in 0..nb {
            x[j] += &corr.dx[j] * ap;
            s[j] += &corr.ds[j] * ad;
        }
        y += &corr.dy * ad;
    }
    finish(SolveStatus::MaxIters, &x, &y, &s, st.max_iters, &accepted)
}
