//! Small dense semidefinite programs over complex Hermitian variables.
//!
//! Problems are stated with Hermitian matrix variables (scalars are 1x1
//! variables), affine Hermitian-valued expressions constrained to be PSD
//! (`add_lmi`) or zero (`add_equality`), and a real linear objective
//! `Σ_v tr(W_v X_v) + c`. Building a problem compiles it to a real block SDP:
//! equalities are eliminated by Gauss-Jordan reduction, complex blocks are
//! realified, and the result is handed to the interior point method in
//! [`ipm`].

mod ipm;
pub mod realify;

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{c64, kron, partial_trace_matrix, CMatrix, HermitianOperator, Keep};
use ipm::{Block, ConicProblem, IpmSettings, Triplets};

pub use realify::{derealify, realify};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LmiId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIters,
    /// No further progress was possible (numerical breakdown).
    Stalled,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub kkt_tol: f64,
    pub max_iters: usize,
    /// Iterations spent after convergence trying to shrink the gap and
    /// residuals a further thousandfold. Zero stops at first convergence.
    pub polish_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, kkt_tol: 1e-7, max_iters: 200, polish_iters: 6 }
    }
}

/// A real-linear map between Hermitian matrix spaces, `in_dim x in_dim` to
/// `out_dim x out_dim`. The closure must map Hermitian inputs to Hermitian
/// outputs.
#[derive(Clone)]
pub struct LinearMap {
    in_dim: usize,
    out_dim: usize,
    f: Arc<dyn Fn(&CMatrix) -> CMatrix + Send + Sync>,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap({} -> {})", self.in_dim, self.out_dim)
    }
}

impl LinearMap {
    pub fn custom(in_dim: usize, out_dim: usize, f: impl Fn(&CMatrix) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { in_dim, out_dim, f: Arc::new(f) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled(dim, 1.0)
    }

    pub fn scaled(dim: usize, c: f64) -> Self {
        Self::custom(dim, dim, move |x| x.scale(c))
    }

    /// Places `c·X` at block offset `(row, col)` of a `total x total` matrix,
    /// mirrored as `c·X†` at `(col, row)` when off the diagonal.
    pub fn embed(dim: usize, total: usize, row: usize, col: usize, c: f64) -> Self {
        assert!(row + dim <= total && col + dim <= total);
        Self::custom(dim, total, move |x| {
            let mut out = CMatrix::zeros(total, total);
            out.view_mut((row, col), (dim, dim)).copy_from(&x.scale(c));
            if row != col {
                out.view_mut((col, row), (dim, dim)).copy_from(&x.adjoint().scale(c));
            }
            out
        })
    }

    pub fn partial_trace(dims: (usize, usize), keep: Keep) -> Self {
        let out = match keep {
            Keep::A => dims.0,
            Keep::B => dims.1,
        };
        Self::custom(dims.0 * dims.1, out, move |x| partial_trace_matrix(x, dims, keep).expect("dims checked"))
    }

    /// `X ↦ L ⊗ X` for a Hermitian `L`.
    pub fn kron_left(left: &HermitianOperator, dim: usize) -> Self {
        let l = left.matrix().clone();
        Self::custom(dim, l.nrows() * dim, move |x| kron(&l, x))
    }

    /// `X ↦ X ⊗ R` for a Hermitian `R`.
    pub fn kron_right(right: &HermitianOperator, dim: usize) -> Self {
        let r = right.matrix().clone();
        Self::custom(dim, r.nrows() * dim, move |x| kron(x, &r))
    }

    /// `X ↦ c·tr(X)` as a 1x1 output.
    pub fn trace(dim: usize, c: f64) -> Self {
        Self::custom(dim, 1, move |x| CMatrix::from_element(1, 1, x.trace().scale(c)))
    }

    /// For a scalar (1x1) variable `t`: `t ↦ t·M`.
    pub fn scalar_times(m: &HermitianOperator) -> Self {
        let mm = m.matrix().clone();
        Self::custom(1, mm.nrows(), move |x| mm.scale(x[(0, 0)].re))
    }

    /// Composition: apply `self`, then `next`.
    pub fn then(self, next: LinearMap) -> Self {
        assert_eq!(self.out_dim, next.in_dim, "composition dimension mismatch");
        let (f, g) = (self.f, next.f);
        Self { in_dim: self.in_dim, out_dim: next.out_dim, f: Arc::new(move |x| g(&f(x))) }
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        (self.f)(x)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }
}

/// Hermitian-valued affine expression `C + Σ_t map_t(X_{var_t})`.
#[derive(Clone, Debug)]
pub struct AffineExpr {
    dim: usize,
    constant: CMatrix,
    terms: Vec<(VarId, LinearMap)>,
}

impl AffineExpr {
    pub fn zero(dim: usize) -> Self {
        Self { dim, constant: CMatrix::zeros(dim, dim), terms: Vec::new() }
    }

    pub fn constant(h: &HermitianOperator) -> Self {
        Self { dim: h.dim(), constant: h.matrix().clone(), terms: Vec::new() }
    }

    pub fn plus_const(mut self, h: &HermitianOperator) -> Self {
        assert_eq!(h.dim(), self.dim, "constant dimension mismatch");
        self.constant += h.matrix();
        self
    }

    pub fn plus(mut self, var: VarId, map: LinearMap) -> Self {
        assert_eq!(map.out_dim, self.dim, "term output dimension mismatch");
        self.terms.push((var, map));
        self
    }

    /// Places `X` at block offset `(row, col)` (and `X†` at `(col, row)`).
    pub fn plus_block(self, var: VarId, var_dim: usize, row: usize, col: usize) -> Self {
        let total = self.dim;
        self.plus(var, LinearMap::embed(var_dim, total, row, col, 1.0))
    }

    /// Places a constant `H` at block offset `(row, col)` (and `H†` at `(col, row)`).
    pub fn plus_const_block(mut self, h: &HermitianOperator, row: usize, col: usize) -> Self {
        let d = h.dim();
        assert!(row + d <= self.dim && col + d <= self.dim);
        let mut block = self.constant.view_mut((row, col), (d, d)).into_owned();
        block += h.matrix();
        self.constant.view_mut((row, col), (d, d)).copy_from(&block);
        if row != col {
            let mut block = self.constant.view_mut((col, row), (d, d)).into_owned();
            block += h.matrix().adjoint();
            self.constant.view_mut((col, row), (d, d)).copy_from(&block);
        }
        self
    }

    /// Adds `c·X` for a variable of the same dimension as the expression.
    pub fn plus_var(self, var: VarId, c: f64) -> Self {
        let d = self.dim;
        self.plus(var, LinearMap::scaled(d, c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Clone, Debug)]
struct Variable {
    name: String,
    dim: usize,
}

#[derive(Clone, Debug)]
struct Constraint {
    name: String,
    expr: AffineExpr,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<(VarId, HermitianOperator)>,
    objective_constant: f64,
    lmis: Vec<Constraint>,
    eqs: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Objective value at the returned variables.
    pub primal_value: f64,
    /// Bound on the optimum obtained from the constraint multipliers.
    pub dual_value: f64,
    /// `|primal − dual| / (1 + |primal|)`.
    pub gap: f64,
    /// Largest relative primal/dual feasibility residual of the real SDP.
    pub kkt_residual: f64,
    pub iterations: usize,
    values: Vec<HermitianOperator>,
    multipliers: Vec<HermitianOperator>,
}

impl SdpSolution {
    pub fn value(&self, v: VarId) -> &HermitianOperator {
        &self.values[v.0]
    }

    pub fn scalar(&self, v: VarId) -> f64 {
        self.values[v.0].matrix()[(0, 0)].re
    }

    /// Multiplier `Z ⪰ 0` of an LMI `F(x) ⪰ 0`, scaled so the Lagrangian
    /// reads `objective + Σ tr(Z F(x))` (maximization) or
    /// `objective − Σ tr(Z F(x))` (minimization).
    pub fn multiplier(&self, c: LmiId) -> &HermitianOperator {
        &self.multipliers[c.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                detail: format!(
                    "after {} iterations: gap {:.2e}, residual {:.2e}",
                    self.iterations, self.gap, self.kkt_residual
                ),
            })
        }
    }
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            lmis: Vec::new(),
            eqs: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Free Hermitian `dim x dim` variable.
    pub fn add_variable(&mut self, name: impl Into<String>, dim: usize) -> VarId {
        assert!(dim >= 1);
        self.vars.push(Variable { name: name.into(), dim });
        VarId(self.vars.len() - 1)
    }

    /// Hermitian variable constrained to be PSD.
    pub fn add_psd_variable(&mut self, name: impl Into<String>, dim: usize) -> (VarId, LmiId) {
        let name = name.into();
        let v = self.add_variable(name.clone(), dim);
        let c = self.add_lmi(format!("{name} >= 0"), AffineExpr::zero(dim).plus_var(v, 1.0)).expect("well-formed");
        (v, c)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, 1)
    }

    pub fn var_dim(&self, v: VarId) -> usize {
        self.vars[v.0].dim
    }

    /// Adds `tr(W X_v)` to the objective.
    pub fn add_objective(&mut self, v: VarId, w: &HermitianOperator) {
        assert_eq!(w.dim(), self.var_dim(v), "objective weight dimension mismatch");
        self.objective.push((v, w.clone()));
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    fn check_expr(&self, e: &AffineExpr) -> Result<()> {
        for (v, map) in &e.terms {
            let Some(var) = self.vars.get(v.0) else {
                return Err(Error::Model(format!("unknown variable {v:?}")));
            };
            if map.in_dim != var.dim {
                return Err(Error::Model(format!(
                    "map expects a {}x{} input but variable '{}' is {}x{}",
                    map.in_dim, map.in_dim, var.name, var.dim, var.dim
                )));
            }
        }
        let c = HermitianOperator::with_tol(e.constant.clone(), 1e-9);
        if c.is_err() {
            return Err(Error::Model("constant term is not Hermitian".into()));
        }
        Ok(())
    }

    /// Adds `expr ⪰ 0`.
    pub fn add_lmi(&mut self, name: impl Into<String>, expr: AffineExpr) -> Result<LmiId> {
        self.check_expr(&expr)?;
        self.lmis.push(Constraint { name: name.into(), expr });
        Ok(LmiId(self.lmis.len() - 1))
    }

    /// Adds `expr = 0`.
    pub fn add_equality(&mut self, name: impl Into<String>, expr: AffineExpr) -> Result<()> {
        self.check_expr(&expr)?;
        self.eqs.push(Constraint { name: name.into(), expr });
        Ok(())
    }

    pub fn lmi_name(&self, c: LmiId) -> &str {
        &self.lmis[c.0].name
    }

    pub fn solve(&self) -> Result<SdpSolution> {
        solve(self, &SolverOptions::default())
    }

    /// Writes the compiled real problem in SDPA sparse format.
    pub fn dump_sdpa(&self) -> Result<String> {
        let compiled = compile(self)?;
        Ok(compiled.to_sdpa(&self.describe()))
    }

    fn describe(&self) -> String {
        let vars: Vec<String> = self.vars.iter().map(|v| format!("{}[{}]", v.name, v.dim)).collect();
        format!("{:?} over {}", self.sense, vars.join(", "))
    }
}

// ---------------------------------------------------------------------------
// Compilation to a real block SDP.

/// Real coordinates of a `d x d` Hermitian matrix: diagonal entries first,
/// then `(Re, Im)` of each upper off-diagonal entry.
fn basis_matrix(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    if k < d {
        m[(k, k)] = c64(1.0, 0.0);
        return m;
    }
    let mut idx = d;
    for a in 0..d {
        for b in (a + 1)..d {
            if k == idx {
                m[(a, b)] = c64(1.0, 0.0);
                m[(b, a)] = c64(1.0, 0.0);
                return m;
            }
            if k == idx + 1 {
                m[(a, b)] = c64(0.0, 1.0);
                m[(b, a)] = c64(0.0, -1.0);
                return m;
            }
            idx += 2;
        }
    }
    unreachable!("coordinate {k} out of range for dimension {d}")
}

/// Coordinates of a Hermitian matrix in the [`basis_matrix`] basis.
fn coordinates(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push(m[(a, a)].re);
    }
    for a in 0..d {
        for b in (a + 1)..d {
            // value = x (E_ab + E_ba) + y (i E_ab − i E_ba)
            out.push(m[(a, b)].re);
            out.push(m[(a, b)].im);
        }
    }
    out
}

fn from_coordinates(d: usize, y: &[f64]) -> HermitianOperator {
    let mut m = CMatrix::zeros(d, d);
    for a in 0..d {
        m[(a, a)] = c64(y[a], 0.0);
    }
    let mut idx = d;
    for a in 0..d {
        for b in (a + 1)..d {
            m[(a, b)] = c64(y[idx], y[idx + 1]);
            m[(b, a)] = c64(y[idx], -y[idx + 1]);
            idx += 2;
        }
    }
    HermitianOperator::from_matrix_unchecked(m)
}

#[derive(Clone, Copy, Debug)]
enum BlockKind {
    Real,
    Complex,
}

struct Compiled {
    conic: ConicProblem,
    kinds: Vec<BlockKind>,
    /// y = y0 + Σ_w Z[:, w] x_w, with Z stored sparsely per reduced variable.
    y0: DVector<f64>,
    z_cols: Vec<Vec<(usize, f64)>>,
    /// Offset added to the IPM dual objective to get the (signed) objective.
    value_offset: f64,
    sign: f64,
    unbounded_direction: bool,
    inconsistent: bool,
}

fn to_triplets(m: &DMatrix<f64>, scale: f64) -> Triplets {
    let mut t = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                t.push((i as u32, j as u32, scale * v));
            }
        }
    }
    t
}

fn real_image(m: &CMatrix, kind: BlockKind) -> DMatrix<f64> {
    match kind {
        BlockKind::Real => m.map(|z| z.re),
        BlockKind::Complex => realify::realify_matrix(m),
    }
}

/// Reduced row echelon elimination with complete pivoting of `E y = f`.
/// Returns pivot (column, row-of-R) pairs, the reduced matrix and rhs, or
/// `None` if the system is inconsistent.
fn eliminate(mut e: DMatrix<f64>, mut f: DVector<f64>) -> Option<(Vec<usize>, DMatrix<f64>, DVector<f64>)> {
    let (rows, cols) = e.shape();
    let scale = e.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-11 * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    let mut col_used = vec![false; cols];
    while r < rows {
        // complete pivoting over remaining rows and unused columns
        let mut best = (0.0, 0, 0);
        for i in r..rows {
            for (j, used) in col_used.iter().enumerate() {
                if !used && e[(i, j)].abs() > best.0 {
                    best = (e[(i, j)].abs(), i, j);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        let (_, pi, pj) = best;
        e.swap_rows(r, pi);
        f.swap_rows(r, pi);
        let piv = e[(r, pj)];
        for j in 0..cols {
            e[(r, j)] /= piv;
        }
        f[r] /= piv;
        for i in 0..rows {
            if i != r {
                let factor = e[(i, pj)];
                if factor != 0.0 {
                    for j in 0..cols {
                        let v = e[(r, j)];
                        e[(i, j)] -= factor * v;
                    }
                    f[i] -= factor * f[r];
                }
            }
        }
        col_used[pj] = true;
        pivots.push(pj);
        r += 1;
    }
    let fscale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in r..rows {
        if f[i].abs() > 1e-9 * fscale {
            return None;
        }
    }
    Some((pivots, e.rows(0, r).into_owned(), f.rows(0, r).into_owned()))
}

fn compile(p: &SdpProblem) -> Result<Compiled> {
    let mut offsets = Vec::with_capacity(p.vars.len());
    let mut m = 0;
    for v in &p.vars {
        offsets.push(m);
        m += v.dim * v.dim;
    }
    let sign = match p.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };

    let mut b = DVector::zeros(m);
    for (v, w) in &p.objective {
        let d = p.vars[v.0].dim;
        let coords = coordinates(w.matrix());
        // tr(W B_k): diagonal → W_aa; Re basis → 2 Re W_ab; Im basis → tr(W (iE_ab − iE_ba)) = 2 Im W_ab
        for k in 0..d * d {
            let val = if k < d { coords[k] } else { 2.0 * coords[k] };
            b[offsets[v.0] + k] += sign * val;
        }
    }

    // Images of every basis coordinate under each constraint.
    let images = |c: &Constraint| -> Vec<(usize, CMatrix)> {
        let mut acc: BTreeMap<usize, CMatrix> = BTreeMap::new();
        for (v, map) in &c.expr.terms {
            let d = p.vars[v.0].dim;
            for k in 0..d * d {
                let img = map.apply(&basis_matrix(d, k));
                acc.entry(offsets[v.0] + k).and_modify(|m| *m += &img).or_insert(img);
            }
        }
        acc.into_iter().filter(|(_, m)| m.iter().any(|z| z.norm() != 0.0)).collect()
    };

    // Equalities: one real row per output coordinate.
    let mut e_rows: Vec<Vec<f64>> = Vec::new();
    let mut f_rows: Vec<f64> = Vec::new();
    for c in &p.eqs {
        let d = c.expr.dim;
        let imgs = images(c);
        let cc = coordinates(&c.expr.constant);
        let img_coords: Vec<(usize, Vec<f64>)> = imgs.iter().map(|(i, m)| (*i, coordinates(m))).collect();
        for r in 0..d * d {
            let mut row = vec![0.0; m];
            for (i, co) in &img_coords {
                row[*i] = co[r];
            }
            e_rows.push(row);
            f_rows.push(-cc[r]);
        }
    }

    let (y0, z_cols, inconsistent) = if e_rows.is_empty() {
        (DVector::zeros(m), (0..m).map(|i| vec![(i, 1.0)]).collect::<Vec<_>>(), false)
    } else {
        let e = DMatrix::from_fn(e_rows.len(), m, |i, j| e_rows[i][j]);
        let f = DVector::from_vec(f_rows);
        match eliminate(e, f) {
            None => (DVector::zeros(m), Vec::new(), true),
            Some((pivots, r, fr)) => {
                let mut y0 = DVector::zeros(m);
                for (row, &pc) in pivots.iter().enumerate() {
                    y0[pc] = fr[row];
                }
                let is_pivot: Vec<bool> = (0..m).map(|j| pivots.contains(&j)).collect();
                let mut cols = Vec::new();
                for k in 0..m {
                    if is_pivot[k] {
                        continue;
                    }
                    let mut col = vec![(k, 1.0)];
                    for (row, &pc) in pivots.iter().enumerate() {
                        let v = r[(row, k)];
                        if v.abs() > 1e-15 {
                            col.push((pc, -v));
                        }
                    }
                    cols.push(col);
                }
                (y0, cols, false)
            }
        }
    };

    // Blocks in original coordinates.
    let mut kinds = Vec::with_capacity(p.lmis.len());
    let mut raw_blocks: Vec<(usize, DMatrix<f64>, BTreeMap<usize, Triplets>)> = Vec::new();
    for c in &p.lmis {
        let imgs = images(c);
        let is_real =
            c.expr.constant.iter().all(|z| z.im == 0.0) && imgs.iter().all(|(_, m)| m.iter().all(|z| z.im == 0.0));
        let kind = if is_real { BlockKind::Real } else { BlockKind::Complex };
        kinds.push(kind);
        let cmat = real_image(&c.expr.constant, kind);
        let n = cmat.nrows();
        let mut a = BTreeMap::new();
        for (i, img) in imgs {
            a.insert(i, to_triplets(&real_image(&img, kind), -1.0));
        }
        raw_blocks.push((n, cmat, a));
    }

    // Substitute y = y0 + Z x.
    let mut blocks = Vec::with_capacity(raw_blocks.len());
    let mut used = vec![false; z_cols.len()];
    for (n, mut cmat, a) in raw_blocks {
        for (i, trip) in &a {
            let yi = y0[*i];
            if yi != 0.0 {
                for &(r, c, v) in trip {
                    cmat[(r as usize, c as usize)] -= yi * v;
                }
            }
        }
        let mut reduced = Vec::new();
        for (w, col) in z_cols.iter().enumerate() {
            let mut acc: BTreeMap<(u32, u32), f64> = BTreeMap::new();
            for &(i, zi) in col {
                if let Some(trip) = a.get(&i) {
                    for &(r, c, v) in trip {
                        *acc.entry((r, c)).or_insert(0.0) += zi * v;
                    }
                }
            }
            let trip: Triplets =
                acc.into_iter().filter(|(_, v)| v.abs() > 1e-14).map(|((r, c), v)| (r, c, v)).collect();
            if !trip.is_empty() {
                used[w] = true;
                reduced.push((w, trip));
            }
        }
        blocks.push(Block { n, c: cmat, a: reduced });
    }

    // Drop reduced variables that appear in no block; if such a variable
    // carries objective weight the problem is unbounded.
    let bw: Vec<f64> = z_cols.iter().map(|col| col.iter().map(|&(i, zi)| zi * b[i]).sum()).collect();
    let bscale = bw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut unbounded_direction = false;
    let mut remap = vec![usize::MAX; z_cols.len()];
    let mut kept_cols = Vec::new();
    let mut kept_b = Vec::new();
    for (w, col) in z_cols.into_iter().enumerate() {
        if used[w] {
            remap[w] = kept_cols.len();
            kept_cols.push(col);
            kept_b.push(bw[w]);
        } else if bw[w].abs() > 1e-12 * bscale {
            unbounded_direction = true;
        }
    }
    for blk in &mut blocks {
        for entry in &mut blk.a {
            entry.0 = remap[entry.0];
        }
    }

    let value_offset = b.dot(&y0) + sign * p.objective_constant;
    Ok(Compiled {
        conic: ConicProblem { m: kept_cols.len(), b: DVector::from_vec(kept_b), blocks },
        kinds,
        y0,
        z_cols: kept_cols,
        value_offset,
        sign,
        unbounded_direction,
        inconsistent,
    })
}

impl Compiled {
    fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.y0.clone();
        for (w, col) in self.z_cols.iter().enumerate() {
            for &(i, zi) in col {
                y[i] += zi * x[w];
            }
        }
        y
    }

    fn to_sdpa(&self, title: &str) -> String {
        // SDPA: min cᵀx s.t. Σ F_i x_i − F_0 ⪰ 0, with F_i = −A_i, F_0 = −C.
        let p = &self.conic;
        let mut s = String::new();
        let _ = writeln!(s, "* revud SDP: {title}");
        let _ = writeln!(s, "* objective offset {:.17e}, sense sign {}", self.value_offset, self.sign);
        let _ = writeln!(s, "{}", p.m);
        let _ = writeln!(s, "{}", p.blocks.len());
        let sizes: Vec<String> = p.blocks.iter().map(|b| b.n.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let c: Vec<String> = p.b.iter().map(|v| format!("{:.17e}", 0.0 - v)).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        for (j, blk) in p.blocks.iter().enumerate() {
            for col in 0..blk.n {
                for row in 0..=col {
                    let v = blk.c[(row, col)];
                    if v != 0.0 {
                        let _ = writeln!(s, "0 {} {} {} {:.17e}", j + 1, row + 1, col + 1, -v);
                    }
                }
            }
        }
        for i in 0..p.m {
            for (j, blk) in p.blocks.iter().enumerate() {
                for (w, trip) in &blk.a {
                    if *w != i {
                        continue;
                    }
                    let mut entries: Vec<_> = trip.iter().filter(|t| t.0 <= t.1).collect();
                    entries.sort_by_key(|t| (t.0, t.1));
                    for &&(r, c, v) in &entries {
                        let _ = writeln!(s, "{} {} {} {} {:.17e}", i + 1, j + 1, r + 1, c + 1, -v);
                    }
                }
            }
        }
        s
    }
}

fn multiplier_from_block(x: &DMatrix<f64>, kind: BlockKind) -> HermitianOperator {
    match kind {
        BlockKind::Real => HermitianOperator::from_matrix_unchecked(x.map(|v| c64(v, 0.0))),
        // ⟨realify(F), X⟩ = 2 tr(F derealify(X)), so the complex multiplier is 2·derealify(X).
        BlockKind::Complex => realify::derealify(x).scale(2.0),
    }
}

pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let compiled = compile(p)?;
    let zero_values = || p.vars.iter().map(|v| HermitianOperator::zeros(v.dim)).collect::<Vec<_>>();
    let zero_mults = || p.lmis.iter().map(|c| HermitianOperator::zeros(c.expr.dim)).collect::<Vec<_>>();
    if compiled.inconsistent || compiled.unbounded_direction {
        let status = if compiled.inconsistent { SolveStatus::Infeasible } else { SolveStatus::Unbounded };
        return Ok(SdpSolution {
            status,
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            gap: f64::INFINITY,
            kkt_residual: f64::INFINITY,
            iterations: 0,
            values: zero_values(),
            multipliers: zero_mults(),
        });
    }

    let settings = IpmSettings {
        gap_tol: opts.gap_tol,
        kkt_tol: opts.kkt_tol,
        max_iters: opts.max_iters,
        step_fraction: 0.98,
        polish_iters: opts.polish_iters,
        value_offset: compiled.value_offset,
    };
    let res = ipm::solve(&compiled.conic, &settings);

    let y = compiled.expand(&res.y);
    let mut values = Vec::with_capacity(p.vars.len());
    let mut off = 0;
    for v in &p.vars {
        let n = v.dim * v.dim;
        values.push(from_coordinates(v.dim, &y.as_slice()[off..off + n]));
        off += n;
    }
    let multipliers: Vec<HermitianOperator> =
        res.x.iter().zip(&compiled.kinds).map(|(x, k)| multiplier_from_block(x, *k)).collect();

    let primal_value = compiled.sign * (res.dobj + compiled.value_offset);
    let dual_value = compiled.sign * (res.pobj + compiled.value_offset);
    let gap = (primal_value - dual_value).abs() / (1.0 + primal_value.abs());
    let mut status = res.status;
    if status == SolveStatus::Optimal && !(gap <= opts.gap_tol) {
        status = SolveStatus::Stalled;
    }
    Ok(SdpSolution {
        status,
        primal_value,
        dual_value,
        gap,
        kkt_residual: res.pinf.max(res.dinf),
        iterations: res.iterations,
        values,
        multipliers,
    })
}

/// Phase-one test for a strictly feasible point: maximizes `t` subject to
/// every LMI block minus `t·I` staying PSD (and `t ≤ 1`), then verifies the
/// returned point directly.
pub fn slater_check(p: &SdpProblem) -> Result<bool> {
    let compiled = compile(p)?;
    if compiled.inconsistent {
        return Ok(false);
    }
    let base = &compiled.conic;
    if base.blocks.is_empty() {
        return Ok(true);
    }
    let t_idx = base.m;
    let mut blocks = base.blocks.clone();
    for blk in &mut blocks {
        let diag: Triplets = (0..blk.n as u32).map(|i| (i, i, 1.0)).collect();
        blk.a.push((t_idx, diag));
    }
    blocks.push(Block { n: 1, c: DMatrix::from_element(1, 1, 1.0), a: vec![(t_idx, vec![(0, 0, 1.0)])] });
    let mut b = DVector::zeros(base.m + 1);
    b[t_idx] = 1.0;
    let phase1 = ConicProblem { m: base.m + 1, b, blocks };
    let settings = IpmSettings {
        gap_tol: 1e-9,
        kkt_tol: 1e-9,
        max_iters: 200,
        step_fraction: 0.98,
        polish_iters: 0,
        value_offset: 0.0,
    };
    let res = ipm::solve(&phase1, &settings);
    if res.y[t_idx] <= 0.0 {
        return Ok(false);
    }
    // Verify strict feasibility of the candidate without the t shift.
    let x = res.y.rows(0, base.m).into_owned();
    for blk in &base.blocks {
        let mut s = blk.c.clone();
        for (i, trip) in &blk.a {
            for &(r, c, v) in trip {
                s[(r as usize, c as usize)] -= x[*i] * v;
            }
        }
        let scale = s.norm().max(1.0);
        let lmin = s.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if lmin <= 1e-10 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DensityMatrix;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
    }

    #[test]
    fn basis_coordinates_round_trip() {
        let mut rng = crate::random::rng(1);
        let h = crate::random::hermitian(&mut rng, 3);
        let co = coordinates(h.matrix());
        let back = from_coordinates(3, &co);
        assert!((&back - &h).max_abs_entry() < 1e-14);
        let mut acc = CMatrix::zeros(3, 3);
        for (k, c) in co.iter().enumerate() {
            acc += basis_matrix(3, k).scale(*c);
        }
        assert!((acc - h.matrix()).norm() < 1e-14);
    }

    #[test]
    fn dominance_single_constraint() {
        let q = DensityMatrix::diag(&[0.3, 0.7]).unwrap().into_hermitian().scale(2.0);
        let mut p = SdpProblem::new(Sense::Minimize);
        let pv = p.add_variable("P", 2);
        p.add_objective(pv, &HermitianOperator::identity(2));
        p.add_lmi("P >= Q", AffineExpr::zero(2).plus_var(pv, 1.0).plus_const(&-&q)).unwrap();
        let sol = p.solve().unwrap().require_optimal().unwrap();
        approx(sol.primal_value, 2.0, 1e-7);
        assert!((sol.value(pv) - &q).max_abs_entry() < 1e-6);
    }

    #[test]
    fn two_orthogonal_projectors_need_trace_two() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let pv = p.add_variable("P", 2);
        p.add_objective(pv, &HermitianOperator::identity(2));
        for i in 0..2 {
            let e = HermitianOperator::basis_projector(2, i);
            p.add_lmi(format!("P >= e{i}"), AffineExpr::zero(2).plus_var(pv, 1.0).plus_const(&-&e)).unwrap();
        }
        let sol = p.solve().unwrap().require_optimal().unwrap();
        approx(sol.primal_value, 2.0, 1e-7);
        approx(sol.dual_value, 2.0, 1e-7);
    }

    #[test]
    fn complex_data_uses_realified_blocks() {
        // min tr P s.t. P ⪰ |ψ⟩⟨ψ| with a complex ψ.
        let v = nalgebra::DVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]);
        let psi = HermitianOperator::projector(&v);
        let mut p = SdpProblem::new(Sense::Minimize);
        let pv = p.add_variable("P", 2);
        p.add_objective(pv, &HermitianOperator::identity(2));
        let c = p.add_lmi("P >= psi", AffineExpr::zero(2).plus_var(pv, 1.0).plus_const(&-&psi)).unwrap();
        let sol = p.solve().unwrap().require_optimal().unwrap();
        approx(sol.primal_value, 1.0, 1e-7);
        assert!((sol.value(pv) - &psi).max_abs_entry() < 1e-6);
        // the multiplier of P ⪰ ψ must be the identity (stationarity in P)
        assert!((sol.multiplier(c) - &HermitianOperator::identity(2)).max_abs_entry() < 1e-6);
    }

    #[test]
    fn complex_objective_weight() {
        let mut rng = crate::random::rng(17);
        let w = crate::random::hermitian(&mut rng, 3);
        let mut p = SdpProblem::new(Sense::Maximize);
        let (q, _) = p.add_psd_variable("Q", 3);
        p.add_objective(q, &w);
        p.add_lmi("I - Q", AffineExpr::constant(&HermitianOperator::identity(3)).plus_var(q, -1.0)).unwrap();
        let sol = p.solve().unwrap().require_optimal().unwrap();
        let expected: f64 = w.eig().eigenvalues.iter().filter(|l| **l > 0.0).sum();
        approx(sol.primal_value, expected, 1e-7);
        approx(sol.value(q).inner(&w), expected, 1e-6);
    }

    #[test]
    fn equality_constraints_are_eliminated() {
        // max tr(Aρ) over states: largest eigenvalue of A.
        let a = HermitianOperator::diag(&[0.2, 1.3, -0.4]);
        let mut p = SdpProblem::new(Sense::Maximize);
        let (rho, _) = p.add_psd_variable("rho", 3);
        p.add_objective(rho, &a);
        p.add_equality(
            "tr rho = 1",
            AffineExpr::constant(&HermitianOperator::identity(1).scale(-1.0)).plus(rho, LinearMap::trace(3, 1.0)),
        )
        .unwrap();
        let sol = p.solve().unwrap().require_optimal().unwrap();
        approx(sol.primal_value, 1.3, 1e-7);
        approx(sol.value(rho).trace(), 1.0, 1e-9);
    }

    #[test]
    fn inconsistent_equalities_report_infeasible() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let t = p.add_scalar("t");
        p.add_equality("t = 1", AffineExpr::constant(&HermitianOperator::diag(&[-1.0])).plus_var(t, 1.0)).unwrap();
        p.add_equality("t = 2", AffineExpr::constant(&HermitianOperator::diag(&[-2.0])).plus_var(t, 1.0)).unwrap();
        assert_eq!(p.solve().unwrap().status, SolveStatus::Infeasible);
        assert!(!slater_check(&p).unwrap());
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // tr Q ≤ 0 and Q ⪰ I
        let mut p = SdpProblem::new(Sense::Minimize);
        let q = p.add_variable("Q", 2);
        p.add_objective(q, &HermitianOperator::identity(2));
        p.add_lmi("-tr Q >= 0", AffineExpr::zero(1).plus(q, LinearMap::trace(2, -1.0))).unwrap();
        p.add_lmi(
            "Q >= I",
            AffineExpr::zero(2).plus_var(q, 1.0).plus_const(&HermitianOperator::identity(2).scale(-1.0)),
        )
        .unwrap();
        assert!(!slater_check(&p).unwrap());
        assert_eq!(p.solve().unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // max t s.t. t ≥ 0
        let mut p = SdpProblem::new(Sense::Maximize);
        let t = p.add_scalar("t");
        p.add_objective(t, &HermitianOperator::identity(1));
        p.add_lmi("t >= 0", AffineExpr::zero(1).plus_var(t, 1.0)).unwrap();
        assert_eq!(p.solve().unwrap().status, SolveStatus::Unbounded);
        // a variable that appears nowhere but carries weight
        let mut p = SdpProblem::new(Sense::Maximize);
        let t = p.add_scalar("t");
        p.add_objective(t, &HermitianOperator::identity(1));
        assert_eq!(p.solve().unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn slater_strictly_feasible_box() {
        let mut p = SdpProblem::new(Sense::Maximize);
        let (q, _) = p.add_psd_variable("Q", 2);
        p.add_lmi("I - Q >= 0", AffineExpr::constant(&HermitianOperator::identity(2)).plus_var(q, -1.0)).unwrap();
        assert!(slater_check(&p).unwrap());
    }

    #[test]
    fn objective_scaling_covariance() {
        let mut rng = crate::random::rng(11);
        let w = crate::random::hermitian(&mut rng, 3);
        let build = |c: f64| {
            let mut p = SdpProblem::new(Sense::Maximize);
            let (q, _) = p.add_psd_variable("Q", 3);
            p.add_objective(q, &w.scale(c));
            p.add_lmi("I - Q", AffineExpr::constant(&HermitianOperator::identity(3)).plus_var(q, -1.0)).unwrap();
            p.solve().unwrap().require_optimal().unwrap().primal_value
        };
        let v1 = build(1.0);
        let v3 = build(3.0);
        assert!((v3 - 3.0 * v1).abs() <= 1e-9 * v3.abs().max(1.0) * 10.0, "{v1} {v3}");
    }

    #[test]
    fn sdpa_dump_shape() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let pv = p.add_variable("P", 1);
        p.add_objective(pv, &HermitianOperator::identity(1));
        p.add_lmi("P >= 1", AffineExpr::constant(&HermitianOperator::diag(&[-1.0])).plus_var(pv, 1.0)).unwrap();
        let s = p.dump_sdpa().unwrap();
        let lines: Vec<&str> = s.lines().filter(|l| !l.starts_with('*')).collect();
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert!(lines[3].starts_with("1.0"));
        assert!(lines.iter().any(|l| l.starts_with("0 1 1 1 1.0")));
        assert!(lines.iter().any(|l| l.starts_with("1 1 1 1 1.0")));
    }
}
