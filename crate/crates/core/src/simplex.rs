//! Revised simplex for `min ||x||_1  s.t.  A x = b`.
//!
//! Each column `a_j` is split into `x_j = x_j^+ - x_j^-` with both parts
//! nonnegative and unit cost. Phase 1 starts from an artificial basis and
//! minimizes the artificial sum; phase 2 minimizes `sum (x^+ + x^-)`. The
//! basis inverse is kept dense and updated by elementary row operations,
//! with periodic refactorization from scratch.
//!
//! The row count is small (at most 256 for four-qubit robustness problems)
//! while the column count can be in the tens of thousands, so pricing over
//! sparse columns dominates the cost of an iteration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A constraint matrix accessed column by column.
pub trait ColumnSource: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `a_j . y`.
    fn dot(&self, j: usize, y: &[f64]) -> f64;
    /// Calls `f(row, value)` for each nonzero of column `j`.
    fn for_each_entry(&self, j: usize, f: &mut dyn FnMut(usize, f64));
}

/// Column-major dense matrix, mostly for tests and small problems.
#[derive(Clone, Debug)]
pub struct DenseColumns {
    rows: usize,
    data: Vec<Vec<f64>>,
}

impl DenseColumns {
    pub fn new(rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
        }
        Ok(Self { rows, data: columns })
    }
}

impl ColumnSource for DenseColumns {
    fn n_rows(&self) -> usize {
        self.rows
    }

    fn n_cols(&self) -> usize {
        self.data.len()
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        self.data[j].iter().zip(y).map(|(a, b)| a * b).sum()
    }

    fn for_each_entry(&self, j: usize, f: &mut dyn FnMut(usize, f64)) {
        for (i, &v) in self.data[j].iter().enumerate() {
            if v != 0.0 {
                f(i, v);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    /// Finished, but the reconstruction residual or iteration budget was
    /// outside tolerance.
    ToleranceWarning,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    /// Residual `||A x - b||_inf` above which the result is flagged.
    pub residual_tol: f64,
    pub refactor_every: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            feasibility_tol: 1e-9,
            residual_tol: 1e-6,
            refactor_every: 50,
            max_iterations: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct L1Solution {
    pub objective: f64,
    /// Nonzero `(column, x_j)`, sorted by column.
    pub coefficients: Vec<(usize, f64)>,
    pub status: SolverStatus,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    Pos(usize),
    Neg(usize),
    Art(usize),
}

struct Tableau<'a, A: ColumnSource + ?Sized> {
    a: &'a A,
    b: &'a [f64],
    m: usize,
    opts: SimplexOptions,
    basis: Vec<Var>,
    /// Column-major basis inverse: `binv[c * m + i]` is entry `(i, c)`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    art_sign: Vec<f64>,
    pos_basic: Vec<bool>,
    neg_basic: Vec<bool>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a, A: ColumnSource + ?Sized> Tableau<'a, A> {
    fn new(a: &'a A, b: &'a [f64], opts: SimplexOptions) -> Self {
        let m = a.n_rows();
        let art_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = art_sign[i];
        }
        Self {
            a,
            b,
            m,
            opts,
            basis: (0..m).map(Var::Art).collect(),
            binv,
            xb: b.iter().map(|v| v.abs()).collect(),
            art_sign,
            pos_basic: vec![false; a.n_cols()],
            neg_basic: vec![false; a.n_cols()],
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn cost(var: Var, phase: u8) -> f64 {
        match (var, phase) {
            (Var::Art(_), 1) => 1.0,
            (Var::Art(_), _) => 0.0,
            (_, 1) => 0.0,
            _ => 1.0,
        }
    }

    /// Dense column of a variable scattered into `out`.
    fn scatter(&self, var: Var, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match var {
            Var::Art(r) => out[r] = self.art_sign[r],
            Var::Pos(j) => self.a.for_each_entry(j, &mut |i, v| out[i] = v),
            Var::Neg(j) => self.a.for_each_entry(j, &mut |i, v| out[i] = -v),
        }
    }

    /// `u = B^-1 a` for the entering variable.
    fn ftran(&self, var: Var) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        let mut add = |r: usize, v: f64| {
            let col = &self.binv[r * m..(r + 1) * m];
            for (ui, ci) in u.iter_mut().zip(col) {
                *ui += v * ci;
            }
        };
        match var {
            Var::Art(r) => add(r, self.art_sign[r]),
            Var::Pos(j) => self.a.for_each_entry(j, &mut |i, v| add(i, v)),
            Var::Neg(j) => self.a.for_each_entry(j, &mut |i, v| add(i, -v)),
        }
        u
    }

    /// `y^T = c_B^T B^-1`.
    fn duals(&self, phase: u8) -> Vec<f64> {
        let m = self.m;
        let cb: Vec<f64> = self.basis.iter().map(|&v| Self::cost(v, phase)).collect();
        (0..m)
            .map(|c| {
                self.binv[c * m..(c + 1) * m]
                    .iter()
                    .zip(&cb)
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect()
    }

    fn is_basic(&self, var: Var) -> bool {
        match var {
            Var::Pos(j) => self.pos_basic[j],
            Var::Neg(j) => self.neg_basic[j],
            Var::Art(_) => true,
        }
    }

    fn set_basic(&mut self, var: Var, flag: bool) {
        match var {
            Var::Pos(j) => self.pos_basic[j] = flag,
            Var::Neg(j) => self.neg_basic[j] = flag,
            Var::Art(_) => {}
        }
    }

    /// Most negative reduced cost (Dantzig), or the lowest-index improving
    /// variable under Bland's rule.
    fn price(&self, y: &[f64], phase: u8, bland: bool) -> Option<Var> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(Var, f64)> = None;
        for j in 0..self.a.n_cols() {
            let d = self.a.dot(j, y);
            let (rc_pos, rc_neg) = if phase == 1 { (-d, d) } else { (1.0 - d, 1.0 + d) };
            for (var, rc) in [(Var::Pos(j), rc_pos), (Var::Neg(j), rc_neg)] {
                if rc < -tol && !self.is_basic(var) {
                    if bland {
                        return Some(var);
                    }
                    if best.is_none_or(|(_, b)| rc < b) {
                        best = Some((var, rc));
                    }
                }
            }
        }
        best.map(|(v, _)| v)
    }

    /// Harris two-pass ratio test. Returns the leaving row.
    fn ratio_test(&self, u: &[f64], bland: bool) -> Option<usize> {
        let (ptol, ftol) = (self.opts.pivot_tol, self.opts.feasibility_tol);
        let mut bound = f64::INFINITY;
        for (i, &ui) in u.iter().enumerate() {
            if ui > ptol {
                bound = bound.min((self.xb[i].max(0.0) + ftol) / ui);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &ui) in u.iter().enumerate() {
            if ui > ptol && self.xb[i].max(0.0) / ui <= bound {
                let better = match best {
                    None => true,
                    Some((bi, bu)) => {
                        if bland {
                            var_order(self.basis[i]) < var_order(self.basis[bi])
                        } else {
                            ui > bu
                        }
                    }
                };
                if better {
                    best = Some((i, ui));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, entering: Var, u: &[f64]) {
        let m = self.m;
        let ur = u[row];
        let theta = self.xb[row].max(0.0) / ur;
        for (i, (x, ui)) in self.xb.iter_mut().zip(u).enumerate() {
            if i != row {
                *x -= theta * ui;
            }
        }
        self.xb[row] = theta;
        for c in 0..m {
            let col = &mut self.binv[c * m..(c + 1) * m];
            let pr = col[row] / ur;
            if pr != 0.0 {
                for (ci, ui) in col.iter_mut().zip(u) {
                    *ci -= ui * pr;
                }
            }
            col[row] = pr;
        }
        let leaving = self.basis[row];
        self.set_basic(leaving, false);
        self.basis[row] = entering;
        self.set_basic(entering, true);
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_every {
            self.refactor();
        }
    }

    /// Rebuilds `B^-1` and `x_B` from the current basis.
    fn refactor(&mut self) {
        let m = self.m;
        let mut bmat = DMatrix::<f64>::zeros(m, m);
        let mut col = vec![0.0; m];
        for (k, &var) in self.basis.iter().enumerate() {
            self.scatter(var, &mut col);
            for i in 0..m {
                bmat[(i, k)] = col[i];
            }
        }
        if let Some(inv) = bmat.try_inverse() {
            for c in 0..m {
                for i in 0..m {
                    self.binv[c * m + i] = inv[(i, c)];
                }
            }
            for i in 0..m {
                self.xb[i] = (0..m).map(|c| self.binv[c * m + i] * self.b[c]).sum();
            }
        }
        self.since_refactor = 0;
    }

    fn run_phase(&mut self, phase: u8) -> Result<bool> {
        let mut degenerate_streak = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(false);
            }
            let bland = degenerate_streak > 64;
            let y = self.duals(phase);
            let Some(entering) = self.price(&y, phase, bland) else {
                return Ok(true);
            };
            let u = self.ftran(entering);
            let Some(row) = self.ratio_test(&u, bland) else {
                if phase == 1 {
                    // Phase 1 is bounded below by zero; a ray here means
                    // the basis inverse has drifted.
                    self.refactor();
                    degenerate_streak += 1;
                    continue;
                }
                return Err(Error::Unbounded);
            };
            if self.xb[row].max(0.0) / u[row] < 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(row, entering, &u);
        }
    }

    /// Pivots remaining zero-valued artificials out of the basis where a
    /// structural column can replace them.
    fn expel_artificials(&mut self) {
        let m = self.m;
        for row in 0..m {
            if !matches!(self.basis[row], Var::Art(_)) {
                continue;
            }
            let rho: Vec<f64> = (0..m).map(|c| self.binv[c * m + row]).collect();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.a.n_cols() {
                if self.pos_basic[j] || self.neg_basic[j] {
                    continue;
                }
                let alpha = self.a.dot(j, &rho);
                if alpha.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha.abs() > b.abs()) {
                    best = Some((j, alpha));
                    if alpha.abs() > 0.5 {
                        break;
                    }
                }
            }
            if let Some((j, alpha)) = best {
                let var = if alpha > 0.0 { Var::Pos(j) } else { Var::Neg(j) };
                let u = self.ftran(var);
                self.pivot(row, var, &u);
            }
        }
    }
}

fn var_order(v: Var) -> (usize, usize) {
    match v {
        Var::Pos(j) => (j, 0),
        Var::Neg(j) => (j, 1),
        Var::Art(r) => (usize::MAX, r),
    }
}

/// Solves `min ||x||_1 s.t. A x = b`.
pub fn minimize_l1<A: ColumnSource + ?Sized>(
    a: &A,
    b: &[f64],
    opts: SimplexOptions,
) -> Result<L1Solution> {
    let m = a.n_rows();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    let mut t = Tableau::new(a, b, opts);
    let phase1_done = t.run_phase(1)?;
    t.refactor();
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(v, _)| matches!(v, Var::Art(_)))
        .map(|(_, x)| x.abs())
        .sum();
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility > 1e-7 * scale {
        return Ok(L1Solution {
            objective: f64::NAN,
            coefficients: Vec::new(),
            status: if phase1_done { SolverStatus::Infeasible } else { SolverStatus::ToleranceWarning },
            residual: infeasibility,
            iterations: t.iterations,
        });
    }
    t.expel_artificials();
    let phase2_done = t.run_phase(2)?;
    t.refactor();

    let mut x = vec![0.0; a.n_cols()];
    for (&var, &v) in t.basis.iter().zip(&t.xb) {
        match var {
            Var::Pos(j) => x[j] += v,
            Var::Neg(j) => x[j] -= v,
            Var::Art(_) => {}
        }
    }
    let mut recon = vec![0.0; m];
    let coefficients: Vec<(usize, f64)> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-14)
        .map(|(j, &v)| (j, v))
        .collect();
    for &(j, v) in &coefficients {
        a.for_each_entry(j, &mut |i, aij| recon[i] += aij * v);
    }
    let residual = recon
        .iter()
        .zip(b)
        .map(|(r, bi)| (r - bi).abs())
        .fold(0.0, f64::max);
    let objective = coefficients.iter().map(|(_, v)| v.abs()).sum();
    let status = if phase2_done && residual <= opts.residual_tol {
        SolverStatus::Optimal
    } else {
        SolverStatus::ToleranceWarning
    };
    Ok(L1Solution { objective, coefficients, status, residual, iterations: t.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = DenseColumns::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sol = minimize_l1(&a, &[0.5, -2.0], SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective - 2.5).abs() < 1e-12);
    }

    #[test]
    fn prefers_sparse_combination() {
        // b = (1, 1) is column 2 exactly; columns 0 and 1 would cost 2.
        let a = DenseColumns::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let sol = minimize_l1(&a, &[1.0, 1.0], SimplexOptions::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert_eq!(sol.coefficients, vec![(2, 1.0)]);
    }

    #[test]
    fn detects_infeasibility() {
        let a = DenseColumns::new(2, vec![vec![1.0, 1.0]]).unwrap();
        let sol = minimize_l1(&a, &[1.0, 0.0], SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn redundant_rows() {
        let a = DenseColumns::new(
            3,
            vec![vec![1.0, 1.0, 2.0], vec![1.0, -1.0, 0.0]],
        )
        .unwrap();
        let sol = minimize_l1(&a, &[2.0, 0.0, 2.0], SimplexOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rhs_length_mismatch() {
        let a = DenseColumns::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert!(minimize_l1(&a, &[1.0], SimplexOptions::default()).is_err());
    }
}
