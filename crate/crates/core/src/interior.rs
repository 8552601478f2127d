//! Primal-dual interior point (Mehrotra predictor-corrector) for
//! `min ||x||_1  s.t.  A x = b`.
//!
//! With `x = p - q`, `p, q >= 0`, the standard-form matrix is `[A, -A]` and
//! the normal equations collapse to `A diag(p/s_p + q/s_q) A^T`, an `m x m`
//! system independent of the column count. Used for the four-qubit
//! dictionary, where simplex pivoting is too slow.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simplex::{ColumnSource, L1Solution, SolverStatus};

#[derive(Clone, Copy, Debug)]
pub struct InteriorOptions {
    /// Relative primal/dual residual and duality gap at which to stop.
    pub tolerance: f64,
    /// Gap accepted as optimal when `tolerance` cannot be reached.
    pub gap_tol: f64,
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for InteriorOptions {
    fn default() -> Self {
        Self { tolerance: 1e-11, gap_tol: 1e-8, residual_tol: 1e-6, max_iterations: 120 }
    }
}

/// Sparse copy of the constraint columns.
struct Columns {
    m: usize,
    /// `start[j]..start[j + 1]` indexes `rows`/`vals` of column `j`.
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl Columns {
    fn from_source<A: ColumnSource + ?Sized>(a: &A) -> Self {
        let mut start = Vec::with_capacity(a.n_cols() + 1);
        let (mut rows, mut vals) = (Vec::new(), Vec::new());
        start.push(0);
        for j in 0..a.n_cols() {
            a.for_each_entry(j, &mut |i, v| {
                rows.push(i);
                vals.push(v);
            });
            start.push(rows.len());
        }
        Self { m: a.n_rows(), start, rows, vals }
    }

    fn n(&self) -> usize {
        self.start.len() - 1
    }

    fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.start[j]..self.start[j + 1];
        (&self.rows[r.clone()], &self.vals[r])
    }

    /// `A v`.
    fn mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                let (r, a) = self.col(j);
                for (i, x) in r.iter().zip(a) {
                    out[*i] += x * vj;
                }
            }
        }
        out
    }

    /// `A^T y`.
    fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|j| {
                let (r, a) = self.col(j);
                r.iter().zip(a).map(|(i, x)| x * y[*i]).sum()
            })
            .collect()
    }

    /// `A diag(w) A^T`.
    fn normal_matrix(&self, w: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for (j, &wj) in w.iter().enumerate() {
            let (r, a) = self.col(j);
            for (k, (&ik, &ak)) in r.iter().zip(a).enumerate() {
                let f = wj * ak;
                let row = &mut out[ik * m..(ik + 1) * m];
                for (&il, &al) in r[k..].iter().zip(&a[k..]) {
                    row[il] += f * al;
                }
            }
        }
        // Only one triangle per column pair was filled; symmetrize.
        for i in 0..m {
            for l in 0..i {
                let s = out[i * m + l] + out[l * m + i];
                out[i * m + l] = s;
                out[l * m + i] = s;
            }
        }
        DMatrix::from_vec(m, m, out)
    }
}

struct Factor(nalgebra::Cholesky<f64, nalgebra::Dyn>);

impl Factor {
    fn new(mut mat: DMatrix<f64>) -> Result<Self> {
        let scale = (0..mat.nrows()).map(|i| mat[(i, i)]).fold(0.0f64, f64::max).max(1.0);
        let mut reg = 0.0;
        for _ in 0..8 {
            if let Some(c) = mat.clone().cholesky() {
                return Ok(Self(c));
            }
            let bump = if reg == 0.0 { 1e-14 * scale } else { reg * 99.0 };
            for i in 0..mat.nrows() {
                mat[(i, i)] += bump;
            }
            reg += bump;
        }
        Err(Error::InvalidParameter("normal equations are not positive definite".into()))
    }

    fn solve(&self, rhs: Vec<f64>) -> Vec<f64> {
        let n = rhs.len();
        self.0.solve(&DVector::from_vec(rhs)).as_slice()[..n].to_vec()
    }
}

/// Primal-dual iterate: `p, q` primal parts, `y` duals, `sp, sq` slacks.
#[derive(Clone)]
struct Point {
    p: Vec<f64>,
    q: Vec<f64>,
    y: Vec<f64>,
    sp: Vec<f64>,
    sq: Vec<f64>,
}

struct Direction {
    dp: Vec<f64>,
    dq: Vec<f64>,
    dy: Vec<f64>,
    dsp: Vec<f64>,
    dsq: Vec<f64>,
}

struct Residuals {
    rp: Vec<f64>,
    rdp: Vec<f64>,
    rdq: Vec<f64>,
}

fn residuals(a: &Columns, b: &[f64], pt: &Point) -> Residuals {
    let x: Vec<f64> = pt.p.iter().zip(&pt.q).map(|(p, q)| p - q).collect();
    let ax = a.mul(&x);
    let aty = a.mul_t(&pt.y);
    Residuals {
        rp: b.iter().zip(&ax).map(|(b, v)| b - v).collect(),
        rdp: aty.iter().zip(&pt.sp).map(|(g, s)| 1.0 - g - s).collect(),
        rdq: aty.iter().zip(&pt.sq).map(|(g, s)| 1.0 + g - s).collect(),
    }
}

/// Newton direction for complementarity targets `rcp`, `rcq`.
fn direction(a: &Columns, f: &Factor, pt: &Point, r: &Residuals, rcp: &[f64], rcq: &[f64]) -> Direction {
    let n = a.n();
    let mut t = vec![0.0; n];
    for j in 0..n {
        let dp = pt.p[j] / pt.sp[j];
        let dq = pt.q[j] / pt.sq[j];
        t[j] = dp * r.rdp[j] - dq * r.rdq[j] - rcp[j] / pt.sp[j] + rcq[j] / pt.sq[j];
    }
    let at = a.mul(&t);
    let rhs: Vec<f64> = r.rp.iter().zip(&at).map(|(x, y)| x + y).collect();
    let dy = f.solve(rhs);
    let g = a.mul_t(&dy);
    let dsp: Vec<f64> = r.rdp.iter().zip(&g).map(|(r, g)| r - g).collect();
    let dsq: Vec<f64> = r.rdq.iter().zip(&g).map(|(r, g)| r + g).collect();
    let dp = (0..n).map(|j| (rcp[j] - pt.p[j] * dsp[j]) / pt.sp[j]).collect();
    let dq = (0..n).map(|j| (rcq[j] - pt.q[j] * dsq[j]) / pt.sq[j]).collect();
    Direction { dp, dq, dy, dsp, dsq }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0f64, f64::min)
}

fn complementarity(pt: &Point) -> f64 {
    pt.p.iter().zip(&pt.sp).map(|(a, b)| a * b).sum::<f64>()
        + pt.q.iter().zip(&pt.sq).map(|(a, b)| a * b).sum::<f64>()
}

fn starting_point(a: &Columns, b: &[f64]) -> Result<Point> {
    let n = a.n();
    // Least-norm solution of [A, -A] z = b, then shifted into the interior.
    let f = Factor::new(a.normal_matrix(&vec![2.0; n]))?;
    let v = f.solve(b.to_vec());
    let atv = a.mul_t(&v);
    let mut p = atv.clone();
    let mut q: Vec<f64> = atv.iter().map(|x| -x).collect();
    let mut sp = vec![1.0; n];
    let mut sq = vec![1.0; n];
    let lo = p.iter().chain(&q).cloned().fold(f64::INFINITY, f64::min);
    let shift = (-1.5 * lo).max(0.0);
    p.iter_mut().chain(q.iter_mut()).for_each(|x| *x += shift);
    let xs: f64 = p.iter().zip(&sp).map(|(a, b)| a * b).sum::<f64>() + q.iter().zip(&sq).map(|(a, b)| a * b).sum::<f64>();
    let sum_x: f64 = p.iter().chain(&q).sum();
    let sum_s = 2.0 * n as f64;
    let (dx, ds) = (0.5 * xs / sum_s, 0.5 * xs / sum_x.max(1e-300));
    p.iter_mut().chain(q.iter_mut()).for_each(|x| *x += dx.max(1e-8));
    sp.iter_mut().chain(sq.iter_mut()).for_each(|s| *s += ds);
    Ok(Point { p, q, y: vec![0.0; a.m], sp, sq })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `min ||x||_1 s.t. A x = b` by interior point. `A` must have full
/// row rank.
pub fn minimize_l1_interior<A: ColumnSource + ?Sized>(
    a: &A,
    b: &[f64],
    opts: InteriorOptions,
) -> Result<L1Solution> {
    let m = a.n_rows();
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    let cols = Columns::from_source(a);
    let n = cols.n();
    let bnorm = 1.0 + inf_norm(b);
    let mut pt = starting_point(&cols, b)?;
    let mut best: Option<(f64, Point)> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let r = residuals(&cols, b, &pt);
        let primal: f64 = pt.p.iter().chain(&pt.q).sum();
        let dual: f64 = b.iter().zip(&pt.y).map(|(b, y)| b * y).sum();
        let gap = (primal - dual).abs() / (1.0 + primal.abs());
        let pres = inf_norm(&r.rp) / bnorm;
        let dres = inf_norm(&r.rdp).max(inf_norm(&r.rdq));
        let merit = gap.max(pres).max(dres);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, pt.clone()));
        }
        if merit < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let w: Vec<f64> = (0..n).map(|j| pt.p[j] / pt.sp[j] + pt.q[j] / pt.sq[j]).collect();
        let Ok(f) = Factor::new(cols.normal_matrix(&w)) else { break };
        let mu = complementarity(&pt) / (2 * n) as f64;

        // Predictor.
        let rcp: Vec<f64> = pt.p.iter().zip(&pt.sp).map(|(x, s)| -x * s).collect();
        let rcq: Vec<f64> = pt.q.iter().zip(&pt.sq).map(|(x, s)| -x * s).collect();
        let aff = direction(&cols, &f, &pt, &r, &rcp, &rcq);
        let ap = max_step(&pt.p, &aff.dp).min(max_step(&pt.q, &aff.dq));
        let ad = max_step(&pt.sp, &aff.dsp).min(max_step(&pt.sq, &aff.dsq));
        let mut mu_aff = 0.0;
        for j in 0..n {
            mu_aff += (pt.p[j] + ap * aff.dp[j]) * (pt.sp[j] + ad * aff.dsp[j]);
            mu_aff += (pt.q[j] + ap * aff.dq[j]) * (pt.sq[j] + ad * aff.dsq[j]);
        }
        mu_aff /= (2 * n) as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);

        // Corrector.
        let rcp: Vec<f64> = (0..n)
            .map(|j| sigma * mu - pt.p[j] * pt.sp[j] - aff.dp[j] * aff.dsp[j])
            .collect();
        let rcq: Vec<f64> = (0..n)
            .map(|j| sigma * mu - pt.q[j] * pt.sq[j] - aff.dq[j] * aff.dsq[j])
            .collect();
        let d = direction(&cols, &f, &pt, &r, &rcp, &rcq);
        let eta = (1.0 - mu).clamp(0.9, 0.995);
        let ap = (eta * max_step(&pt.p, &d.dp).min(max_step(&pt.q, &d.dq))).min(1.0);
        let ad = (eta * max_step(&pt.sp, &d.dsp).min(max_step(&pt.sq, &d.dsq))).min(1.0);
        for j in 0..n {
            pt.p[j] += ap * d.dp[j];
            pt.q[j] += ap * d.dq[j];
            pt.sp[j] += ad * d.dsp[j];
            pt.sq[j] += ad * d.dsq[j];
        }
        for (y, dy) in pt.y.iter_mut().zip(&d.dy) {
            *y += ad * dy;
        }
    }

    let (merit, pt) = match (converged, best) {
        (true, _) => (0.0, pt),
        (false, Some(b)) => b,
        (false, None) => (f64::INFINITY, pt),
    };
    let coefficients: Vec<(usize, f64)> = pt
        .p
        .iter()
        .zip(&pt.q)
        .map(|(p, q)| p - q)
        .enumerate()
        .filter(|(_, x)| *x != 0.0)
        .collect();
    let mut x = vec![0.0; n];
    for &(j, v) in &coefficients {
        x[j] = v;
    }
    let recon = cols.mul(&x);
    let residual = inf_norm(&recon.iter().zip(b).map(|(r, b)| r - b).collect::<Vec<_>>());
    let objective = coefficients.iter().map(|(_, v)| v.abs()).sum();
    let status = if residual > 1e-3 * bnorm {
        SolverStatus::Infeasible
    } else if (converged || merit < opts.gap_tol) && residual <= opts.residual_tol {
        SolverStatus::Optimal
    } else {
        SolverStatus::ToleranceWarning
    };
    Ok(L1Solution { objective, coefficients, status, residual, iterations })
}
