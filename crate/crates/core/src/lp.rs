//! Dense two-phase simplex for `min c·x  s.t.  A x = b, x ≥ 0`.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEAS_TOL: f64 = 1e-8;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Row-major `m × n`.
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, matrix: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let lp = LinearProgram {
            objective,
            matrix,
            rhs,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 || self.rhs.is_empty() {
            return Err(Error::input("linear program needs at least one variable and one row"));
        }
        if self.matrix.len() != self.rhs.len() {
            return Err(Error::input(format!(
                "{} matrix rows but {} right-hand sides",
                self.matrix.len(),
                self.rhs.len()
            )));
        }
        if let Some(i) = self.matrix.iter().position(|r| r.len() != n) {
            return Err(Error::input(format!("row {i} has {} entries, expected {n}", self.matrix[i].len())));
        }
        let finite = self
            .objective
            .iter()
            .chain(&self.rhs)
            .chain(self.matrix.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::input("linear program entries must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        value: f64,
        /// Basic column per retained row (redundant rows are dropped).
        basis: Vec<usize>,
        reduced_costs: Vec<f64>,
    },
    /// Phase 1 ended with positive artificials on `rows`; `residual` is their sum.
    Infeasible { residual: f64, rows: Vec<usize> },
    Unbounded,
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the rhs.
    t: Vec<Vec<f64>>,
    /// Reduced-cost row, same width.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, &pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimises over columns where `allowed` holds. Returns false if unbounded.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        let mut degenerate = 0;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..self.cols).find(|&j| allowed(j) && self.obj[j] < -FEAS_TOL * 1e-1)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.cols {
                    let d = self.obj[j];
                    if allowed(j) && d < -FEAS_TOL * 1e-1 && best.is_none_or(|(_, b)| d < b) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else { return true };
            let rhs = self.cols;
            // Harris ratio test: bound the step with slightly relaxed rows, then
            // take the largest pivot among rows blocking within that bound.
            let mut bound = f64::INFINITY;
            for row in &self.t {
                let a = row[c];
                if a > PIVOT_TOL {
                    bound = bound.min((row[rhs].max(0.0) + FEAS_TOL * 1e-1) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL && row[rhs].max(0.0) / a <= bound {
                    let better = match leave {
                        None => true,
                        Some((l, _)) => {
                            let al = self.t[l][c];
                            a > al || (a == al && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, row[rhs].max(0.0) / a));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            for row in self.t.iter_mut() {
                if row[rhs] < 0.0 {
                    row[rhs] = 0.0;
                }
            }
        }
    }
}

/// Solves `lp` with Dantzig pricing (lowest index on ties), falling back to
/// Bland's rule after a run of degenerate pivots.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (i, (row, &b)) in lp.matrix.iter().zip(&lp.rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; cols + 1];
        for (v, &a) in r.iter_mut().zip(row) {
            *v = sign * a;
        }
        r[n + i] = 1.0;
        r[cols] = sign * b;
        t.push(r);
    }
    // Phase 1 objective: sum of artificials, expressed in non-basic terms.
    let mut obj = vec![0.0; cols + 1];
    for r in &t {
        for j in 0..n {
            obj[j] -= r[j];
        }
        obj[cols] -= r[cols];
    }
    let mut tab = Tableau {
        t,
        obj,
        basis: (n..n + m).collect(),
        cols,
    };
    tab.optimize(&|j| j < cols);
    let residual = -tab.obj[cols];
    if residual > FEAS_TOL {
        let rows = tab
            .basis
            .iter()
            .enumerate()
            .filter(|&(i, &b)| b >= n && tab.t[i][cols] > FEAS_TOL)
            .map(|(_, &b)| b - n)
            .collect();
        return Ok(LpOutcome::Infeasible { residual, rows });
    }

    // Drive zero-level artificials out of the basis; drop rows that are redundant.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            let col = (0..n).find(|&j| tab.t[i][j].abs() > 1e-9);
            match col {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    tab.obj = vec![0.0; cols + 1];
    tab.obj[..n].copy_from_slice(&lp.objective);
    for i in 0..tab.t.len() {
        let c = lp.objective[tab.basis[i]];
        if c != 0.0 {
            for (v, &a) in tab.obj.iter_mut().zip(&tab.t[i]) {
                *v -= c * a;
            }
        }
    }
    if !tab.optimize(&|j| j < n) {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        x[b] = tab.t[i][cols];
    }
    refine(lp, &tab.basis, &mut x);
    let value = dot(&lp.objective, &x);
    Ok(LpOutcome::Optimal {
        x,
        value,
        basis: tab.basis,
        reduced_costs: tab.obj[..n].to_vec(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Re-solves the basic variables from the original rows to shed accumulated
/// tableau round-off. Keeps `x` unchanged if the basis system is singular.
fn refine(lp: &LinearProgram, basis: &[usize], x: &mut [f64]) {
    let k = basis.len();
    if k == 0 {
        return;
    }
    // Least squares over all rows via the normal equations would blur redundant
    // rows; instead pick k independent rows by elimination on [A_B | b].
    let mut rows: Vec<Vec<f64>> = lp
        .matrix
        .iter()
        .zip(&lp.rhs)
        .map(|(r, &b)| {
            let mut v: Vec<f64> = basis.iter().map(|&j| r[j]).collect();
            v.push(b);
            v
        })
        .collect();
    let mut pivots = Vec::with_capacity(k);
    let mut top = 0;
    for col in 0..k {
        let Some(p) = (top..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs())) else {
            return;
        };
        if rows[p][col].abs() < 1e-12 {
            return;
        }
        rows.swap(top, p);
        let prow = rows[top].clone();
        for r in rows.iter_mut().skip(top + 1) {
            let f = r[col] / prow[col];
            if f != 0.0 {
                for (v, &pv) in r.iter_mut().zip(&prow).skip(col) {
                    *v -= f * pv;
                }
            }
        }
        pivots.push(top);
        top += 1;
    }
    let mut sol = vec![0.0; k];
    for col in (0..k).rev() {
        let r = &rows[pivots[col]];
        let s: f64 = (col + 1..k).map(|j| r[j] * sol[j]).sum();
        sol[col] = (r[k] - s) / r[col];
    }
    let mut candidate = x.to_vec();
    for (&j, &v) in basis.iter().zip(&sol) {
        candidate[j] = v;
    }
    let (old, _) = residuals(lp, x);
    let (new, min) = residuals(lp, &candidate);
    if new <= old && min >= -1e-10 {
        x.copy_from_slice(&candidate);
    }
}

/// `(max_i |A_i·x − b_i|, min_j x_j)`.
pub fn residuals(lp: &LinearProgram, x: &[f64]) -> (f64, f64) {
    let violation = lp
        .matrix
        .iter()
        .zip(&lp.rhs)
        .map(|(r, &b)| (dot(r, x) - b).abs())
        .fold(0.0, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    (violation, min)
}
