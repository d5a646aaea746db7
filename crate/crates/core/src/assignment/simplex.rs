//! Dense two-phase primal simplex for `min c'x  s.t.  Ax = b, x >= 0`.
//!
//! Sized for the redistribution LPs (a few hundred rows, about a thousand
//! columns). Dantzig pricing, switching to Bland's rule permanently after a
//! run of degenerate pivots. The optimal basic solution is re-solved from the
//! original data to clean up accumulated pivoting error.

use thiserror::Error;

const PRICE_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Constraint rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("infeasible (phase-one residual {0})")]
    Infeasible(f64),
    #[error("unbounded along column {0}")]
    Unbounded(usize),
    #[error("pivot limit {0} reached")]
    PivotLimit(usize),
    #[error("malformed program: {0}")]
    Malformed(String),
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) x (cols + 1)`; last row holds reduced costs, last column
    /// the right-hand side.
    t: Vec<f64>,
    /// Basic column per row; `>= cols` marks an artificial.
    basis: Vec<usize>,
    pivots: usize,
    degenerate: usize,
    bland: bool,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.cols + 1;
        let p = self.at(r, j);
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        self.t[r * w + j] = 1.0;
        let (head, rest) = self.t.split_at_mut(r * w);
        let (prow, tail) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[j] = 0.0;
            }
        };
        for row in head.chunks_exact_mut(w) {
            eliminate(row);
        }
        for row in tail.chunks_exact_mut(w) {
            eliminate(row);
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn entering(&self) -> Option<usize> {
        let obj = self.rows;
        if self.bland {
            (0..self.cols).find(|&j| self.at(obj, j) < -PRICE_TOL)
        } else {
            let mut best = None;
            let mut best_val = -PRICE_TOL;
            for j in 0..self.cols {
                let d = self.at(obj, j);
                if d < best_val {
                    best_val = d;
                    best = Some(j);
                }
            }
            best
        }
    }

    fn leaving(&self, j: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, j);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self, limit: usize) -> Result<(), LpError> {
        while let Some(j) = self.entering() {
            if self.pivots >= limit {
                return Err(LpError::PivotLimit(limit));
            }
            let i = self.leaving(j).ok_or(LpError::Unbounded(j))?;
            if self.rhs(i).abs() <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate >= DEGENERATE_RUN {
                    self.bland = true;
                }
            } else {
                self.degenerate = 0;
            }
            self.pivot(i, j);
        }
        Ok(())
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let rows = lp.a.len();
    let cols = lp.c.len();
    if lp.b.len() != rows || lp.a.iter().any(|r| r.len() != cols) {
        return Err(LpError::Malformed("dimension mismatch".into()));
    }
    let w = cols + 1;
    let mut t = vec![0.0; (rows + 1) * w];
    let mut a = lp.a.clone();
    let mut b = lp.b.clone();
    for i in 0..rows {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for x in &mut a[i] {
                *x = -*x;
            }
        }
        t[i * w..i * w + cols].copy_from_slice(&a[i]);
        t[i * w + cols] = b[i];
    }
    // phase one: minimise the sum of artificials
    for i in 0..rows {
        for j in 0..=cols {
            t[rows * w + j] -= t[i * w + j];
        }
    }
    let mut tab = Tableau {
        rows,
        cols,
        t,
        basis: (cols..cols + rows).collect(),
        pivots: 0,
        degenerate: 0,
        bland: false,
    };
    let limit = 50 * (rows + cols) + 1000;
    tab.run(limit)?;
    let residual = -tab.rhs(rows);
    let scale = b.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    if residual > 1e-9 * scale {
        return Err(LpError::Infeasible(residual));
    }

    // drive remaining artificials out; rows where that is impossible are
    // redundant and stay inert
    let mut redundant = vec![false; rows];
    for i in 0..rows {
        if tab.basis[i] >= cols {
            match (0..cols).find(|&j| tab.at(i, j).abs() > PIVOT_TOL) {
                Some(j) => tab.pivot(i, j),
                None => redundant[i] = true,
            }
        }
    }

    // phase two
    for j in 0..=cols {
        tab.t[rows * w + j] = if j < cols { lp.c[j] } else { 0.0 };
    }
    for i in 0..rows {
        let bj = tab.basis[i];
        if bj < cols && lp.c[bj] != 0.0 {
            let f = lp.c[bj];
            for j in 0..=cols {
                tab.t[rows * w + j] -= f * tab.t[i * w + j];
            }
        }
    }
    tab.degenerate = 0;
    tab.bland = false;
    tab.run(limit)?;

    let mut x = vec![0.0; cols];
    for i in 0..rows {
        let bj = tab.basis[i];
        if bj < cols {
            x[bj] = tab.rhs(i).max(0.0);
        }
    }
    if let Some(refined) = refine(&a, &b, &tab.basis, &redundant, cols) {
        if refined.iter().all(|&v| v >= -1e-9) {
            x = refined.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    let objective = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: tab.pivots,
    })
}

/// Solves `B x_B = b` on the non-redundant rows with partial pivoting.
fn refine(a: &[Vec<f64>], b: &[f64], basis: &[usize], redundant: &[bool], cols: usize) -> Option<Vec<f64>> {
    let rows: Vec<usize> = (0..a.len()).filter(|&i| !redundant[i]).collect();
    let basic: Vec<usize> = rows.iter().map(|&i| basis[i]).filter(|&j| j < cols).collect();
    let k = rows.len();
    if basic.len() != k {
        return None;
    }
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            let mut r: Vec<f64> = basic.iter().map(|&j| a[i][j]).collect();
            r.push(b[i]);
            r
        })
        .collect();
    for col in 0..k {
        let p = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, p);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; cols];
    for (r, &j) in basic.iter().enumerate() {
        x[j] = m[r][k] / m[r][r];
    }
    Some(x)
}
