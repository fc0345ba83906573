use alloc::vec;
use alloc::vec::Vec;

use super::{LinearProgram, Sense, Solution, SolverError, Status, Direction, FEASIBILITY_TOL};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

/// How an original variable maps onto non-negative standard-form columns:
/// `x = offset + Σ sign · column`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
    /// Width of the finite box, when the variable needs an upper-bound row.
    width: Option<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows × (cols + 1)`, right-hand side last.
    a: Vec<f64>,
    /// Reduced costs, with `-z` in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.at(r, c);
        for k in 0..w {
            self.a[r * w + k] /= p;
        }
        self.a[r * w + c] = 1.0;
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for k in 0..w {
                    row[k] -= f * prow[k];
                    if row[k].abs() < 1e-13 {
                        row[k] = 0.0;
                    }
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Primal simplex over columns accepted by `allowed`. Prices by the most
    /// negative reduced cost and switches to Bland's rule after a run of
    /// degenerate pivots, which rules out cycling.
    fn run(&mut self, allowed: impl Fn(usize) -> bool, limit: usize) -> Result<Outcome, SolverError> {
        let mut degenerate_run = 0usize;
        for _ in 0..limit {
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut enter: Option<usize> = None;
            for j in (0..self.cols).filter(|&j| allowed(j) && self.obj[j] < -COST_EPS) {
                if bland {
                    enter = Some(j);
                    break;
                }
                if enter.is_none_or(|e| self.obj[j] < self.obj[e]) {
                    enter = Some(j);
                }
            }
            let Some(enter) = enter else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                        if (!tie && ratio < bratio) || (tie && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match leave {
                Some((r, ratio)) => {
                    degenerate_run = if ratio <= 1e-12 { degenerate_run + 1 } else { 0 };
                    self.pivot(r, enter)
                }
                None => return Ok(Outcome::Unbounded),
            }
        }
        Err(SolverError::IterationLimit)
    }
}

/// Solves `lp` to optimality, or reports it infeasible or unbounded.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, SolverError> {
    lp.validate()?;
    let n = lp.var_count();
    let dir = match lp.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };

    let mut maps = Vec::with_capacity(n);
    let mut n_std = 0;
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let m = if lo.is_finite() {
            n_std += 1;
            VarMap { offset: lo, cols: vec![(n_std - 1, 1.0)], width: hi.is_finite().then_some(hi - lo) }
        } else if hi.is_finite() {
            n_std += 1;
            VarMap { offset: hi, cols: vec![(n_std - 1, -1.0)], width: None }
        } else {
            n_std += 2;
            VarMap { offset: 0.0, cols: vec![(n_std - 2, 1.0), (n_std - 1, -1.0)], width: None }
        };
        maps.push(m);
    }

    let mut cost = vec![0.0; n_std];
    for (j, m) in maps.iter().enumerate() {
        for &(c, s) in &m.cols {
            cost[c] += dir * lp.objective[j] * s;
        }
    }

    // Standard-form rows over the shifted columns.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.rows.len());
    for r in &lp.rows {
        let mut dense = vec![0.0; n_std];
        let mut rhs = r.rhs;
        for &(j, a) in &r.coefs {
            rhs -= a * maps[j].offset;
            for &(c, s) in &maps[j].cols {
                dense[c] += a * s;
            }
        }
        rows.push((dense, r.sense, rhs));
    }
    let user_rows = rows.len();

    // Upper-bound rows, skipped when a non-negative `≤` row already caps the column.
    let mut implied = vec![f64::INFINITY; n_std];
    for (dense, sense, rhs) in &rows {
        if *sense == Sense::Le && dense.iter().all(|&a| a >= 0.0) {
            for (c, &a) in dense.iter().enumerate() {
                if a > 0.0 {
                    implied[c] = implied[c].min(rhs / a);
                }
            }
        }
    }
    // Only single-column shifted maps are covered by the check above, and
    // only when every column in the row is itself non-negative, which holds
    // for all standard-form columns.
    for m in &maps {
        if let Some(w) = m.width {
            let c = m.cols[0].0;
            if implied[c] <= w + 1e-12 {
                continue;
            }
            let mut dense = vec![0.0; n_std];
            dense[c] = 1.0;
            rows.push((dense, Sense::Le, w));
        }
    }

    let m = rows.len();
    let mut flipped = vec![false; m];
    for (i, row) in rows.iter_mut().enumerate() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|a| *a = -*a);
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
            flipped[i] = true;
        }
    }
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let first_art = n_std + n_slack;
    let cols = first_art + n_art;

    let mut t = Tableau { rows: m, cols, a: vec![0.0; m * (cols + 1)], obj: vec![0.0; cols + 1], basis: vec![0; m] };
    let mut init_col = vec![0; m];
    let (mut next_slack, mut next_art) = (n_std, first_art);
    let w = cols + 1;
    for (i, (dense, sense, rhs)) in rows.iter().enumerate() {
        t.a[i * w..i * w + n_std].copy_from_slice(dense);
        t.a[i * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                t.a[i * w + next_slack] = 1.0;
                init_col[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.a[i * w + next_slack] = -1.0;
                next_slack += 1;
                t.a[i * w + next_art] = 1.0;
                init_col[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.a[i * w + next_art] = 1.0;
                init_col[i] = next_art;
                next_art += 1;
            }
        }
        t.basis[i] = init_col[i];
    }

    let limit = 50_000 + 50 * (m + cols);
    let is_art = |j: usize| j >= first_art;

    if n_art > 0 {
        for i in 0..m {
            if is_art(t.basis[i]) {
                for k in 0..w {
                    t.obj[k] -= t.a[i * w + k];
                }
            }
        }
        for j in first_art..cols {
            t.obj[j] = 0.0;
        }
        t.run(|_| true, limit)?;
        let infeasibility = -t.obj[cols];
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(Solution::without_values(Status::Infeasible));
        }
        for r in 0..m {
            if is_art(t.basis[r]) {
                if let Some(j) = (0..first_art).find(|&j| t.at(r, j).abs() > PIVOT_EPS) {
                    t.pivot(r, j);
                }
            }
        }
    }

    t.obj.iter_mut().for_each(|v| *v = 0.0);
    t.obj[..n_std].copy_from_slice(&cost);
    for i in 0..m {
        let cb = if t.basis[i] < n_std { cost[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for k in 0..w {
                t.obj[k] -= cb * t.a[i * w + k];
            }
        }
    }
    if let Outcome::Unbounded = t.run(|j| !is_art(j), limit)? {
        return Ok(Solution::without_values(Status::Unbounded));
    }

    let mut x_std = vec![0.0; cols];
    for r in 0..m {
        x_std[t.basis[r]] = t.rhs(r);
    }
    let values: Vec<f64> = maps
        .iter()
        .map(|mp| mp.offset + mp.cols.iter().map(|&(c, s)| s * x_std[c]).sum::<f64>())
        .collect();
    let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    let residual = lp.max_violation(&values);
    if residual > FEASIBILITY_TOL * scale {
        return Err(SolverError::NumericalInstability { residual });
    }
    let duals = (0..user_rows)
        .map(|i| {
            let y = -t.obj[init_col[i]];
            let y = if flipped[i] { -y } else { y };
            dir * y
        })
        .collect();
    Ok(Solution {
        status: Status::Optimal,
        objective: lp.evaluate(&values),
        values,
        certified: true,
        duals,
        nodes: 1,
    })
}
