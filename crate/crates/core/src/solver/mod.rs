//! Exact LP and MILP solvers sized for the per-epoch assignment and
//! rebalancing problems.
//!
//! [`solve_lp`] is a dense two-phase tableau simplex with Bland's rule;
//! [`solve_milp`] runs best-bound branch and bound over it. Neither does
//! presolve, cuts or warm starts. The only reduction is that an explicit
//! upper-bound row is skipped when a non-negative `≤` row already implies it.

mod dump;
mod enumerate;
mod lp;
mod milp;

pub use dump::write_lp;
pub use enumerate::{enumerate_assignments, ENUMERATION_LIMIT};
pub use lp::solve_lp;
pub use milp::{solve_milp, solve_milp_with};

use alloc::vec::Vec;
use thiserror::Error;

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Integrality tolerance.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

/// One constraint row, stored sparsely as (variable, coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// An LP over `n` variables bounded to `[0, ∞)` with zero objective.
    pub fn new(n: usize, direction: Direction) -> Self {
        Self {
            direction,
            objective: alloc::vec![0.0; n],
            rows: Vec::new(),
            lower: alloc::vec![0.0; n],
            upper: alloc::vec![f64::INFINITY; n],
        }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint { coefs, sense, rhs });
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::InvalidModel("bound vectors do not match the objective"));
        }
        for j in 0..n {
            if !(self.lower[j] <= self.upper[j]) || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(SolverError::InvalidModel("variable bounds must satisfy lo <= hi"));
            }
            if !self.objective[j].is_finite() {
                return Err(SolverError::InvalidModel("objective coefficients must be finite"));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(SolverError::InvalidModel("right-hand sides must be finite"));
            }
            if r.coefs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(SolverError::InvalidModel("constraint refers to an unknown variable"));
            }
        }
        Ok(())
    }

    /// Objective value of `x` in the model's own direction.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let lhs: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

/// A linear program with integrality flags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MilpModel {
    pub lp: LinearProgram,
    pub integer: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// The work budget ran out; `values` hold the best incumbent, if any.
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    pub objective: f64,
    /// True when optimality is proven.
    pub certified: bool,
    /// Row duals of an LP solve (empty for MILPs), signed so that
    /// `c − Aᵀy` is the reduced-cost vector in the model's direction.
    pub duals: Vec<f64>,
    /// Branch-and-bound nodes solved (1 for a plain LP).
    pub nodes: usize,
}

impl Solution {
    pub(crate) fn without_values(status: Status) -> Self {
        Self { status, values: Vec::new(), objective: f64::NAN, certified: false, duals: Vec::new(), nodes: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("numerical instability: constraint residual {residual:e}")]
    NumericalInstability { residual: f64 },
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("instance too large to enumerate ({0} combinations)")]
    InstanceTooLarge(u128),
}
