use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{solve_lp, Direction, MilpModel, Solution, SolverError, Status, INTEGRALITY_TOL};
use crate::budget::{Budget, Unlimited};

struct Node {
    /// Relaxation bound in minimization sense.
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Reversed so the max-heap pops the lowest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Most fractional integer variable, ties to the lowest index.
fn branching_var(values: &[f64], integer: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, &int)) in values.iter().zip(integer).enumerate() {
        if !int {
            continue;
        }
        let f = v - libm::floor(v);
        let score = f.min(1.0 - f);
        if score > INTEGRALITY_TOL && best.is_none_or(|(_, s)| score > s) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

/// Branch and bound with no work limit.
pub fn solve_milp(model: &MilpModel) -> Result<Solution, SolverError> {
    solve_milp_with(model, &mut Unlimited)
}

/// Best-bound branch and bound over [`solve_lp`]. The budget is polled once
/// per node; when it runs out the incumbent is returned with
/// [`Status::BudgetExceeded`] and `certified == false`.
pub fn solve_milp_with(model: &MilpModel, budget: &mut dyn Budget) -> Result<Solution, SolverError> {
    let lp = &model.lp;
    lp.validate()?;
    if model.integer.len() != lp.var_count() {
        return Err(SolverError::InvalidModel("integrality flags do not match the variables"));
    }
    for j in 0..lp.var_count() {
        if model.integer[j] && !(lp.lower[j].is_finite() && lp.upper[j].is_finite()) {
            return Err(SolverError::InvalidModel("integer variables need finite bounds"));
        }
    }
    let sign = match lp.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };

    let mut work = lp.clone();
    let root = solve_lp(&work)?;
    match root.status {
        Status::Optimal => {}
        other => return Ok(Solution { nodes: 1, ..Solution::without_values(other) }),
    }
    let mut nodes = 1;
    let mut seq = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();

    let mut consider = |values: Vec<f64>,
                        lower: Vec<f64>,
                        upper: Vec<f64>,
                        objective: f64,
                        incumbent: &mut Option<(f64, Vec<f64>)>,
                        heap: &mut BinaryHeap<Node>| {
        let bound = sign * objective;
        if incumbent.as_ref().is_some_and(|(b, _)| bound >= *b - 1e-9) {
            return;
        }
        if branching_var(&values, &model.integer).is_none() {
            let mut v = values;
            for (x, &int) in v.iter_mut().zip(&model.integer) {
                if int {
                    *x = libm::round(*x);
                }
            }
            *incumbent = Some((bound, v));
        } else {
            seq += 1;
            heap.push(Node { bound, seq, lower, upper, values });
        }
    };
    consider(root.values, lp.lower.clone(), lp.upper.clone(), root.objective, &mut incumbent, &mut heap);

    let mut exhausted = false;
    while let Some(node) = heap.pop() {
        if incumbent.as_ref().is_some_and(|(b, _)| node.bound >= *b - 1e-9) {
            break;
        }
        if budget.exhausted() {
            exhausted = true;
            break;
        }
        let j = branching_var(&node.values, &model.integer).expect("queued nodes are fractional");
        let v = node.values[j];
        for down in [true, false] {
            let (mut lower, mut upper) = (node.lower.clone(), node.upper.clone());
            if down {
                upper[j] = libm::floor(v);
            } else {
                lower[j] = libm::ceil(v);
            }
            if lower[j] > upper[j] {
                continue;
            }
            work.lower.clone_from(&lower);
            work.upper.clone_from(&upper);
            let s = solve_lp(&work)?;
            nodes += 1;
            if s.status == Status::Optimal {
                consider(s.values, lower, upper, s.objective, &mut incumbent, &mut heap);
            }
        }
    }

    Ok(match incumbent {
        Some((_, values)) => Solution {
            status: if exhausted { Status::BudgetExceeded } else { Status::Optimal },
            objective: lp.evaluate(&values),
            values,
            certified: !exhausted,
            duals: Vec::new(),
            nodes,
        },
        None => Solution {
            nodes,
            ..Solution::without_values(if exhausted { Status::BudgetExceeded } else { Status::Infeasible })
        },
    })
}
