use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{ReqIx, RtvGraph, VehIx};
use crate::budget::Budget;
use crate::netgraph::{NodeIx, TravelTimeTable};
use crate::solver::{solve_lp, solve_milp_with, Direction, LinearProgram, MilpModel, Sense, SolverError, Status};

/// Chosen trip-vehicle edges of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Indices into `RtvGraph::edges`, ascending.
    pub selected: Vec<usize>,
    /// Open requests left without a vehicle, ascending.
    pub unassigned: Vec<ReqIx>,
    /// Objective value in the solved formulation's own terms.
    pub objective: f64,
    /// False when the solve stopped on its budget.
    pub optimal: bool,
}

impl Assignment {
    pub fn served(&self, rtv: &RtvGraph) -> BTreeSet<ReqIx> {
        self.selected.iter().flat_map(|&e| rtv.trips[rtv.edges[e].trip].requests.iter().copied()).collect()
    }

    pub(crate) fn from_edges(rtv: &RtvGraph, mut selected: Vec<usize>, objective: f64, optimal: bool) -> Self {
        selected.sort_unstable();
        let mut a = Assignment { selected, unassigned: Vec::new(), objective, optimal };
        let served = a.served(rtv);
        a.unassigned = rtv.requests.iter().copied().filter(|r| !served.contains(r)).collect();
        a
    }
}

/// Per-request reward `c_p`. One more served request must outweigh any
/// difference in total delay, and no assignment's total cost can exceed
/// `|R|` times the largest edge cost since every chosen trip serves at least
/// one request.
pub fn penalty_for(rtv: &RtvGraph) -> f64 {
    let max_cost = rtv.edges.iter().map(|e| e.cost).fold(0.0, f64::max);
    1.0 + rtv.requests.len() as f64 * max_cost
}

fn edge_rows(rtv: &RtvGraph, lp: &mut LinearProgram) -> Vec<Vec<(usize, f64)>> {
    let mut by_vehicle = vec![Vec::new(); rtv.vehicle_count];
    for (e, edge) in rtv.edges.iter().enumerate() {
        by_vehicle[edge.vehicle].push((e, 1.0));
    }
    for row in by_vehicle.into_iter().filter(|r| !r.is_empty()) {
        lp.add_row(row, Sense::Le, 1.0);
    }
    let pos = |r: ReqIx| rtv.requests.binary_search(&r).expect("trip request is open");
    let mut by_request = vec![Vec::new(); rtv.requests.len()];
    for (e, edge) in rtv.edges.iter().enumerate() {
        for &r in &rtv.trips[edge.trip].requests {
            by_request[pos(r)].push((e, 1.0));
        }
    }
    by_request
}

fn solve(model: &MilpModel, n_edges: usize, budget: &mut dyn Budget) -> Result<(Vec<usize>, bool), SolverError> {
    let s = solve_milp_with(model, budget)?;
    match s.status {
        // Choosing nothing is always feasible, so a budget stop without an
        // incumbent falls back to it.
        Status::Optimal | Status::BudgetExceeded => {
            let chosen = (0..n_edges).filter(|&e| s.values.get(e).is_some_and(|&x| x > 0.5)).collect();
            Ok((chosen, s.certified))
        }
        _ => Err(SolverError::InvalidModel("assignment model reported infeasible or unbounded")),
    }
}

/// Reduced formulation: minimize `Σ (c_ij − c_p·l_i)·x_ij` with at most one
/// trip per vehicle and at most one trip per request.
pub fn assign(rtv: &RtvGraph, budget: &mut dyn Budget) -> Result<Assignment, SolverError> {
    let cp = penalty_for(rtv);
    let n = rtv.edges.len();
    let mut lp = LinearProgram::new(n, Direction::Minimize);
    for (e, edge) in rtv.edges.iter().enumerate() {
        lp.objective[e] = edge.cost - cp * rtv.trips[edge.trip].requests.len() as f64;
        lp.upper[e] = 1.0;
    }
    for row in edge_rows(rtv, &mut lp).into_iter().filter(|r| r.len() > 1) {
        lp.add_row(row, Sense::Le, 1.0);
    }
    let model = MilpModel { lp, integer: vec![true; n] };
    let (chosen, optimal) = solve(&model, n, budget)?;
    let objective = rtv.reduced_objective(&chosen, cp);
    Ok(Assignment::from_edges(rtv, chosen, objective, optimal))
}

/// Original formulation with an explicit unassignment variable χ_k per
/// request: minimize `Σ c_ij·x_ij + c_p·Σ χ_k` with each request either in
/// exactly one chosen trip or unassigned.
pub fn assign_baseline(rtv: &RtvGraph, budget: &mut dyn Budget) -> Result<Assignment, SolverError> {
    let cp = penalty_for(rtv);
    let n = rtv.edges.len();
    let m = rtv.requests.len();
    let mut lp = LinearProgram::new(n + m, Direction::Minimize);
    for (e, edge) in rtv.edges.iter().enumerate() {
        lp.objective[e] = edge.cost;
    }
    lp.upper = vec![1.0; n + m];
    for k in 0..m {
        lp.objective[n + k] = cp;
    }
    for (k, mut row) in edge_rows(rtv, &mut lp).into_iter().enumerate() {
        row.push((n + k, 1.0));
        lp.add_row(row, Sense::Eq, 1.0);
    }
    let model = MilpModel { lp, integer: vec![true; n + m] };
    let (chosen, optimal) = solve(&model, n, budget)?;
    let a = Assignment::from_edges(rtv, chosen, 0.0, optimal);
    let objective = a.selected.iter().map(|&e| rtv.edges[e].cost).sum::<f64>() + cp * a.unassigned.len() as f64;
    Ok(Assignment { objective, ..a })
}

/// Search-size bound above which [`crate::solver::enumerate_assignments`]
/// refuses to run.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Exhaustive reduced-formulation optimum: every vehicle takes one of its
/// edges or none, with no request served twice. Ties keep the first
/// assignment found, trying "none" before each vehicle's edges.
pub fn enumerate(rtv: &RtvGraph) -> Result<Assignment, SolverError> {
    let mut by_vehicle: Vec<Vec<usize>> = vec![Vec::new(); rtv.vehicle_count];
    for (e, edge) in rtv.edges.iter().enumerate() {
        by_vehicle[edge.vehicle].push(e);
    }
    // The search branches on vehicles but prunes on used requests, so it
    // visits at most one leaf per map from requests to (vehicle or none).
    let product = by_vehicle.iter().fold(1u128, |acc, es| acc.saturating_mul(es.len() as u128 + 1));
    let by_request = (0..rtv.requests.len()).fold(1u128, |acc, _| acc.saturating_mul(rtv.vehicle_count as u128 + 1));
    let size = product.min(by_request);
    if size > ENUMERATION_LIMIT {
        return Err(SolverError::InstanceTooLarge(size));
    }
    let cp = penalty_for(rtv);
    let value = |e: usize| rtv.edges[e].cost - cp * rtv.trips[rtv.edges[e].trip].requests.len() as f64;

    struct State<'a> {
        rtv: &'a RtvGraph,
        by_vehicle: &'a [Vec<usize>],
        used: BTreeSet<ReqIx>,
        chosen: Vec<usize>,
        best: (f64, Vec<usize>),
    }
    fn go(s: &mut State<'_>, v: VehIx, acc: f64, value: &dyn Fn(usize) -> f64) {
        if v == s.by_vehicle.len() {
            if acc < s.best.0 {
                s.best = (acc, s.chosen.clone());
            }
            return;
        }
        go(s, v + 1, acc, value);
        for i in 0..s.by_vehicle[v].len() {
            let e = s.by_vehicle[v][i];
            let reqs = &s.rtv.trips[s.rtv.edges[e].trip].requests;
            if reqs.iter().any(|r| s.used.contains(r)) {
                continue;
            }
            s.used.extend(reqs.iter().copied());
            s.chosen.push(e);
            go(s, v + 1, acc + value(e), value);
            s.chosen.pop();
            for r in reqs {
                s.used.remove(r);
            }
        }
    }
    let mut s = State { rtv, by_vehicle: &by_vehicle, used: BTreeSet::new(), chosen: Vec::new(), best: (0.0, Vec::new()) };
    go(&mut s, 0, 0.0, &value);
    let (_, chosen) = s.best;
    let objective = rtv.reduced_objective(&chosen, cp);
    Ok(Assignment::from_edges(rtv, chosen, objective, true))
}

/// An idle vehicle sent toward an open request's origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub vehicle: VehIx,
    pub target: NodeIx,
    /// Seconds of driving.
    pub cost: f64,
}

/// Matches idle vehicles to open-request origins, as many pairs as possible
/// at least total driving time. Both inputs are taken in the order given;
/// ties go to the earlier vehicle, then the earlier origin.
pub fn rebalance(idle: &[(VehIx, NodeIx)], origins: &[NodeIx], times: &TravelTimeTable) -> Result<Vec<Move>, SolverError> {
    let mut vars = Vec::new();
    for (vi, &(_, at)) in idle.iter().enumerate() {
        for (oi, &o) in origins.iter().enumerate() {
            let t = times.time(at, o);
            if t.is_finite() {
                vars.push((vi, oi, t));
            }
        }
    }
    if vars.is_empty() {
        return Ok(Vec::new());
    }
    let max_cost = vars.iter().map(|v| v.2).fold(0.0, f64::max);
    let pairs = idle.len().min(origins.len()) as f64;
    let reward = 2.0 + pairs * (max_cost + 1.0);
    let mut lp = LinearProgram::new(vars.len(), Direction::Minimize);
    let mut rows_v = vec![Vec::new(); idle.len()];
    let mut rows_o = vec![Vec::new(); origins.len()];
    for (j, &(vi, oi, t)) in vars.iter().enumerate() {
        lp.objective[j] = t + 1e-6 * vi as f64 + 1e-9 * oi as f64 - reward;
        rows_v[vi].push((j, 1.0));
        rows_o[oi].push((j, 1.0));
    }
    for row in rows_v.into_iter().chain(rows_o).filter(|r| !r.is_empty()) {
        lp.add_row(row, Sense::Le, 1.0);
    }
    // Transportation constraints are totally unimodular, so the LP vertex is
    // already a matching.
    let s = solve_lp(&lp)?;
    if s.status != Status::Optimal {
        return Err(SolverError::InvalidModel("rebalancing LP not optimal"));
    }
    let mut moves: Vec<Move> = vars
        .iter()
        .zip(&s.values)
        .filter(|(_, &x)| x > 0.5)
        .map(|(&(vi, oi, t), _)| Move { vehicle: idle[vi].0, target: origins[oi], cost: t })
        .collect();
    moves.sort_by_key(|m| m.vehicle);
    Ok(moves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Unlimited;
    use crate::fleetsim::route::tests::line;
    use crate::fleetsim::{RoutePlan, RtvEdge, Trip};
    use rand::Rng;

    fn graph(requests: usize, vehicles: usize, trips: &[&[ReqIx]], edges: &[(usize, VehIx, f64)]) -> RtvGraph {
        RtvGraph {
            requests: (0..requests).collect(),
            vehicle_count: vehicles,
            trips: trips.iter().map(|t| Trip { requests: t.to_vec() }).collect(),
            edges: edges.iter().map(|&(trip, vehicle, cost)| RtvEdge { trip, vehicle, cost, route: RoutePlan::default() }).collect(),
            truncated: false,
        }
    }

    pub(crate) fn random_graph(rng: &mut impl Rng) -> RtvGraph {
        let nr = rng.gen_range(1..=6);
        let nv = rng.gen_range(1..=5);
        let mut trips: Vec<Vec<ReqIx>> = (0..nr).map(|r| vec![r]).collect();
        for a in 0..nr {
            for b in a + 1..nr {
                if rng.gen_bool(0.3) {
                    trips.push(vec![a, b]);
                }
            }
        }
        if nr >= 3 && rng.gen_bool(0.3) {
            trips.push(vec![0, 1, 2]);
        }
        let mut edges = Vec::new();
        for (t, _) in trips.iter().enumerate() {
            for v in 0..nv {
                if rng.gen_bool(0.4) {
                    edges.push((t, v, rng.gen_range(0.0..300.0)));
                }
            }
        }
        let refs: Vec<&[ReqIx]> = trips.iter().map(|t| t.as_slice()).collect();
        graph(nr, nv, &refs, &edges)
    }

    #[test]
    fn single_edge_assigned() {
        let g = graph(1, 1, &[&[0]], &[(0, 0, 5.0)]);
        let a = assign(&g, &mut Unlimited).unwrap();
        assert_eq!(a.selected, vec![0]);
        assert!(a.unassigned.is_empty());
        assert_eq!(enumerate(&g).unwrap().selected, vec![0]);
    }

    #[test]
    fn empty_graph() {
        let g = graph(0, 0, &[], &[]);
        let a = enumerate(&g).unwrap();
        assert!(a.selected.is_empty());
        assert_eq!(a.objective, 0.0);
        assert_eq!(assign(&g, &mut Unlimited).unwrap().objective, 0.0);
    }

    #[test]
    fn infeasible_request_is_unassigned_in_baseline() {
        // Request 1 has no edge, so its χ must be 1.
        let g = graph(2, 1, &[&[0]], &[(0, 0, 5.0)]);
        let a = assign_baseline(&g, &mut Unlimited).unwrap();
        assert_eq!(a.unassigned, vec![1]);
        assert_eq!(a.objective, 5.0 + penalty_for(&g));
    }

    #[test]
    fn two_by_two_matches_all_patterns() {
        // Vehicle costs are asymmetric: v0 is cheap for r0, v1 for r1, and
        // the pooled trip is expensive on either vehicle.
        let g = graph(
            2,
            2,
            &[&[0], &[1], &[0, 1]],
            &[(0, 0, 10.0), (0, 1, 50.0), (1, 0, 40.0), (1, 1, 15.0), (2, 0, 90.0), (2, 1, 95.0)],
        );
        let a = assign(&g, &mut Unlimited).unwrap();
        let o = enumerate(&g).unwrap();
        assert_eq!(a.selected, o.selected);
        assert_eq!(a.selected, vec![0, 3]);
    }

    #[test]
    fn pooling_wins_when_it_serves_more() {
        // One vehicle: serving both requests pooled beats the cheap single.
        let g = graph(2, 1, &[&[0], &[0, 1]], &[(0, 0, 1.0), (1, 0, 250.0)]);
        let a = assign(&g, &mut Unlimited).unwrap();
        assert_eq!(a.selected, vec![1]);
        assert!(a.unassigned.is_empty());
    }

    #[test]
    fn formulations_agree_with_each_other_and_the_oracle() {
        let mut rng = crate::rng::stream(404, 0);
        for _ in 0..100 {
            let g = random_graph(&mut rng);
            let a = assign(&g, &mut Unlimited).unwrap();
            let b = assign_baseline(&g, &mut Unlimited).unwrap();
            let o = enumerate(&g).unwrap();
            assert_eq!(a.served(&g), b.served(&g));
            assert_eq!(a.selected, o.selected);
            let offset = penalty_for(&g) * g.requests.len() as f64;
            assert!((b.objective - offset - a.objective).abs() <= 1e-9 * offset.max(1.0));
        }
    }

    #[test]
    fn enumeration_refuses_huge_instances() {
        // 21^6 request maps and 7^20 vehicle choices both exceed the limit.
        let edges: Vec<(usize, VehIx, f64)> = (0..20).flat_map(|v| (0..6).map(move |t| (t, v, 1.0))).collect();
        let g = graph(6, 20, &[&[0], &[1], &[2], &[3], &[4], &[5]], &edges);
        assert!(matches!(enumerate(&g), Err(SolverError::InstanceTooLarge(_))));
        // Three requests on the same 20 vehicles leave only 21^3 maps.
        let edges: Vec<(usize, VehIx, f64)> = (0..20).flat_map(|v| (0..3).map(move |t| (t, v, 1.0))).collect();
        let g = graph(3, 20, &[&[0], &[1], &[2]], &edges);
        assert_eq!(enumerate(&g).unwrap().served(&g).len(), 3);
    }

    #[test]
    fn rebalance_basics() {
        let (_, tt) = line(6, 60.0);
        assert!(rebalance(&[(0, 0)], &[], &tt).unwrap().is_empty());
        let m = rebalance(&[(0, 2)], &[5, 3], &tt).unwrap();
        assert_eq!(m, vec![Move { vehicle: 0, target: 3, cost: 60.0 }]);
        // Two vehicles equally far from one origin: the lower id goes.
        let m = rebalance(&[(4, 1), (7, 3)], &[2], &tt).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].vehicle, 4);
    }

    #[test]
    fn rebalance_matches_permutation_oracle() {
        let (_, tt) = line(15, 37.0);
        let mut rng = crate::rng::stream(5, 0);
        for _ in 0..30 {
            let idle: Vec<(VehIx, NodeIx)> = (0..3).map(|v| (v, rng.gen_range(0..15))).collect();
            let origins: Vec<NodeIx> = (0..3).map(|_| rng.gen_range(0..15)).collect();
            let moves = rebalance(&idle, &origins, &tt).unwrap();
            assert_eq!(moves.len(), 3);
            let got: f64 = moves.iter().map(|m| m.cost).sum();
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let best = perms
                .iter()
                .map(|p| (0..3).map(|i| tt.time(idle[i].1, origins[p[i]])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!((got - best).abs() < 1e-9);
        }
    }
}
