use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::route::route_delay;
use super::{Constraints, ReqIx, RoutePlan, TripRequest, VehIx, VehicleState};
use crate::budget::Budget;
use crate::netgraph::TravelTimeTable;

/// Pairwise shareability of the open requests of one tier.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RvGraph {
    /// The open requests, ascending.
    pub requests: Vec<ReqIx>,
    /// Request pairs `(a, b)` with `a < b` that one empty vehicle can serve
    /// together starting at either origin.
    pub rr: BTreeSet<(ReqIx, ReqIx)>,
    /// Request-vehicle edges with the serving route and its extra delay.
    pub rv: BTreeMap<(VehIx, ReqIx), (RoutePlan, f64)>,
}

impl RvGraph {
    pub fn shareable(&self, a: ReqIx, b: ReqIx) -> bool {
        self.rr.contains(&(a.min(b), a.max(b)))
    }
}

/// A set of requests, ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Trip {
    pub requests: Vec<ReqIx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtvEdge {
    pub trip: usize,
    pub vehicle: VehIx,
    /// Extra delay caused by adding the trip to the vehicle.
    pub cost: f64,
    pub route: RoutePlan,
}

/// Feasible trips and the vehicles able to serve them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RtvGraph {
    /// The open requests R, ascending.
    pub requests: Vec<ReqIx>,
    pub vehicle_count: usize,
    pub trips: Vec<Trip>,
    pub edges: Vec<RtvEdge>,
    /// Enumeration stopped early because the work budget ran out.
    pub truncated: bool,
}

impl RtvGraph {
    /// Trip ids of each size, `by_size()[k]` holding trips of `k` requests.
    pub fn by_size(&self) -> Vec<Vec<usize>> {
        let max = self.trips.iter().map(|t| t.requests.len()).max().unwrap_or(0);
        let mut out = alloc::vec![Vec::new(); max + 1];
        for (i, t) in self.trips.iter().enumerate() {
            out[t.requests.len()].push(i);
        }
        out
    }

    /// Request-trip membership as `(request, trip)` pairs.
    pub fn request_trip_edges(&self) -> impl Iterator<Item = (ReqIx, usize)> + '_ {
        self.trips.iter().enumerate().flat_map(|(i, t)| t.requests.iter().map(move |&r| (r, i)))
    }

    /// Objective of the reduced formulation for a set of chosen edges.
    pub fn reduced_objective(&self, edges: &[usize], penalty: f64) -> f64 {
        edges
            .iter()
            .map(|&e| self.edges[e].cost - penalty * self.trips[self.edges[e].trip].requests.len() as f64)
            .sum()
    }
}

/// Builds the RV graph for one tier. `pool` lists the open requests and
/// `vehicles` the tier's fleet.
pub fn build_rv_graph(
    requests: &[TripRequest],
    pool: &[ReqIx],
    vehicles: &[VehicleState],
    now: f64,
    cfg: &Constraints,
    times: &TravelTimeTable,
) -> RvGraph {
    let mut pool: Vec<ReqIx> = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut g = RvGraph { requests: pool.clone(), ..RvGraph::default() };

    for (i, &a) in pool.iter().enumerate() {
        for &b in &pool[i + 1..] {
            let (ra, rb) = (&requests[a], &requests[b]);
            if ra.tier.capacity() < 2 {
                continue;
            }
            for start in [ra.origin, rb.origin] {
                let mut virt = VehicleState::new(u64::MAX, ra.tier, start);
                virt.ready_at = now;
                if route_delay(&virt, requests, &[a, b], now, cfg, times).is_some() {
                    g.rr.insert((a, b));
                    break;
                }
            }
        }
    }

    for (v, veh) in vehicles.iter().enumerate() {
        if veh.load() >= veh.capacity {
            continue;
        }
        let Some((_, baseline)) = route_delay(veh, requests, &[], now, cfg, times) else {
            continue;
        };
        let t0 = veh.ready_at.max(now);
        for &r in &pool {
            let q = &requests[r];
            if t0 + times.time(veh.node, q.origin) > cfg.pickup_deadline(q) + 1e-9 {
                continue;
            }
            if let Some((plan, total)) = route_delay(veh, requests, &[r], now, cfg, times) {
                g.rv.insert((v, r), (plan, (total - baseline).max(0.0)));
            }
        }
    }
    g
}

/// Enumerates feasible trips per vehicle by increasing size. A size-k set is
/// tried only when all of its (k−1)-subsets were feasible for the same
/// vehicle (and, for pairs, when the two requests are shareable). The budget
/// is polled before every trip of size two or more; once it runs out only
/// single-request trips are added.
#[allow(clippy::too_many_arguments)]
pub fn build_rtv_graph(
    rv: &RvGraph,
    requests: &[TripRequest],
    vehicles: &[VehicleState],
    now: f64,
    cfg: &Constraints,
    times: &TravelTimeTable,
    max_trip_size: usize,
    budget: &mut dyn Budget,
) -> RtvGraph {
    let mut g = RtvGraph { requests: rv.requests.clone(), vehicle_count: vehicles.len(), ..RtvGraph::default() };
    let mut trip_ix: BTreeMap<Vec<ReqIx>, usize> = BTreeMap::new();
    let mut add_edge = |g: &mut RtvGraph, set: Vec<ReqIx>, vehicle: VehIx, cost: f64, route: RoutePlan| {
        let trip = *trip_ix.entry(set.clone()).or_insert_with(|| {
            g.trips.push(Trip { requests: set });
            g.trips.len() - 1
        });
        g.edges.push(RtvEdge { trip, vehicle, cost, route });
    };

    for (v, veh) in vehicles.iter().enumerate() {
        let mut level: BTreeSet<Vec<ReqIx>> = BTreeSet::new();
        for ((_, r), (plan, cost)) in rv.rv.range((v, 0)..(v + 1, 0)) {
            level.insert(alloc::vec![*r]);
            add_edge(&mut g, alloc::vec![*r], v, *cost, plan.clone());
        }
        let room = veh.capacity.saturating_sub(veh.load()).min(max_trip_size);
        if g.truncated || level.is_empty() || room < 2 {
            continue;
        }
        let Some((_, baseline)) = route_delay(veh, requests, &[], now, cfg, times) else {
            continue;
        };
        for k in 2..=room {
            let prev: Vec<&Vec<ReqIx>> = level.iter().collect();
            let mut candidates: BTreeSet<Vec<ReqIx>> = BTreeSet::new();
            for (i, a) in prev.iter().enumerate() {
                for b in &prev[i + 1..] {
                    let mut u: Vec<ReqIx> = a.iter().chain(b.iter()).copied().collect();
                    u.sort_unstable();
                    u.dedup();
                    if u.len() != k {
                        continue;
                    }
                    let ok = if k == 2 {
                        rv.shareable(u[0], u[1])
                    } else {
                        (0..k).all(|skip| {
                            let sub: Vec<ReqIx> = u.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &r)| r).collect();
                            level.contains(&sub)
                        })
                    };
                    if ok {
                        candidates.insert(u);
                    }
                }
            }
            let mut next = BTreeSet::new();
            for set in candidates {
                if budget.exhausted() {
                    g.truncated = true;
                    break;
                }
                if let Some((plan, total)) = route_delay(veh, requests, &set, now, cfg, times) {
                    add_edge(&mut g, set.clone(), v, (total - baseline).max(0.0), plan);
                    next.insert(set);
                }
            }
            if g.truncated || next.is_empty() {
                break;
            }
            level = next;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{StepBudget, Unlimited};
    use crate::fleetsim::route::tests::{line, request};
    use crate::fleetsim::{DelayRule, Tier};
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn colocated_requests_share() {
        let (_, tt) = line(4, 60.0);
        let reqs = [request(&tt, 0, 0, 3, 0.0, Tier::Four), request(&tt, 1, 0, 3, 0.0, Tier::Four)];
        let g = build_rv_graph(&reqs, &[0, 1], &[], 0.0, &Constraints::default(), &tt);
        assert!(g.shareable(0, 1));
    }

    #[test]
    fn opposite_ends_with_tight_delay_do_not_share() {
        let (_, tt) = line(30, 60.0);
        // Request 0 rides 0 -> 10, request 1 rides 29 -> 19. Any joint route
        // detours by at least 19 edges, far over the 120 s delay budget.
        let reqs = [request(&tt, 0, 0, 10, 0.0, Tier::Four), request(&tt, 1, 29, 19, 0.0, Tier::Four)];
        let cfg = Constraints { delay: DelayRule::Absolute { seconds: 120.0 }, ..Constraints::default() };
        let g = build_rv_graph(&reqs, &[0, 1], &[], 0.0, &cfg, &tt);
        assert!(!g.shareable(0, 1));
        let mut virt = VehicleState::new(9, Tier::Four, 0);
        assert!(route_delay(&virt, &reqs, &[0, 1], 0.0, &cfg, &tt).is_none());
        virt.node = 29;
        assert!(route_delay(&virt, &reqs, &[0, 1], 0.0, &cfg, &tt).is_none());
    }

    #[test]
    fn full_vehicle_has_no_rv_edges() {
        let (_, tt) = line(4, 60.0);
        let reqs = [request(&tt, 0, 0, 3, 0.0, Tier::One), request(&tt, 1, 0, 2, 0.0, Tier::One)];
        let mut v = VehicleState::new(0, Tier::One, 0);
        v.onboard = vec![0];
        let g = build_rv_graph(&reqs, &[1], &[v], 0.0, &Constraints::default(), &tt);
        assert!(g.rv.is_empty());
    }

    #[test]
    fn no_sharing_means_singletons_only() {
        let (_, tt) = line(4, 60.0);
        let reqs = [request(&tt, 0, 0, 3, 0.0, Tier::One), request(&tt, 1, 1, 2, 0.0, Tier::One)];
        let vs = [VehicleState::new(0, Tier::One, 0), VehicleState::new(1, Tier::One, 2)];
        let cfg = Constraints::default();
        let rv = build_rv_graph(&reqs, &[0, 1], &vs, 0.0, &cfg, &tt);
        let g = build_rtv_graph(&rv, &reqs, &vs, 0.0, &cfg, &tt, usize::MAX, &mut Unlimited);
        assert!(g.trips.iter().all(|t| t.requests.len() == 1));
        assert_eq!(g.edges.len(), 4);
    }

    #[test]
    fn shareable_pair_gives_three_trips() {
        let (_, tt) = line(4, 60.0);
        let reqs = [request(&tt, 0, 0, 3, 0.0, Tier::Four), request(&tt, 1, 0, 3, 0.0, Tier::Four)];
        let mut v = VehicleState::new(0, Tier::Four, 0);
        v.capacity = 2;
        let cfg = Constraints::default();
        let rv = build_rv_graph(&reqs, &[0, 1], &[v.clone()], 0.0, &cfg, &tt);
        let g = build_rtv_graph(&rv, &reqs, &[v], 0.0, &cfg, &tt, usize::MAX, &mut Unlimited);
        let mut sets: Vec<Vec<ReqIx>> = g.trips.iter().map(|t| t.requests.clone()).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![1]]);
        assert_eq!(g.by_size()[2].len(), 1);
    }

    #[test]
    fn trips_match_subset_oracle() {
        let (_, tt) = line(10, 40.0);
        let mut rng = crate::rng::stream(21, 0);
        let cfg = Constraints { delay: DelayRule::Absolute { seconds: 240.0 }, ..Constraints::default() };
        for _ in 0..25 {
            let reqs: Vec<TripRequest> = (0..5)
                .map(|i| {
                    let o = rng.gen_range(0..10);
                    let d = (o + rng.gen_range(1..10)) % 10;
                    request(&tt, i, o, d, rng.gen_range(0.0..60.0), Tier::Four)
                })
                .collect();
            let mut v = VehicleState::new(0, Tier::Four, rng.gen_range(0..10));
            v.ready_at = 60.0;
            let pool: Vec<ReqIx> = (0..5).collect();
            let rv = build_rv_graph(&reqs, &pool, &[v.clone()], 60.0, &cfg, &tt);
            let g = build_rtv_graph(&rv, &reqs, &[v.clone()], 60.0, &cfg, &tt, usize::MAX, &mut Unlimited);
            let mut got: Vec<Vec<ReqIx>> = g.trips.iter().map(|t| t.requests.clone()).collect();
            got.sort();
            let mut want = Vec::new();
            for mask in 1u32..32 {
                let set: Vec<ReqIx> = (0..5).filter(|&i| (mask >> i) & 1 == 1).collect();
                if set.len() <= 4 && route_delay(&v, &reqs, &set, 60.0, &cfg, &tt).is_some() {
                    want.push(set);
                }
            }
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn budget_truncates_to_singletons() {
        let (_, tt) = line(4, 60.0);
        let reqs: Vec<_> = (0..3).map(|i| request(&tt, i, 0, 3, 0.0, Tier::Four)).collect();
        let v = VehicleState::new(0, Tier::Four, 0);
        let cfg = Constraints::default();
        let rv = build_rv_graph(&reqs, &[0, 1, 2], core::slice::from_ref(&v), 0.0, &cfg, &tt);
        let g = build_rtv_graph(&rv, &reqs, &[v], 0.0, &cfg, &tt, usize::MAX, &mut StepBudget::new(0));
        assert!(g.truncated);
        assert_eq!(g.trips.len(), 3);
    }
}
