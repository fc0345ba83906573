use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use super::route::route_delay;
use super::{
    assign, build_rtv_graph, build_rv_graph, fare, rebalance, Constraints, FareRates, ReqIx, RoutePlan, StopKind, Tier,
    TripRequest, VehIx, VehicleState,
};
use crate::budget::Budget;
use crate::netgraph::{NodeIx, TravelTimeTable, METERS_PER_MILE};
use crate::rng::{stream, tags};
use crate::solver::SolverError;

const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimConfig {
    /// Seconds between assignment rounds.
    pub epoch: f64,
    pub constraints: Constraints,
    /// Per-tier replacements for `constraints`.
    pub tier_constraints: BTreeMap<Tier, Constraints>,
    pub fares: FareRates,
    /// Requests assigned but not yet picked up go back to the pool every
    /// epoch and may move to another vehicle.
    pub allow_reassignment: bool,
    pub rebalance: bool,
    /// Largest trip considered in the RTV graph (capacity permitting).
    pub max_trip_size: Option<usize>,
    /// Seconds after the last request before a run is cut off.
    pub max_drain: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            epoch: 60.0,
            constraints: Constraints::default(),
            tier_constraints: BTreeMap::new(),
            fares: FareRates::default(),
            allow_reassignment: true,
            rebalance: true,
            max_trip_size: None,
            max_drain: 7200.0,
        }
    }
}

impl SimConfig {
    pub fn constraints_for(&self, tier: Tier) -> &Constraints {
        self.tier_constraints.get(&tier).unwrap_or(&self.constraints)
    }
}

/// Fleet size and fare discount γ of one tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetSpec {
    pub tier: Tier,
    pub size: usize,
    pub discount: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Pickup,
    Dropoff,
    Expired,
    Rebalance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub tier: Tier,
    pub kind: EventKind,
    pub vehicle: Option<VehIx>,
    pub request: Option<ReqIx>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestOutcome {
    pub request_id: u64,
    pub tier: Tier,
    pub served: bool,
    pub pickup_time: Option<f64>,
    pub dropoff_time: Option<f64>,
    /// Seconds from request to pickup.
    pub wait: Option<f64>,
    /// Seconds from pickup to dropoff.
    pub ivtt: Option<f64>,
    pub fare: f64,
    /// Miles driven while this passenger was on board.
    pub passenger_miles: f64,
}

/// Outcomes of one (origin zone, destination zone, tier) cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellStats {
    pub requested: usize,
    pub served: usize,
    /// Mean over served requests, seconds; 0 when none were served.
    pub mean_wait: f64,
    pub mean_ivtt: f64,
}

impl CellStats {
    pub fn service_rate(&self) -> f64 {
        if self.requested == 0 {
            1.0
        } else {
            self.served as f64 / self.requested as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TierStats {
    pub fleet_size: usize,
    pub requested: usize,
    pub served: usize,
    pub unserved: usize,
    /// All driven miles, rebalancing included.
    pub vmt_miles: f64,
    pub rebalance_miles: f64,
    pub pmt_miles: f64,
    pub revenue: f64,
}

impl TierStats {
    /// Zero when the tier drove nowhere.
    pub fn pmt_per_vmt(&self) -> f64 {
        if self.vmt_miles > 0.0 {
            self.pmt_miles / self.vmt_miles
        } else {
            0.0
        }
    }
}

/// Constraint breaches observed while vehicles moved. All zero in a correct
/// run; counted rather than asserted so a report can show them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Violations {
    pub capacity: usize,
    pub wait: usize,
    pub delay: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.capacity + self.wait + self.delay
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimStats {
    pub cells: BTreeMap<CellKey, CellStats>,
    pub tiers: BTreeMap<Tier, TierStats>,
    /// One entry per request, in arrival order.
    pub outcomes: Vec<RequestOutcome>,
    pub violations: Violations,
    /// Requests still open when the run was cut off (also counted unserved).
    pub unresolved: usize,
    /// Epochs whose assignment solve stopped on the work budget.
    pub suboptimal_epochs: usize,
    /// Epochs whose RTV enumeration was truncated by the work budget.
    pub truncated_epochs: usize,
}

impl SimStats {
    /// Service rate of a cell; 1 for cells without demand.
    pub fn service_rate(&self, from: usize, to: usize, tier: Tier) -> f64 {
        self.cells.get(&(from, to, tier)).map_or(1.0, CellStats::service_rate)
    }

    pub fn tier(&self, tier: Tier) -> TierStats {
        self.tiers.get(&tier).copied().unwrap_or_default()
    }
}

/// (origin zone, destination zone, tier).
pub type CellKey = (usize, usize, Tier);

/// One simulation run, advanced an epoch at a time.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    times: &'a TravelTimeTable,
    clusters: &'a [usize],
    cfg: SimConfig,
    now: f64,
    requests: Vec<TripRequest>,
    outcomes: Vec<RequestOutcome>,
    fleets: [Vec<VehicleState>; 3],
    discount: [f64; 3],
    pools: [Vec<ReqIx>; 3],
    tiers: [TierStats; 3],
    violations: Violations,
    suboptimal_epochs: usize,
    truncated_epochs: usize,
}

impl<'a> Simulator<'a> {
    /// Places each tier's vehicles uniformly at random over the road nodes,
    /// one random stream per tier. `clusters` maps every node to its zone.
    pub fn new(times: &'a TravelTimeTable, clusters: &'a [usize], cfg: SimConfig, fleets: &[FleetSpec], seed: u64) -> Self {
        let n = times.node_count();
        let mut vehicles = Vec::new();
        let mut discount = [0.0; 3];
        let mut next_id = 0;
        for tier in Tier::ALL {
            let mut rng = stream(seed, tags::VEHICLE_PLACEMENT | ((tier.index() as u64 + 1) << 16));
            for spec in fleets.iter().filter(|f| f.tier == tier) {
                discount[tier.index()] = spec.discount;
                for _ in 0..spec.size {
                    vehicles.push(VehicleState::new(next_id, tier, rng.gen_range(0..n)));
                    next_id += 1;
                }
            }
        }
        Self::with_vehicles(times, clusters, cfg, vehicles, discount)
    }

    /// Starts from explicit vehicle states. `discount` is γ per tier in
    /// [`Tier::ALL`] order.
    pub fn with_vehicles(
        times: &'a TravelTimeTable,
        clusters: &'a [usize],
        cfg: SimConfig,
        vehicles: Vec<VehicleState>,
        discount: [f64; 3],
    ) -> Self {
        let mut fleets: [Vec<VehicleState>; 3] = Default::default();
        for v in vehicles {
            fleets[v.tier.index()].push(v);
        }
        let mut tiers = [TierStats::default(); 3];
        for t in Tier::ALL {
            tiers[t.index()].fleet_size = fleets[t.index()].len();
        }
        let now = cfg.epoch;
        Self {
            times,
            clusters,
            cfg,
            now,
            requests: Vec::new(),
            outcomes: Vec::new(),
            fleets,
            discount,
            pools: Default::default(),
            tiers,
            violations: Violations::default(),
            suboptimal_epochs: 0,
            truncated_epochs: 0,
        }
    }

    /// Time of the next assignment round.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn vehicles(&self, tier: Tier) -> &[VehicleState] {
        &self.fleets[tier.index()]
    }

    pub fn pool(&self, tier: Tier) -> &[ReqIx] {
        &self.pools[tier.index()]
    }

    pub fn requests(&self) -> &[TripRequest] {
        &self.requests
    }

    pub fn outcomes(&self) -> &[RequestOutcome] {
        &self.outcomes
    }

    /// No open requests and no passengers anywhere.
    pub fn is_quiescent(&self) -> bool {
        self.pools.iter().all(Vec::is_empty) && self.fleets.iter().flatten().all(|v| v.onboard.is_empty() && v.committed.is_empty())
    }

    /// One round at [`Self::now`]: admit `arrivals`, drop requests that waited
    /// longer than Ω, match each tier, rebalance, then drive every vehicle for
    /// one epoch.
    pub fn step_epoch(&mut self, arrivals: &[TripRequest], budget: &mut dyn Budget) -> Result<Vec<Event>, SolverError> {
        let now = self.now;
        let mut events = Vec::new();
        for r in arrivals {
            let ix = self.requests.len();
            self.requests.push(*r);
            self.outcomes.push(RequestOutcome {
                request_id: r.id,
                tier: r.tier,
                served: false,
                pickup_time: None,
                dropoff_time: None,
                wait: None,
                ivtt: None,
                fare: 0.0,
                passenger_miles: 0.0,
            });
            self.pools[r.tier.index()].push(ix);
            self.tiers[r.tier.index()].requested += 1;
        }

        for tier in Tier::ALL {
            self.match_tier(tier, now, budget, &mut events)?;
        }

        let until = now + self.cfg.epoch;
        for tier in Tier::ALL {
            let ti = tier.index();
            let cons = *self.cfg.constraints_for(tier);
            for (vi, v) in self.fleets[ti].iter_mut().enumerate() {
                let mut ctx = Drive {
                    times: self.times,
                    requests: &self.requests,
                    outcomes: &mut self.outcomes,
                    stats: &mut self.tiers[ti],
                    violations: &mut self.violations,
                    cons: &cons,
                    fares: &self.cfg.fares,
                    discount: self.discount[ti],
                    events: &mut events,
                };
                ctx.advance(v, vi, now, until);
            }
        }
        self.now = until;
        Ok(events)
    }

    fn match_tier(&mut self, tier: Tier, now: f64, budget: &mut dyn Budget, events: &mut Vec<Event>) -> Result<(), SolverError> {
        let ti = tier.index();
        let cons = *self.cfg.constraints_for(tier);
        if self.cfg.allow_reassignment {
            for v in &mut self.fleets[ti] {
                if v.committed.is_empty() {
                    continue;
                }
                self.pools[ti].append(&mut v.committed);
                v.plan = match route_delay(v, &self.requests, &[], now, &cons, self.times) {
                    Some((plan, _)) => plan,
                    None => RoutePlan {
                        stops: v.plan.stops.iter().copied().filter(|s| v.onboard.contains(&s.request)).collect(),
                    },
                };
            }
        }

        let requests = &self.requests;
        let outcomes = &self.outcomes;
        let mut expired = Vec::new();
        self.pools[ti].retain(|&r| {
            let keep = now - requests[r].request_time <= cons.max_wait + 1e-9 && outcomes[r].pickup_time.is_none();
            if !keep {
                expired.push(r);
            }
            keep
        });
        for r in expired {
            self.tiers[ti].unserved += 1;
            events.push(Event { time: now, tier, kind: EventKind::Expired, vehicle: None, request: Some(r) });
        }
        self.pools[ti].sort_unstable();
        if self.pools[ti].is_empty() || self.fleets[ti].is_empty() {
            return Ok(());
        }

        let fleet = &self.fleets[ti];
        let rv = build_rv_graph(&self.requests, &self.pools[ti], fleet, now, &cons, self.times);
        let max_trip = self.cfg.max_trip_size.unwrap_or(usize::MAX);
        let rtv = build_rtv_graph(&rv, &self.requests, fleet, now, &cons, self.times, max_trip, budget);
        if rtv.truncated {
            self.truncated_epochs += 1;
        }
        let a = assign(&rtv, budget)?;
        if !a.optimal {
            self.suboptimal_epochs += 1;
        }
        for &e in &a.selected {
            let edge = &rtv.edges[e];
            let v = &mut self.fleets[ti][edge.vehicle];
            v.committed.extend(rtv.trips[edge.trip].requests.iter().copied());
            v.plan = edge.route.clone();
            v.rebalance_to = None;
        }
        self.pools[ti] = a.unassigned;

        if self.cfg.rebalance && !self.pools[ti].is_empty() {
            let idle: Vec<(VehIx, NodeIx)> =
                self.fleets[ti].iter().enumerate().filter(|(_, v)| v.is_idle()).map(|(i, v)| (i, v.node)).collect();
            let origins: Vec<NodeIx> = self.pools[ti].iter().map(|&r| self.requests[r].origin).collect();
            for m in rebalance(&idle, &origins, self.times)? {
                let v = &mut self.fleets[ti][m.vehicle];
                v.rebalance_to = (m.target != v.node).then_some(m.target);
                events.push(Event { time: now, tier, kind: EventKind::Rebalance, vehicle: Some(m.vehicle), request: None });
            }
        }
        Ok(())
    }

    /// Aggregates the run. Requests still open count as unserved.
    pub fn finish(self) -> SimStats {
        let mut tiers = self.tiers;
        let mut unresolved = 0;
        let mut open = alloc::vec![false; self.requests.len()];
        for r in self.pools.iter().flatten() {
            open[*r] = true;
        }
        for v in self.fleets.iter().flatten() {
            for &r in v.onboard.iter().chain(&v.committed) {
                open[r] = true;
            }
        }
        for (r, &o) in open.iter().enumerate() {
            if o {
                unresolved += 1;
                tiers[self.requests[r].tier.index()].unserved += 1;
            }
        }

        // (requested, served, total wait, total ivtt) per cell.
        let mut sums: BTreeMap<CellKey, (usize, usize, f64, f64)> = BTreeMap::new();
        for (r, out) in self.requests.iter().zip(&self.outcomes) {
            let key = (self.clusters[r.origin], self.clusters[r.destination], r.tier);
            let e = sums.entry(key).or_default();
            e.0 += 1;
            if out.served {
                e.1 += 1;
                e.2 += out.wait.unwrap_or(0.0);
                e.3 += out.ivtt.unwrap_or(0.0);
            }
        }
        let cells = sums
            .into_iter()
            .map(|(k, (req, served, w, t))| {
                let d = if served > 0 { served as f64 } else { 1.0 };
                (k, CellStats { requested: req, served, mean_wait: w / d, mean_ivtt: t / d })
            })
            .collect();
        SimStats {
            cells,
            tiers: Tier::ALL.iter().map(|&t| (t, tiers[t.index()])).collect(),
            outcomes: self.outcomes,
            violations: self.violations,
            unresolved,
            suboptimal_epochs: self.suboptimal_epochs,
            truncated_epochs: self.truncated_epochs,
        }
    }
}

struct Drive<'s> {
    times: &'s TravelTimeTable,
    requests: &'s [TripRequest],
    outcomes: &'s mut [RequestOutcome],
    stats: &'s mut TierStats,
    violations: &'s mut Violations,
    cons: &'s Constraints,
    fares: &'s FareRates,
    discount: f64,
    events: &'s mut Vec<Event>,
}

impl Drive<'_> {
    /// Moves `v` edge by edge from `from` until it would start an edge at or
    /// after `until`, serving stops on the way.
    fn advance(&mut self, v: &mut VehicleState, vi: VehIx, from: f64, until: f64) {
        v.ready_at = v.ready_at.max(from);
        loop {
            let target = match v.plan.stops.first() {
                Some(stop) if stop.node == v.node => {
                    if v.ready_at >= until {
                        return;
                    }
                    let stop = v.plan.stops.remove(0);
                    self.serve(v, vi, stop.request, stop.kind);
                    continue;
                }
                Some(stop) => stop.node,
                None => match v.rebalance_to {
                    Some(t) if t != v.node => t,
                    _ => {
                        v.rebalance_to = None;
                        v.ready_at = v.ready_at.max(until);
                        return;
                    }
                },
            };
            if v.ready_at >= until {
                return;
            }
            let Some(hop) = self.times.next_hop(v.node, target) else {
                // Unreachable target; park rather than spin.
                v.plan.stops.clear();
                v.rebalance_to = None;
                v.ready_at = v.ready_at.max(until);
                return;
            };
            let miles = self.times.length(v.node, hop) / METERS_PER_MILE;
            v.ready_at += self.times.time(v.node, hop);
            v.node = hop;
            self.stats.vmt_miles += miles;
            if v.plan.stops.is_empty() {
                self.stats.rebalance_miles += miles;
            }
            for &r in &v.onboard {
                self.outcomes[r].passenger_miles += miles;
                self.stats.pmt_miles += miles;
            }
        }
    }

    fn serve(&mut self, v: &mut VehicleState, vi: VehIx, r: ReqIx, kind: StopKind) {
        let t = v.ready_at;
        let q = &self.requests[r];
        let out = &mut self.outcomes[r];
        match kind {
            StopKind::Pickup => {
                v.committed.retain(|&c| c != r);
                v.onboard.push(r);
                if v.onboard.len() > v.capacity {
                    self.violations.capacity += 1;
                }
                let wait = t - q.request_time;
                if wait > self.cons.max_wait + TOL {
                    self.violations.wait += 1;
                }
                out.pickup_time = Some(t);
                out.wait = Some(wait);
                self.events.push(Event { time: t, tier: v.tier, kind: EventKind::Pickup, vehicle: Some(vi), request: Some(r) });
            }
            StopKind::Dropoff => {
                v.onboard.retain(|&c| c != r);
                if t - q.earliest_arrival > self.cons.max_delay(q) + TOL {
                    self.violations.delay += 1;
                }
                let direct_miles = self.times.length(q.origin, q.destination) / METERS_PER_MILE;
                out.served = true;
                out.dropoff_time = Some(t);
                out.ivtt = out.pickup_time.map(|p| t - p);
                out.fare = fare(q.direct_time(), direct_miles, self.fares, self.discount);
                self.stats.served += 1;
                self.stats.revenue += out.fare;
                self.events.push(Event { time: t, tier: v.tier, kind: EventKind::Dropoff, vehicle: Some(vi), request: Some(r) });
            }
        }
    }
}

/// Runs `requests` (any order; processed by request time) through the
/// fleets until every request is resolved or `max_drain` seconds pass after
/// the last request. Vehicle placement uses `seed`.
pub fn run_period(
    requests: &[TripRequest],
    fleets: &[FleetSpec],
    times: &TravelTimeTable,
    clusters: &[usize],
    cfg: &SimConfig,
    seed: u64,
    budget: &mut dyn Budget,
) -> Result<SimStats, SolverError> {
    let mut sim = Simulator::new(times, clusters, cfg.clone(), fleets, seed);
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| requests[a].request_time.total_cmp(&requests[b].request_time));
    let last = requests.iter().map(|r| r.request_time).fold(0.0, f64::max);
    let mut next = 0;
    loop {
        let start = next;
        while next < order.len() && requests[order[next]].request_time <= sim.now() {
            next += 1;
        }
        let arrivals: Vec<TripRequest> = order[start..next].iter().map(|&i| requests[i]).collect();
        sim.step_epoch(&arrivals, budget)?;
        if next == order.len() && sim.is_quiescent() {
            break;
        }
        if sim.now() > last + cfg.max_drain {
            break;
        }
    }
    Ok(sim.finish())
}
