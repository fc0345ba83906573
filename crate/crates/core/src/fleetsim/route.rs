use alloc::vec::Vec;

use super::{Constraints, ReqIx, RoutePlan, Stop, StopKind, TripRequest, VehicleState};
use crate::netgraph::{NodeIx, TravelTimeTable};

const EPS: f64 = 1e-9;

#[derive(Clone, Copy)]
struct Pending {
    request: ReqIx,
    kind: StopKind,
    node: NodeIx,
    deadline: f64,
}

struct Search<'a> {
    requests: &'a [TripRequest],
    times: &'a TravelTimeTable,
    stops: Vec<Pending>,
    /// Cheapest complete order found so far.
    best: Option<(f64, Vec<usize>)>,
    order: Vec<usize>,
    done: Vec<bool>,
}

impl Search<'_> {
    fn available(&self, i: usize) -> bool {
        if self.done[i] {
            return false;
        }
        let s = &self.stops[i];
        match s.kind {
            StopKind::Pickup => true,
            // A dropoff is open once its pickup (if any) is done.
            StopKind::Dropoff => !self
                .stops
                .iter()
                .enumerate()
                .any(|(j, p)| p.kind == StopKind::Pickup && p.request == s.request && !self.done[j]),
        }
    }

    fn dfs(&mut self, node: NodeIx, t: f64, cost: f64) {
        if self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return;
        }
        if self.order.len() == self.stops.len() {
            self.best = Some((cost, self.order.clone()));
            return;
        }
        // Every remaining stop must still be reachable in time.
        for (i, s) in self.stops.iter().enumerate() {
            if !self.done[i] && t + self.times.time(node, s.node) > s.deadline + EPS {
                return;
            }
        }
        for i in 0..self.stops.len() {
            if !self.available(i) {
                continue;
            }
            let s = self.stops[i];
            let arrive = t + self.times.time(node, s.node);
            let add = match s.kind {
                StopKind::Pickup => 0.0,
                StopKind::Dropoff => arrive - self.requests[s.request].earliest_arrival,
            };
            self.done[i] = true;
            self.order.push(i);
            self.dfs(s.node, arrive, cost + add);
            self.order.pop();
            self.done[i] = false;
        }
    }
}

/// Times a fixed stop sequence; `None` if any deadline is missed.
fn evaluate(seq: &[Pending], start: NodeIx, t0: f64, requests: &[TripRequest], times: &TravelTimeTable) -> Option<(f64, Vec<f64>)> {
    let (mut node, mut t, mut cost) = (start, t0, 0.0);
    let mut at = Vec::with_capacity(seq.len());
    for s in seq {
        t += times.time(node, s.node);
        if t > s.deadline + EPS {
            return None;
        }
        if s.kind == StopKind::Dropoff {
            cost += t - requests[s.request].earliest_arrival;
        }
        at.push(t);
        node = s.node;
    }
    Some((cost, at))
}

fn pickup(r: ReqIx, requests: &[TripRequest], cfg: &Constraints) -> Pending {
    let q = &requests[r];
    Pending { request: r, kind: StopKind::Pickup, node: q.origin, deadline: cfg.pickup_deadline(q) }
}

fn dropoff(r: ReqIx, requests: &[TripRequest], cfg: &Constraints) -> Pending {
    let q = &requests[r];
    Pending { request: r, kind: StopKind::Dropoff, node: q.destination, deadline: cfg.dropoff_deadline(q) }
}

/// Cheapest route serving the vehicle's current load plus `new`, with its
/// total delay `Σ (dropoff time − earliest arrival)` over every request on
/// the route. `None` if no order meets every deadline or the load would
/// exceed capacity.
pub fn route_delay(
    vehicle: &VehicleState,
    requests: &[TripRequest],
    new: &[ReqIx],
    now: f64,
    cfg: &Constraints,
    times: &TravelTimeTable,
) -> Option<(RoutePlan, f64)> {
    if vehicle.load() + new.len() > vehicle.capacity {
        return None;
    }
    let t0 = vehicle.ready_at.max(now);
    let n_stops = vehicle.onboard.len() + 2 * (vehicle.committed.len() + new.len());

    let (seq, cost, at) = if n_stops <= cfg.exact_stop_limit {
        let mut stops = Vec::with_capacity(n_stops);
        for &r in &vehicle.onboard {
            stops.push(dropoff(r, requests, cfg));
        }
        for &r in vehicle.committed.iter().chain(new) {
            stops.push(pickup(r, requests, cfg));
            stops.push(dropoff(r, requests, cfg));
        }
        let mut s = Search { requests, times, done: alloc::vec![false; stops.len()], stops, best: None, order: Vec::new() };
        s.dfs(vehicle.node, t0, 0.0);
        let (cost, order) = s.best?;
        let seq: Vec<Pending> = order.iter().map(|&i| s.stops[i]).collect();
        let (_, at) = evaluate(&seq, vehicle.node, t0, requests, times)?;
        (seq, cost, at)
    } else {
        // Keep the current plan's order and insert the rest one at a time.
        let mut seq: Vec<Pending> = vehicle
            .plan
            .stops
            .iter()
            .filter(|s| vehicle.onboard.contains(&s.request) || vehicle.committed.contains(&s.request))
            .map(|s| match s.kind {
                StopKind::Pickup => pickup(s.request, requests, cfg),
                StopKind::Dropoff => dropoff(s.request, requests, cfg),
            })
            .collect();
        for &r in &vehicle.onboard {
            if !seq.iter().any(|s| s.request == r) {
                seq.push(dropoff(r, requests, cfg));
            }
        }
        let missing: Vec<ReqIx> = vehicle
            .committed
            .iter()
            .copied()
            .filter(|r| !seq.iter().any(|s| s.request == *r))
            .chain(new.iter().copied())
            .collect();
        for r in missing {
            let (p, d) = (pickup(r, requests, cfg), dropoff(r, requests, cfg));
            let mut best: Option<(f64, Vec<Pending>)> = None;
            for i in 0..=seq.len() {
                for j in i..=seq.len() {
                    let mut cand = seq.clone();
                    cand.insert(i, p);
                    cand.insert(j + 1, d);
                    if let Some((c, _)) = evaluate(&cand, vehicle.node, t0, requests, times) {
                        if best.as_ref().is_none_or(|(b, _)| c < *b) {
                            best = Some((c, cand));
                        }
                    }
                }
            }
            seq = best?.1;
        }
        let (cost, at) = evaluate(&seq, vehicle.node, t0, requests, times)?;
        (seq, cost, at)
    };

    let stops = seq
        .iter()
        .zip(at)
        .map(|(s, time)| Stop { request: s.request, kind: s.kind, node: s.node, time })
        .collect();
    Some((RoutePlan { stops }, cost))
}

/// Route for the vehicle's load plus `new`, costed as the extra delay it
/// causes: total route delay minus the delay of serving the current load
/// alone.
pub fn feasible_route(
    vehicle: &VehicleState,
    requests: &[TripRequest],
    new: &[ReqIx],
    now: f64,
    cfg: &Constraints,
    times: &TravelTimeTable,
) -> Option<(RoutePlan, f64)> {
    let (_, baseline) = route_delay(vehicle, requests, &[], now, cfg, times)?;
    let (plan, total) = route_delay(vehicle, requests, new, now, cfg, times)?;
    Some((plan, (total - baseline).max(0.0)))
}
