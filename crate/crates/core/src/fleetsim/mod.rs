//! Batched ride-pooling fleet simulation.
//!
//! Every epoch the open requests of each tier are matched to that tier's
//! vehicles: pairwise shareability (RV graph), feasible trips per vehicle
//! (RTV graph), an integer program choosing at most one trip per vehicle,
//! then a transportation LP sending idle vehicles toward requests left
//! open. Vehicles then drive their routes for one epoch.
//!
//! Requests and vehicles are referred to by their index in the run's request
//! table and fleet. Times are seconds from the start of the period.

pub(crate) mod assign;
pub(crate) mod route;
mod rtv;
mod sim;

pub use assign::{assign, assign_baseline, penalty_for, rebalance, Assignment, Move};
pub use route::{feasible_route, route_delay};
pub use rtv::{build_rtv_graph, build_rv_graph, RtvEdge, RtvGraph, RvGraph, Trip};
pub use sim::{
    run_period, CellKey, CellStats, Event, EventKind, FleetSpec, RequestOutcome, SimConfig, SimStats,
    Simulator, TierStats, Violations,
};

use alloc::vec::Vec;

use crate::choice::Mode;
use crate::netgraph::NodeIx;

pub type ReqIx = usize;
pub type VehIx = usize;

/// A vehicle class; all of its vehicles share one capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Tier {
    #[cfg_attr(feature = "serde", serde(rename = "1"))]
    One,
    #[cfg_attr(feature = "serde", serde(rename = "4"))]
    Four,
    #[cfg_attr(feature = "serde", serde(rename = "10"))]
    Ten,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::One, Tier::Four, Tier::Ten];

    pub fn capacity(self) -> usize {
        match self {
            Tier::One => 1,
            Tier::Four => 4,
            Tier::Ten => 10,
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Tier::One => Mode::RideHailing,
            Tier::Four => Mode::Ridepooling,
            Tier::Ten => Mode::MicroTransit,
        }
    }

    pub fn from_mode(mode: Mode) -> Option<Tier> {
        match mode {
            Mode::RideHailing => Some(Tier::One),
            Mode::Ridepooling => Some(Tier::Four),
            Mode::MicroTransit => Some(Tier::Ten),
            Mode::Transit => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Tier::One => 0,
            Tier::Four => 1,
            Tier::Ten => 2,
        }
    }
}

impl core::fmt::Display for Tier {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.capacity())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRequest {
    pub id: u64,
    pub origin: NodeIx,
    pub destination: NodeIx,
    pub request_time: f64,
    pub tier: Tier,
    /// Request time plus the direct shortest-path time.
    pub earliest_arrival: f64,
}

impl TripRequest {
    pub fn direct_time(&self) -> f64 {
        self.earliest_arrival - self.request_time
    }
}

/// How the delay budget Δ of a request is set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum DelayRule {
    /// `base + factor · direct_time`, with `base` defaulting to Ω.
    Proportional { base: Option<f64>, factor: f64 },
    /// The same budget for every request.
    Absolute { seconds: f64 },
}

impl Default for DelayRule {
    fn default() -> Self {
        DelayRule::Proportional { base: None, factor: 0.3 }
    }
}

/// Service constraints shared by all requests of a tier.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Constraints {
    /// Ω, seconds.
    pub max_wait: f64,
    pub delay: DelayRule,
    /// Routes with at most this many stops are searched exhaustively; longer
    /// ones fall back to insertion into the current plan.
    pub exact_stop_limit: usize,
}

impl Default for Constraints {
    fn default() -> Self {
        Self { max_wait: 600.0, delay: DelayRule::default(), exact_stop_limit: 10 }
    }
}

impl Constraints {
    /// Δ_r in seconds.
    pub fn max_delay(&self, r: &TripRequest) -> f64 {
        match self.delay {
            DelayRule::Proportional { base, factor } => base.unwrap_or(self.max_wait) + factor * r.direct_time(),
            DelayRule::Absolute { seconds } => seconds,
        }
    }

    /// Latest feasible pickup time.
    pub fn pickup_deadline(&self, r: &TripRequest) -> f64 {
        r.request_time + self.max_wait
    }

    /// Latest feasible dropoff time.
    pub fn dropoff_deadline(&self, r: &TripRequest) -> f64 {
        r.earliest_arrival + self.max_delay(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stop {
    pub request: ReqIx,
    pub kind: StopKind,
    pub node: NodeIx,
    /// Scheduled arrival time at `node`.
    pub time: f64,
}

/// Ordered pickups and dropoffs with their scheduled times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoutePlan {
    pub stops: Vec<Stop>,
}

impl RoutePlan {
    pub fn requests(&self) -> impl Iterator<Item = ReqIx> + '_ {
        self.stops.iter().filter(|s| s.kind == StopKind::Pickup).map(|s| s.request)
    }
}

/// A vehicle between epochs. A vehicle in the middle of an edge is
/// represented by the node at the end of that edge and the time it gets there,
/// so plans can change between epochs without teleporting.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    pub tier: Tier,
    pub capacity: usize,
    pub node: NodeIx,
    pub ready_at: f64,
    pub onboard: Vec<ReqIx>,
    /// Assigned but not yet picked up.
    pub committed: Vec<ReqIx>,
    pub plan: RoutePlan,
    pub rebalance_to: Option<NodeIx>,
}

impl VehicleState {
    pub fn new(id: u64, tier: Tier, node: NodeIx) -> Self {
        Self {
            id,
            tier,
            capacity: tier.capacity(),
            node,
            ready_at: 0.0,
            onboard: Vec::new(),
            committed: Vec::new(),
            plan: RoutePlan::default(),
            rebalance_to: None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.onboard.is_empty() && self.committed.is_empty() && self.plan.stops.is_empty()
    }

    pub fn load(&self) -> usize {
        self.onboard.len() + self.committed.len()
    }
}

/// Ride-hailing fare schedule. `per_minute` applies to the direct trip time
/// and `per_mile` to the direct distance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FareRates {
    pub base: f64,
    pub minimum: f64,
    pub per_minute: f64,
    pub per_mile: f64,
}

impl Default for FareRates {
    fn default() -> Self {
        Self { base: 2.55, minimum: 8.0, per_minute: 0.35, per_mile: 1.75 }
    }
}

/// `(1 − γ)·max(minimum, base + per_minute·t + per_mile·d)` for a trip of
/// `trip_time_s` seconds and `trip_miles` miles.
pub fn fare(trip_time_s: f64, trip_miles: f64, rates: &FareRates, gamma: f64) -> f64 {
    let metered = rates.base + rates.per_minute * trip_time_s / 60.0 + rates.per_mile * trip_miles;
    (1.0 - gamma) * metered.max(rates.minimum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fare_examples() {
        let r = FareRates::default();
        assert_eq!(fare(600.0, 2.0, &r, 1.0), 0.0);
        assert!((fare(600.0, 2.0, &r, 0.0) - 9.55).abs() < 1e-12);
        assert_eq!(fare(60.0, 0.1, &r, 0.0), 8.0);
        assert!((fare(600.0, 2.0, &r, 0.2) - 0.8 * 9.55).abs() < 1e-12);
    }

    #[test]
    fn delay_budget_rules() {
        let r = TripRequest { id: 0, origin: 0, destination: 1, request_time: 100.0, tier: Tier::Four, earliest_arrival: 700.0 };
        let c = Constraints::default();
        assert_eq!(c.max_delay(&r), 600.0 + 180.0);
        assert_eq!(c.pickup_deadline(&r), 700.0);
        assert_eq!(c.dropoff_deadline(&r), 700.0 + 780.0);
        let abs = Constraints { delay: DelayRule::Absolute { seconds: 300.0 }, ..c };
        assert_eq!(abs.max_delay(&r), 300.0);
    }

    #[test]
    fn tiers_map_to_modes() {
        for t in Tier::ALL {
            assert_eq!(Tier::from_mode(t.mode()), Some(t));
        }
        assert_eq!(Tier::from_mode(Mode::Transit), None);
    }
}
