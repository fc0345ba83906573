//! Small generated instances: a grid city with a few transit lines, random
//! demand, and closed-form objectives for exercising the optimizers.

use alloc::vec::Vec;

use rand::Rng;

use crate::equilibrium::Traveler;
use crate::netgraph::{EdgeSpec, GraphError, LineSpec, LineStopSpec, NodeSpec, RoadGraph, StationSpec, TransitGraph};
use crate::rng::{stream, tags};

/// Shape of a generated grid city.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCity {
    pub rows: usize,
    pub cols: usize,
    /// Meters between neighboring intersections.
    pub spacing_m: f64,
    /// Driving speed, meters per second.
    pub speed_mps: f64,
    /// Transit runs along these rows and columns in both directions.
    pub transit_rows: [usize; 2],
    pub transit_cols: [usize; 2],
    pub headway_s: f64,
    pub transit_speed_mps: f64,
    pub fare: f64,
}

impl Default for GridCity {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing_m: 400.0,
            speed_mps: 8.0,
            transit_rows: [2, 7],
            transit_cols: [2, 7],
            headway_s: 600.0,
            transit_speed_mps: 6.0,
            fare: 2.75,
        }
    }
}

const ORIGIN: (f64, f64) = (40.75, -73.99);
const METERS_PER_DEG_LAT: f64 = 111_195.0;

impl GridCity {
    pub fn node_id(&self, r: usize, c: usize) -> u64 {
        (r * self.cols + c) as u64
    }

    fn position(&self, r: usize, c: usize) -> (f64, f64) {
        let lat = ORIGIN.0 + r as f64 * self.spacing_m / METERS_PER_DEG_LAT;
        let lon = ORIGIN.1 + c as f64 * self.spacing_m / (METERS_PER_DEG_LAT * libm::cos(ORIGIN.0.to_radians()));
        (lat, lon)
    }

    /// Two-way streets between 4-neighbors.
    pub fn road(&self) -> Result<RoadGraph, GraphError> {
        let mut nodes = Vec::with_capacity(self.rows * self.cols);
        let mut edges = Vec::new();
        let t = self.spacing_m / self.speed_mps;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (lat, lon) = self.position(r, c);
                nodes.push(NodeSpec { id: self.node_id(r, c), lat, lon });
                let here = self.node_id(r, c);
                let mut link = |there| {
                    edges.push(EdgeSpec { from: here, to: there, travel_time: t, length: self.spacing_m });
                    edges.push(EdgeSpec { from: there, to: here, travel_time: t, length: self.spacing_m });
                };
                if c + 1 < self.cols {
                    link(self.node_id(r, c + 1));
                }
                if r + 1 < self.rows {
                    link(self.node_id(r + 1, c));
                }
            }
        }
        RoadGraph::new(nodes, &edges)
    }

    /// One station per intersection on a transit row or column; one line
    /// per direction of each.
    pub fn transit(&self) -> Result<TransitGraph, GraphError> {
        let mut stations = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.transit_rows.contains(&r) || self.transit_cols.contains(&c) {
                    let (lat, lon) = self.position(r, c);
                    stations.push(StationSpec { id: self.node_id(r, c), lat, lon });
                }
            }
        }
        let hop = self.spacing_m / self.transit_speed_mps;
        let mut lines = Vec::new();
        let mut add = |ids: Vec<u64>| {
            for dir in [false, true] {
                let mut seq = ids.clone();
                if dir {
                    seq.reverse();
                }
                let stops = seq.iter().map(|&station| LineStopSpec { station, time_from_prev: hop }).collect();
                lines.push(LineSpec { id: lines.len() as u64, headway: self.headway_s, fare: self.fare, stops });
            }
        };
        for &r in &self.transit_rows {
            add((0..self.cols).map(|c| self.node_id(r, c)).collect());
        }
        for &c in &self.transit_cols {
            add((0..self.rows).map(|r| self.node_id(r, c)).collect());
        }
        TransitGraph::new(stations, lines)
    }
}

/// `count` travelers with distinct random endpoints among `nodes` nodes,
/// request times uniform over `horizon_s`, sorted by time.
pub fn random_demand(nodes: usize, count: usize, horizon_s: f64, seed: u64) -> Vec<Traveler> {
    assert!(nodes >= 2 || count == 0, "need two nodes for a trip");
    let mut rng = stream(seed, tags::SYNTHETIC_DEMAND);
    let mut out: Vec<Traveler> = (0..count)
        .map(|_| {
            let origin = rng.gen_range(0..nodes);
            let mut destination = rng.gen_range(0..nodes - 1);
            if destination >= origin {
                destination += 1;
            }
            let request_time = libm::floor(rng.gen::<f64>() * horizon_s);
            Traveler { id: 0, origin, destination, request_time }
        })
        .collect();
    out.sort_by(|a, b| a.request_time.total_cmp(&b.request_time));
    for (i, t) in out.iter_mut().enumerate() {
        t.id = i as u64;
    }
    out
}

/// The usual two-dimensional multimodal benchmark, minimized at three points
/// with value 10/(8π) ≈ 0.3979. Domain x1 ∈ [−5, 10], x2 ∈ [0, 15].
pub fn branin(x1: f64, x2: f64) -> f64 {
    use core::f64::consts::PI;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let q = x2 - b * x1 * x1 + c * x1 - 6.0;
    q * q + 10.0 * (1.0 - t) * libm::cos(x1) + 10.0
}

/// Closed-form stand-in for operator profit over the three fleet sizes:
/// saturating revenue per tier, linear fleet cost, and cannibalization
/// between tiers that compete for the same riders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitSurface {
    pub revenue: [f64; 3],
    pub saturation: [f64; 3],
    pub unit_cost: [f64; 3],
    /// Penalties on n1·n4 and n4·n10.
    pub overlap: [f64; 2],
}

impl Default for ProfitSurface {
    fn default() -> Self {
        Self {
            revenue: [12_000.0, 5_000.0, 2_000.0],
            saturation: [300.0, 80.0, 40.0],
            unit_cost: [10.0, 14.0, 18.0],
            overlap: [0.02, 0.03],
        }
    }
}

impl ProfitSurface {
    pub fn eval(&self, n: [f64; 3]) -> f64 {
        let p: f64 = (0..3)
            .map(|i| self.revenue[i] * (1.0 - libm::exp(-n[i] / self.saturation[i])) - self.unit_cost[i] * n[i])
            .sum();
        p - self.overlap[0] * n[0] * n[1] - self.overlap[1] * n[1] * n[2]
    }
}
