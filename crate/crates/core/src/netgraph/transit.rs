//! Walk-transit-walk routing over a combined road + transit graph.
//!
//! Every (line, stop) pair becomes its own node so that boarding a line can
//! charge that line's wait and fare. Road nodes connect to line stops within
//! walking range: boarding links cost walk + headway/2 + fare converted to
//! seconds, alighting links cost the walk only. Transfers therefore walk back
//! to the street and board again.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;

use super::paths::HeapEntry;
use super::{haversine_m, GraphError, NodeIx, RoadGraph, METERS_PER_MILE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationSpec {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineStopSpec {
    pub station: u64,
    /// Scheduled seconds from the previous stop; ignored for the first stop.
    pub time_from_prev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub id: u64,
    /// Seconds between departures.
    pub headway: f64,
    pub fare: f64,
    pub stops: Vec<LineStopSpec>,
}

/// Scheduled transit network: stations and the lines that serve them.
#[derive(Debug, Clone)]
pub struct TransitGraph {
    stations: Vec<StationSpec>,
    lines: Vec<LineSpec>,
    /// Station index per stop of each line.
    line_stations: Vec<Vec<usize>>,
}

impl TransitGraph {
    pub fn new(stations: Vec<StationSpec>, lines: Vec<LineSpec>) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (i, s) in stations.iter().enumerate() {
            if index.insert(s.id, i).is_some() {
                return Err(GraphError::DuplicateStation(s.id));
            }
        }
        let mut line_stations = Vec::with_capacity(lines.len());
        for l in &lines {
            let bad = |reason| GraphError::InvalidLine { line: l.id, reason };
            if !(l.headway >= 0.0) || !l.headway.is_finite() {
                return Err(bad("headway must be finite and non-negative"));
            }
            if !(l.fare >= 0.0) || !l.fare.is_finite() {
                return Err(bad("fare must be finite and non-negative"));
            }
            if l.stops.len() < 2 {
                return Err(bad("a line needs at least two stops"));
            }
            if l.stops[1..].iter().any(|s| !(s.time_from_prev > 0.0) || !s.time_from_prev.is_finite()) {
                return Err(bad("consecutive-stop times must be positive"));
            }
            let ix = l
                .stops
                .iter()
                .map(|s| index.get(&s.station).copied().ok_or(GraphError::UnknownStation(s.station)))
                .collect::<Result<Vec<_>, _>>()?;
            line_stations.push(ix);
        }
        Ok(Self { stations, lines, line_stations })
    }

    pub fn stations(&self) -> &[StationSpec] {
        &self.stations
    }

    pub fn lines(&self) -> &[LineSpec] {
        &self.lines
    }
}

/// Parameters of the walk and boarding links.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TransitAccessConfig {
    pub walk_speed_mph: f64,
    pub walk_range_mi: f64,
    /// Seconds of generalized cost per currency unit of fare.
    pub fare_to_seconds: f64,
    /// Whether an itinerary may consist of walking only.
    pub allow_walk_only: bool,
}

impl Default for TransitAccessConfig {
    fn default() -> Self {
        Self {
            walk_speed_mph: 3.1,
            walk_range_mi: 0.5,
            fare_to_seconds: crate::choice::ChoiceCoefficients::default().fare_to_seconds(),
            allow_walk_only: true,
        }
    }
}

impl TransitAccessConfig {
    fn walk_speed_mps(&self) -> f64 {
        self.walk_speed_mph * METERS_PER_MILE / 3600.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Between two road nodes.
    Walk,
    /// Road node to a line stop.
    Board { line: usize },
    /// Line stop back to a road node.
    Alight { line: usize },
    /// Between consecutive stops of one line.
    Ride { line: usize },
}

/// A combined-graph link with its cost components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
    pub walk_s: f64,
    pub wait_s: f64,
    pub ride_s: f64,
    pub fare: f64,
    /// walk + wait + ride + fare · fare_to_seconds.
    pub weight: f64,
}

/// Road nodes `0..road_nodes` followed by one node per (line, stop).
#[derive(Debug, Clone)]
pub struct CombinedGraph {
    road_nodes: usize,
    node_count: usize,
    links: Vec<Link>,
    out: Vec<Vec<usize>>,
    cfg: TransitAccessConfig,
}

impl CombinedGraph {
    pub fn road_node_count(&self) -> usize {
        self.road_nodes
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn config(&self) -> &TransitAccessConfig {
        &self.cfg
    }

    /// Same graph without link `ix`.
    pub fn without_link(&self, ix: usize) -> Self {
        let mut links = self.links.clone();
        links.remove(ix);
        Self::from_links(self.road_nodes, self.node_count, links, self.cfg)
    }

    fn from_links(road_nodes: usize, node_count: usize, links: Vec<Link>, cfg: TransitAccessConfig) -> Self {
        let mut out = vec![Vec::new(); node_count];
        for (i, l) in links.iter().enumerate() {
            out[l.from].push(i);
        }
        Self { road_nodes, node_count, links, out, cfg }
    }
}

pub fn build_combined_network(
    road: &RoadGraph,
    transit: &TransitGraph,
    cfg: TransitAccessConfig,
) -> Result<CombinedGraph, GraphError> {
    if !(cfg.walk_speed_mph > 0.0) {
        return Err(GraphError::InvalidConfig("walk_speed must be positive"));
    }
    if !(cfg.walk_range_mi > 0.0) {
        return Err(GraphError::InvalidConfig("walk_range must be positive"));
    }
    if !(cfg.fare_to_seconds > 0.0) {
        return Err(GraphError::InvalidConfig("fare_to_seconds must be positive"));
    }
    let mut served = vec![false; transit.stations.len()];
    for ls in &transit.line_stations {
        for &s in ls {
            served[s] = true;
        }
    }
    if let Some(i) = served.iter().position(|s| !s) {
        return Err(GraphError::StationWithoutLine(transit.stations[i].id));
    }

    let speed = cfg.walk_speed_mps();
    let range_m = cfg.walk_range_mi * METERS_PER_MILE;
    let road_nodes = road.node_count();
    let mut links = Vec::new();
    let walk = |from, to, secs: f64, kind| Link {
        from,
        to,
        kind,
        walk_s: secs,
        wait_s: 0.0,
        ride_s: 0.0,
        fare: 0.0,
        weight: secs,
    };

    // Pedestrians use road segments in both directions.
    for e in road.edges() {
        let secs = e.length / speed;
        links.push(walk(e.from, e.to, secs, LinkKind::Walk));
        links.push(walk(e.to, e.from, secs, LinkKind::Walk));
    }

    let mut next = road_nodes;
    for (li, (line, stations)) in transit.lines.iter().zip(&transit.line_stations).enumerate() {
        let first = next;
        next += stations.len();
        for (k, &s) in stations.iter().enumerate() {
            let stop_node = first + k;
            if k > 0 {
                let t = line.stops[k].time_from_prev;
                links.push(Link {
                    from: stop_node - 1,
                    to: stop_node,
                    kind: LinkKind::Ride { line: li },
                    walk_s: 0.0,
                    wait_s: 0.0,
                    ride_s: t,
                    fare: 0.0,
                    weight: t,
                });
            }
            let st = &transit.stations[s];
            for (ix, n) in road.nodes().iter().enumerate() {
                let d = haversine_m((n.lat, n.lon), (st.lat, st.lon));
                if d > range_m {
                    continue;
                }
                let w = d / speed;
                let wait = line.headway / 2.0;
                links.push(Link {
                    from: ix,
                    to: stop_node,
                    kind: LinkKind::Board { line: li },
                    walk_s: w,
                    wait_s: wait,
                    ride_s: 0.0,
                    fare: line.fare,
                    weight: w + wait + line.fare * cfg.fare_to_seconds,
                });
                links.push(walk(stop_node, ix, w, LinkKind::Alight { line: li }));
            }
        }
    }
    Ok(CombinedGraph::from_links(road_nodes, next, links, cfg))
}

/// Level-of-service attributes of a transit itinerary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransitAttributes {
    /// Walk + expected wait, seconds.
    pub ovtt: f64,
    /// In-vehicle seconds.
    pub ivtt: f64,
    pub fare: f64,
    pub walk: f64,
    pub wait: f64,
    /// Generalized cost of the path in seconds.
    pub cost: f64,
}

/// Search state: combined node plus whether a line has been boarded. The
/// flag only matters when walk-only itineraries are disallowed.
fn search(combined: &CombinedGraph, o: NodeIx) -> (Vec<f64>, Vec<(usize, usize)>) {
    let n = combined.node_count;
    let states = 2 * n;
    let mut cost = vec![f64::INFINITY; states];
    // (link, predecessor state) per state.
    let mut pred = vec![(usize::MAX, usize::MAX); states];
    let mut done = vec![false; states];
    let mut heap = BinaryHeap::new();
    cost[o] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: o });
    while let Some(HeapEntry { cost: c, node: s }) = heap.pop() {
        if done[s] {
            continue;
        }
        done[s] = true;
        let (u, boarded) = (s % n, s >= n);
        for &li in &combined.out[u] {
            let link = &combined.links[li];
            let b = boarded || matches!(link.kind, LinkKind::Board { .. });
            let t = link.to + if b { n } else { 0 };
            let cand = c + link.weight;
            if cand < cost[t] {
                cost[t] = cand;
                pred[t] = (li, s);
                heap.push(HeapEntry { cost: cand, node: t });
            }
        }
    }
    (cost, pred)
}

fn trace(
    combined: &CombinedGraph,
    o: NodeIx,
    d: NodeIx,
    cost: &[f64],
    pred: &[(usize, usize)],
) -> Option<TransitAttributes> {
    let n = combined.node_count;
    let target = if o == d {
        d
    } else if combined.cfg.allow_walk_only {
        if cost[d] <= cost[d + n] {
            d
        } else {
            d + n
        }
    } else {
        d + n
    };
    if !cost[target].is_finite() {
        return None;
    }
    let mut attrs = TransitAttributes { cost: cost[target], ..Default::default() };
    let mut s = target;
    while s != o {
        let (li, prev) = pred[s];
        let link = &combined.links[li];
        attrs.walk += link.walk_s;
        attrs.wait += link.wait_s;
        attrs.ivtt += link.ride_s;
        attrs.fare += link.fare;
        s = prev;
    }
    attrs.ovtt = attrs.walk + attrs.wait;
    Some(attrs)
}

/// Lowest generalized-cost walk-transit-walk itinerary from road node `o` to
/// road node `d`.
pub fn transit_itinerary(combined: &CombinedGraph, o: NodeIx, d: NodeIx) -> Result<TransitAttributes, GraphError> {
    let r = combined.road_nodes;
    if o >= r {
        return Err(GraphError::NodeOutOfRange(o));
    }
    if d >= r {
        return Err(GraphError::NodeOutOfRange(d));
    }
    let (cost, pred) = search(combined, o);
    trace(combined, o, d, &cost, &pred).ok_or(GraphError::Unreachable { from: o as u64, to: d as u64 })
}

/// Itineraries from `o` to every road node (`None` where unreachable).
pub fn transit_tree(combined: &CombinedGraph, o: NodeIx) -> Result<Vec<Option<TransitAttributes>>, GraphError> {
    if o >= combined.road_nodes {
        return Err(GraphError::NodeOutOfRange(o));
    }
    let (cost, pred) = search(combined, o);
    Ok((0..combined.road_nodes).map(|d| trace(combined, o, d, &cost, &pred)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{EdgeSpec, NodeSpec};
    use alloc::vec;

    // 0.25 mi of latitude in degrees.
    const QUARTER_MILE_DEG: f64 = 0.25 * METERS_PER_MILE / 111_195.08;

    fn cfg(f2s: f64) -> TransitAccessConfig {
        TransitAccessConfig { walk_speed_mph: 3.1, walk_range_mi: 0.5, fare_to_seconds: f2s, allow_walk_only: true }
    }

    fn line(id: u64, headway: f64, fare: f64, stations: &[(u64, f64)]) -> LineSpec {
        LineSpec {
            id,
            headway,
            fare,
            stops: stations.iter().map(|&(station, t)| LineStopSpec { station, time_from_prev: t }).collect(),
        }
    }

    #[test]
    fn access_weight_is_generalized_cost() {
        let road = RoadGraph::new(vec![NodeSpec { id: 1, lat: 40.0, lon: -74.0 }], &[]).unwrap();
        let stations = vec![
            StationSpec { id: 10, lat: 40.0 + QUARTER_MILE_DEG, lon: -74.0 },
            StationSpec { id: 11, lat: 40.0 + 3.0 * QUARTER_MILE_DEG, lon: -74.0 },
        ];
        let transit = TransitGraph::new(stations, vec![line(1, 600.0, 2.75, &[(10, 0.0), (11, 60.0)])]).unwrap();
        let g = build_combined_network(&road, &transit, cfg(154.0)).unwrap();
        let boards: Vec<_> = g.links().iter().filter(|l| matches!(l.kind, LinkKind::Board { .. })).collect();
        // The far station (0.75 mi) is out of range.
        assert_eq!(boards.len(), 1);
        let w = boards[0].weight;
        assert!((boards[0].walk_s - 290.32).abs() < 0.01, "{}", boards[0].walk_s);
        assert!((w - 1013.8).abs() < 0.05, "{w}");
    }

    #[test]
    fn zero_fare_zero_headway_is_walk_only() {
        let road = RoadGraph::new(vec![NodeSpec { id: 1, lat: 40.0, lon: -74.0 }], &[]).unwrap();
        let stations = vec![
            StationSpec { id: 10, lat: 40.0 + QUARTER_MILE_DEG, lon: -74.0 },
            StationSpec { id: 11, lat: 40.0 + 2.0 * QUARTER_MILE_DEG, lon: -74.0 },
        ];
        let transit = TransitGraph::new(stations, vec![line(1, 0.0, 0.0, &[(10, 0.0), (11, 60.0)])]).unwrap();
        let g = build_combined_network(&road, &transit, cfg(154.0)).unwrap();
        for l in g.links().iter().filter(|l| matches!(l.kind, LinkKind::Board { .. })) {
            assert_eq!(l.weight, l.walk_s);
        }
    }

    #[test]
    fn station_without_line_rejected() {
        let road = RoadGraph::new(vec![NodeSpec { id: 1, lat: 40.0, lon: -74.0 }], &[]).unwrap();
        let stations = vec![
            StationSpec { id: 10, lat: 40.0, lon: -74.0 },
            StationSpec { id: 11, lat: 40.001, lon: -74.0 },
            StationSpec { id: 12, lat: 40.002, lon: -74.0 },
        ];
        let transit = TransitGraph::new(stations, vec![line(1, 60.0, 1.0, &[(10, 0.0), (11, 60.0)])]).unwrap();
        assert_eq!(
            build_combined_network(&road, &transit, cfg(100.0)).unwrap_err(),
            GraphError::StationWithoutLine(12)
        );
    }

    /// Corridor of road nodes 1 mi apart along a meridian; walking between
    /// them is slow, so riding wins.
    fn corridor(n: u64) -> RoadGraph {
        let mile = 4.0 * QUARTER_MILE_DEG;
        let nodes = (0..n).map(|i| NodeSpec { id: i, lat: 40.0 + i as f64 * mile, lon: -74.0 }).collect();
        let edges: Vec<_> = (0..n - 1)
            .flat_map(|i| {
                [
                    EdgeSpec { from: i, to: i + 1, travel_time: 120.0, length: METERS_PER_MILE },
                    EdgeSpec { from: i + 1, to: i, travel_time: 120.0, length: METERS_PER_MILE },
                ]
            })
            .collect();
        RoadGraph::new(nodes, &edges).unwrap()
    }

    #[test]
    fn same_node_is_free() {
        let road = corridor(2);
        let transit = TransitGraph::new(
            vec![StationSpec { id: 1, lat: 40.0, lon: -74.0 }, StationSpec { id: 2, lat: 40.01, lon: -74.0 }],
            vec![line(1, 60.0, 1.0, &[(1, 0.0), (2, 60.0)])],
        )
        .unwrap();
        let g = build_combined_network(&road, &transit, cfg(100.0)).unwrap();
        assert_eq!(transit_itinerary(&g, 0, 0).unwrap(), TransitAttributes::default());
    }

    #[test]
    fn single_line_one_boarding() {
        let road = corridor(4);
        let mile = 4.0 * QUARTER_MILE_DEG;
        let stations = (0..4).map(|i| StationSpec { id: 100 + i, lat: 40.0 + i as f64 * mile, lon: -74.0 }).collect();
        let transit = TransitGraph::new(
            stations,
            vec![line(7, 600.0, 2.75, &[(100, 0.0), (101, 90.0), (102, 90.0), (103, 90.0)])],
        )
        .unwrap();
        let g = build_combined_network(&road, &transit, cfg(100.0)).unwrap();
        let a = transit_itinerary(&g, 0, 3).unwrap();
        assert_eq!(a.fare, 2.75);
        assert_eq!(a.wait, 300.0);
        assert_eq!(a.ivtt, 270.0);
        assert!(a.walk.abs() < 1e-6);
        assert!((a.ovtt + a.ivtt + a.fare * 100.0 - a.cost).abs() <= 1e-9 * a.cost);
    }

    #[test]
    fn transfer_between_two_lines() {
        // Line A covers nodes 0..=2, line B covers 2..=4. Walking a mile
        // takes ~1161 s, far worse than a transfer.
        let road = corridor(5);
        let mile = 4.0 * QUARTER_MILE_DEG;
        let stations = (0..5).map(|i| StationSpec { id: 100 + i, lat: 40.0 + i as f64 * mile, lon: -74.0 }).collect();
        let transit = TransitGraph::new(
            stations,
            vec![
                line(1, 120.0, 1.0, &[(100, 0.0), (101, 100.0), (102, 100.0)]),
                line(2, 240.0, 2.0, &[(102, 0.0), (103, 50.0), (104, 50.0)]),
            ],
        )
        .unwrap();
        let g = build_combined_network(&road, &transit, cfg(10.0)).unwrap();
        let a = transit_itinerary(&g, 0, 4).unwrap();
        // Board A (wait 60), ride 200, alight at node 2, board B (wait 120),
        // ride 100, alight at node 4. Stations sit on the road nodes.
        assert!(a.walk.abs() < 1e-6);
        assert_eq!(a.wait, 180.0);
        assert_eq!(a.ivtt, 300.0);
        assert_eq!(a.fare, 3.0);
        assert!((a.cost - (180.0 + 300.0 + 30.0)).abs() < 1e-6);
    }

    #[test]
    fn walk_only_flag() {
        let road = corridor(3);
        let mile = 4.0 * QUARTER_MILE_DEG;
        let stations = (0..3).map(|i| StationSpec { id: 100 + i, lat: 40.0 + i as f64 * mile, lon: -74.0 }).collect();
        let transit = TransitGraph::new(stations, vec![line(1, 7200.0, 50.0, &[(100, 0.0), (101, 100.0), (102, 100.0)])])
            .unwrap();
        let mut c = cfg(100.0);
        let g = build_combined_network(&road, &transit, c).unwrap();
        let walk = transit_itinerary(&g, 0, 1).unwrap();
        assert_eq!((walk.fare, walk.ivtt), (0.0, 0.0));
        c.allow_walk_only = false;
        let g = build_combined_network(&road, &transit, c).unwrap();
        let ride = transit_itinerary(&g, 0, 1).unwrap();
        assert_eq!(ride.fare, 50.0);
        assert!(ride.cost > walk.cost);
    }

    #[test]
    fn removing_links_never_helps() {
        let road = corridor(5);
        let mile = 4.0 * QUARTER_MILE_DEG;
        let stations = (0..5).map(|i| StationSpec { id: 100 + i, lat: 40.0 + i as f64 * mile, lon: -74.0 }).collect();
        let transit = TransitGraph::new(
            stations,
            vec![
                line(1, 120.0, 1.0, &[(100, 0.0), (101, 100.0), (102, 100.0)]),
                line(2, 240.0, 2.0, &[(102, 0.0), (103, 50.0), (104, 50.0)]),
            ],
        )
        .unwrap();
        let g = build_combined_network(&road, &transit, cfg(10.0)).unwrap();
        let base = transit_tree(&g, 0).unwrap();
        for (ix, l) in g.links().iter().enumerate() {
            if !matches!(l.kind, LinkKind::Board { .. }) {
                continue;
            }
            let reduced = g.without_link(ix);
            let after = transit_tree(&reduced, 0).unwrap();
            for (b, a) in base.iter().zip(&after) {
                let b = b.map_or(f64::INFINITY, |x| x.cost);
                let a = a.map_or(f64::INFINITY, |x| x.cost);
                assert!(a >= b - 1e-9);
            }
        }
        for a in base.iter().flatten() {
            let sum = a.ovtt + a.ivtt + a.fare * 10.0;
            assert!((sum - a.cost).abs() <= 1e-9 * a.cost.max(1.0));
        }
    }
}
