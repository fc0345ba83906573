//! Road and transit networks.
//!
//! Road nodes carry an external `u64` id (whatever the input files use) and a
//! dense internal index. Every algorithm in this crate works on the dense
//! index, [`NodeIx`]; ids only matter at the IO boundary.

mod cluster;
mod paths;
mod road;
mod transit;

pub use cluster::{cluster_count, cluster_nodes, kmeans, Clustering, KMEANS_MAX_ITER};
pub use paths::{
    all_pairs_table, shortest_path_time, shortest_path_tree, ShortestPathTree, TravelTimeTable,
};
pub use road::{EdgeSpec, NodeSpec, RoadEdge, RoadGraph};
pub use transit::{
    build_combined_network, transit_itinerary, transit_tree, CombinedGraph, Link, LinkKind,
    LineSpec, LineStopSpec, StationSpec, TransitAccessConfig, TransitAttributes, TransitGraph,
};

use thiserror::Error;

/// Dense index of a road node.
pub type NodeIx = usize;

pub const METERS_PER_MILE: f64 = 1609.344;
const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("unknown node id {0}")]
    UnknownNode(u64),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("edge {from}->{to} has non-positive or non-finite weight")]
    BadEdgeWeight { from: u64, to: u64 },
    #[error("node {0} has non-finite coordinates")]
    BadCoordinate(u64),
    #[error("demand node {to} is not mutually reachable with node {from}")]
    Disconnected { from: u64, to: u64 },
    #[error("no path from {from} to {to}")]
    Unreachable { from: u64, to: u64 },
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate station id {0}")]
    DuplicateStation(u64),
    #[error("unknown station id {0}")]
    UnknownStation(u64),
    #[error("station {0} is not served by any line")]
    StationWithoutLine(u64),
    #[error("line {line}: {reason}")]
    InvalidLine { line: u64, reason: &'static str },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Great-circle distance in meters between two (lat, lon) points in degrees.
pub fn haversine_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let s = libm::sin(dlat / 2.0);
    let t = libm::sin(dlon / 2.0);
    let h = s * s + libm::cos(lat1) * libm::cos(lat2) * t * t;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h.min(1.0)))
}
