use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{haversine_m, GraphError, NodeIx, RoadGraph, METERS_PER_MILE};

pub const KMEANS_MAX_ITER: usize = 100;

/// Spatial zoning of road nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Cluster of every road node, indexed by [`NodeIx`].
    pub assignment: Vec<usize>,
    /// (lat, lon) per cluster.
    pub centroids: Vec<(f64, f64)>,
    pub iterations: usize,
    /// Assignment stopped changing before the iteration cap.
    pub converged: bool,
    /// The requested k exceeded the number of nodes and was clamped.
    pub clamped: bool,
}

impl Clustering {
    pub fn cluster_of(&self, node: NodeIx) -> usize {
        self.assignment[node]
    }
}

/// Number of zones such that each covers roughly one walking disc:
/// `ceil(area / (2π r²))`, at least 1.
pub fn cluster_count(total_area_sq_mi: f64, walk_radius_mi: f64) -> usize {
    let k = libm::ceil(total_area_sq_mi / (2.0 * PI * walk_radius_mi * walk_radius_mi));
    if k.is_finite() && k >= 1.0 {
        k as usize
    } else {
        1
    }
}

/// Bounding-box area of the node coordinates in square miles.
fn bounding_area_sq_mi(graph: &RoadGraph) -> f64 {
    let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for n in graph.nodes() {
        lat0 = lat0.min(n.lat);
        lat1 = lat1.max(n.lat);
        lon0 = lon0.min(n.lon);
        lon1 = lon1.max(n.lon);
    }
    let mid = 0.5 * (lat0 + lat1);
    let width = haversine_m((mid, lon0), (mid, lon1)) / METERS_PER_MILE;
    let height = haversine_m((lat0, lon0), (lat1, lon0)) / METERS_PER_MILE;
    width * height
}

/// Zones the road nodes with K-means, choosing k from the walk radius.
///
/// `total_area_sq_mi` defaults to the bounding box of the node coordinates.
pub fn cluster_nodes(
    graph: &RoadGraph,
    walk_radius_mi: f64,
    total_area_sq_mi: Option<f64>,
    seed: u64,
) -> Result<Clustering, GraphError> {
    if graph.node_count() == 0 {
        return Err(GraphError::Empty);
    }
    if !(walk_radius_mi > 0.0) {
        return Err(GraphError::InvalidConfig("walk radius must be positive"));
    }
    let area = total_area_sq_mi.unwrap_or_else(|| bounding_area_sq_mi(graph));
    let k = cluster_count(area, walk_radius_mi);
    let points: Vec<_> = graph.nodes().iter().map(|n| (n.lat, n.lon)).collect();
    Ok(kmeans(&points, k, seed, KMEANS_MAX_ITER))
}

fn nearest(p: (f64, f64), centroids: &[(f64, f64)]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = haversine_m(p, q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// K-means++ seeding followed by Lloyd iterations under great-circle
/// distance. Ties go to the lowest cluster id. `k` is clamped to the number
/// of points.
pub fn kmeans(points: &[(f64, f64)], k: usize, seed: u64, max_iter: usize) -> Clustering {
    let n = points.len();
    let clamped = k > n;
    let k = k.min(n).max(1);
    let mut rng = crate::rng::stream(seed, crate::rng::tags::CLUSTERING);

    let mut centroids = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    centroids.push(points[first]);
    chosen[first] = true;
    let mut d2: Vec<f64> = points.iter().map(|&p| { let d = haversine_m(p, points[first]); d * d }).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining points coincide with a centroid.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick]);
        for (i, &p) in points.iter().enumerate() {
            d2[i] = d2[i].min({ let d = haversine_m(p, points[pick]); d * d });
        }
    }

    let mut assignment: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (&p, &c) in points.iter().zip(&assignment) {
            sums[c].0 += p.0;
            sums[c].1 += p.1;
            sums[c].2 += 1;
        }
        for (c, &(la, lo, cnt)) in sums.iter().enumerate() {
            if cnt > 0 {
                centroids[c] = (la / cnt as f64, lo / cnt as f64);
            }
        }
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    Clustering { k, assignment, centroids, iterations, converged, clamped }
}
