use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{GraphError, NodeIx, RoadGraph};

const NO_PRED: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
pub(crate) struct HeapEntry {
    pub cost: f64,
    pub node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Reversed so BinaryHeap pops the cheapest entry, lowest node on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest travel times, with the length of the chosen path
/// and a predecessor tree.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: NodeIx,
    /// Seconds; `f64::INFINITY` when unreachable.
    pub time: Vec<f64>,
    /// Meters along the time-shortest path.
    pub length: Vec<f64>,
    pred: Vec<usize>,
}

impl ShortestPathTree {
    pub fn predecessor(&self, node: NodeIx) -> Option<NodeIx> {
        match self.pred[node] {
            NO_PRED => None,
            p => Some(p),
        }
    }

    /// Node sequence from the source to `target`, both inclusive.
    pub fn path_to(&self, target: NodeIx) -> Option<Vec<NodeIx>> {
        if !self.time[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != self.source {
            cur = self.pred[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// First node after the source on the path to `target`.
    pub fn first_hop(&self, target: NodeIx) -> Option<NodeIx> {
        if target == self.source || !self.time[target].is_finite() {
            return None;
        }
        let mut cur = target;
        loop {
            let p = self.pred[cur];
            if p == self.source {
                return Some(cur);
            }
            cur = p;
        }
    }
}

/// Label-setting (Dijkstra) search from `source` over road travel times.
pub fn shortest_path_tree(graph: &RoadGraph, source: NodeIx) -> Result<ShortestPathTree, GraphError> {
    let n = graph.node_count();
    if source >= n {
        return Err(GraphError::NodeOutOfRange(source));
    }
    let mut time = vec![f64::INFINITY; n];
    let mut length = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    time[source] = 0.0;
    length[source] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: source });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for e in graph.out_edges(node) {
            let cand = cost + e.travel_time;
            if cand < time[e.to] {
                time[e.to] = cand;
                length[e.to] = length[node] + e.length;
                pred[e.to] = node;
                heap.push(HeapEntry { cost: cand, node: e.to });
            }
        }
    }
    Ok(ShortestPathTree { source, time, length, pred })
}

/// Minimal travel time from `o` to `d` in seconds.
pub fn shortest_path_time(graph: &RoadGraph, o: NodeIx, d: NodeIx) -> Result<f64, GraphError> {
    if d >= graph.node_count() {
        return Err(GraphError::NodeOutOfRange(d));
    }
    let tree = shortest_path_tree(graph, o)?;
    let t = tree.time[d];
    if t.is_finite() {
        Ok(t)
    } else {
        Err(GraphError::Unreachable { from: graph.id_of(o), to: graph.id_of(d) })
    }
}

/// Shortest-path rows for a set of source nodes, filled on request.
#[derive(Debug, Clone)]
pub struct TravelTimeTable {
    row_of: Vec<Option<usize>>,
    rows: Vec<ShortestPathTree>,
}

/// Rows for every node in `sources`, in the order given (duplicates ignored).
pub fn all_pairs_table(graph: &RoadGraph, sources: &[NodeIx]) -> Result<TravelTimeTable, GraphError> {
    let mut table = TravelTimeTable { row_of: vec![None; graph.node_count()], rows: Vec::new() };
    for &s in sources {
        table.ensure_source(graph, s)?;
    }
    Ok(table)
}

impl TravelTimeTable {
    /// Rows for every node of the graph.
    pub fn full(graph: &RoadGraph) -> Self {
        let all: Vec<NodeIx> = (0..graph.node_count()).collect();
        all_pairs_table(graph, &all).expect("indices in range")
    }

    /// Computes and caches the row of `source` if it is not present yet.
    pub fn ensure_source(&mut self, graph: &RoadGraph, source: NodeIx) -> Result<(), GraphError> {
        if source >= self.row_of.len() {
            return Err(GraphError::NodeOutOfRange(source));
        }
        if self.row_of[source].is_none() {
            self.row_of[source] = Some(self.rows.len());
            self.rows.push(shortest_path_tree(graph, source)?);
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.row_of.len()
    }

    pub fn sources(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.rows.iter().map(|r| r.source)
    }

    pub fn row(&self, source: NodeIx) -> Option<&ShortestPathTree> {
        self.row_of.get(source).copied().flatten().map(|r| &self.rows[r])
    }

    /// Travel time, `None` when `o` has no row or `d` is unreachable.
    pub fn get(&self, o: NodeIx, d: NodeIx) -> Option<f64> {
        self.row(o).and_then(|r| r.time.get(d).copied()).filter(|t| t.is_finite())
    }

    /// Travel time for a hot loop: `INFINITY` when unreachable.
    ///
    /// Panics if `o` has no row.
    pub fn time(&self, o: NodeIx, d: NodeIx) -> f64 {
        self.row(o).expect("source row present").time[d]
    }

    /// Meters along the time-shortest path. Panics if `o` has no row.
    pub fn length(&self, o: NodeIx, d: NodeIx) -> f64 {
        self.row(o).expect("source row present").length[d]
    }

    pub fn next_hop(&self, o: NodeIx, d: NodeIx) -> Option<NodeIx> {
        self.row(o).and_then(|r| r.first_hop(d))
    }

    /// `(o, d, seconds)` for every cached source and every node; unreachable
    /// entries carry `None`.
    pub fn entries(&self) -> impl Iterator<Item = (NodeIx, NodeIx, Option<f64>)> + '_ {
        self.rows.iter().flat_map(|r| {
            r.time
                .iter()
                .enumerate()
                .map(move |(d, &t)| (r.source, d, if t.is_finite() { Some(t) } else { None }))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{EdgeSpec, NodeSpec};
    use alloc::vec;
    use proptest::prelude::*;

    fn graph(n: u64, edges: &[(u64, u64, f64)]) -> RoadGraph {
        let nodes = (0..n).map(|id| NodeSpec { id, lat: 40.0, lon: -74.0 + id as f64 * 1e-3 }).collect();
        let edges: Vec<_> = edges
            .iter()
            .map(|&(from, to, t)| EdgeSpec { from, to, travel_time: t, length: t * 10.0 })
            .collect();
        RoadGraph::new(nodes, &edges).unwrap()
    }

    /// Exhaustive simple-path enumeration.
    fn brute_force(g: &RoadGraph, o: usize, d: usize) -> f64 {
        fn go(g: &RoadGraph, u: usize, d: usize, acc: f64, seen: &mut Vec<bool>, best: &mut f64) {
            if u == d {
                *best = best.min(acc);
                return;
            }
            for e in g.out_edges(u) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    go(g, e.to, d, acc + e.travel_time, seen, best);
                    seen[e.to] = false;
                }
            }
        }
        let mut seen = vec![false; g.node_count()];
        seen[o] = true;
        let mut best = f64::INFINITY;
        go(g, o, d, 0.0, &mut seen, &mut best);
        best
    }

    #[test]
    fn self_distance_is_zero() {
        let g = graph(2, &[(0, 1, 60.0)]);
        assert_eq!(shortest_path_time(&g, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn line_graph_sums_edges() {
        let g = graph(3, &[(0, 1, 60.0), (1, 2, 60.0)]);
        assert_eq!(shortest_path_time(&g, 0, 2).unwrap(), 120.0);
        assert!(matches!(shortest_path_time(&g, 2, 0), Err(GraphError::Unreachable { .. })));
    }

    #[test]
    fn table_matches_single_queries_on_line() {
        let g = graph(3, &[(0, 1, 60.0), (1, 0, 60.0), (1, 2, 60.0), (2, 1, 60.0)]);
        let table = all_pairs_table(&g, &[0, 1, 2]).unwrap();
        for o in 0..3 {
            for d in 0..3 {
                assert_eq!(table.get(o, d), Some(shortest_path_time(&g, o, d).unwrap()));
                assert_eq!(table.get(o, d), table.get(d, o));
            }
        }
        assert_eq!(table.entries().count(), 9);
    }

    #[test]
    fn unreachable_entries_are_flagged() {
        let g = graph(2, &[(0, 1, 5.0)]);
        let table = all_pairs_table(&g, &[1]).unwrap();
        assert_eq!(table.get(1, 0), None);
        assert!(table.entries().any(|(o, d, t)| o == 1 && d == 0 && t.is_none()));
    }

    #[test]
    fn first_hop_and_path() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 10.0)]);
        let tree = shortest_path_tree(&g, 0).unwrap();
        assert_eq!(tree.path_to(3).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(tree.first_hop(3), Some(1));
        assert_eq!(tree.first_hop(0), None);
        assert_eq!(tree.length[3], 30.0);
    }

    fn random_graph(n: usize, seed: u64, density: f64) -> RoadGraph {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 0);
        let mut edges = Vec::new();
        for u in 0..n as u64 {
            for v in 0..n as u64 {
                if u != v && rng.gen::<f64>() < density {
                    edges.push((u, v, rng.gen_range(1.0..100.0)));
                }
            }
        }
        graph(n as u64, &edges)
    }

    #[test]
    fn twenty_node_table_matches_oracle() {
        // Sparse enough that simple-path enumeration stays cheap.
        let g = random_graph(20, 11, 0.12);
        let all: Vec<_> = (0..20).collect();
        let table = all_pairs_table(&g, &all).unwrap();
        for o in 0..20 {
            for d in 0..20 {
                let oracle = brute_force(&g, o, d);
                match table.get(o, d) {
                    Some(t) => assert!((t - oracle).abs() < 1e-9, "{o}->{d}: {t} vs {oracle}"),
                    None => assert!(oracle.is_infinite()),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn small_graphs_match_enumeration(seed in 0u64..10_000, n in 2usize..=8) {
            let g = random_graph(n, seed, 0.35);
            let table = TravelTimeTable::full(&g);
            for o in 0..n {
                prop_assert_eq!(table.time(o, o), 0.0);
                for d in 0..n {
                    let t = table.time(o, d);
                    let oracle = brute_force(&g, o, d);
                    prop_assert!(t >= 0.0);
                    prop_assert!(t <= oracle + 1e-9 && oracle <= t + 1e-9);
                    for m in 0..n {
                        prop_assert!(t <= table.time(o, m) + table.time(m, d) + 1e-9);
                    }
                }
            }
        }
    }
}
