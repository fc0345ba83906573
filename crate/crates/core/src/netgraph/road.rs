use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{GraphError, NodeIx};

/// A node row as read from `nodes.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

/// An edge row as read from `edges.csv`, endpoints given by external id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub from: u64,
    pub to: u64,
    /// Seconds.
    pub travel_time: f64,
    /// Meters.
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadEdge {
    pub from: NodeIx,
    pub to: NodeIx,
    pub travel_time: f64,
    pub length: f64,
}

/// Directed road network with positive travel times and lengths.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    nodes: Vec<NodeSpec>,
    index: BTreeMap<u64, NodeIx>,
    edges: Vec<RoadEdge>,
    out: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl RoadGraph {
    /// Validates and indexes a node/edge list. Rejects duplicate node ids,
    /// edges touching unknown nodes, and non-positive weights.
    pub fn new(nodes: Vec<NodeSpec>, edges: &[EdgeSpec]) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (ix, n) in nodes.iter().enumerate() {
            if !n.lat.is_finite() || !n.lon.is_finite() {
                return Err(GraphError::BadCoordinate(n.id));
            }
            if index.insert(n.id, ix).is_some() {
                return Err(GraphError::DuplicateNode(n.id));
            }
        }
        let mut out = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut resolved = Vec::with_capacity(edges.len());
        for e in edges {
            let from = *index.get(&e.from).ok_or(GraphError::UnknownNode(e.from))?;
            let to = *index.get(&e.to).ok_or(GraphError::UnknownNode(e.to))?;
            let ok = |w: f64| w.is_finite() && w > 0.0;
            if !ok(e.travel_time) || !ok(e.length) {
                return Err(GraphError::BadEdgeWeight { from: e.from, to: e.to });
            }
            out[from].push(resolved.len());
            incoming[to].push(resolved.len());
            resolved.push(RoadEdge { from, to, travel_time: e.travel_time, length: e.length });
        }
        Ok(Self { nodes, index, edges: resolved, out, incoming })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn node(&self, ix: NodeIx) -> &NodeSpec {
        &self.nodes[ix]
    }

    pub fn position(&self, ix: NodeIx) -> (f64, f64) {
        let n = &self.nodes[ix];
        (n.lat, n.lon)
    }

    pub fn index_of(&self, id: u64) -> Result<NodeIx, GraphError> {
        self.index.get(&id).copied().ok_or(GraphError::UnknownNode(id))
    }

    pub fn id_of(&self, ix: NodeIx) -> u64 {
        self.nodes[ix].id
    }

    pub fn out_edges(&self, ix: NodeIx) -> impl Iterator<Item = &RoadEdge> + '_ {
        self.out[ix].iter().map(move |&e| &self.edges[e])
    }

    /// Checks that every node in `demand_nodes` can reach, and be reached
    /// from, every other one.
    pub fn validate_demand_connectivity(&self, demand_nodes: &[NodeIx]) -> Result<(), GraphError> {
        let Some(&root) = demand_nodes.first() else {
            return Ok(());
        };
        for &n in demand_nodes {
            if n >= self.nodes.len() {
                return Err(GraphError::NodeOutOfRange(n));
            }
        }
        let fwd = self.reach(root, false);
        let bwd = self.reach(root, true);
        for &n in demand_nodes {
            if !fwd[n] || !bwd[n] {
                return Err(GraphError::Disconnected { from: self.id_of(root), to: self.id_of(n) });
            }
        }
        Ok(())
    }

    fn reach(&self, root: NodeIx, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            let adj = if reverse { &self.incoming[u] } else { &self.out[u] };
            for &e in adj {
                let e = &self.edges[e];
                let v = if reverse { e.from } else { e.to };
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}
