//! Navigation graph over walkable space: skeleton thinning, node
//! extraction, LOS-checked edges and product-to-edge binding.

mod bind;
mod extract;
mod skeleton;

pub use bind::{bind_all, bind_product, insert_virtual_node, project_onto_segment};
pub use extract::{build_topology, extract_graph, TopologyConfig};
pub use skeleton::{skeleton_degree, skeleton_neighbors, skeletonize};

use crate::spatial::{line_of_sight, OccupancyGrid, Side, SpatialError, WorldPoint};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("grid has no free space")]
    NoFreeSpace,
    #[error("skeleton is empty")]
    EmptySkeleton,
    #[error("graph has no edges")]
    NoEdges,
    #[error("binding references edge ({0}, {1}) which does not exist")]
    StaleBinding(usize, usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Junction,
    Turn,
    Endpoint,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

impl TopoNode {
    pub fn position(&self) -> WorldPoint {
        WorldPoint::new(self.x, self.y)
    }
}

/// Undirected edge, stored once with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl TopoEdge {
    pub fn key(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn other(&self, id: usize) -> usize {
        if id == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Product attached to the closest visible edge.
///
/// `side` is taken relative to the edge direction from its lower to its
/// higher node id; `t` is the fractional position of the projection along
/// that direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBinding {
    pub product_id: String,
    pub edge: [usize; 2],
    pub px: f64,
    pub py: f64,
    pub side: Side,
    pub offset: f64,
    #[serde(default)]
    pub t: f64,
    /// False when no edge was visible and the nearest one was used anyway.
    #[serde(default = "yes")]
    pub visible: bool,
}

fn yes() -> bool {
    true
}

impl EdgeBinding {
    pub fn projection(&self) -> WorldPoint {
        WorldPoint::new(self.px, self.py)
    }

    pub fn edge_key(&self) -> (usize, usize) {
        (self.edge[0], self.edge[1])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopologyGraph {
    #[serde(default)]
    pub schema_version: u32,
    pub nodes: Vec<TopoNode>,
    pub edges: Vec<TopoEdge>,
    #[serde(with = "bindings_as_list", default)]
    pub bindings: BTreeMap<String, EdgeBinding>,
}

mod bindings_as_list {
    use super::EdgeBinding;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, EdgeBinding>, s: S) -> Result<S::Ok, S::Error> {
        map.values().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, EdgeBinding>, D::Error> {
        let list = Vec::<EdgeBinding>::deserialize(d)?;
        Ok(list.into_iter().map(|b| (b.product_id.clone(), b)).collect())
    }
}

impl TopologyGraph {
    /// Builds a graph from positions and index pairs; lengths are derived.
    pub fn from_parts(nodes: Vec<(WorldPoint, NodeKind)>, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let nodes: Vec<TopoNode> = nodes
            .into_iter()
            .enumerate()
            .map(|(id, (p, kind))| TopoNode { id, x: p.x, y: p.y, kind })
            .collect();
        let mut out = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(TopologyError::UnknownNode(a.max(b)));
            }
            if a == b {
                return Err(TopologyError::InvalidParameter(format!("self-loop on node {a}")));
            }
            let (a, b) = (a.min(b), a.max(b));
            out.push(TopoEdge { a, b, length: nodes[a].position().distance(nodes[b].position()) });
        }
        out.sort_by_key(|e| e.key());
        out.dedup_by_key(|e| e.key());
        Ok(Self { schema_version: SCHEMA_VERSION, nodes, edges: out, bindings: BTreeMap::new() })
    }

    pub fn node(&self, id: usize) -> Result<&TopoNode, TopologyError> {
        self.nodes.get(id).filter(|n| n.id == id).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&TopoEdge> {
        let key = (a.min(b), a.max(b));
        self.edges.iter().find(|e| e.key() == key)
    }

    /// Adjacency lists `(neighbor, length)`, neighbors ascending.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
        }
        adj
    }

    pub fn degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|e| e.a == id || e.b == id).count()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Checks the structural invariants and, when a grid is given, edge
    /// visibility and node placement. Returns a list of violations.
    pub fn violations(&self, grid: Option<&OccupancyGrid>) -> Vec<String> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                out.push(format!("node at index {i} has id {}", n.id));
            }
            if let Some(g) = grid {
                if !g.is_free(g.cell_of(n.position())) {
                    out.push(format!("node {i} is not on a free cell"));
                }
            }
        }
        for e in &self.edges {
            if e.a >= e.b || e.b >= self.nodes.len() {
                out.push(format!("bad edge ({}, {})", e.a, e.b));
                continue;
            }
            let d = self.nodes[e.a].position().distance(self.nodes[e.b].position());
            if (d - e.length).abs() > 1e-6 {
                out.push(format!("edge ({}, {}) length {} != {}", e.a, e.b, e.length, d));
            }
            if let Some(g) = grid {
                let (ca, cb) = (g.cell_of(self.nodes[e.a].position()), g.cell_of(self.nodes[e.b].position()));
                if !line_of_sight(g, ca, cb) {
                    out.push(format!("edge ({}, {}) fails line of sight", e.a, e.b));
                }
            }
        }
        for w in self.edges.windows(2) {
            if w[0].key() >= w[1].key() {
                out.push(format!("edges not sorted/unique at ({}, {})", w[1].a, w[1].b));
            }
        }
        for b in self.bindings.values() {
            if self.edge(b.edge[0], b.edge[1]).is_none() {
                out.push(format!("binding {} references missing edge", b.product_id));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String, TopologyError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let g: TopologyGraph = serde_json::from_str(text)?;
        if g.schema_version != SCHEMA_VERSION {
            return Err(TopologyError::SchemaVersion { expected: SCHEMA_VERSION, found: g.schema_version });
        }
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<(), TopologyError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TopologyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
