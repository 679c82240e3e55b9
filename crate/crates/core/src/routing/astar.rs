use super::RoutingError;
use crate::spatial::{OccupancyGrid, WorldPoint};
use crate::topology::{bind_product, insert_virtual_node, EdgeBinding, TopologyGraph};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Where a route should end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteGoal {
    /// A product's stored binding.
    Binding(EdgeBinding),
    /// Any point, bound to its nearest edge on the fly.
    Point(WorldPoint),
}

/// A shortest path over a copy of the graph that carries the virtual
/// start and goal nodes.
#[derive(Debug, Clone)]
pub struct PlannedPath {
    pub graph: TopologyGraph,
    pub nodes: Vec<usize>,
    pub length: f64,
    pub start_binding: EdgeBinding,
    /// The goal binding re-expressed on `graph`.
    pub goal_binding: EdgeBinding,
}

impl PlannedPath {
    pub fn points(&self) -> Vec<WorldPoint> {
        self.nodes.iter().map(|&n| self.graph.nodes[n].position()).collect()
    }

    pub fn start_node(&self) -> usize {
        self.nodes[0]
    }

    pub fn goal_node(&self) -> usize {
        *self.nodes.last().expect("paths are never empty")
    }
}

const START_KEY: &str = "\u{0}start";
const GOAL_KEY: &str = "\u{0}goal";

pub fn plan_path(
    graph: &TopologyGraph,
    grid: &OccupancyGrid,
    start: WorldPoint,
    goal: &RouteGoal,
) -> Result<PlannedPath, RoutingError> {
    if !start.is_finite() {
        return Err(RoutingError::InvalidParameter("start is not finite".into()));
    }
    let start_binding = bind_product(graph, grid, START_KEY, start)?;
    if !start_binding.visible {
        return Err(RoutingError::NoVisibleEdge { x: start.x, y: start.y });
    }
    let goal_binding = match goal {
        RouteGoal::Binding(b) => b.clone(),
        RouteGoal::Point(p) => bind_product(graph, grid, GOAL_KEY, *p)?,
    };
    let mut g0 = graph.clone();
    g0.bindings.insert(GOAL_KEY.into(), EdgeBinding { product_id: GOAL_KEY.into(), ..goal_binding.clone() });
    let (g1, s) = insert_virtual_node(&g0, &start_binding)?;
    let moved = g1.bindings[GOAL_KEY].clone();
    let (mut g2, t) = insert_virtual_node(&g1, &moved)?;
    let goal_binding = EdgeBinding { product_id: goal_binding.product_id.clone(), ..g2.bindings[GOAL_KEY].clone() };
    g2.bindings.remove(GOAL_KEY);
    let nodes = astar(&g2, s, t).ok_or(RoutingError::Unreachable)?;
    let length = path_length(&g2, &nodes);
    Ok(PlannedPath { graph: g2, nodes, length, start_binding, goal_binding })
}

/// Sum of edge lengths along `nodes`, accumulated from the start.
pub fn path_length(graph: &TopologyGraph, nodes: &[usize]) -> f64 {
    nodes
        .windows(2)
        .map(|w| graph.edge(w[0], w[1]).map_or(f64::NAN, |e| e.length))
        .fold(0.0, |acc, l| acc + l)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on node id
        other.f.total_cmp(&self.f).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* with a straight-line heuristic. Nodes may be reopened, so the
/// result stays optimal even if rounding makes the heuristic slightly
/// inconsistent.
pub fn astar(graph: &TopologyGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = graph.nodes.len();
    if from >= n || to >= n {
        return None;
    }
    let adj = graph.adjacency();
    let goal = graph.nodes[to].position();
    let h = |v: usize| graph.nodes[v].position().distance(goal) * (1.0 - 1e-12);
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    g[from] = 0.0;
    heap.push(Open { f: h(from), node: from });
    while let Some(Open { f, node }) = heap.pop() {
        if f > g[node] + h(node) {
            continue;
        }
        if node == to {
            break;
        }
        for &(next, w) in &adj[node] {
            let cand = g[node] + w;
            if cand < g[next] || (cand == g[next] && node < parent[next]) {
                let improved = cand < g[next];
                g[next] = cand;
                parent[next] = node;
                if improved {
                    heap.push(Open { f: cand + h(next), node: next });
                }
            }
        }
    }
    if !g[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
