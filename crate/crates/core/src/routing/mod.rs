//! Shortest paths over the topology graph and egocentric walking
//! directions with visible landmarks.

mod astar;
mod chunk;
mod instructions;
mod landmarks;

pub use astar::{astar, path_length, plan_path, PlannedPath, RouteGoal};
pub use chunk::{chunk_path, display_angle, display_distance, RouteSegment};
pub use instructions::{
    contains_cardinal, prompt_payload, render_instructions, GoalDescription, InstructionTemplates, PayloadStep,
    PromptPayload, CARDINAL_TOKENS, PROMPT_SYSTEM,
};
pub use landmarks::{collect_landmarks, landmark_category, sample_fractions, LandmarkConfig, LandmarkRef};

use crate::ingest::ProductRecord;
use crate::spatial::{OccupancyGrid, Side, WorldPoint};
use crate::topology::{bind_product, TopoNode, TopologyError, TopologyGraph};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("goal is not reachable from the start")]
    Unreachable,
    #[error("no edge is visible from the start ({x:.2}, {y:.2})")]
    NoVisibleEdge { x: f64, y: f64 },
    #[error("path needs at least two distinct points")]
    DegeneratePath,
    #[error("unknown product {0:?}")]
    UnknownProduct(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteConfig {
    /// Degrees; heading changes above this become turns.
    pub turn_threshold: f64,
    pub landmarks: LandmarkConfig,
    pub templates: InstructionTemplates,
    /// File name the prompt payload refers to for the rendered map.
    pub map_image: String,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self {
            turn_threshold: 30.0,
            landmarks: LandmarkConfig::default(),
            templates: InstructionTemplates::default(),
            map_image: "route.png".into(),
        }
    }
}

impl RouteConfig {
    pub fn validate(&self) -> Result<(), RoutingError> {
        if !(self.turn_threshold > 0.0 && self.turn_threshold < 180.0) {
            return Err(RoutingError::InvalidParameter("turn_threshold must be in (0, 180)".into()));
        }
        if !(self.landmarks.radius >= 0.0) {
            return Err(RoutingError::InvalidParameter("landmark radius must be non-negative".into()));
        }
        self.templates.validate()
    }
}

/// What to walk to.
#[derive(Debug, Clone, PartialEq)]
pub enum RouteTarget {
    Product(String),
    /// A labeled point, such as a zone anchor.
    Point { label: String, position: WorldPoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteEnd {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_id: Option<String>,
    /// The target itself (product position or anchor).
    pub x: f64,
    pub y: f64,
    /// Where the route stops, on the graph.
    pub stop_x: f64,
    pub stop_y: f64,
    #[serde(default)]
    pub side: Option<Side>,
}

/// Everything persisted as `route.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub schema_version: u32,
    pub start: WorldPoint,
    pub nodes: Vec<TopoNode>,
    pub segments: Vec<RouteSegment>,
    pub total_length: f64,
    pub landmarks: Vec<LandmarkRef>,
    pub instructions: Vec<String>,
    pub goal: RouteEnd,
    pub prompt_payload: PromptPayload,
}

impl RoutePlan {
    pub fn points(&self) -> Vec<WorldPoint> {
        self.nodes.iter().map(TopoNode::position).collect()
    }

    pub fn turn_count(&self) -> usize {
        self.segments.iter().filter(|s| s.is_turn()).count()
    }

    pub fn save(&self, path: &Path) -> Result<(), RoutingError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RoutingError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Index of the forward segment covering `along` meters from the start.
fn segment_at(segments: &[RouteSegment], along: f64) -> usize {
    let mut start = 0.0;
    let mut last = 0;
    for (i, s) in segments.iter().enumerate() {
        if let RouteSegment::Forward { distance } = s {
            last = i;
            if along <= start + distance + 1e-9 {
                return i;
            }
            start += distance;
        }
    }
    last
}

/// Plans, chunks, annotates and renders a route.
pub fn route(
    graph: &TopologyGraph,
    grid: &OccupancyGrid,
    products: &[ProductRecord],
    start: WorldPoint,
    target: &RouteTarget,
    cfg: &RouteConfig,
) -> Result<RoutePlan, RoutingError> {
    cfg.validate()?;
    let (goal, end) = match target {
        RouteTarget::Product(id) => {
            let p = products
                .iter()
                .find(|p| &p.product_id == id)
                .ok_or_else(|| RoutingError::UnknownProduct(id.clone()))?;
            let binding = match graph.bindings.get(id) {
                Some(b) => b.clone(),
                None => bind_product(graph, grid, id, p.position())?,
            };
            let end = RouteEnd {
                label: p.label.name.clone(),
                product_id: Some(id.clone()),
                x: p.x,
                y: p.y,
                stop_x: binding.px,
                stop_y: binding.py,
                side: None,
            };
            (RouteGoal::Binding(binding), end)
        }
        RouteTarget::Point { label, position } => {
            let end = RouteEnd {
                label: label.clone(),
                product_id: None,
                x: position.x,
                y: position.y,
                stop_x: position.x,
                stop_y: position.y,
                side: None,
            };
            (RouteGoal::Point(*position), end)
        }
    };
    let planned = plan_path(graph, grid, start, &goal)?;
    let points = planned.points();
    let nodes: Vec<TopoNode> = planned.nodes.iter().map(|&n| planned.graph.nodes[n]).collect();
    let stop = *points.last().expect("non-empty path");
    let mut end = RouteEnd { stop_x: stop.x, stop_y: stop.y, ..end };

    let segments = if points.len() >= 2 && planned.length > 0.0 {
        chunk_path(&points, cfg.turn_threshold)?
    } else {
        Vec::new()
    };

    // side of the goal relative to the final approach heading
    let target_pos = WorldPoint::new(end.x, end.y);
    if target_pos.distance(stop) > 1e-6 && points.len() >= 2 {
        let approach = stop.sub(points[points.len() - 2]);
        end.side = Some(Side::of(approach, target_pos.sub(stop)));
    }

    let exclude = end.product_id.as_deref();
    let mut landmarks = collect_landmarks(grid, products, &points, &cfg.landmarks, exclude);
    for l in &mut landmarks {
        l.segment = segment_at(&segments, l.along);
    }
    let goal_desc = GoalDescription { label: end.label.clone(), side: end.side };
    let instructions = render_instructions(&segments, &landmarks, &goal_desc, &cfg.templates);
    let prompt_payload = prompt_payload(&segments, &landmarks, &goal_desc, &cfg.map_image);
    Ok(RoutePlan {
        schema_version: crate::SCHEMA_VERSION,
        start,
        nodes,
        segments,
        total_length: planned.length,
        landmarks,
        instructions,
        goal: end,
        prompt_payload,
    })
}
