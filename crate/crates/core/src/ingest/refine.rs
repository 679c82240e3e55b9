use super::IngestError;
use crate::spatial::{bresenham_line, CellState, GridPoint, OccupancyGrid, WorldPoint, NEIGHBORS_8};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineOutcome {
    /// Raw point already sits on a free cell touching an obstacle.
    AlreadyAdjacent,
    /// Raw point was inside an obstacle; pulled back toward the camera.
    PulledBack,
    /// Raw point was in open space; pushed forward onto the shelf face.
    PushedForward,
    /// No obstacle within the push cap. Position kept, flagged.
    NoObstacle,
    /// The ray left the grid. Position kept, flagged.
    RayExitsGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub position: WorldPoint,
    pub outcome: RefineOutcome,
}

impl Refinement {
    pub fn moved(&self) -> bool {
        matches!(self.outcome, RefineOutcome::PulledBack | RefineOutcome::PushedForward)
    }

    pub fn flagged(&self) -> bool {
        matches!(self.outcome, RefineOutcome::NoObstacle | RefineOutcome::RayExitsGrid)
    }
}

fn touches_obstacle(grid: &OccupancyGrid, c: GridPoint) -> bool {
    NEIGHBORS_8
        .iter()
        .any(|&(dc, dr)| grid.get(GridPoint::new(c.col + dc, c.row + dr)) == CellState::Occupied)
}

/// Drag-or-pull along the camera ray so the product lands on the free
/// cell in front of the shelf face it was seen on.
///
/// Anything that is not Free stops the ray, matching the conservative
/// treatment of unknown space elsewhere in the crate.
pub fn refine_position(
    grid: &OccupancyGrid,
    camera_xy: WorldPoint,
    raw_xy: WorldPoint,
    max_push: f64,
) -> Result<Refinement, IngestError> {
    let cam = grid.world_to_grid(camera_xy)?;
    let raw = grid.cell_of(raw_xy);
    let keep = |outcome| Ok(Refinement { position: raw_xy, outcome });
    if !grid.in_bounds(raw) {
        return keep(RefineOutcome::RayExitsGrid);
    }

    if !grid.is_free(raw) {
        let ray = bresenham_line(cam, raw);
        let first_blocked = ray.iter().position(|&c| !grid.is_free(c)).expect("raw cell is blocked");
        if first_blocked == 0 {
            return Err(IngestError::CameraBlocked);
        }
        let cell = ray[first_blocked - 1];
        return Ok(Refinement { position: grid.grid_to_world(cell), outcome: RefineOutcome::PulledBack });
    }

    if touches_obstacle(grid, raw) {
        return keep(RefineOutcome::AlreadyAdjacent);
    }
    let dir = raw_xy.sub(camera_xy);
    let len = dir.norm();
    if len == 0.0 || max_push <= 0.0 {
        return keep(RefineOutcome::NoObstacle);
    }
    let far = raw_xy.add(dir.scale(max_push / len));
    let ray = bresenham_line(raw, grid.cell_of(far));
    for w in ray.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        if !grid.in_bounds(cur) {
            return keep(RefineOutcome::RayExitsGrid);
        }
        if !grid.is_free(cur) {
            return Ok(Refinement { position: grid.grid_to_world(prev), outcome: RefineOutcome::PushedForward });
        }
    }
    keep(RefineOutcome::NoObstacle)
}
