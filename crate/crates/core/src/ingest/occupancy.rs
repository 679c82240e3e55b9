use super::{camera::Point3, IngestError};
use crate::spatial::{bresenham_line, CellState, GridPoint, OccupancyGrid, WorldPoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupancyConfig {
    /// Meters per cell.
    pub resolution: f64,
    /// Height band (meters) whose returns count as obstacles.
    pub z_min: f64,
    pub z_max: f64,
    /// Returns needed before a cell is marked occupied.
    pub min_hits: u32,
    /// Visibility carving range from each camera position, meters.
    pub carve_range: f64,
    /// Extra cells of padding around the data extent.
    pub margin_cells: u32,
    /// Pin the grid origin instead of deriving it from the data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<WorldPoint>,
}

impl Default for OccupancyConfig {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            z_min: 0.1,
            z_max: 1.6,
            min_hits: 3,
            carve_range: 8.0,
            margin_cells: 2,
            origin: None,
        }
    }
}

impl OccupancyConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::InvalidParameter(m.to_owned()));
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad("resolution must be > 0");
        }
        if !(self.z_min < self.z_max) {
            return bad("z_min must be < z_max");
        }
        if self.min_hits == 0 {
            return bad("min_hits must be >= 1");
        }
        if !(self.carve_range >= 0.0 && self.carve_range.is_finite()) {
            return bad("carve_range must be >= 0");
        }
        Ok(())
    }
}

/// Height-slices the cloud into an occupancy grid.
///
/// A cell is Occupied when at least `min_hits` in-band returns land in it.
/// Free space is carved by casting a full fan of rays from every viewpoint
/// (camera position) until each ray meets an occupied cell or runs out of
/// range; everything else stays Unknown. An empty cloud yields a 1x1
/// Unknown grid.
pub fn build_occupancy(
    cloud: &PointCloud,
    viewpoints: &[WorldPoint],
    cfg: &OccupancyConfig,
) -> Result<OccupancyGrid, IngestError> {
    cfg.validate()?;
    let res = cfg.resolution;
    if cloud.is_empty() {
        let origin = cfg.origin.unwrap_or_default();
        return Ok(OccupancyGrid::new(1, 1, res, origin, CellState::Unknown)?);
    }
    if cloud.points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(IngestError::InvalidParameter("cloud contains non-finite coordinates".into()));
    }

    let xy = cloud.points.iter().map(|p| WorldPoint::new(p[0], p[1])).chain(viewpoints.iter().copied());
    let (mut min, mut max) = (WorldPoint::new(f64::INFINITY, f64::INFINITY), WorldPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in xy {
        min = WorldPoint::new(min.x.min(p.x), min.y.min(p.y));
        max = WorldPoint::new(max.x.max(p.x), max.y.max(p.y));
    }
    let margin = cfg.margin_cells as f64;
    let origin = cfg.origin.unwrap_or_else(|| {
        WorldPoint::new(((min.x / res).floor() - margin) * res, ((min.y / res).floor() - margin) * res)
    });
    let width = (((max.x - origin.x) / res).floor() + margin + 1.0).max(1.0) as usize;
    let height = (((max.y - origin.y) / res).floor() + margin + 1.0).max(1.0) as usize;
    let mut grid = OccupancyGrid::new(width, height, res, origin, CellState::Unknown)?;

    let mut hits = vec![0u32; width * height];
    for p in &cloud.points {
        if p[2] < cfg.z_min || p[2] > cfg.z_max {
            continue;
        }
        if let Some(i) = grid.index(grid.cell_of(WorldPoint::new(p[0], p[1]))) {
            hits[i] += 1;
        }
    }
    let occupied: Vec<bool> = hits.iter().map(|&h| h >= cfg.min_hits).collect();

    let mut sources: Vec<GridPoint> = viewpoints
        .iter()
        .map(|&v| grid.cell_of(v))
        .filter(|&c| grid.index(c).is_some_and(|i| !occupied[i]))
        .collect();
    sources.sort_by_key(|c| c.row_major());
    sources.dedup();

    let rays = ((2.0 * std::f64::consts::PI * cfg.carve_range / res).ceil() as usize).max(8);
    let carved: Vec<Vec<usize>> = sources
        .par_iter()
        .map(|&src| carve_from(&grid, &occupied, src, rays, cfg.carve_range))
        .collect();

    for (i, occ) in occupied.iter().enumerate() {
        if *occ {
            let p = grid.point_at(i);
            grid.set(p, CellState::Occupied);
        }
    }
    for idx in carved.into_iter().flatten() {
        if !occupied[idx] {
            let p = grid.point_at(idx);
            grid.set(p, CellState::Free);
        }
    }
    Ok(grid)
}

fn carve_from(grid: &OccupancyGrid, occupied: &[bool], src: GridPoint, rays: usize, range: f64) -> Vec<usize> {
    let center = grid.grid_to_world(src);
    let mut out = vec![grid.index(src).expect("source in bounds")];
    for k in 0..rays {
        let theta = k as f64 * 2.0 * std::f64::consts::PI / rays as f64;
        let end = grid.cell_of(WorldPoint::new(center.x + range * theta.cos(), center.y + range * theta.sin()));
        for c in bresenham_line(src, end).into_iter().skip(1) {
            match grid.index(c) {
                Some(i) if !occupied[i] => out.push(i),
                _ => break,
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
