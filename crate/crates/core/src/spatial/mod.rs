//! Raster and geometry primitives shared by every other module.
//!
//! World frame is metric and y-up. Grid cell `(col, row)` covers
//! `[origin.x + col*res, origin.x + (col+1)*res) x [origin.y + row*res, ...)`,
//! so row index grows with world y.

mod grid;
mod raster;

pub use grid::{CellState, GridMeta, OccupancyGrid};
pub(crate) use grid::read_pgm_raw;
pub use raster::{
    bresenham_line, components_where, connected_components, line_of_sight, spatial_median,
    NEIGHBORS_8,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("point ({x:.3}, {y:.3}) lies outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },
    #[error("input is empty")]
    EmptyInput,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("pgm: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Integer cell index. Signed so that line traversal can step past the
/// grid edge without wrapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub col: i32,
    pub row: i32,
}

impl GridPoint {
    pub const fn new(col: i32, row: i32) -> Self {
        Self { col, row }
    }

    /// Ordering key used wherever the crate needs a deterministic
    /// "smallest cell": row first, then column.
    pub fn row_major(self) -> (i32, i32) {
        (self.row, self.col)
    }

    pub fn chebyshev(self, other: GridPoint) -> i32 {
        (self.col - other.col).abs().max((self.row - other.row).abs())
    }

    pub fn dist2(self, other: GridPoint) -> i64 {
        let dc = (self.col - other.col) as i64;
        let dr = (self.row - other.row) as i64;
        dc * dc + dr * dr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: WorldPoint) -> WorldPoint {
        WorldPoint::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: WorldPoint) -> WorldPoint {
        WorldPoint::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> WorldPoint {
        WorldPoint::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: WorldPoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product. Positive means `other` is
    /// counter-clockwise (to the left) of `self` in a y-up frame.
    pub fn cross(self, other: WorldPoint) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI).rem_euclid(two_pi) - PI;
    if t >= PI {
        t -= two_pi;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub position: WorldPoint,
    /// Radians in `[-pi, pi)`, counter-clockwise from +x.
    pub heading: f64,
}

impl Pose2D {
    pub fn new(position: WorldPoint, heading: f64) -> Self {
        Self { position, heading: normalize_angle(heading) }
    }
}

/// Left/right relative to a directed line in the y-up world frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Side of `offset` relative to `direction`; points on the line count as left.
    pub fn of(direction: WorldPoint, offset: WorldPoint) -> Side {
        if direction.cross(offset) >= 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn flipped(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_wraps_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((normalize_angle(0.25) - 0.25).abs() < 1e-15);
        let t = normalize_angle(-7.0 * PI / 4.0);
        assert!((t - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn side_follows_cross_product_sign() {
        let east = WorldPoint::new(1.0, 0.0);
        assert_eq!(Side::of(east, WorldPoint::new(0.0, 1.0)), Side::Left);
        assert_eq!(Side::of(east, WorldPoint::new(0.0, -1.0)), Side::Right);
    }
}
