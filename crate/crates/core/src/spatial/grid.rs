use super::{GridPoint, SpatialError, WorldPoint};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Guards floor-binning against representation error such as
/// `1.0 / 0.05 == 19.999999999999996`.
const BIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

impl CellState {
    pub fn is_free(self) -> bool {
        self == CellState::Free
    }

    /// Gray level in the PGM interchange format.
    pub fn gray(self) -> u8 {
        match self {
            CellState::Occupied => 0,
            CellState::Unknown => 205,
            CellState::Free => 254,
        }
    }

    /// Inverse of [`CellState::gray`]. Intermediate levels are thresholded
    /// the way map_server-style loaders do.
    pub fn from_gray(v: u8) -> CellState {
        match v {
            0..=100 => CellState::Occupied,
            250..=255 => CellState::Free,
            _ => CellState::Unknown,
        }
    }
}

/// Sidecar metadata stored next to a PGM raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: WorldPoint,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: WorldPoint,
        fill: CellState,
    ) -> Result<Self, SpatialError> {
        Self::from_cells(width, height, resolution, origin, vec![fill; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: WorldPoint,
        cells: Vec<CellState>,
    ) -> Result<Self, SpatialError> {
        if width == 0 || height == 0 {
            return Err(SpatialError::InvalidGrid("width and height must be positive".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(SpatialError::InvalidGrid(format!("resolution {resolution} must be > 0")));
        }
        if !origin.is_finite() {
            return Err(SpatialError::InvalidGrid("origin must be finite".into()));
        }
        if cells.len() != width * height {
            return Err(SpatialError::InvalidGrid(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self { width, height, resolution, origin, cells })
    }

    /// Builds a grid from rows of characters: `.` free, `#` occupied,
    /// `?` unknown. The first string is the *top* row (highest y), so
    /// fixtures read like a map.
    pub fn from_ascii(rows: &[&str], resolution: f64, origin: WorldPoint) -> Result<Self, SpatialError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        let mut cells = vec![CellState::Unknown; width * height];
        for (i, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(SpatialError::InvalidGrid("ragged ascii rows".into()));
            }
            let row = height - 1 - i;
            for (col, ch) in line.chars().enumerate() {
                cells[row * width + col] = match ch {
                    '.' | ' ' => CellState::Free,
                    '#' => CellState::Occupied,
                    '?' => CellState::Unknown,
                    other => {
                        return Err(SpatialError::InvalidGrid(format!("unexpected glyph {other:?}")))
                    }
                };
            }
        }
        Self::from_cells(width, height, resolution, origin, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> WorldPoint {
        self.origin
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta { resolution: self.resolution, origin_x: self.origin.x, origin_y: self.origin.y }
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn in_bounds(&self, p: GridPoint) -> bool {
        p.col >= 0 && p.row >= 0 && (p.col as usize) < self.width && (p.row as usize) < self.height
    }

    pub fn index(&self, p: GridPoint) -> Option<usize> {
        self.in_bounds(p).then(|| p.row as usize * self.width + p.col as usize)
    }

    pub fn point_at(&self, index: usize) -> GridPoint {
        GridPoint::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// State of a cell; out-of-bounds reads as `Unknown`.
    pub fn get(&self, p: GridPoint) -> CellState {
        self.index(p).map_or(CellState::Unknown, |i| self.cells[i])
    }

    pub fn is_free(&self, p: GridPoint) -> bool {
        self.get(p) == CellState::Free
    }

    pub fn set(&mut self, p: GridPoint, state: CellState) -> bool {
        match self.index(p) {
            Some(i) => {
                self.cells[i] = state;
                true
            }
            None => false,
        }
    }

    /// Floor-binned cell containing `p`, without bounds checking.
    pub fn cell_of(&self, p: WorldPoint) -> GridPoint {
        let fx = (p.x - self.origin.x) / self.resolution + BIN_EPS;
        let fy = (p.y - self.origin.y) / self.resolution + BIN_EPS;
        GridPoint::new(fx.floor() as i32, fy.floor() as i32)
    }

    pub fn world_to_grid(&self, p: WorldPoint) -> Result<GridPoint, SpatialError> {
        let c = self.cell_of(p);
        if p.is_finite() && self.in_bounds(c) {
            Ok(c)
        } else {
            Err(SpatialError::OutOfBounds { x: p.x, y: p.y })
        }
    }

    /// World coordinates of the cell center.
    pub fn grid_to_world(&self, c: GridPoint) -> WorldPoint {
        WorldPoint::new(
            self.origin.x + (c.col as f64 + 0.5) * self.resolution,
            self.origin.y + (c.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn iter_points(&self) -> impl Iterator<Item = (GridPoint, CellState)> + '_ {
        self.cells.iter().enumerate().map(|(i, s)| (self.point_at(i), *s))
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|s| **s == state).count()
    }

    /// Binary PGM (P5, maxval 255). Image rows run top-down, so the
    /// highest grid row is written first.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<(), SpatialError> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let mut line = vec![0u8; self.width];
        for row in (0..self.height).rev() {
            for (col, px) in line.iter_mut().enumerate() {
                *px = self.cells[row * self.width + col].gray();
            }
            out.write_all(&line)?;
        }
        Ok(())
    }

    pub fn read_pgm<R: Read>(input: R, meta: GridMeta) -> Result<Self, SpatialError> {
        let (width, height, pixels) = read_pgm_raw(input)?;
        let mut cells = vec![CellState::Unknown; width * height];
        for img_row in 0..height {
            let row = height - 1 - img_row;
            for col in 0..width {
                cells[row * width + col] = CellState::from_gray(pixels[img_row * width + col]);
            }
        }
        Self::from_cells(width, height, meta.resolution, WorldPoint::new(meta.origin_x, meta.origin_y), cells)
    }

    /// Writes `<stem>.pgm` and `<stem>.json`.
    pub fn save(&self, pgm_path: &Path, meta_path: &Path) -> Result<(), SpatialError> {
        let mut buf = Vec::new();
        self.write_pgm(&mut buf)?;
        std::fs::write(pgm_path, buf)?;
        std::fs::write(meta_path, serde_json::to_vec_pretty(&self.meta())?)?;
        Ok(())
    }

    pub fn load(pgm_path: &Path, meta_path: &Path) -> Result<Self, SpatialError> {
        let meta: GridMeta = serde_json::from_slice(&std::fs::read(meta_path)?)?;
        Self::read_pgm(std::fs::File::open(pgm_path)?, meta)
    }
}

/// Reads a P5 image and returns `(width, height, pixels)` with pixels in
/// file (top-down) order.
pub(crate) fn read_pgm_raw<R: Read>(input: R) -> Result<(usize, usize, Vec<u8>), SpatialError> {
    let mut reader = BufReader::new(input);
    let mut header = Vec::new();
    // magic, width, height, maxval; '#' comments allowed between tokens
    while header.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(SpatialError::Pgm("truncated header".into()));
        }
        let content = line.split('#').next().unwrap_or("");
        header.extend(content.split_whitespace().map(str::to_owned));
    }
    if header[0] != "P5" {
        return Err(SpatialError::Pgm(format!("unsupported magic {}", header[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| SpatialError::Pgm(format!("bad header field {s:?}")));
    let (width, height, maxval) = (parse(&header[1])?, parse(&header[2])?, parse(&header[3])?);
    if maxval != 255 {
        return Err(SpatialError::Pgm(format!("maxval {maxval} unsupported")));
    }
    let mut pixels = vec![0u8; width * height];
    reader.read_exact(&mut pixels).map_err(|_| SpatialError::Pgm("truncated raster".into()))?;
    Ok((width, height, pixels))
}
