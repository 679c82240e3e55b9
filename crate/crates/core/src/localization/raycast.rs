use super::{LocalizationError, PoseGridSpec};
use crate::ingest::ProductRecord;
use crate::spatial::{bresenham_line, GridPoint, OccupancyGrid, Pose2D, WorldPoint, NEIGHBORS_8};
use std::collections::BTreeSet;

/// Ray headings in radians, evenly spaced from `heading - fov/2` to
/// `heading + fov/2` inclusive. A single ray looks straight ahead.
pub fn ray_angles(heading: f64, spec: &PoseGridSpec) -> Vec<f64> {
    let half = spec.fov.to_radians() / 2.0;
    if spec.rays == 1 {
        return vec![heading];
    }
    let step = 2.0 * half / (spec.rays - 1) as f64;
    (0..spec.rays).map(|i| heading - half + i as f64 * step).collect()
}

/// Dense cell -> product-list table.
struct CellTable {
    starts: Vec<u32>,
    items: Vec<usize>,
}

impl CellTable {
    fn build(cells: usize, pairs: &[(usize, usize)]) -> Self {
        let mut starts = vec![0u32; cells + 1];
        for &(c, _) in pairs {
            starts[c + 1] += 1;
        }
        for i in 0..cells {
            starts[i + 1] += starts[i];
        }
        let mut fill = starts.clone();
        let mut items = vec![0; pairs.len()];
        for &(c, p) in pairs {
            items[fill[c] as usize] = p;
            fill[c] += 1;
        }
        Self { starts, items }
    }

    fn get(&self, k: usize) -> &[usize] {
        &self.items[self.starts[k] as usize..self.starts[k + 1] as usize]
    }
}

/// Products bucketed by grid cell. Products off the grid are never seen.
pub(crate) struct ProductIndex<'a> {
    products: &'a [ProductRecord],
    width: i32,
    height: i32,
    /// Products on each cell.
    on: CellTable,
    /// What a ray crossing a free cell picks up: the cell's own products
    /// and those on its free 8-neighbors.
    near: CellTable,
}

impl<'a> ProductIndex<'a> {
    pub(crate) fn new(grid: &OccupancyGrid, products: &'a [ProductRecord]) -> Self {
        let cells = grid.width() * grid.height();
        let mut on = Vec::with_capacity(products.len());
        let mut near = Vec::with_capacity(products.len() * 9);
        for (i, p) in products.iter().enumerate() {
            let q = grid.cell_of(p.position());
            let Some(k) = grid.index(q) else { continue };
            on.push((k, i));
            near.push((k, i));
            if grid.is_free(q) {
                for (dc, dr) in NEIGHBORS_8 {
                    if let Some(n) = grid.index(GridPoint::new(q.col + dc, q.row + dr)) {
                        near.push((n, i));
                    }
                }
            }
        }
        Self {
            products,
            width: grid.width() as i32,
            height: grid.height() as i32,
            on: CellTable::build(cells, &on),
            near: CellTable::build(cells, &near),
        }
    }

    fn key(&self, c: GridPoint) -> Option<usize> {
        (c.col >= 0 && c.row >= 0 && c.col < self.width && c.row < self.height)
            .then(|| (c.row * self.width + c.col) as usize)
    }

    fn collect(&self, c: GridPoint, out: &mut BTreeSet<usize>) {
        if let Some(k) = self.key(c) {
            out.extend(self.on.get(k));
        }
    }

    pub(crate) fn product(&self, i: usize) -> &'a ProductRecord {
        &self.products[i]
    }

    /// Indices of products seen from `pose`, ascending.
    pub(crate) fn visible(
        &self,
        grid: &OccupancyGrid,
        pose: &Pose2D,
        spec: &PoseGridSpec,
    ) -> Result<BTreeSet<usize>, LocalizationError> {
        let origin = grid.cell_of(pose.position);
        if !grid.is_free(origin) {
            return Err(LocalizationError::PoseInObstacle { x: pose.position.x, y: pose.position.y });
        }
        let mut seen = BTreeSet::new();
        if self.products.is_empty() {
            return Ok(seen);
        }
        for angle in ray_angles(pose.heading, spec) {
            let tip = pose.position.add(WorldPoint::new(angle.cos(), angle.sin()).scale(spec.range));
            let mut last_free = origin;
            for c in bresenham_line(origin, grid.cell_of(tip)) {
                if !grid.in_bounds(c) {
                    break;
                }
                if grid.is_free(c) {
                    // the ray is one cell wide on either side
                    if let Some(k) = self.key(c) {
                        seen.extend(self.near.get(k));
                    }
                    last_free = c;
                    continue;
                }
                // struck a face: the products leaning on it near the ray
                self.collect(c, &mut seen);
                for (dc, dr) in NEIGHBORS_8 {
                    let n = GridPoint::new(c.col + dc, c.row + dr);
                    if grid.is_free(n) && n.chebyshev(last_free) <= 1 {
                        self.collect(n, &mut seen);
                    }
                }
                break;
            }
        }
        Ok(seen)
    }
}

/// Product ids visible from `pose`, sorted.
pub fn raycast_visible(
    grid: &OccupancyGrid,
    products: &[ProductRecord],
    pose: &Pose2D,
    spec: &PoseGridSpec,
) -> Result<Vec<String>, LocalizationError> {
    spec.validate()?;
    let index = ProductIndex::new(grid, products);
    let mut ids: Vec<String> =
        index.visible(grid, pose, spec)?.into_iter().map(|i| products[i].product_id.clone()).collect();
    ids.sort();
    ids.dedup();
    Ok(ids)
}
