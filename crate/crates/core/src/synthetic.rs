//! Seeded synthetic grocery store: geometry, a camera walk with labeled
//! detections, and the matching point cloud.

use crate::ingest::{
    project, write_cloud, write_frames, write_products, CameraIntrinsics, DetectionRecord, FramePose, FrameRecord,
    IngestError, PointCloud, PoseRecord, ProductLabel, ProductRecord, Sharpness,
};
use crate::localization::PoseGridSpec;
use crate::routing::RoutePlan;
use crate::spatial::{line_of_sight, CellState, GridPoint, OccupancyGrid, WorldPoint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub aisles: usize,
    pub products: usize,
    pub seed: u64,
    /// Give every product its own brand so no two shelves read alike.
    pub unique_labels: bool,
    /// Also stock the front and back walls facing the cross corridors.
    pub stock_walls: bool,
    pub resolution: f64,
    pub aisle_width: f64,
    pub shelf_depth: f64,
    pub aisle_length: f64,
    pub cross_width: f64,
    /// Shelf unit (between aisles i and i+1) that runs through to the
    /// back wall, splitting the back corridor.
    pub closed_back: Option<usize>,
    pub wall: f64,
    pub camera_step: f64,
    pub camera_height: f64,
    pub shelf_height: f64,
    pub max_detection_range: f64,
    pub blurry_fraction: f64,
    pub depth_noise: f64,
    pub pixel_noise: f64,
    pub embedding_dim: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            aisles: 4,
            products: 100,
            seed: 7,
            unique_labels: false,
            stock_walls: false,
            resolution: 0.05,
            aisle_width: 1.6,
            shelf_depth: 0.6,
            aisle_length: 8.0,
            cross_width: 1.6,
            closed_back: Some(1),
            wall: 0.1,
            camera_step: 0.4,
            camera_height: 1.2,
            shelf_height: 1.0,
            max_detection_range: 4.0,
            blurry_fraction: 0.1,
            depth_noise: 0.02,
            pixel_noise: 0.5,
            embedding_dim: 32,
        }
    }
}

impl SyntheticConfig {
    /// Every shelf cell, walls included, holds a product with a label of
    /// its own.
    pub fn unique_shelves() -> Self {
        let base = Self { unique_labels: true, stock_walls: true, ..Self::default() };
        Self { products: base.shelf_cells(), ..base }
    }

    /// Number of walkway cells along stockable faces.
    pub fn shelf_cells(&self) -> usize {
        let per_face = (self.aisle_length / self.resolution).round() as usize;
        let mut n = 2 * self.aisles * per_face;
        if self.stock_walls {
            let span = self.aisles as f64 * self.aisle_width + (self.aisles.saturating_sub(1)) as f64 * self.shelf_depth;
            n += 2 * (span / self.resolution).round() as usize;
            if self.closed_back.is_some() {
                n -= (self.shelf_depth / self.resolution).round() as usize;
            }
        }
        n
    }
}

/// Axis-aligned obstacle footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: WorldPoint) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }
}

/// (name, brand, category), grouped by store section.
const CATALOG: &[(&str, &str, &str)] = &[
    ("Chana Dal", "Laxmi", "Lentils"),
    ("Toor Dal", "Swad", "Lentils"),
    ("Moong Dal", "Deep", "Lentils"),
    ("Rajma", "Laxmi", "Beans"),
    ("Kabuli Chana", "Swad", "Beans"),
    ("Basmati Rice", "Royal", "Rice"),
    ("Sona Masoori Rice", "Laxmi", "Rice"),
    ("Poha", "Deep", "Grains"),
    ("Chakki Atta", "Aashirvaad", "Flour"),
    ("Besan", "Swad", "Flour"),
    ("Sooji", "Laxmi", "Flour"),
    ("Biryani Masala", "Shan", "Spices"),
    ("Garam Masala", "MDH", "Spices"),
    ("Turmeric Powder", "Laxmi", "Spices"),
    ("Cumin Seeds", "Deep", "Spices"),
    ("Red Chili Powder", "MDH", "Spices"),
    ("Ghee", "Amul", "Ghee"),
    ("Mustard Oil", "Swad", "Cooking Oils"),
    ("Sunflower Oil", "Saffola", "Cooking Oils"),
    ("Aloo Bhujia", "Haldiram", "Snacks"),
    ("Moong Dal Namkeen", "Haldiram", "Snacks"),
    ("Glucose Biscuits", "Parle", "Biscuits"),
    ("Gulab Jamun", "Haldiram", "Sweets"),
    ("Soan Papdi", "Haldiram", "Sweets"),
    ("Masala Chai", "Wagh Bakri", "Tea"),
    ("Instant Coffee", "Bru", "Coffee"),
    ("Mango Juice", "Frooti", "Beverages"),
    ("Rose Sharbat", "Rooh Afza", "Beverages"),
    ("Paneer", "Amul", "Dairy"),
    ("Dahi", "Amul", "Dairy"),
    ("Frozen Parathas", "Deep", "Frozen Foods"),
    ("Malai Kulfi", "Kwality", "Frozen Foods"),
    ("Mango Pickle", "Priya", "Pickles"),
    ("Lime Pickle", "Mother's Recipe", "Pickles"),
    ("Garlic Paste", "Smith and Jones", "Sauces"),
    ("Tamarind Paste", "Swad", "Sauces"),
    ("Dal Makhani", "MTR", "Ready Meals"),
    ("Masala Noodles", "Maggi", "Instant Noodles"),
    ("Butter Naan", "Deep", "Bakery"),
    ("Milk Rusk", "Britannia", "Bakery"),
    ("Dish Wash Bar", "Vim", "Household"),
    ("Detergent Powder", "Surf Excel", "Household"),
    ("Amla Hair Oil", "Dabur", "Personal Care"),
    ("Sandal Soap", "Mysore", "Personal Care"),
    ("Red Onions", "Farm Fresh", "Fresh Produce"),
    ("Roma Tomatoes", "Farm Fresh", "Fresh Produce"),
];

const SIZES: &[&str] = &["500g", "1kg", "2kg", "5kg", "200g", "100g"];

pub const INTRINSICS: CameraIntrinsics =
    CameraIntrinsics { fx: 400.0, fy: 400.0, cx: 320.0, cy: 240.0, width: Some(640), height: Some(480) };

/// A generated store: ground truth plus the raw scan inputs.
#[derive(Debug, Clone)]
pub struct SyntheticStore {
    pub config: SyntheticConfig,
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Rect>,
    /// Ground-truth products, on the free cell in front of their shelf.
    pub products: Vec<ProductRecord>,
    pub frames: Vec<FrameRecord>,
    pub cloud: PointCloud,
    /// x of each aisle's centerline.
    pub aisle_centers: Vec<f64>,
    /// y of the front and back cross corridors' centerlines.
    pub cross_centers: [f64; 2],
}

struct Face {
    start: WorldPoint,
    along: WorldPoint,
    /// Points from the shelf into the walkway.
    normal: WorldPoint,
    length: f64,
}

fn snap(v: f64, res: f64) -> f64 {
    ((v / res).floor() + 0.5) * res
}

impl SyntheticStore {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self, String> {
        if cfg.aisles == 0 {
            return Err("need at least one aisle".into());
        }
        if cfg.products == 0 {
            return Err("need at least one product".into());
        }
        if !(cfg.resolution > 0.0 && cfg.aisle_width > 4.0 * cfg.resolution && cfg.aisle_length > 0.0) {
            return Err("store dimensions are too small for the resolution".into());
        }
        let n = cfg.aisles;
        let (t, aw, sd, cw, len) = (cfg.wall, cfg.aisle_width, cfg.shelf_depth, cfg.cross_width, cfg.aisle_length);
        let width = 2.0 * t + n as f64 * aw + (n - 1) as f64 * sd;
        let height = 2.0 * t + 2.0 * cw + len;
        let (sy0, sy1) = (t + cw, t + cw + len);

        let mut obstacles = vec![
            Rect { x0: 0.0, y0: 0.0, x1: width, y1: t },
            Rect { x0: 0.0, y0: height - t, x1: width, y1: height },
            Rect { x0: 0.0, y0: 0.0, x1: t, y1: height },
            Rect { x0: width - t, y0: 0.0, x1: width, y1: height },
        ];
        let aisle_x0: Vec<f64> = (0..n).map(|a| t + a as f64 * (aw + sd)).collect();
        if cfg.closed_back.is_some_and(|k| k + 1 >= n) {
            return Err("closed_back must name a shelf unit between two aisles".into());
        }
        for a in 0..n - 1 {
            let x0 = aisle_x0[a] + aw;
            let y1 = if cfg.closed_back == Some(a) { height - t } else { sy1 };
            obstacles.push(Rect { x0, y0: sy0, x1: x0 + sd, y1 });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let res = cfg.resolution;
        let mut faces: Vec<Face> = aisle_x0
            .iter()
            .flat_map(|&x| {
                [
                    Face { start: WorldPoint::new(x, sy0), along: WorldPoint::new(0.0, 1.0), normal: WorldPoint::new(1.0, 0.0), length: len },
                    Face { start: WorldPoint::new(x + aw, sy0), along: WorldPoint::new(0.0, 1.0), normal: WorldPoint::new(-1.0, 0.0), length: len },
                ]
            })
            .collect();
        if cfg.stock_walls {
            let span = width - 2.0 * t;
            faces.push(Face { start: WorldPoint::new(t, t), along: WorldPoint::new(1.0, 0.0), normal: WorldPoint::new(0.0, 1.0), length: span });
            let mut back = vec![(t, width - t)];
            if let Some(k) = cfg.closed_back {
                let x0 = aisle_x0[k] + aw;
                back = vec![(t, x0), (x0 + sd, width - t)];
            }
            for (a, b) in back {
                faces.push(Face { start: WorldPoint::new(a, height - t), along: WorldPoint::new(1.0, 0.0), normal: WorldPoint::new(0.0, -1.0), length: b - a });
            }
        }
        let total = cfg.products;
        let slots_available: usize = faces.iter().map(|f| (f.length / res).round() as usize).sum();
        if total > slots_available {
            return Err(format!("{total} products do not fit on {slots_available} shelf cells"));
        }
        let total_len: f64 = faces.iter().map(|f| f.length).sum();
        let mut products = Vec::with_capacity(total);
        let mut next = 0usize;
        let mut acc = 0.0;
        for face in &faces {
            let end = if std::ptr::eq(face, faces.last().expect("faces")) {
                total
            } else {
                ((acc + face.length) / total_len * total as f64).round() as usize
            };
            acc += face.length;
            let count = end - next;
            let mut slots: Vec<usize> = (next..end).collect();
            slots.shuffle(&mut rng);
            for (j, &i) in slots.iter().enumerate() {
                let item = i * CATALOG.len() / total;
                let (name, brand, category) = CATALOG[item];
                let size = SIZES[(i - (item * total).div_ceil(CATALOG.len())) % SIZES.len()];
                let brand = if cfg.unique_labels { format!("{brand} {i:04}") } else { brand.to_owned() };
                let p = face
                    .start
                    .add(face.along.scale((j as f64 + 0.5) * face.length / count as f64))
                    .add(face.normal.scale(res / 2.0));
                products.push(ProductRecord {
                    product_id: format!("t{i:04}"),
                    label: ProductLabel::new(&format!("{name} {size}"), &brand, "box", category),
                    x: snap(p.x, res),
                    y: snap(p.y, res),
                    refined: true,
                    frame_id: String::new(),
                });
            }
            next = end;
        }
        products.sort_by(|a, b| a.product_id.cmp(&b.product_id));

        let aisle_centers: Vec<f64> = aisle_x0.iter().map(|x| x + aw / 2.0).collect();
        let cross_centers = [t + cw / 2.0, height - t - cw / 2.0];
        let mut store = SyntheticStore {
            config: cfg.clone(),
            width,
            height,
            obstacles,
            products,
            frames: Vec::new(),
            cloud: PointCloud::default(),
            aisle_centers,
            cross_centers,
        };
        store.cloud = store.sample_cloud();
        store.frames = store.walk(&mut rng);
        Ok(store)
    }

    /// Rasterizes the true geometry: obstacles Occupied, the rest Free.
    pub fn truth_grid(&self) -> OccupancyGrid {
        let res = self.config.resolution;
        let w = (self.width / res).round() as usize;
        let h = (self.height / res).round() as usize;
        let mut g = OccupancyGrid::new(w, h, res, WorldPoint::new(0.0, 0.0), CellState::Free).expect("valid size");
        for r in 0..h as i32 {
            for c in 0..w as i32 {
                let p = g.grid_to_world(GridPoint::new(c, r));
                if self.obstacles.iter().any(|o| o.contains(p)) {
                    g.set(GridPoint::new(c, r), CellState::Occupied);
                }
            }
        }
        g
    }

    fn sample_cloud(&self) -> PointCloud {
        let step = self.config.resolution / 2.0;
        let mut pts = Vec::new();
        for o in &self.obstacles {
            let nx = ((o.x1 - o.x0) / step).round() as usize;
            let ny = ((o.y1 - o.y0) / step).round() as usize;
            for i in 0..nx {
                for j in 0..ny {
                    let x = o.x0 + (i as f64 + 0.5) * step;
                    let y = o.y0 + (j as f64 + 0.5) * step;
                    for z in [0.5, 1.0, 1.5] {
                        pts.push([x, y, z]);
                    }
                }
            }
        }
        // floor returns fall below the height band
        let mut y = self.config.wall + step;
        while y < self.height - self.config.wall {
            let mut x = self.config.wall + step;
            while x < self.width - self.config.wall {
                pts.push([x, y, 0.0]);
                x += 0.5;
            }
            y += 0.5;
        }
        PointCloud::new(pts)
    }

    /// Camera positions and headings: up every aisle looking at both
    /// faces, then along both cross corridors.
    fn camera_path(&self) -> Vec<(WorldPoint, f64)> {
        let step = self.config.camera_step;
        let mut out = Vec::new();
        let [front, back] = self.cross_centers;
        // up each aisle facing one shelf, back down facing the other
        for &x in &self.aisle_centers {
            let n = ((back - front) / step + 1e-9).floor() as usize;
            let ys: Vec<f64> = (0..=n).map(|i| front + i as f64 * step).collect();
            out.extend(ys.iter().map(|&y| (WorldPoint::new(x, y), std::f64::consts::PI)));
            out.extend(ys.iter().rev().map(|&y| (WorldPoint::new(x, y), 0.0)));
        }
        for &y in &self.cross_centers {
            let (x0, x1) = (self.aisle_centers[0], *self.aisle_centers.last().expect("aisles"));
            let mut x = x0;
            while x <= x1 + 1e-9 {
                out.push((WorldPoint::new(x, y), std::f64::consts::FRAC_PI_2));
                x += step;
            }
        }
        out
    }

    fn blocked(&self, p: WorldPoint) -> bool {
        let m = 0.3;
        self.obstacles.iter().any(|o| p.x > o.x0 - m && p.x < o.x1 + m && p.y > o.y0 - m && p.y < o.y1 + m)
    }

    fn walk(&self, rng: &mut ChaCha8Rng) -> Vec<FrameRecord> {
        let cfg = &self.config;
        let truth = self.truth_grid();
        let dim = cfg.embedding_dim;
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let signatures: Vec<Vec<f64>> =
            (0..self.products.len()).map(|_| (0..dim).map(|_| unit.sample(rng)).collect()).collect();
        let depth_noise = Normal::new(0.0, cfg.depth_noise.max(1e-12)).expect("finite sigma");
        let pixel_noise = Normal::new(0.0, cfg.pixel_noise.max(1e-12)).expect("finite sigma");
        let w = INTRINSICS.width.expect("set") as f64;
        let h = INTRINSICS.height.expect("set") as f64;
        let mut frames = Vec::new();
        let path: Vec<_> = self.camera_path().into_iter().filter(|(p, _)| !self.blocked(*p)).collect();
        for (k, (pos, yaw)) in path.into_iter().enumerate() {
            let ts = k as f64 * 0.1;
            let pose = FramePose::looking([pos.x, pos.y, cfg.camera_height], yaw, ts);
            let cam_cell = truth.cell_of(pos);
            let mut emb = vec![0.0f64; dim];
            let mut detections = Vec::new();
            for (pi, p) in self.products.iter().enumerate() {
                let Ok((u, v, z)) = project([p.x, p.y, cfg.shelf_height], &INTRINSICS, &pose) else {
                    continue;
                };
                if !(0.0..w).contains(&u) || !(0.0..h).contains(&v) || z > cfg.max_detection_range {
                    continue;
                }
                if !line_of_sight(&truth, cam_cell, truth.cell_of(p.position())) {
                    continue;
                }
                for (e, s) in emb.iter_mut().zip(&signatures[pi]) {
                    *e += s;
                }
                let u = (u + pixel_noise.sample(rng)).clamp(0.0, w - 1e-6);
                let v = (v + pixel_noise.sample(rng)).clamp(0.0, h - 1e-6);
                let blurry = rng.random::<f64>() < cfg.blurry_fraction;
                detections.push(DetectionRecord {
                    u,
                    v,
                    median_depth: (z + depth_noise.sample(rng)).max(0.05),
                    label: p.label.clone(),
                    sharpness: if blurry { Sharpness::Blurry } else { Sharpness::Sharp },
                });
            }
            for e in emb.iter_mut() {
                *e += 0.05 * unit.sample(rng);
            }
            let norm = emb.iter().map(|e| e * e).sum::<f64>().sqrt().max(1e-12);
            frames.push(FrameRecord {
                frame_id: format!("f{k:05}"),
                timestamp: ts,
                intrinsics: INTRINSICS,
                pose: PoseRecord::from_pose(&pose),
                embedding: Some(emb.iter().map(|e| (e / norm) as f32).collect()),
                detections,
            });
        }
        frames
    }

    pub fn viewpoints(&self) -> Vec<WorldPoint> {
        self.frames.iter().map(FrameRecord::camera_xy).collect()
    }

    /// Writes `frames.jsonl`, `cloud.xyz` and the ground truth
    /// `truth_products.json` into `dir`.
    pub fn write_inputs(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir)?;
        write_frames(&dir.join(FRAMES_FILE), &self.frames)?;
        write_cloud(&dir.join(CLOUD_FILE), &self.cloud)?;
        write_products(&dir.join(TRUTH_FILE), &self.products)?;
        Ok(())
    }

    /// Walkway points every `spacing` meters along aisle and corridor
    /// centerlines, for picking route starts.
    pub fn walkway_points(&self, spacing: f64) -> Vec<WorldPoint> {
        let [front, back] = self.cross_centers;
        let mut pts = Vec::new();
        for &x in &self.aisle_centers {
            let mut y = front;
            while y <= back + 1e-9 {
                pts.push(WorldPoint::new(x, y));
                y += spacing;
            }
        }
        let (x0, x1) = (self.aisle_centers[0], *self.aisle_centers.last().expect("aisles"));
        for &y in &self.cross_centers {
            let mut x = x0 + spacing / 2.0;
            while x < x1 {
                pts.push(WorldPoint::new(x, y));
                x += spacing;
            }
        }
        pts.retain(|p| !self.blocked(*p));
        pts
    }
}

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const CLOUD_FILE: &str = "cloud.xyz";
pub const TRUTH_FILE: &str = "truth_products.json";

/// Picks `n` route plans spreading lengths evenly over `[min_len, max_len]`
/// while cycling the wanted turn count through `0..=max_turns`. Returns
/// indices into `plans`.
pub fn select_scenarios(plans: &[RoutePlan], n: usize, min_len: f64, max_len: f64, max_turns: usize) -> Vec<usize> {
    let mut used = vec![false; plans.len()];
    let mut picked = Vec::with_capacity(n);
    for i in 0..n {
        let target = if n > 1 { min_len + (max_len - min_len) * i as f64 / (n - 1) as f64 } else { min_len };
        let turns = i % (max_turns + 1);
        let best = plans
            .iter()
            .enumerate()
            .filter(|(j, p)| !used[*j] && p.total_length >= min_len && p.total_length <= max_len)
            .min_by(|(_, a), (_, b)| {
                let cost = |p: &RoutePlan| (p.total_length - target).abs() + 3.0 * (p.turn_count() as f64 - turns as f64).abs();
                cost(a).total_cmp(&cost(b))
            });
        if let Some((j, _)) = best {
            used[j] = true;
            picked.push(j);
        }
    }
    picked
}

/// Two aisles that are exact mirror images about the store's vertical
/// centerline, with identical products on mirrored faces, plus the pose
/// grid to use with them.
///
/// The store is 4 m wide at 0.05 m. Pose cells are 0.25 m (five grid
/// cells) so pose centers land on grid-cell centers; with an even ratio
/// they sit on cell boundaries and flooring shifts every ray origin one
/// cell to the same side, which breaks the reflection.
pub fn mirrored_aisles() -> (OccupancyGrid, Vec<ProductRecord>, PoseGridSpec) {
    let mut cfg = SyntheticConfig {
        aisles: 2,
        closed_back: None,
        unique_labels: true,
        stock_walls: true,
        shelf_depth: 0.6,
        aisle_width: 1.6,
        ..Default::default()
    };
    // fully stocked, so within one half almost every view is distinct
    cfg.products = cfg.shelf_cells();
    let store = SyntheticStore::generate(&cfg).expect("fixed config");
    let grid = store.truth_grid();
    let mid = store.width / 2.0;
    let res = cfg.resolution;
    let mut products: Vec<ProductRecord> =
        store.products.iter().filter(|p| p.x < mid).cloned().collect();
    let mirrored: Vec<ProductRecord> = products
        .iter()
        .map(|p| {
            // reflect the cell, not the coordinate, so the mirror lands on a cell center
            let col = (p.x / res).floor();
            let mcol = (store.width / res).round() - 1.0 - col;
            ProductRecord { product_id: format!("m{}", &p.product_id[1..]), x: (mcol + 0.5) * res, ..p.clone() }
        })
        .collect();
    products.extend(mirrored);
    products.sort_by(|a, b| a.product_id.cmp(&b.product_id));
    (grid, products, PoseGridSpec { cell_size: 0.25, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn layout_and_counts() {
        let s = SyntheticStore::generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(s.products.len(), 100);
        assert!((s.width - 8.4).abs() < 1e-9);
        let g = s.truth_grid();
        for p in &s.products {
            let c = g.cell_of(p.position());
            assert!(g.is_free(c), "{p:?}");
            let touches = crate::spatial::NEIGHBORS_8
                .iter()
                .any(|&(dc, dr)| g.get(GridPoint::new(c.col + dc, c.row + dr)) == CellState::Occupied);
            assert!(touches, "{} is not against a shelf", p.product_id);
        }
        let names: BTreeSet<_> = s.products.iter().map(|p| p.label.name.clone()).collect();
        assert_eq!(names.len(), 100);
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = SyntheticStore::generate(&SyntheticConfig::default()).unwrap();
        let b = SyntheticStore::generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.products, b.products);
        let c = SyntheticStore::generate(&SyntheticConfig { seed: 8, ..Default::default() }).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn detections_unproject_near_truth() {
        let s = SyntheticStore::generate(&SyntheticConfig::default()).unwrap();
        let mut n = 0;
        let mut blurry = 0;
        for f in &s.frames {
            let pose = f.pose.to_pose(f.timestamp).unwrap();
            for d in &f.detections {
                let p = crate::ingest::unproject_pixel(d.u, d.v, d.median_depth, &f.intrinsics, &pose).unwrap();
                let truth = s.products.iter().find(|q| q.label == d.label).unwrap();
                assert!(WorldPoint::new(p[0], p[1]).distance(truth.position()) < 0.3);
                n += 1;
                blurry += (d.sharpness == Sharpness::Blurry) as usize;
            }
        }
        assert!(n > 300, "{n}");
        let frac = blurry as f64 / n as f64;
        assert!((0.05..0.15).contains(&frac), "{frac}");
    }

    #[test]
    fn unique_labels_are_unique() {
        let s = SyntheticStore::generate(&SyntheticConfig { unique_labels: true, ..Default::default() }).unwrap();
        let sig: BTreeSet<_> =
            s.products.iter().map(|p| crate::localization::label_entry(&p.label).unwrap()).collect();
        assert_eq!(sig.len(), s.products.len());
    }

    #[test]
    fn mirror_fixture_is_symmetric() {
        let (g, ps, _) = mirrored_aisles();
        assert_eq!(g.width() % 10, 0);
        let w = g.width() as i32;
        for r in 0..g.height() as i32 {
            for c in 0..w {
                assert_eq!(g.get(GridPoint::new(c, r)), g.get(GridPoint::new(w - 1 - c, r)));
            }
        }
        for p in ps.iter().filter(|p| p.product_id.starts_with('t')) {
            let m = ps.iter().find(|q| q.product_id == format!("m{}", &p.product_id[1..])).unwrap();
            assert_eq!(m.label, p.label);
            assert_eq!(g.cell_of(m.position()).col, w - 1 - g.cell_of(p.position()).col);
            assert_eq!(m.y, p.y);
        }
    }
}
