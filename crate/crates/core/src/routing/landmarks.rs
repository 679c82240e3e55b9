use crate::ingest::ProductRecord;
use crate::spatial::{line_of_sight, OccupancyGrid, Side, WorldPoint};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRef {
    pub category: String,
    pub product_id: String,
    pub side: Side,
    /// Meters from the route start to the sample point that saw it.
    #[serde(rename = "along_m")]
    pub along: f64,
    /// Index of the path leg (pair of consecutive route nodes).
    pub leg: usize,
    /// Index into the route's segment list, filled in by the planner.
    #[serde(default)]
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandmarkConfig {
    /// Meters.
    pub radius: f64,
    /// Also sample long legs at evenly spaced interior points.
    pub dense_sampling: bool,
    /// Legs longer than this are densely sampled.
    pub dense_min_leg: f64,
    pub dense_spacing: f64,
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        Self { radius: 2.5, dense_sampling: true, dense_min_leg: 5.0, dense_spacing: 2.5 }
    }
}

/// Fractions along a leg where landmarks are sampled. The set is
/// symmetric under reversal so walking back sees the same points.
pub fn sample_fractions(leg_length: f64, cfg: &LandmarkConfig) -> Vec<f64> {
    let mut f = vec![0.5];
    if cfg.dense_sampling && leg_length > cfg.dense_min_leg && cfg.dense_spacing > 0.0 {
        let n = (leg_length / cfg.dense_spacing).ceil() as usize;
        f.extend((1..n).map(|j| j as f64 / n as f64));
    }
    f.sort_by(f64::total_cmp);
    f.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    f
}

/// Text used to deduplicate and name a landmark.
pub fn landmark_category(p: &ProductRecord) -> String {
    let c = p.label.category.trim();
    if c.is_empty() { p.label.name.trim().to_lowercase() } else { c.to_lowercase() }
}

/// Products near the path that the walker can actually see, one per
/// category, ordered by first sighting.
pub fn collect_landmarks(
    grid: &OccupancyGrid,
    products: &[ProductRecord],
    points: &[WorldPoint],
    cfg: &LandmarkConfig,
    exclude: Option<&str>,
) -> Vec<LandmarkRef> {
    let mut best: BTreeMap<String, (f64, f64, LandmarkRef)> = BTreeMap::new();
    let mut start_of_leg = 0.0;
    for (leg, w) in points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(b);
        if len == 0.0 {
            continue;
        }
        let heading = b.sub(a);
        for f in sample_fractions(len, cfg) {
            let s = a.add(heading.scale(f));
            let sc = grid.cell_of(s);
            for p in products {
                if Some(p.product_id.as_str()) == exclude {
                    continue;
                }
                let pos = p.position();
                let d = pos.distance(s);
                if d > cfg.radius || !line_of_sight(grid, sc, grid.cell_of(pos)) {
                    continue;
                }
                let along = start_of_leg + f * len;
                let category = landmark_category(p);
                let cand = LandmarkRef {
                    category: category.clone(),
                    product_id: p.product_id.clone(),
                    side: Side::of(heading, pos.sub(s)),
                    along,
                    leg,
                    segment: 0,
                };
                let replace = match best.get(&category) {
                    None => true,
                    Some((ba, bd, bl)) => (along, d, &cand.product_id) < (*ba, *bd, &bl.product_id),
                };
                if replace {
                    best.insert(category, (along, d, cand));
                }
            }
        }
        start_of_leg += len;
    }
    let mut out: Vec<LandmarkRef> = best.into_values().map(|(_, _, l)| l).collect();
    out.sort_by(|x, y| x.along.total_cmp(&y.along).then_with(|| x.category.cmp(&y.category)));
    out
}
