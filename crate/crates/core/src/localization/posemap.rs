use super::embed::cosine;
use super::raycast::ProductIndex;
use super::{build_signature, EmbeddingProvider, LocalizationError, PoseGridSpec};
use crate::ingest::{ProductLabel, ProductRecord};
use crate::spatial::{OccupancyGrid, Pose2D, WorldPoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const POSEMAP_MAGIC: &[u8; 4] = b"PMAP";
pub const POSEMAP_VERSION: u32 = 1;

/// One discrete pose: a pose-grid cell and an orientation bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEntry {
    pub col: u32,
    pub row: u32,
    pub bin: u32,
    pub pose: Pose2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseHypothesis {
    pub rank: usize,
    pub score: f64,
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub theta: f64,
    pub col: u32,
    pub row: u32,
    pub bin: u32,
}

impl PoseHypothesis {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(WorldPoint::new(self.x, self.y), self.theta)
    }
}

/// Cached expected semantics for every free pose, in (row, col, bin) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseMap {
    pub spec: PoseGridSpec,
    pub provider_id: String,
    pub dimension: usize,
    /// World position of pose cell (0, 0)'s lower-left corner.
    pub origin: WorldPoint,
    pub poses: Vec<PoseEntry>,
    /// Row-major, `dimension` values per pose.
    pub embeddings: Vec<f32>,
    /// Signature text per pose; empty after loading the binary form.
    pub signatures: Vec<String>,
}

#[derive(Serialize)]
struct DebugPose<'a> {
    col: u32,
    row: u32,
    bin: u32,
    x: f64,
    y: f64,
    theta: f64,
    signature: Option<&'a str>,
    sentinel: bool,
}

#[derive(Serialize)]
struct DebugMap<'a> {
    schema_version: u32,
    provider_id: &'a str,
    dimension: usize,
    spec: &'a PoseGridSpec,
    origin: [f64; 2],
    poses: Vec<DebugPose<'a>>,
}

impl PoseMap {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn embedding(&self, i: usize) -> &[f32] {
        &self.embeddings[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn is_sentinel(&self, i: usize) -> bool {
        self.embedding(i).iter().all(|v| *v == 0.0)
    }

    pub fn sentinel_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_sentinel(i)).count()
    }

    /// Index of the pose at a pose cell and bin.
    pub fn find(&self, col: u32, row: u32, bin: u32) -> Option<usize> {
        self.poses
            .binary_search_by(|p| (p.row, p.col, p.bin).cmp(&(row, col, bin)))
            .ok()
    }

    /// Pose cell and bin nearest to a continuous pose.
    pub fn cell_of(&self, pose: &Pose2D) -> (u32, u32, u32) {
        let col = ((pose.position.x - self.origin.x) / self.spec.cell_size).floor().max(0.0) as u32;
        let row = ((pose.position.y - self.origin.y) / self.spec.cell_size).floor().max(0.0) as u32;
        let step = std::f64::consts::TAU / self.spec.orientation_bins as f64;
        let bin = ((pose.heading / step).round() as i64).rem_euclid(self.spec.orientation_bins as i64) as u32;
        (col, row, bin)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64 + self.len() * (3 + self.dimension) * 4);
        b.extend_from_slice(POSEMAP_MAGIC);
        b.extend_from_slice(&POSEMAP_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.provider_id.len() as u32).to_le_bytes());
        b.extend_from_slice(self.provider_id.as_bytes());
        b.extend_from_slice(&(self.dimension as u32).to_le_bytes());
        b.extend_from_slice(&self.spec.cell_size.to_le_bytes());
        b.extend_from_slice(&self.spec.orientation_bins.to_le_bytes());
        b.extend_from_slice(&self.spec.fov.to_le_bytes());
        b.extend_from_slice(&self.spec.range.to_le_bytes());
        b.extend_from_slice(&self.spec.rays.to_le_bytes());
        b.extend_from_slice(&self.origin.x.to_le_bytes());
        b.extend_from_slice(&self.origin.y.to_le_bytes());
        b.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (i, p) in self.poses.iter().enumerate() {
            for v in [p.pose.position.x as f32, p.pose.position.y as f32, p.pose.heading as f32] {
                b.extend_from_slice(&v.to_le_bytes());
            }
            for v in self.embedding(i) {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LocalizationError> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != POSEMAP_MAGIC {
            return Err(LocalizationError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != POSEMAP_VERSION {
            return Err(LocalizationError::Format(format!("unsupported version {version}")));
        }
        let id_len = r.u32()? as usize;
        let provider_id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| LocalizationError::Format("provider id is not utf-8".into()))?;
        let dimension = r.u32()? as usize;
        let spec = PoseGridSpec {
            cell_size: r.f64()?,
            orientation_bins: r.u32()?,
            fov: r.f64()?,
            range: r.f64()?,
            rays: r.u32()?,
        };
        spec.validate().map_err(|e| LocalizationError::Format(e.to_string()))?;
        let origin = WorldPoint::new(r.f64()?, r.f64()?);
        let count = r.u64()? as usize;
        let record = (3 + dimension) * 4;
        if r.bytes.len() - r.at != count.saturating_mul(record) {
            return Err(LocalizationError::Format("record section length mismatch".into()));
        }
        let mut map = PoseMap {
            spec,
            provider_id,
            dimension,
            origin,
            poses: Vec::with_capacity(count),
            embeddings: Vec::with_capacity(count * dimension),
            signatures: Vec::new(),
        };
        for _ in 0..count {
            let (x, y, t) = (r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
            // stored headings are already wrapped; re-wrapping the f32 value could flip -pi to pi
            let (col, row, bin) = map.cell_of(&Pose2D { position: WorldPoint::new(x, y), heading: t });
            // rebuild the exact f64 pose: f32 centers can cross a grid-cell boundary
            let pose = pose_at(origin, &spec, col, row, bin);
            map.poses.push(PoseEntry { col, row, bin, pose });
            for _ in 0..dimension {
                map.embeddings.push(r.f32()?);
            }
        }
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<(), LocalizationError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LocalizationError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Human-readable dump without the embedding values.
    pub fn save_debug_json(&self, path: &Path) -> Result<(), LocalizationError> {
        let poses = self
            .poses
            .iter()
            .enumerate()
            .map(|(i, p)| DebugPose {
                col: p.col,
                row: p.row,
                bin: p.bin,
                x: p.pose.position.x,
                y: p.pose.position.y,
                theta: p.pose.heading,
                signature: self.signatures.get(i).map(String::as_str),
                sentinel: self.is_sentinel(i),
            })
            .collect();
        let doc = DebugMap {
            schema_version: crate::SCHEMA_VERSION,
            provider_id: &self.provider_id,
            dimension: self.dimension,
            spec: &self.spec,
            origin: [self.origin.x, self.origin.y],
            poses,
        };
        std::fs::write(path, serde_json::to_vec_pretty(&doc)?)?;
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LocalizationError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LocalizationError::Format("truncated".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], LocalizationError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, LocalizationError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, LocalizationError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f32(&mut self) -> Result<f32, LocalizationError> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, LocalizationError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

fn pose_at(origin: WorldPoint, spec: &PoseGridSpec, col: u32, row: u32, bin: u32) -> Pose2D {
    let center = WorldPoint::new(
        origin.x + (col as f64 + 0.5) * spec.cell_size,
        origin.y + (row as f64 + 0.5) * spec.cell_size,
    );
    Pose2D::new(center, spec.bin_heading(bin))
}

/// Raycasts, signs and embeds every free pose cell in every orientation
/// bin. Work is spread over the current rayon pool; output order and
/// bytes do not depend on the thread count.
pub fn build_pose_map(
    grid: &OccupancyGrid,
    products: &[ProductRecord],
    spec: &PoseGridSpec,
    provider: &dyn EmbeddingProvider,
) -> Result<PoseMap, LocalizationError> {
    spec.validate()?;
    let origin = grid.origin();
    let extent_x = grid.width() as f64 * grid.resolution();
    let extent_y = grid.height() as f64 * grid.resolution();
    let cols = (extent_x / spec.cell_size - 1e-9).ceil().max(0.0) as u32;
    let rows = (extent_y / spec.cell_size - 1e-9).ceil().max(0.0) as u32;
    let mut poses = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let center = pose_at(origin, spec, col, row, 0).position;
            if !grid.is_free(grid.cell_of(center)) {
                continue;
            }
            for bin in 0..spec.orientation_bins {
                poses.push(PoseEntry { col, row, bin, pose: pose_at(origin, spec, col, row, bin) });
            }
        }
    }
    if poses.is_empty() {
        return Err(LocalizationError::NoFreeSpace);
    }
    let index = ProductIndex::new(grid, products);
    let dimension = provider.dimension();
    let results = poses
        .par_iter()
        .map(|p| {
            let seen = index.visible(grid, &p.pose, spec)?;
            let sig = build_signature(seen.into_iter().map(|i| &index.product(i).label));
            let v = provider.embed(&sig)?;
            if v.len() != dimension {
                return Err(LocalizationError::ProviderFailure(format!(
                    "expected {dimension} values, got {}",
                    v.len()
                )));
            }
            Ok((sig.text, v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut embeddings = Vec::with_capacity(poses.len() * dimension);
    let mut signatures = Vec::with_capacity(poses.len());
    for (s, v) in results {
        signatures.push(s);
        embeddings.extend(v);
    }
    Ok(PoseMap { spec: *spec, provider_id: provider.provider_id(), dimension, origin, poses, embeddings, signatures })
}

/// Top-`k` poses for a labeled observation. Sentinel poses are never
/// returned; equal scores keep (row, col, bin) order.
pub fn localize(
    query: &[ProductLabel],
    map: &PoseMap,
    provider: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<PoseHypothesis>, LocalizationError> {
    if k == 0 {
        return Err(LocalizationError::InvalidParameter("k must be at least 1".into()));
    }
    if query.is_empty() {
        return Err(LocalizationError::EmptyQuery);
    }
    let found = provider.provider_id();
    if found != map.provider_id {
        return Err(LocalizationError::ProviderMismatch { expected: map.provider_id.clone(), found });
    }
    let sig = build_signature(query);
    if sig.is_empty() {
        return Err(LocalizationError::EmptyQuery);
    }
    let q = provider.embed(&sig)?;
    if q.len() != map.dimension {
        return Err(LocalizationError::ProviderFailure("query dimension differs from map".into()));
    }
    let mut scored: Vec<(f64, usize)> =
        (0..map.len()).filter_map(|i| cosine(&q, map.embedding(i)).map(|s| (s, i))).collect();
    if scored.is_empty() {
        return Err(LocalizationError::UnlocalizableMap);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(r, (score, i))| {
            let p = &map.poses[i];
            PoseHypothesis {
                rank: r + 1,
                score,
                x: p.pose.position.x,
                y: p.pose.position.y,
                theta: p.pose.heading,
                col: p.col,
                row: p.row,
                bin: p.bin,
            }
        })
        .collect())
}
