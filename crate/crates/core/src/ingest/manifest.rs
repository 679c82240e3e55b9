//! `frames.jsonl`, `cloud.xyz` and `products.json`.

use super::{
    camera::{unproject_pixel, CameraIntrinsics, FramePose},
    keyframes::{select_keyframes, EmbeddingVector},
    occupancy::PointCloud,
    refine::refine_position,
    IngestError, ProductLabel, ProductRecord, Sharpness,
};
use crate::spatial::{OccupancyGrid, WorldPoint};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    /// Row-major 3x3 world-from-camera rotation.
    #[serde(rename = "R")]
    pub rotation: [f64; 9],
    pub t: [f64; 3],
}

impl PoseRecord {
    pub fn from_pose(pose: &FramePose) -> Self {
        let r = pose.rotation;
        Self {
            rotation: [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]],
            t: pose.translation,
        }
    }

    pub fn to_pose(&self, timestamp: f64) -> Result<FramePose, IngestError> {
        let r = self.rotation;
        FramePose::new([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]], self.t, timestamp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub u: f64,
    pub v: f64,
    pub median_depth: f64,
    pub label: ProductLabel,
    pub sharpness: Sharpness,
}

/// One line of `frames.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    pub timestamp: f64,
    pub intrinsics: CameraIntrinsics,
    pub pose: PoseRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f32>>,
    #[serde(default)]
    pub detections: Vec<DetectionRecord>,
}

impl FrameRecord {
    pub fn camera_xy(&self) -> WorldPoint {
        WorldPoint::new(self.pose.t[0], self.pose.t[1])
    }
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameRecord>, IngestError> {
    let file = std::fs::File::open(path)?;
    let mut frames = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: FrameRecord = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn write_frames(path: &Path, frames: &[FrameRecord]) -> Result<(), IngestError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for f in frames {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cloud(path: &Path) -> Result<PointCloud, IngestError> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e: std::num::ParseFloatError| IngestError::Parse {
                path: path.display().to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
        if vals.len() != 3 {
            return Err(IngestError::Parse {
                path: path.display().to_string(),
                line: n + 1,
                message: format!("expected 3 values, found {}", vals.len()),
            });
        }
        points.push([vals[0], vals[1], vals[2]]);
    }
    Ok(PointCloud::new(points))
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<(), IngestError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in &cloud.points {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductsFile {
    pub schema_version: u32,
    pub products: Vec<ProductRecord>,
}

pub fn write_products(path: &Path, products: &[ProductRecord]) -> Result<(), IngestError> {
    let file = ProductsFile { schema_version: SCHEMA_VERSION, products: products.to_vec() };
    std::fs::write(path, serde_json::to_vec_pretty(&file)?)?;
    Ok(())
}

pub fn read_products(path: &Path) -> Result<Vec<ProductRecord>, IngestError> {
    let file: ProductsFile = serde_json::from_slice(&std::fs::read(path)?)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IngestError::SchemaVersion { expected: SCHEMA_VERSION, found: file.schema_version });
    }
    Ok(file.products)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    pub keyframe_threshold: f64,
    /// Forward push cap for refinement, meters.
    pub max_push: f64,
    /// Identical labels closer than this collapse to one product, meters.
    pub dedupe_radius: f64,
    pub keep_blurry: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { keyframe_threshold: 0.85, max_push: 1.0, dedupe_radius: 0.5, keep_blurry: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub frames: usize,
    pub keyframes: Vec<usize>,
    pub detections_seen: usize,
    pub blurry_dropped: usize,
    pub duplicates_merged: usize,
    pub refined: usize,
    pub flagged: usize,
}

/// Keyframe selection, unprojection and refinement over a whole manifest.
///
/// When every frame carries an embedding only keyframes contribute
/// detections; when none do, every frame does.
pub fn extract_products(
    frames: &[FrameRecord],
    grid: &OccupancyGrid,
    cfg: &ExtractionConfig,
) -> Result<(Vec<ProductRecord>, ExtractionReport), IngestError> {
    let embedded = frames.iter().filter(|f| f.embedding.is_some()).count();
    let keyframes = if frames.is_empty() {
        Vec::new()
    } else if embedded == frames.len() {
        let embs: Vec<EmbeddingVector> =
            frames.iter().map(|f| EmbeddingVector::new(f.embedding.clone().unwrap_or_default())).collect();
        select_keyframes(&embs, cfg.keyframe_threshold)?
    } else if embedded == 0 {
        (0..frames.len()).collect()
    } else {
        return Err(IngestError::MixedEmbeddings);
    };

    let mut report = ExtractionReport { frames: frames.len(), keyframes: keyframes.clone(), ..Default::default() };
    let mut products: Vec<ProductRecord> = Vec::new();
    for &fi in &keyframes {
        let frame = &frames[fi];
        let pose = frame.pose.to_pose(frame.timestamp)?;
        for det in &frame.detections {
            report.detections_seen += 1;
            if det.sharpness == Sharpness::Blurry && !cfg.keep_blurry {
                report.blurry_dropped += 1;
                continue;
            }
            if det.label.name.trim().is_empty() {
                return Err(IngestError::InvalidParameter(format!("frame {}: empty product name", frame.frame_id)));
            }
            if !frame.intrinsics.contains_pixel(det.u, det.v) {
                return Err(IngestError::InvalidParameter(format!(
                    "frame {}: pixel ({}, {}) outside the image",
                    frame.frame_id, det.u, det.v
                )));
            }
            let p = unproject_pixel(det.u, det.v, det.median_depth, &frame.intrinsics, &pose)?;
            let raw = WorldPoint::new(p[0], p[1]);
            let (position, refined) = match refine_position(grid, frame.camera_xy(), raw, cfg.max_push) {
                Ok(r) => {
                    report.flagged += r.flagged() as usize;
                    (r.position, r.moved())
                }
                Err(_) => {
                    report.flagged += 1;
                    (raw, false)
                }
            };
            if products
                .iter()
                .any(|q| q.label == det.label && q.position().distance(position) < cfg.dedupe_radius)
            {
                report.duplicates_merged += 1;
                continue;
            }
            report.refined += refined as usize;
            products.push(ProductRecord {
                product_id: format!("p{:04}", products.len()),
                label: det.label.clone(),
                x: position.x,
                y: position.y,
                refined,
                frame_id: frame.frame_id.clone(),
            });
        }
    }
    Ok((products, report))
}
