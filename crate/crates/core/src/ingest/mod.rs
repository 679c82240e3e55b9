//! Scan ingestion: manifest parsing, height-slice occupancy, keyframe
//! filtering, depth unprojection and shelf-face refinement of product
//! positions.

mod camera;
mod keyframes;
mod manifest;
mod occupancy;
mod refine;

pub use camera::{project, unproject, unproject_pixel, CameraIntrinsics, FramePose, Point3};
pub use keyframes::{cosine_similarity, select_keyframes, EmbeddingVector};
pub use manifest::{
    extract_products, read_cloud, read_frames, read_products, write_cloud, write_frames, write_products,
    DetectionRecord, ExtractionConfig, ExtractionReport, FrameRecord, PoseRecord, ProductsFile,
};
pub use occupancy::{build_occupancy, OccupancyConfig, PointCloud};
pub use refine::{refine_position, RefineOutcome, Refinement};

use crate::spatial::{SpatialError, WorldPoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("embedding dimension mismatch: expected {expected}, found {found} at index {index}")]
    DimensionMismatch { expected: usize, found: usize, index: usize },
    #[error("singular intrinsics: fx and fy must be non-zero")]
    SingularIntrinsics,
    #[error("invalid depth {0}: must be > 0")]
    InvalidDepth(f64),
    #[error("rotation is not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),
    #[error("point lies behind the camera")]
    BehindCamera,
    #[error("camera cell is not free space")]
    CameraBlocked,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frames mix embedded and non-embedded records")]
    MixedEmbeddings,
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct ProductLabel {
    pub name: String,
    #[serde(default)]
    pub brand: String,
    #[serde(default)]
    pub packaging_type: String,
    #[serde(default)]
    pub category: String,
}

impl ProductLabel {
    pub fn new(name: &str, brand: &str, packaging_type: &str, category: &str) -> Self {
        Self {
            name: name.to_owned(),
            brand: brand.to_owned(),
            packaging_type: packaging_type.to_owned(),
            category: category.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharpness {
    Sharp,
    Blurry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_id: String,
    pub pixel_u: f64,
    pub pixel_v: f64,
    pub median_depth: f64,
    pub label: ProductLabel,
    pub sharpness: Sharpness,
}

/// A labeled product anchored in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_id: String,
    pub label: ProductLabel,
    #[serde(rename = "world_x")]
    pub x: f64,
    #[serde(rename = "world_y")]
    pub y: f64,
    pub refined: bool,
    pub frame_id: String,
}

impl ProductRecord {
    pub fn position(&self) -> WorldPoint {
        WorldPoint::new(self.x, self.y)
    }
}
