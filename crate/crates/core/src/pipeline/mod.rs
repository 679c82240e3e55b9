//! Batch pipeline: one TOML config, one stage per artifact, and a bundle
//! directory tied together by a digest manifest.

mod bundle;
mod config;

pub use bundle::{
    file_digest, write_manifest, ArtifactDigest, Manifest, MapBundle, CONFIG_FILE, KEYFRAMES_FILE, MANIFEST_FILE,
    OCCUPANCY_META, OCCUPANCY_PGM, OVERLAY_META, OVERLAY_PGM, POSEMAP_BIN, POSEMAP_JSON, PRODUCTS_FILE,
    TOPOLOGY_FILE, ZONES_FILE, ZONE_RULES_FILE,
};
pub use config::{
    apply_override, EmbeddingConfig, InputConfig, LanguageModelConfig, PipelineConfig, PoseMapConfig, ZonesConfig,
};

use crate::ingest::{
    build_occupancy, extract_products, read_cloud, read_frames, read_products, write_products, ExtractionReport,
    IngestError, ProductRecord,
};
use crate::localization::{build_pose_map, LocalizationError, PoseMap};
use crate::routing::RoutingError;
use crate::search::SearchError;
use crate::spatial::{OccupancyGrid, SpatialError};
use crate::synthetic::{SyntheticStore, CLOUD_FILE, FRAMES_FILE};
use crate::topology::{build_topology, TopologyError, TopologyGraph};
use crate::zones::{assign_zones, vote_overlay, ZoneError, ZoneOverlay, ZonesFile};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing artifact {0}")]
    MissingArtifact(String),
    #[error("digest mismatch for {0}")]
    DigestMismatch(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Zones(#[from] ZoneError),
    #[error(transparent)]
    Localization(#[from] LocalizationError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `keyframes.json`: which frames contributed detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframesFile {
    pub schema_version: u32,
    pub frame_ids: Vec<String>,
    pub report: ExtractionReport,
}

fn out(cfg: &PipelineConfig, name: &str) -> std::path::PathBuf {
    cfg.output.join(name)
}

pub fn load_grid(dir: &Path) -> Result<OccupancyGrid, PipelineError> {
    let pgm = dir.join(OCCUPANCY_PGM);
    if !pgm.exists() {
        return Err(PipelineError::MissingArtifact(pgm.display().to_string()));
    }
    Ok(OccupancyGrid::load(&pgm, &dir.join(OCCUPANCY_META))?)
}

/// Products from the bundle, or none if extraction has not run.
pub fn load_products_or_empty(dir: &Path) -> Result<Vec<ProductRecord>, PipelineError> {
    let p = dir.join(PRODUCTS_FILE);
    if p.exists() {
        Ok(read_products(&p)?)
    } else {
        Ok(Vec::new())
    }
}

fn require_products(dir: &Path) -> Result<Vec<ProductRecord>, PipelineError> {
    let p = dir.join(PRODUCTS_FILE);
    if !p.exists() {
        return Err(PipelineError::MissingArtifact(p.display().to_string()));
    }
    Ok(read_products(&p)?)
}

pub fn stage_occupancy(cfg: &PipelineConfig) -> Result<OccupancyGrid, PipelineError> {
    let frames = read_frames(&cfg.input.frames)?;
    let cloud = read_cloud(&cfg.input.cloud)?;
    let viewpoints: Vec<_> = frames.iter().map(|f| f.camera_xy()).collect();
    let grid = build_occupancy(&cloud, &viewpoints, &cfg.occupancy)?;
    std::fs::create_dir_all(&cfg.output)?;
    grid.save(&out(cfg, OCCUPANCY_PGM), &out(cfg, OCCUPANCY_META))?;
    write_manifest(&cfg.output)?;
    Ok(grid)
}

/// Keyframe selection plus product extraction from the kept frames.
pub fn stage_keyframes(cfg: &PipelineConfig) -> Result<(Vec<ProductRecord>, ExtractionReport), PipelineError> {
    let frames = read_frames(&cfg.input.frames)?;
    let grid = load_grid(&cfg.output)?;
    let (products, report) = extract_products(&frames, &grid, &cfg.extraction)?;
    let file = KeyframesFile {
        schema_version: crate::SCHEMA_VERSION,
        frame_ids: report.keyframes.iter().map(|&i| frames[i].frame_id.clone()).collect(),
        report: report.clone(),
    };
    std::fs::write(out(cfg, KEYFRAMES_FILE), serde_json::to_vec_pretty(&file)?)?;
    write_products(&out(cfg, PRODUCTS_FILE), &products)?;
    write_manifest(&cfg.output)?;
    Ok((products, report))
}

pub fn stage_topology(cfg: &PipelineConfig) -> Result<TopologyGraph, PipelineError> {
    let grid = load_grid(&cfg.output)?;
    let products = load_products_or_empty(&cfg.output)?;
    let graph = build_topology(&grid, &products, &cfg.topology)?;
    graph.save(&out(cfg, TOPOLOGY_FILE))?;
    write_manifest(&cfg.output)?;
    Ok(graph)
}

pub fn stage_zones(cfg: &PipelineConfig) -> Result<(ZonesFile, ZoneOverlay), PipelineError> {
    let grid = load_grid(&cfg.output)?;
    let products = require_products(&cfg.output)?;
    let rules = cfg.zones.rules()?;
    let catalog = assign_zones(&products, &rules)?;
    let overlay = vote_overlay(&grid, &catalog, &products, &cfg.zones.vote)?;
    let zones = ZonesFile::new(&catalog, &overlay);
    zones.save(&out(cfg, ZONES_FILE))?;
    overlay.save(&out(cfg, OVERLAY_PGM), &out(cfg, OVERLAY_META))?;
    rules.save(&out(cfg, ZONE_RULES_FILE))?;
    write_manifest(&cfg.output)?;
    Ok((zones, overlay))
}

pub fn stage_posemap(cfg: &PipelineConfig) -> Result<PoseMap, PipelineError> {
    let grid = load_grid(&cfg.output)?;
    let products = require_products(&cfg.output)?;
    let provider = cfg.posemap.embedding.provider()?;
    let map = build_pose_map(&grid, &products, &cfg.posemap.grid, &provider)?;
    map.save(&out(cfg, POSEMAP_BIN))?;
    map.save_debug_json(&out(cfg, POSEMAP_JSON))?;
    write_manifest(&cfg.output)?;
    Ok(map)
}

/// Every stage in order, then the resolved config and the manifest.
pub fn run_all(cfg: &PipelineConfig) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    stage_occupancy(cfg)?;
    stage_keyframes(cfg)?;
    stage_topology(cfg)?;
    stage_zones(cfg)?;
    stage_posemap(cfg)?;
    std::fs::write(out(cfg, CONFIG_FILE), cfg.bundle_toml()?)?;
    write_manifest(&cfg.output)
}

/// Writes a synthetic store's capture to `<out>/inputs` and builds the
/// bundle in `out` with `cfg`'s module settings.
pub fn run_synthetic(store: &SyntheticStore, cfg: &PipelineConfig, out: &Path) -> Result<Manifest, PipelineError> {
    let inputs = out.join("inputs");
    store.write_inputs(&inputs)?;
    let mut cfg = cfg.clone();
    cfg.input.frames = inputs.join(FRAMES_FILE);
    cfg.input.cloud = inputs.join(CLOUD_FILE);
    cfg.output = out.to_owned();
    run_all(&cfg)
}
