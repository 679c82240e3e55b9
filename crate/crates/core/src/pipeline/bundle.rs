use super::{PipelineConfig, PipelineError};
use crate::ingest::{read_products, ProductRecord};
use crate::localization::{HashedBagOfTokens, PoseMap};
use crate::routing::{route, RoutePlan, RouteTarget};
use crate::search::{HttpLanguageModelClient, SearchIndex};
use crate::spatial::{OccupancyGrid, WorldPoint};
use crate::topology::TopologyGraph;
use crate::zones::{ZoneOverlay, ZoneRules, ZonesFile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub const OCCUPANCY_PGM: &str = "occupancy.pgm";
pub const OCCUPANCY_META: &str = "occupancy.json";
pub const KEYFRAMES_FILE: &str = "keyframes.json";
pub const PRODUCTS_FILE: &str = "products.json";
pub const TOPOLOGY_FILE: &str = "topology.json";
pub const ZONES_FILE: &str = "zones.json";
pub const OVERLAY_PGM: &str = "overlay.pgm";
pub const OVERLAY_META: &str = "overlay.json";
pub const ZONE_RULES_FILE: &str = "zone_rules.json";
pub const POSEMAP_BIN: &str = "posemap.bin";
pub const POSEMAP_JSON: &str = "posemap.json";
pub const CONFIG_FILE: &str = "pipeline.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

const ARTIFACTS: &[&str] = &[
    OCCUPANCY_PGM,
    OCCUPANCY_META,
    KEYFRAMES_FILE,
    PRODUCTS_FILE,
    TOPOLOGY_FILE,
    ZONES_FILE,
    OVERLAY_PGM,
    OVERLAY_META,
    ZONE_RULES_FILE,
    POSEMAP_BIN,
    POSEMAP_JSON,
    CONFIG_FILE,
];

/// What `serve` cannot run without.
const REQUIRED: &[&str] = &[
    OCCUPANCY_PGM,
    OCCUPANCY_META,
    PRODUCTS_FILE,
    TOPOLOGY_FILE,
    ZONES_FILE,
    OVERLAY_PGM,
    OVERLAY_META,
    ZONE_RULES_FILE,
    POSEMAP_BIN,
    CONFIG_FILE,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDigest {
    pub sha256: String,
    pub bytes: u64,
}

/// `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifacts: BTreeMap<String, ArtifactDigest>,
    /// sha256 over the `name sha256` lines of every artifact, in name order.
    pub digest: String,
}

impl Manifest {
    fn seal(artifacts: BTreeMap<String, ArtifactDigest>) -> Self {
        let mut h = Sha256::new();
        for (name, a) in &artifacts {
            h.update(format!("{name} {}\n", a.sha256).as_bytes());
        }
        Self { schema_version: crate::SCHEMA_VERSION, artifacts, digest: hex::encode(h.finalize()) }
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact(path.display().to_string()));
        }
        let m: Manifest = serde_json::from_slice(&std::fs::read(&path)?)?;
        if m.schema_version != crate::SCHEMA_VERSION {
            return Err(PipelineError::SchemaVersion { expected: crate::SCHEMA_VERSION, found: m.schema_version });
        }
        Ok(m)
    }

    /// Recomputes every listed digest against the files in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<(), PipelineError> {
        for (name, a) in &self.artifacts {
            let path = dir.join(name);
            if !path.exists() {
                return Err(PipelineError::MissingArtifact(path.display().to_string()));
            }
            if file_digest(&path)? != *a {
                return Err(PipelineError::DigestMismatch(name.clone()));
            }
        }
        if Manifest::seal(self.artifacts.clone()).digest != self.digest {
            return Err(PipelineError::DigestMismatch(MANIFEST_FILE.into()));
        }
        Ok(())
    }
}

pub fn file_digest(path: &Path) -> Result<ArtifactDigest, PipelineError> {
    let bytes = std::fs::read(path)?;
    Ok(ArtifactDigest { sha256: hex::encode(Sha256::digest(&bytes)), bytes: bytes.len() as u64 })
}

/// Digests whichever known artifacts exist in `dir` and writes the manifest.
pub fn write_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let mut artifacts = BTreeMap::new();
    for name in ARTIFACTS {
        let p = dir.join(name);
        if p.exists() {
            artifacts.insert((*name).to_owned(), file_digest(&p)?);
        }
    }
    let m = Manifest::seal(artifacts);
    std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&m)?)?;
    Ok(m)
}

/// A verified, fully loaded bundle. Immutable once built.
pub struct MapBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub config: PipelineConfig,
    pub grid: OccupancyGrid,
    pub products: Vec<ProductRecord>,
    pub topology: TopologyGraph,
    pub zones: ZonesFile,
    /// `zones.json` exactly as stored.
    pub zones_json: Vec<u8>,
    pub overlay: ZoneOverlay,
    pub rules: ZoneRules,
    pub posemap: PoseMap,
    pub provider: HashedBagOfTokens,
    pub search: SearchIndex,
}

impl std::fmt::Debug for MapBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapBundle").field("dir", &self.dir).field("digest", &self.manifest.digest).finish()
    }
}

impl MapBundle {
    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let manifest = Manifest::load(dir)?;
        for name in REQUIRED {
            if !manifest.artifacts.contains_key(*name) {
                return Err(PipelineError::MissingArtifact(dir.join(name).display().to_string()));
            }
        }
        manifest.verify(dir)?;
        let text = std::fs::read_to_string(dir.join(CONFIG_FILE))?;
        let config = PipelineConfig::from_toml(&text, &[])?;
        let grid = OccupancyGrid::load(&dir.join(OCCUPANCY_PGM), &dir.join(OCCUPANCY_META))?;
        let products = read_products(&dir.join(PRODUCTS_FILE))?;
        let topology = TopologyGraph::load(&dir.join(TOPOLOGY_FILE))?;
        let zones_json = std::fs::read(dir.join(ZONES_FILE))?;
        let zones = ZonesFile::load(&dir.join(ZONES_FILE))?;
        let overlay = ZoneOverlay::load(&dir.join(OVERLAY_PGM), &dir.join(OVERLAY_META))?;
        let rules = ZoneRules::load(&dir.join(ZONE_RULES_FILE))?;
        let posemap = PoseMap::load(&dir.join(POSEMAP_BIN))?;
        let provider = config.posemap.embedding.provider()?;
        let search = SearchIndex::new(&products, &zones, &rules, config.search.clone())?;
        Ok(Self {
            dir: dir.to_owned(),
            manifest,
            config,
            grid,
            products,
            topology,
            zones,
            zones_json,
            overlay,
            rules,
            posemap,
            provider,
            search,
        })
    }

    pub fn product(&self, id: &str) -> Option<&ProductRecord> {
        self.products.iter().find(|p| p.product_id == id)
    }

    /// Route target for a zone name (case-insensitive), at its anchor.
    pub fn zone_target(&self, zone: &str) -> Option<RouteTarget> {
        self.zones
            .anchor(zone)
            .map(|a| RouteTarget::Point { label: a.zone.clone(), position: a.position() })
    }

    pub fn route(&self, from: WorldPoint, target: &RouteTarget) -> Result<RoutePlan, PipelineError> {
        Ok(route(&self.topology, &self.grid, &self.products, from, target, &self.config.routing)?)
    }

    /// The configured external client, if any.
    pub fn language_client(&self) -> Option<HttpLanguageModelClient> {
        let lm = &self.config.language_model;
        let url = lm.url.as_deref()?;
        HttpLanguageModelClient::from_env(url, &lm.api_key_env, Duration::from_millis(lm.timeout_ms)).ok()
    }
}
