use super::PipelineError;
use crate::ingest::{ExtractionConfig, OccupancyConfig};
use crate::localization::{HashedBagOfTokens, PoseGridSpec, DEFAULT_DIMENSION, DEFAULT_SEED};
use crate::routing::RouteConfig;
use crate::search::{SearchConfig, DEFAULT_API_KEY_ENV};
use crate::topology::TopologyConfig;
use crate::zones::{VoteConfig, ZoneRules};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub frames: PathBuf,
    pub cloud: PathBuf,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { frames: "frames.jsonl".into(), cloud: "cloud.xyz".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZonesConfig {
    pub vote: VoteConfig,
    /// JSON rules file; the built-in grocery rules when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
}

impl ZonesConfig {
    pub fn rules(&self) -> Result<ZoneRules, PipelineError> {
        Ok(match &self.rules {
            Some(p) => ZoneRules::load(p)?,
            None => ZoneRules::grocery(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dimension: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { dimension: DEFAULT_DIMENSION, seed: DEFAULT_SEED }
    }
}

impl EmbeddingConfig {
    pub fn provider(&self) -> Result<HashedBagOfTokens, PipelineError> {
        Ok(HashedBagOfTokens::new(self.dimension, self.seed)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseMapConfig {
    pub grid: PoseGridSpec,
    pub embedding: EmbeddingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanguageModelConfig {
    /// Endpoint for query decomposition and matching; offline when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub timeout_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for LanguageModelConfig {
    fn default() -> Self {
        Self { url: None, timeout_ms: 3000, api_key_env: DEFAULT_API_KEY_ENV.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    /// Bundle directory.
    pub output: PathBuf,
    pub occupancy: OccupancyConfig,
    pub extraction: ExtractionConfig,
    pub topology: TopologyConfig,
    pub zones: ZonesConfig,
    pub posemap: PoseMapConfig,
    pub routing: RouteConfig,
    pub search: SearchConfig,
    pub language_model: LanguageModelConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputConfig::default(),
            output: "bundle".into(),
            occupancy: OccupancyConfig::default(),
            extraction: ExtractionConfig::default(),
            topology: TopologyConfig::default(),
            zones: ZonesConfig::default(),
            posemap: PoseMapConfig::default(),
            routing: RouteConfig::default(),
            search: SearchConfig::default(),
            language_model: LanguageModelConfig::default(),
        }
    }
}

/// Sets `dotted.key` in `table` to `value`, read as a TOML value when it
/// parses as one and as a plain string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), PipelineError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PipelineError::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("override {key:?} descends into a non-table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, PipelineError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: PipelineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (defaults when `None`); relative paths inside resolve
    /// against the file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, PipelineError> {
        let Some(path) = path else {
            return Self::from_toml("", overrides);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.frames);
        fix(&mut self.input.cloud);
        fix(&mut self.output);
        if let Some(r) = &mut self.zones.rules {
            fix(r);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.occupancy.validate()?;
        let e = &self.extraction;
        if !(e.keyframe_threshold > 0.0 && e.keyframe_threshold <= 1.0) {
            return bad("extraction.keyframe_threshold must be in (0, 1]".into());
        }
        if !(e.max_push >= 0.0 && e.max_push.is_finite()) || !(e.dedupe_radius >= 0.0 && e.dedupe_radius.is_finite()) {
            return bad("extraction distances must be finite and non-negative".into());
        }
        self.topology.validate()?;
        if self.zones.vote.k == 0 || !(self.zones.vote.epsilon > 0.0) {
            return bad("zones.vote needs k >= 1 and epsilon > 0".into());
        }
        self.posemap.grid.validate()?;
        if self.posemap.embedding.dimension == 0 {
            return bad("posemap.embedding.dimension must be >= 1".into());
        }
        self.routing.validate()?;
        self.search.validate()?;
        if self.language_model.timeout_ms == 0 {
            return bad("language_model.timeout_ms must be >= 1".into());
        }
        Ok(())
    }

    /// The config as stored in a bundle: module parameters only, so the
    /// bundle does not depend on where it was built.
    pub fn bundle_toml(&self) -> Result<String, PipelineError> {
        let mut c = self.clone();
        c.input = InputConfig::default();
        c.output = PipelineConfig::default().output;
        c.zones.rules = None;
        toml::to_string(&c).map_err(|e| PipelineError::Config(e.to_string()))
    }
}
