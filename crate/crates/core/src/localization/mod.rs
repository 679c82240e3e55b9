//! One-shot semantic localization: every discrete pose caches the text
//! signature of the products it should see, and a labeled observation is
//! matched against that cache by cosine similarity.

mod embed;
mod posemap;
mod raycast;

pub use embed::{cosine, EmbeddingProvider, HashedBagOfTokens, DEFAULT_DIMENSION, DEFAULT_SEED};
pub use posemap::{build_pose_map, localize, PoseEntry, PoseHypothesis, PoseMap, POSEMAP_MAGIC, POSEMAP_VERSION};
pub use raycast::{ray_angles, raycast_visible};

use crate::ingest::ProductLabel;
use crate::spatial::SpatialError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("pose at ({x:.3}, {y:.3}) is not on a free cell")]
    PoseInObstacle { x: f64, y: f64 },
    #[error("grid has no free pose cells")]
    NoFreeSpace,
    #[error("query has no labels")]
    EmptyQuery,
    #[error("provider mismatch: map built with {expected:?}, query uses {found:?}")]
    ProviderMismatch { expected: String, found: String },
    #[error("every pose has an empty signature; nothing to match")]
    UnlocalizableMap,
    #[error("embedding provider failed: {0}")]
    ProviderFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed pose map: {0}")]
    Format(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Pose discretization and the simulated camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseGridSpec {
    /// Meters.
    pub cell_size: f64,
    pub orientation_bins: u32,
    /// Degrees.
    pub fov: f64,
    /// Meters.
    pub range: f64,
    pub rays: u32,
}

impl Default for PoseGridSpec {
    fn default() -> Self {
        Self { cell_size: 0.5, orientation_bins: 8, fov: 60.0, range: 6.0, rays: 20 }
    }
}

impl PoseGridSpec {
    pub fn validate(&self) -> Result<(), LocalizationError> {
        let bad = |m: &str| Err(LocalizationError::InvalidParameter(m.into()));
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return bad("cell_size must be positive");
        }
        if self.orientation_bins == 0 {
            return bad("orientation_bins must be at least 1");
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return bad("fov must be in (0, 360]");
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return bad("range must be positive");
        }
        if self.rays == 0 {
            return bad("rays must be at least 1");
        }
        Ok(())
    }

    /// Heading of an orientation bin in radians; bin 0 faces +x.
    pub fn bin_heading(&self, bin: u32) -> f64 {
        (bin as f64 * 360.0 / self.orientation_bins as f64).to_radians()
    }
}

/// Canonical, order-free rendering of a set of labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemanticSignature {
    pub entries: Vec<String>,
    pub text: String,
}

pub const SIGNATURE_SEPARATOR: &str = " | ";

impl SemanticSignature {
    pub fn from_entries(mut entries: Vec<String>) -> Self {
        entries.sort();
        entries.dedup();
        let text = entries.join(SIGNATURE_SEPARATOR);
        Self { entries, text }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// "brand category", lowercased with whitespace collapsed. Falls back to
/// the product name when both are blank.
pub fn label_entry(label: &ProductLabel) -> Option<String> {
    let joined = format!("{} {}", label.brand, label.category);
    let mut words: Vec<String> = joined.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        words = label.name.split_whitespace().map(str::to_lowercase).collect();
    }
    (!words.is_empty()).then(|| words.join(" "))
}

pub fn build_signature<'a>(labels: impl IntoIterator<Item = &'a ProductLabel>) -> SemanticSignature {
    SemanticSignature::from_entries(labels.into_iter().filter_map(label_entry).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(brand: &str, category: &str) -> ProductLabel {
        ProductLabel::new("x", brand, "", category)
    }

    #[test]
    fn dedupe_and_sort() {
        let sig = build_signature(&[l("Swad", "Lentils"), l("Swad", "Lentils"), l("Laxmi", "Flour")]);
        assert_eq!(sig.entries, vec!["laxmi flour", "swad lentils"]);
        assert_eq!(sig.text, "laxmi flour | swad lentils");
    }

    #[test]
    fn empty_signature() {
        let sig = build_signature(&[]);
        assert!(sig.is_empty());
        assert_eq!(sig.text, "");
    }

    #[test]
    fn whitespace_collapsed_and_name_fallback() {
        assert_eq!(label_entry(&l("  Deep ", "Frozen   Foods")).unwrap(), "deep frozen foods");
        assert_eq!(label_entry(&ProductLabel::new("Mystery Item", "", "", " ")).unwrap(), "mystery item");
        assert_eq!(label_entry(&ProductLabel::new("", "", "", "")), None);
    }

    #[test]
    fn spec_validation() {
        assert!(PoseGridSpec::default().validate().is_ok());
        for s in [
            PoseGridSpec { orientation_bins: 0, ..Default::default() },
            PoseGridSpec { fov: 0.0, ..Default::default() },
            PoseGridSpec { fov: 361.0, ..Default::default() },
            PoseGridSpec { rays: 0, ..Default::default() },
            PoseGridSpec { cell_size: -1.0, ..Default::default() },
        ] {
            assert!(s.validate().is_err(), "{s:?}");
        }
        assert!((PoseGridSpec::default().bin_heading(2) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn signature_permutation_invariant(
            labels in proptest::collection::vec((0u8..5, 0u8..5), 0..12),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut ls: Vec<ProductLabel> = labels.iter().map(|(b, c)| l(&format!("B{b}"), &format!("C{c}"))).collect();
            let a = build_signature(&ls);
            ls.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = build_signature(&ls);
            proptest::prop_assert_eq!(&a, &b);
            proptest::prop_assert_eq!(a.entries.join(SIGNATURE_SEPARATOR), a.text);
        }
    }
}
