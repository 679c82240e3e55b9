//! Semantic zones: keyword classification of products and an
//! inverse-distance-squared k-NN vote that paints walkable space.

mod kdtree;
mod overlay;

pub use kdtree::KdTree;
pub use overlay::{vote_overlay, zone_anchor, VoteConfig, ZoneAnchor, ZoneOverlay, ZonesFile};

use crate::ingest::{ProductLabel, ProductRecord};
use crate::spatial::SpatialError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

pub const OTHER_ZONE: &str = "Other";

#[derive(Debug, Error)]
pub enum ZoneError {
    #[error("zone rules are empty")]
    EmptyRules,
    #[error("no products to vote with")]
    NoProducts,
    #[error("zone {0:?} has no assigned cells")]
    ZoneEmpty(String),
    #[error("unknown zone {0:?}")]
    UnknownZone(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { expected: u32, found: u32 },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneRule {
    pub keyword: String,
    pub zone: String,
}

/// Ordered keyword rules. Earlier rules win.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneRules {
    pub rules: Vec<ZoneRule>,
}

const GROCERY_RULES: &[(&str, &[&str])] = &[
    ("Lentils, beans, and pulses", &["lentil", "dal", "daal", "bean", "pulse", "chana", "rajma", "moong", "toor", "urad", "masoor", "chickpea"]),
    ("Rice and grains", &["rice", "basmati", "grain", "quinoa", "millet", "poha", "oats"]),
    ("Flours", &["flour", "atta", "besan", "maida", "sooji", "semolina"]),
    ("Spices and masalas", &["spice", "masala", "turmeric", "haldi", "chili", "chilli", "cumin", "jeera", "coriander", "cardamom", "clove", "pepper"]),
    ("Personal care", &["personal care", "soap", "shampoo", "toothpaste", "hair oil", "lotion"]),
    ("Cooking oils and ghee", &["oil", "ghee"]),
    ("Snacks and namkeen", &["snack", "namkeen", "chips", "bhujia", "mixture", "crackers", "biscuit", "cookie"]),
    ("Sweets and desserts", &["sweet", "dessert", "halwa", "ladoo", "gulab", "jalebi", "chocolate", "candy"]),
    ("Tea and coffee", &["tea", "chai", "coffee"]),
    ("Beverages", &["beverage", "juice", "soda", "drink", "water", "sharbat"]),
    ("Dairy and eggs", &["dairy", "milk", "paneer", "yogurt", "curd", "cheese", "butter", "egg"]),
    ("Frozen foods", &["frozen", "ice cream"]),
    ("Fresh produce", &["produce", "vegetable", "fruit", "onion", "potato", "tomato", "fresh"]),
    ("Pickles and chutneys", &["pickle", "achar", "chutney"]),
    ("Sauces and pastes", &["sauce", "paste", "ketchup", "vinegar"]),
    ("Ready-to-eat meals", &["ready", "instant", "meal", "noodle"]),
    ("Bakery and breads", &["bakery", "bread", "naan", "roti", "paratha", "rusk"]),
    ("Household and cleaning", &["household", "cleaning", "detergent", "cleaner", "dish"]),
];

/// True when `keyword` occurs in `text` starting at a word boundary, so
/// "oil" matches "oils" but not "boiled". Both sides are expected lowercase.
pub fn keyword_matches(text: &str, keyword: &str) -> bool {
    if keyword.is_empty() {
        return false;
    }
    text.match_indices(keyword)
        .any(|(i, _)| text[..i].chars().next_back().is_none_or(|c| !c.is_alphanumeric()))
}

impl ZoneRules {
    pub fn new(rules: Vec<ZoneRule>) -> Result<Self, ZoneError> {
        if rules.is_empty() {
            return Err(ZoneError::EmptyRules);
        }
        let rules = rules
            .into_iter()
            .map(|r| ZoneRule { keyword: r.keyword.trim().to_lowercase(), zone: r.zone.trim().to_owned() })
            .collect::<Vec<_>>();
        if let Some(bad) = rules.iter().find(|r| r.keyword.is_empty() || r.zone.is_empty()) {
            return Err(ZoneError::InvalidParameter(format!("empty keyword or zone in rule {bad:?}")));
        }
        Ok(Self { rules })
    }

    /// Eighteen grocery zones.
    pub fn grocery() -> Self {
        let rules = GROCERY_RULES
            .iter()
            .flat_map(|(zone, kws)| kws.iter().map(|k| ZoneRule { keyword: (*k).into(), zone: (*zone).into() }))
            .collect();
        Self { rules }
    }

    /// Zone names in first-appearance order, with "Other" last.
    pub fn zones(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rules {
            if !out.contains(&r.zone) {
                out.push(r.zone.clone());
            }
        }
        if !out.iter().any(|z| z == OTHER_ZONE) {
            out.push(OTHER_ZONE.into());
        }
        out
    }

    /// First rule whose keyword appears in `text`.
    pub fn zone_for_text(&self, text: &str) -> Option<&str> {
        let text = text.to_lowercase();
        self.rules.iter().find(|r| keyword_matches(&text, &r.keyword)).map(|r| r.zone.as_str())
    }

    /// Category is tried before the name so that "Chana Masala" filed
    /// under "Spices" lands with the spices.
    pub fn zone_for_label(&self, label: &ProductLabel) -> &str {
        self.zone_for_text(&label.category)
            .or_else(|| self.zone_for_text(&label.name))
            .unwrap_or(OTHER_ZONE)
    }

    pub fn load(path: &Path) -> Result<Self, ZoneError> {
        let rules: Vec<ZoneRule> = serde_json::from_slice(&std::fs::read(path)?)?;
        Self::new(rules)
    }

    pub fn save(&self, path: &Path) -> Result<(), ZoneError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

impl Default for ZoneRules {
    fn default() -> Self {
        Self::grocery()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneCatalog {
    pub zones: Vec<String>,
    pub product_zone: BTreeMap<String, usize>,
}

impl ZoneCatalog {
    pub fn index_of(&self, zone: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.eq_ignore_ascii_case(zone))
    }

    pub fn zone_of(&self, product_id: &str) -> Option<&str> {
        self.product_zone.get(product_id).map(|&i| self.zones[i].as_str())
    }
}

pub fn assign_zones(products: &[ProductRecord], rules: &ZoneRules) -> Result<ZoneCatalog, ZoneError> {
    if rules.rules.is_empty() {
        return Err(ZoneError::EmptyRules);
    }
    let zones = rules.zones();
    let product_zone = products
        .iter()
        .map(|p| {
            let z = rules.zone_for_label(&p.label);
            (p.product_id.clone(), zones.iter().position(|n| n == z).expect("zone list covers rules"))
        })
        .collect();
    Ok(ZoneCatalog { zones, product_zone })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(id: &str, name: &str, category: &str) -> ProductRecord {
        ProductRecord {
            product_id: id.into(),
            label: ProductLabel::new(name, "", "", category),
            x: 0.0,
            y: 0.0,
            refined: false,
            frame_id: String::new(),
        }
    }

    #[test]
    fn default_has_eighteen_zones_plus_other() {
        let zones = ZoneRules::grocery().zones();
        assert_eq!(zones.len(), 19);
        assert_eq!(zones.last().unwrap(), OTHER_ZONE);
        assert!(zones.contains(&"Lentils, beans, and pulses".to_string()));
    }

    #[test]
    fn lentils_category() {
        let cat = assign_zones(&[product("a", "Toor", "Lentils")], &ZoneRules::grocery()).unwrap();
        assert_eq!(cat.zone_of("a"), Some("Lentils, beans, and pulses"));
    }

    #[test]
    fn unmatched_goes_to_other() {
        let cat = assign_zones(&[product("a", "Widget", "Hardware")], &ZoneRules::grocery()).unwrap();
        assert_eq!(cat.zone_of("a"), Some(OTHER_ZONE));
    }

    #[test]
    fn first_rule_wins() {
        let rules = ZoneRules::new(vec![
            ZoneRule { keyword: "rice".into(), zone: "Grains".into() },
            ZoneRule { keyword: "basmati".into(), zone: "Premium".into() },
        ])
        .unwrap();
        let cat = assign_zones(&[product("a", "Basmati Rice", "")], &rules).unwrap();
        assert_eq!(cat.zone_of("a"), Some("Grains"));
        assert_eq!(cat.zones, vec!["Grains", "Premium", "Other"]);
    }

    #[test]
    fn category_beats_name_and_words_bound() {
        let rules = ZoneRules::grocery();
        let cat = assign_zones(&[product("a", "Chana Masala", "Spices"), product("b", "Boiled Peanuts", "")], &rules).unwrap();
        assert_eq!(cat.zone_of("a"), Some("Spices and masalas"));
        assert_eq!(cat.zone_of("b"), Some(OTHER_ZONE));
        assert!(keyword_matches("cooking oils", "oil"));
        assert!(!keyword_matches("boiled", "oil"));
        assert_eq!(rules.zone_for_text("Amla Hair Oil"), Some("Personal care"));
    }

    #[test]
    fn empty_rules() {
        assert!(matches!(ZoneRules::new(vec![]), Err(ZoneError::EmptyRules)));
        let r = ZoneRules { rules: vec![] };
        assert!(matches!(assign_zones(&[], &r), Err(ZoneError::EmptyRules)));
    }
}
