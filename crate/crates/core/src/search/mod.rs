//! Catalog search with tiered token matching, zone fallback and
//! multi-item decomposition.

mod client;
mod decompose;

pub use client::{ClientError, ClientMatch, HttpLanguageModelClient, LanguageModelClient, DEFAULT_API_KEY_ENV};
pub use decompose::{decompose, plan_query, Decomposition, DecompositionSource, QueryPlan, SubGoal};

use crate::ingest::ProductRecord;
use crate::spatial::WorldPoint;
use crate::zones::{ZoneRules, ZonesFile, OTHER_ZONE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchTier {
    Exact,
    Alternative,
    Related,
    ZoneFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub tier: MatchTier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductRecord>,
    pub zone: usize,
    pub zone_name: String,
    pub target: WorldPoint,
    /// Fraction of query tokens explained by the match, in [0, 1].
    pub score: f64,
    pub reason: String,
}

impl SearchResult {
    pub fn product_id(&self) -> Option<&str> {
        self.product.as_ref().map(|p| p.product_id.as_str())
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "any", "buy", "can", "do", "find", "for", "get", "i", "in", "is", "me", "need", "of", "some",
    "the", "to", "want", "where", "with", "you",
];

fn stem(t: &str) -> String {
    if t.len() > 3 && t.ends_with('s') && !t.ends_with("ss") {
        t[..t.len() - 1].to_owned()
    } else {
        t.to_owned()
    }
}

/// Lowercased, apostrophe-free, lightly stemmed word tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace(['\'', '\u{2019}'], "")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(stem)
        .collect()
}

/// Tokens of a query with filler words removed.
pub fn query_tokens(text: &str) -> Vec<String> {
    let mut out: Vec<String> = tokens(text).into_iter().filter(|t| !STOPWORDS.contains(&t.as_str())).collect();
    let mut seen = BTreeSet::new();
    out.retain(|t| seen.insert(t.clone()));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub phrase: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub dish: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Intent phrases and the catalog words they stand for. Longer
    /// phrases are applied first and consume their words.
    pub expansions: Vec<Expansion>,
    pub recipes: Vec<Recipe>,
    /// Maximum results per query.
    pub limit: usize,
}

fn exp(phrase: &str, terms: &[&str]) -> Expansion {
    Expansion { phrase: phrase.into(), terms: terms.iter().map(|t| (*t).into()).collect() }
}

fn recipe(dish: &str, components: &[&str]) -> Recipe {
    Recipe { dish: dish.into(), components: components.iter().map(|t| (*t).into()).collect() }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            expansions: vec![
                exp("vegan protein", &["lentil", "bean", "pulse", "dal", "chana", "chickpea"]),
                exp("protein", &["lentil", "bean", "dal", "paneer", "egg"]),
                exp("breakfast", &["oats", "poha", "bread", "tea", "coffee"]),
                exp("baking", &["flour", "maida", "butter", "sugar"]),
                exp("spicy", &["chili", "chilli", "masala", "pickle"]),
                exp("cold drink", &["soda", "juice", "beverage"]),
                exp("dessert", &["sweet", "halwa", "ladoo", "ice cream"]),
            ],
            recipes: vec![
                recipe("biryani", &["biryani masala", "basmati rice", "garlic paste", "ghee"]),
                recipe("dal tadka", &["toor dal", "ghee", "cumin", "turmeric"]),
                recipe("masala chai", &["tea", "milk", "cardamom"]),
                recipe("chole", &["chickpeas", "chole masala", "onion", "tomato"]),
            ],
            limit: 10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.limit == 0 {
            return Err(SearchError::InvalidConfig("limit must be at least 1".into()));
        }
        if let Some(r) = self.recipes.iter().find(|r| query_tokens(&r.dish).is_empty() || r.components.is_empty()) {
            return Err(SearchError::InvalidConfig(format!("recipe {:?} is empty", r.dish)));
        }
        if let Some(e) = self.expansions.iter().find(|e| query_tokens(&e.phrase).is_empty()) {
            return Err(SearchError::InvalidConfig(format!("expansion {:?} has no words", e.phrase)));
        }
        Ok(())
    }

    /// Extra tokens implied by the query's intent phrases.
    pub fn expand(&self, query: &[String]) -> BTreeSet<String> {
        let mut order: Vec<&Expansion> = self.expansions.iter().collect();
        order.sort_by_key(|e| std::cmp::Reverse(query_tokens(&e.phrase).len()));
        let mut consumed: BTreeSet<String> = BTreeSet::new();
        let mut out = BTreeSet::new();
        for e in order {
            let words = query_tokens(&e.phrase);
            if words.iter().all(|w| query.contains(w) && !consumed.contains(w)) {
                consumed.extend(words);
                out.extend(e.terms.iter().flat_map(|t| tokens(t)));
            }
        }
        out
    }
}

struct Entry {
    product: ProductRecord,
    zone: usize,
    name_brand: BTreeSet<String>,
    category: BTreeSet<String>,
}

/// Immutable search index over a catalog and its zones.
pub struct SearchIndex {
    entries: Vec<Entry>,
    zones: ZonesFile,
    rules: ZoneRules,
    zone_words: Vec<BTreeSet<String>>,
    config: SearchConfig,
    digest: String,
}

/// Hex sha256 of the canonical products listing, sent to external clients.
pub fn catalog_digest(products: &[ProductRecord]) -> String {
    let mut sorted: Vec<&ProductRecord> = products.iter().collect();
    sorted.sort_by(|a, b| a.product_id.cmp(&b.product_id));
    let bytes = serde_json::to_vec(&sorted).expect("products serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl SearchIndex {
    pub fn new(
        products: &[ProductRecord],
        zones: &ZonesFile,
        rules: &ZoneRules,
        config: SearchConfig,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        let zone_index = |name: &str| zones.zones.iter().position(|z| z == name);
        let other = zone_index(OTHER_ZONE).unwrap_or(zones.zones.len().saturating_sub(1));
        let mut entries: Vec<Entry> = products
            .iter()
            .map(|p| {
                let zone = zones
                    .product_zones
                    .get(&p.product_id)
                    .and_then(|z| zone_index(z))
                    .or_else(|| zone_index(rules.zone_for_label(&p.label)))
                    .unwrap_or(other);
                Entry {
                    product: p.clone(),
                    zone,
                    name_brand: tokens(&format!("{} {}", p.label.name, p.label.brand)).into_iter().collect(),
                    category: tokens(&p.label.category).into_iter().collect(),
                }
            })
            .collect();
        entries.sort_by(|a, b| a.product.product_id.cmp(&b.product.product_id));
        let mut zone_words: Vec<BTreeSet<String>> =
            zones.zones.iter().map(|z| tokens(z).into_iter().filter(|t| !STOPWORDS.contains(&t.as_str())).collect()).collect();
        for r in &rules.rules {
            if let Some(i) = zone_index(&r.zone) {
                zone_words[i].extend(tokens(&r.keyword));
            }
        }
        Ok(Self {
            digest: catalog_digest(products),
            entries,
            zones: zones.clone(),
            rules: rules.clone(),
            zone_words,
            config,
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn zones(&self) -> &ZonesFile {
        &self.zones
    }

    pub fn product(&self, id: &str) -> Option<&ProductRecord> {
        self.entries
            .binary_search_by(|e| e.product.product_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i].product)
    }

    fn product_result(&self, e: &Entry, tier: MatchTier, score: f64, reason: String) -> SearchResult {
        SearchResult {
            tier,
            product: Some(e.product.clone()),
            zone: e.zone,
            zone_name: self.zones.zones.get(e.zone).cloned().unwrap_or_default(),
            target: e.product.position(),
            score,
            reason,
        }
    }

    /// Ranked matches, best first. An empty list means the query cannot
    /// be resolved to any product or zone.
    pub fn search(&self, query: &str) -> Result<Vec<SearchResult>, SearchError> {
        let q = query_tokens(query);
        if q.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let qset: BTreeSet<String> = q.iter().cloned().collect();
        let expanded = self.config.expand(&q);
        let wide: BTreeSet<String> = qset.union(&expanded).cloned().collect();
        let n = q.len() as f64;
        let mut out = Vec::new();
        for e in &self.entries {
            let in_nb = qset.intersection(&e.name_brand).count();
            if in_nb == q.len() {
                let score = n / e.name_brand.len().max(1) as f64;
                out.push(self.product_result(e, MatchTier::Exact, score.min(1.0), "every query word is in the product name".into()));
                continue;
            }
            let direct: BTreeSet<&String> = qset.intersection(&e.name_brand).chain(qset.intersection(&e.category)).collect();
            let implied = expanded.intersection(&e.category).count() + expanded.intersection(&e.name_brand).count();
            if !direct.is_empty() || implied > 0 {
                let score = if direct.is_empty() { 0.5 / n } else { direct.len() as f64 / n };
                let reason = if direct.is_empty() {
                    "product fits what the query is for".to_owned()
                } else {
                    format!("shares {} with the product", direct.into_iter().cloned().collect::<Vec<_>>().join(", "))
                };
                out.push(self.product_result(e, MatchTier::Alternative, score.min(1.0), reason));
                continue;
            }
            let zw = &self.zone_words[e.zone];
            let shared = wide.intersection(zw).count();
            if shared > 0 {
                let score = (shared as f64 / n).min(1.0);
                let reason = format!("same section as the query ({})", self.zones.zones[e.zone]);
                out.push(self.product_result(e, MatchTier::Related, score, reason));
            }
        }
        out.sort_by(|a, b| {
            a.tier
                .cmp(&b.tier)
                .then(b.score.total_cmp(&a.score))
                .then_with(|| a.product_id().cmp(&b.product_id()))
        });
        out.truncate(self.config.limit);
        if out.is_empty() {
            if let Some(r) = self.zone_fallback(&q, &expanded) {
                out.push(r);
            }
        }
        Ok(out)
    }

    /// A zone named by the query, if it has an anchor. "Other" is never
    /// a fallback target.
    fn zone_fallback(&self, q: &[String], expanded: &BTreeSet<String>) -> Option<SearchResult> {
        let text = q.iter().chain(expanded).cloned().collect::<Vec<_>>().join(" ");
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        if let Some(z) = self.rules.zone_for_text(&text) {
            if let Some(i) = self.zones.zones.iter().position(|n| n == z) {
                *votes.entry(i).or_default() += 1;
            }
        }
        for (i, words) in self.zone_words.iter().enumerate() {
            let c = q.iter().chain(expanded).filter(|t| words.contains(*t)).count();
            if c > 0 {
                *votes.entry(i).or_default() += c;
            }
        }
        let (zone, _) = votes
            .into_iter()
            .filter(|(i, _)| self.zones.zones[*i] != OTHER_ZONE)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
        let name = &self.zones.zones[zone];
        let anchor = self.zones.anchor(name)?;
        Some(SearchResult {
            tier: MatchTier::ZoneFallback,
            product: None,
            zone,
            zone_name: name.clone(),
            target: anchor.position(),
            score: 0.0,
            reason: format!("no product matched; heading to the {name} section"),
        })
    }
}
