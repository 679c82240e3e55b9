use super::MatchTier;
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

pub const DEFAULT_API_KEY_ENV: &str = "SEMTOPO_LM_API_KEY";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("language model request failed: {0}")]
    Transport(String),
    #[error("language model returned an unusable response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMatch {
    pub product_id: String,
    pub tier: MatchTier,
    #[serde(default)]
    pub reason: String,
}

/// An external model that can split composite requests and match
/// free-form queries against the catalog.
pub trait LanguageModelClient: Send + Sync {
    fn decompose(&self, query: &str, catalog_digest: &str) -> Result<Vec<String>, ClientError>;
    fn match_products(&self, query: &str, catalog_digest: &str) -> Result<Vec<ClientMatch>, ClientError>;
}

#[derive(Serialize)]
struct Request<'a> {
    task: &'a str,
    query: &'a str,
    catalog_digest: &'a str,
}

#[derive(Deserialize)]
struct DecomposeResponse {
    sub_goals: Vec<String>,
}

#[derive(Deserialize)]
struct MatchResponse {
    matches: Vec<ClientMatch>,
}

/// JSON-over-HTTP client. Every task is a POST of
/// `{task, query, catalog_digest}` to the base URL.
pub struct HttpLanguageModelClient {
    base_url: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpLanguageModelClient {
    pub fn new(base_url: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self { base_url: base_url.to_owned(), api_key, http })
    }

    /// Reads the key from `key_env` if it is set.
    pub fn from_env(base_url: &str, key_env: &str, timeout: Duration) -> Result<Self, ClientError> {
        Self::new(base_url, std::env::var(key_env).ok(), timeout)
    }

    fn post<T: for<'de> Deserialize<'de>>(&self, task: &str, query: &str, digest: &str) -> Result<T, ClientError> {
        let mut req = self.http.post(&self.base_url).json(&Request { task, query, catalog_digest: digest });
        if let Some(k) = &self.api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ClientError::Transport(format!("status {}", resp.status())));
        }
        resp.json::<T>().map_err(|e| ClientError::BadResponse(e.to_string()))
    }
}

impl LanguageModelClient for HttpLanguageModelClient {
    fn decompose(&self, query: &str, catalog_digest: &str) -> Result<Vec<String>, ClientError> {
        let r: DecomposeResponse = self.post("decompose", query, catalog_digest)?;
        Ok(r.sub_goals)
    }

    fn match_products(&self, query: &str, catalog_digest: &str) -> Result<Vec<ClientMatch>, ClientError> {
        let r: MatchResponse = self.post("match", query, catalog_digest)?;
        Ok(r.matches)
    }
}
