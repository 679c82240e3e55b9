//! Read-only HTTP/JSON service over a loaded bundle.

use crate::ingest::{ProductLabel, ProductsFile};
use crate::localization::{localize, LocalizationError, PoseHypothesis};
use crate::pipeline::{MapBundle, PipelineError};
use crate::render::{encode_png, render_map, Layers, RenderOptions};
use crate::routing::{RouteTarget, RoutingError};
use crate::search::{plan_query, LanguageModelClient, SearchError};
use crate::spatial::{GridMeta, WorldPoint};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: ErrorDetail { code: self.code.to_owned(), message: self.message } };
        (self.status, json_bytes(&body)).into_response()
    }
}

impl From<RoutingError> for ApiError {
    fn from(e: RoutingError) -> Self {
        let m = e.to_string();
        match e {
            RoutingError::Unreachable => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unreachable", m),
            RoutingError::NoVisibleEdge { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "no_visible_edge", m),
            RoutingError::UnknownProduct(_) => Self::new(StatusCode::NOT_FOUND, "unknown_product", m),
            RoutingError::InvalidParameter(_) => Self::bad_request(m),
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "routing_failed", m),
        }
    }
}

impl From<LocalizationError> for ApiError {
    fn from(e: LocalizationError) -> Self {
        let m = e.to_string();
        match e {
            LocalizationError::EmptyQuery => Self::new(StatusCode::BAD_REQUEST, "empty_query", m),
            LocalizationError::InvalidParameter(_) => Self::bad_request(m),
            LocalizationError::ProviderMismatch { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "provider_mismatch", m)
            }
            LocalizationError::UnlocalizableMap => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unlocalizable_map", m),
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "localization_failed", m),
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        let m = e.to_string();
        match e {
            SearchError::EmptyQuery => Self::new(StatusCode::BAD_REQUEST, "empty_query", m),
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "search_failed", m),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Routing(r) => r.into(),
            PipelineError::Localization(l) => l.into(),
            PipelineError::Search(s) => s.into(),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Response {
    match serde_json::to_vec(v) {
        Ok(b) => ([(header::CONTENT_TYPE, "application/json")], b).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

/// Strict JSON body parsing: any syntax or shape problem is a 400.
fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteRequest {
    pub from: Point,
    #[serde(default)]
    pub product_id: Option<String>,
    #[serde(default)]
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelInput {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub brand: String,
    #[serde(default)]
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeRequest {
    pub labels: Vec<LabelInput>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeResponse {
    pub hypotheses: Vec<PoseHypothesis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub width: usize,
    pub height: usize,
    #[serde(flatten)]
    pub meta: GridMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub digest: String,
    pub products: usize,
}

/// Shared, immutable per-process state.
pub struct AppState {
    pub bundle: MapBundle,
    pub map_png: Vec<u8>,
    pub client: Option<Arc<dyn LanguageModelClient>>,
}

type Shared = Option<Arc<AppState>>;

impl AppState {
    pub fn new(bundle: MapBundle) -> Result<Self, image::ImageError> {
        let opts = RenderOptions { scale: 1, zones: false, topology: false, products: false, scale_bar: 0.0 };
        let map_png = encode_png(&render_map(&bundle.grid, Layers::default(), &opts))?;
        let client = bundle.language_client().map(|c| Arc::new(c) as Arc<dyn LanguageModelClient>);
        Ok(Self { bundle, map_png, client })
    }

    pub fn with_client(mut self, client: Option<Arc<dyn LanguageModelClient>>) -> Self {
        self.client = client;
        self
    }
}

fn ready(state: &Shared) -> Result<&Arc<AppState>, ApiError> {
    state
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "bundle_missing", "no bundle is loaded"))
}

async fn get_map(State(s): State<Shared>) -> Result<Response, ApiError> {
    let s = ready(&s)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], s.map_png.clone()).into_response())
}

async fn get_map_meta(State(s): State<Shared>) -> Result<Response, ApiError> {
    let g = &ready(&s)?.bundle.grid;
    Ok(json_bytes(&MapMeta { width: g.width(), height: g.height(), meta: g.meta() }))
}

async fn get_topology(State(s): State<Shared>) -> Result<Response, ApiError> {
    Ok(json_bytes(&ready(&s)?.bundle.topology))
}

async fn get_zones(State(s): State<Shared>) -> Result<Response, ApiError> {
    let s = ready(&s)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], s.bundle.zones_json.clone()).into_response())
}

async fn get_products(State(s): State<Shared>) -> Result<Response, ApiError> {
    let b = &ready(&s)?.bundle;
    Ok(json_bytes(&ProductsFile { schema_version: crate::SCHEMA_VERSION, products: b.products.clone() }))
}

async fn get_health(State(s): State<Shared>) -> Result<Response, ApiError> {
    let b = &ready(&s)?.bundle;
    Ok(json_bytes(&Health { status: "ok".into(), digest: b.manifest.digest.clone(), products: b.products.len() }))
}

async fn post_search(State(s): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let s = ready(&s)?.clone();
    let req: SearchRequest = parse(&body)?;
    // the external client blocks, so keep it off the async workers
    let plan = tokio::task::spawn_blocking(move || plan_query(&s.bundle.search, &req.query, s.client.as_deref()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(json_bytes(&plan))
}

async fn post_route(State(s): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let s = ready(&s)?;
    let req: RouteRequest = parse(&body)?;
    let from = WorldPoint::new(req.from.x, req.from.y);
    if !from.is_finite() {
        return Err(ApiError::bad_request("from must be finite"));
    }
    let target = match (&req.product_id, &req.zone) {
        (Some(id), None) => {
            if s.bundle.product(id).is_none() {
                return Err(ApiError::new(StatusCode::NOT_FOUND, "unknown_product", format!("unknown product {id:?}")));
            }
            RouteTarget::Product(id.clone())
        }
        (None, Some(z)) => s
            .bundle
            .zone_target(z)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_zone", format!("unknown zone {z:?}")))?,
        _ => return Err(ApiError::bad_request("give exactly one of product_id or zone")),
    };
    Ok(json_bytes(&s.bundle.route(from, &target)?))
}

async fn post_localize(State(s): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let s = ready(&s)?;
    let req: LocalizeRequest = parse(&body)?;
    let k = req.k.unwrap_or(DEFAULT_K);
    if k == 0 {
        return Err(ApiError::bad_request("k must be at least 1"));
    }
    let labels: Vec<ProductLabel> = req
        .labels
        .iter()
        .filter(|l| !(l.name.trim().is_empty() && l.brand.trim().is_empty() && l.category.trim().is_empty()))
        .map(|l| ProductLabel::new(&l.name, &l.brand, "", &l.category))
        .collect();
    if labels.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_query", "labels must not be empty"));
    }
    let hypotheses = localize(&labels, &s.bundle.posemap, &s.bundle.provider, k)?;
    Ok(json_bytes(&LocalizeResponse { hypotheses }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// All endpoints. `None` serves 503 everywhere.
pub fn router(state: Option<Arc<AppState>>) -> Router {
    Router::new()
        .route("/map", get(get_map))
        .route("/map/meta", get(get_map_meta))
        .route("/topology", get(get_topology))
        .route("/zones", get(get_zones))
        .route("/products", get(get_products))
        .route("/health", get(get_health))
        .route("/search", post(post_search))
        .route("/route", post(post_route))
        .route("/localize", post(post_localize))
        .fallback(fallback)
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(state: Option<Arc<AppState>>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
