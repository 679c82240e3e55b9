mod common;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use semtopo::localization::raycast_visible;
use semtopo::pipeline::MapBundle;
use semtopo::service::{router, AppState};
use serde_json::{json, Value};
use std::sync::Arc;
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(v) => req.body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn error_code(body: &[u8]) -> String {
    let v: Value = serde_json::from_slice(body).unwrap();
    v["error"]["code"].as_str().unwrap().to_owned()
}

struct Fixture {
    _tmp: tempfile::TempDir,
    store: semtopo::synthetic::SyntheticStore,
    bundle: MapBundle,
    app: Router,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let (store, _) = common::small_bundle(tmp.path());
    let bundle = MapBundle::load(tmp.path()).unwrap();
    let app = router(Some(Arc::new(AppState::new(MapBundle::load(tmp.path()).unwrap()).unwrap())));
    Fixture { _tmp: tmp, store, bundle, app }
}

#[tokio::test]
async fn without_bundle_everything_is_503() {
    let app = router(None);
    for (m, uri) in [("GET", "/map"), ("GET", "/zones"), ("GET", "/health"), ("POST", "/route"), ("POST", "/localize")] {
        let body = (m == "POST").then(|| json!({}));
        let (status, bytes) = call(&app, m, uri, body).await;
        assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
        assert_eq!(error_code(&bytes), "bundle_missing");
    }
}

#[tokio::test]
async fn read_endpoints() {
    let f = fixture();
    let (status, png) = call(&f.app, "GET", "/map", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&png[1..4], b"PNG");

    let (_, zones) = call(&f.app, "GET", "/zones", None).await;
    assert_eq!(zones, f.bundle.zones_json, "zones are served byte for byte");

    let (_, topo) = call(&f.app, "GET", "/topology", None).await;
    let topo: Value = serde_json::from_slice(&topo).unwrap();
    assert_eq!(topo["nodes"].as_array().unwrap().len(), f.bundle.topology.nodes.len());

    let (_, products) = call(&f.app, "GET", "/products", None).await;
    let products: Value = serde_json::from_slice(&products).unwrap();
    assert_eq!(products["products"].as_array().unwrap().len(), f.bundle.products.len());

    let (_, meta) = call(&f.app, "GET", "/map/meta", None).await;
    let meta: Value = serde_json::from_slice(&meta).unwrap();
    assert_eq!(meta["width"], f.bundle.grid.width());

    let (_, health) = call(&f.app, "GET", "/health", None).await;
    let health: Value = serde_json::from_slice(&health).unwrap();
    assert_eq!(health["digest"], f.bundle.manifest.digest.as_str());
}

#[tokio::test]
async fn error_statuses() {
    let f = fixture();
    let start = f.store.walkway_points(1.0)[0];
    let from = json!({"x": start.x, "y": start.y});

    let (s, b) = call(&f.app, "POST", "/route", Some(json!("not an object"))).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::BAD_REQUEST, "malformed"));
    let (s, _) = call(&f.app, "POST", "/route", Some(json!({"from": from}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, b) = call(&f.app, "POST", "/route", Some(json!({"from": from, "product_id": "nope"}))).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::NOT_FOUND, "unknown_product"));
    let (s, b) = call(&f.app, "POST", "/route", Some(json!({"from": from, "zone": "nowhere"}))).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::NOT_FOUND, "unknown_zone"));
    let (s, b) = call(&f.app, "GET", "/nope", None).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::NOT_FOUND, "not_found"));
    let (s, b) = call(&f.app, "POST", "/localize", Some(json!({"labels": []}))).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::BAD_REQUEST, "empty_query"));
    let (s, b) = call(&f.app, "POST", "/search", Some(json!({"query": "  "}))).await;
    assert_eq!((s, error_code(&b).as_str()), (StatusCode::BAD_REQUEST, "empty_query"));

    // far outside the walls nothing on the graph can be seen
    let pid = &f.bundle.products[0].product_id;
    let (s, b) = call(&f.app, "POST", "/route", Some(json!({"from": {"x": -50.0, "y": -50.0}, "product_id": pid}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(["no_visible_edge", "unreachable"].contains(&error_code(&b).as_str()));
}

#[tokio::test]
async fn route_matches_library() {
    let f = fixture();
    let start = f.store.walkway_points(1.0)[0];
    let p = &f.bundle.products[f.bundle.products.len() / 2];
    let (s, body) =
        call(&f.app, "POST", "/route", Some(json!({"from": {"x": start.x, "y": start.y}, "product_id": p.product_id}))).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let direct = f.bundle.route(start, &semtopo::routing::RouteTarget::Product(p.product_id.clone())).unwrap();
    assert_eq!(body, serde_json::to_vec(&direct).unwrap());
    let plan: Value = serde_json::from_slice(&body).unwrap();
    assert!(!plan["instructions"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn localize_own_view_scores_one() {
    let f = fixture();
    let pm = &f.bundle.posemap;
    let pose = pm
        .poses
        .iter()
        .find(|e| raycast_visible(&f.bundle.grid, &f.bundle.products, &e.pose, &pm.spec).unwrap().len() >= 2)
        .expect("some pose sees two products");
    let ids = raycast_visible(&f.bundle.grid, &f.bundle.products, &pose.pose, &pm.spec).unwrap();
    let labels: Vec<Value> = ids
        .iter()
        .map(|id| {
            let l = &f.bundle.product(id).unwrap().label;
            json!({"brand": l.brand, "category": l.category})
        })
        .collect();
    let (s, body) = call(&f.app, "POST", "/localize", Some(json!({"labels": labels, "k": 3}))).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v: Value = serde_json::from_slice(&body).unwrap();
    let hs = v["hypotheses"].as_array().unwrap();
    assert_eq!(hs.len(), 3);
    assert!((hs[0]["score"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(hs[0]["rank"], 1);
}

#[tokio::test]
async fn search_offline() {
    let f = fixture();
    let cat = f.bundle.products[0].label.category.clone();
    let (s, body) = call(&f.app, "POST", "/search", Some(json!({"query": cat}))).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["degraded"], false);
    assert_eq!(v["sub_goals"][0]["resolved"], true);
}
