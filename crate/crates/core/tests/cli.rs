//! The `semtopo` binary: exit codes, JSON errors and stage outputs.

use semtopo::spatial::{OccupancyGrid, WorldPoint};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semtopo")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_code(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)));
    v["error"]["code"].as_str().unwrap().to_owned()
}

/// One generated bundle shared by the tests below.
fn bundle() -> &'static str {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    let dir = DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        let b = d.path().to_str().unwrap();
        let o = run(&["--bundle", b, "gen-synthetic", "--aisles", "2", "--products", "30"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["digest"].as_str().unwrap().len(), 64);
        d
    });
    dir.path().to_str().unwrap()
}

/// A walkway point of the same store `gen-synthetic` built.
fn start() -> String {
    let cfg = SyntheticConfig { aisles: 2, products: 30, closed_back: None, ..SyntheticConfig::default() };
    let p = SyntheticStore::generate(&cfg).unwrap().walkway_points(1.0)[0];
    format!("{},{}", p.x, p.y)
}

fn first_product(b: &str) -> String {
    let v: Value = serde_json::from_slice(&std::fs::read(Path::new(b).join("products.json")).unwrap()).unwrap();
    v["products"][0]["product_id"].as_str().unwrap().to_owned()
}

#[test]
fn route_succeeds_and_writes_file() {
    let b = bundle();
    let pid = first_product(b);
    let out = tempfile::tempdir().unwrap();
    let route = out.path().join("route.json");
    let o = run(&["--bundle", b, "route", "--from", &start(), "--product", &pid, "--out", route.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let printed = stdout_json(&o);
    let saved: Value = serde_json::from_slice(&std::fs::read(&route).unwrap()).unwrap();
    assert_eq!(printed, saved);
    assert!(printed["total_length"].as_f64().unwrap() > 0.0);

    let png = out.path().join("map.png");
    let o = run(&["--bundle", b, "render-map", "--route", route.to_str().unwrap(), "--out", png.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(&std::fs::read(&png).unwrap()[1..4], b"PNG");
}

#[test]
fn domain_errors_exit_1() {
    let b = bundle();
    let o = run(&["--bundle", b, "--json", "route", "--from", &start(), "--product", "no-such-thing"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_code(&o), "unknown_product");

    let o = run(&["--bundle", b, "--json", "route", "--from", "-50,-50", "--product", &first_product(b)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(["no_visible_edge", "unreachable"].contains(&stderr_code(&o).as_str()));

    let empty = tempfile::tempdir().unwrap();
    let o = run(&["--bundle", empty.path().to_str().unwrap(), "--json", "search", "milk"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_code(&o), "missing_artifact");
}

#[test]
fn tampered_bundle_is_refused() {
    let src = bundle();
    let copy = tempfile::tempdir().unwrap();
    for e in std::fs::read_dir(src).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, copy.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let zones = copy.path().join("zones.json");
    let mut bytes = std::fs::read(&zones).unwrap();
    bytes.push(b'\n');
    std::fs::write(&zones, bytes).unwrap();
    let o = run(&["--bundle", copy.path().to_str().unwrap(), "--json", "search", "milk"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_code(&o), "digest_mismatch");
}

#[test]
fn usage_and_config_errors_exit_2() {
    let b = bundle();
    assert_eq!(run(&["--bundle", b, "route", "--from", "1,1"]).status.code(), Some(2));
    assert_eq!(run(&["--bundle", b, "route", "--from", "1,1", "--product", "a", "--zone", "b"]).status.code(), Some(2));
    assert_eq!(run(&["--bundle", b, "route", "--from", "one,two", "--product", "a"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&["--bundle", b, "--json", "--set", "occupancy.nonsense=3", "search", "milk"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_code(&o), "config");
}

#[test]
fn localize_and_search_print_json() {
    let b = bundle();
    let products: Value = serde_json::from_slice(&std::fs::read(Path::new(b).join("products.json")).unwrap()).unwrap();
    let l = &products["products"][0]["label"];
    let label = format!("{}:{}", l["brand"].as_str().unwrap(), l["category"].as_str().unwrap());
    let o = run(&["--bundle", b, "localize", "--label", &label, "-k", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["hypotheses"].as_array().unwrap().len(), 2);

    let o = run(&["--bundle", b, "search", l["category"].as_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["sub_goals"][0]["resolved"], true);
}

#[test]
fn build_topology_on_a_straight_corridor() {
    let mut rows = vec!["#".repeat(60)];
    for _ in 0..9 {
        rows.push(format!("#{}#", ".".repeat(58)));
    }
    rows.push("#".repeat(60));
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let grid = OccupancyGrid::from_ascii(&rows, 0.1, WorldPoint::new(0.0, 0.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("corridor.pgm");
    grid.save(&pgm, &dir.path().join("corridor.json")).unwrap();
    let out = dir.path().join("topo.json");
    let o = run(&["build-topology", "--map", pgm.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!((v["nodes"].as_u64(), v["edges"].as_u64()), (Some(2), Some(1)), "{v}");
    assert!(out.exists());
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn runtime_model_endpoint_overrides_the_bundle() {
    let b = bundle();
    // nothing listens here, so the plan must fall back and say so
    let addr = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let url = format!("language_model.url=http://{addr}/");
    let o = run(&["--bundle", b, "--set", &url, "--set", "language_model.timeout_ms=300", "search", "biryani"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["degraded"], true, "{v}");
    assert_eq!(v["source"], "recipe");

    let o = run(&["--bundle", b, "search", "biryani"]);
    assert_eq!(stdout_json(&o)["degraded"], false);
}
