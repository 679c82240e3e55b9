mod common;

use semtopo::pipeline::{
    stage_posemap, stage_zones, write_manifest, MapBundle, PipelineConfig, PipelineError, CONFIG_FILE,
};
use std::path::Path;

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, to.join(p.file_name().unwrap())).unwrap();
        }
    }
}

#[test]
fn bundle_loads_anywhere() {
    let tmp = tempfile::tempdir().unwrap();
    let built = tmp.path().join("built");
    let (store, manifest) = common::small_bundle(&built);
    let moved = tmp.path().join("elsewhere/moved");
    copy_dir(&built, &moved);
    let b = MapBundle::load(&moved).unwrap();
    assert_eq!(b.manifest, manifest);
    assert!(!b.products.is_empty() && b.products.len() <= store.products.len(), "{} of {}", b.products.len(), store.products.len());
    assert!(b.topology.nodes.len() >= 2);
    assert_eq!(b.posemap.len(), b.posemap.poses.len());
}

#[test]
fn stored_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    common::small_bundle(tmp.path());
    let text = std::fs::read_to_string(tmp.path().join(CONFIG_FILE)).unwrap();
    let cfg = PipelineConfig::from_toml(&text, &[]).unwrap();
    assert_eq!(cfg.bundle_toml().unwrap(), text);
}

#[test]
fn stages_need_their_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { output: tmp.path().to_owned(), ..PipelineConfig::default() };
    assert!(matches!(stage_zones(&cfg), Err(PipelineError::MissingArtifact(_))));
    assert!(matches!(stage_posemap(&cfg), Err(PipelineError::MissingArtifact(_))));
}

#[test]
fn rerunning_a_stage_reseals_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, m) = common::small_bundle(tmp.path());
    let text = std::fs::read_to_string(tmp.path().join(CONFIG_FILE)).unwrap();
    let mut cfg = PipelineConfig::from_toml(&text, &[]).unwrap();
    cfg.output = tmp.path().to_owned();
    stage_zones(&cfg).unwrap();
    stage_posemap(&cfg).unwrap();
    assert_eq!(write_manifest(tmp.path()).unwrap().digest, m.digest);
}

#[test]
fn overrides_change_the_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let (store, m) = common::small_bundle(&tmp.path().join("a"));
    let cfg = PipelineConfig::from_toml("", &["occupancy.resolution=0.1".into(), "posemap.grid.orientation_bins=4".into()]).unwrap();
    let m2 = semtopo::pipeline::run_synthetic(&store, &cfg, &tmp.path().join("b")).unwrap();
    assert_ne!(m.digest, m2.digest);
    assert_eq!(m.artifacts["topology.json"], m2.artifacts["topology.json"]);
    assert_ne!(m.artifacts["posemap.bin"], m2.artifacts["posemap.bin"]);
}
