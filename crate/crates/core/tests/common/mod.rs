#![allow(dead_code)]

use semtopo::pipeline::{run_synthetic, Manifest, PipelineConfig};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use std::path::Path;

/// Two short aisles at 10 cm cells: big enough to route and localize in,
/// small enough to build in well under a second.
pub fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        aisles: 2,
        products: 30,
        aisle_length: 4.0,
        resolution: 0.1,
        closed_back: None,
        ..SyntheticConfig::default()
    }
}

pub fn small_bundle(out: &Path) -> (SyntheticStore, Manifest) {
    let store = SyntheticStore::generate(&small_config()).expect("store");
    let mut cfg = PipelineConfig::default();
    // the cloud is only as dense as the store's own grid
    cfg.occupancy.resolution = store.config.resolution;
    let m = run_synthetic(&store, &cfg, out).expect("bundle");
    (store, m)
}
