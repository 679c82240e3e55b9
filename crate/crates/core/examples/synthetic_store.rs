//! Generate a synthetic store and write its scan inputs.
//!
//!     cargo run --example synthetic_store -- [out_dir]

use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    let tmp = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| tmp.path().to_owned());
    store.write_inputs(&out)?;

    let detections: usize = store.frames.iter().map(|f| f.detections.len()).sum();
    println!("store {:.1} x {:.1} m, {} aisles", store.width, store.height, store.aisle_centers.len());
    println!("{} products, {} frames, {} detections", store.products.len(), store.frames.len(), detections);
    for p in store.products.iter().take(5) {
        println!("  {} {:<24} {:<12} ({:.2}, {:.2})", p.product_id, p.label.name, p.label.category, p.x, p.y);
    }
    println!("inputs written to {}", out.display());
    Ok(())
}
