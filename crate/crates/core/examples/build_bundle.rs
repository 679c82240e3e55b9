//! Run the whole pipeline on a synthetic capture and load the sealed bundle.
//!
//!     cargo run --example build_bundle -- [bundle_dir]

use semtopo::pipeline::{run_synthetic, MapBundle, PipelineConfig};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use std::path::PathBuf;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| tmp.path().to_owned());
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;

    let t = Instant::now();
    let manifest = run_synthetic(&store, &PipelineConfig::default(), &dir)?;
    println!("built in {:.2?}, digest {}", t.elapsed(), manifest.digest);
    for (name, a) in &manifest.artifacts {
        println!("  {name:<16} {:>9} bytes  {}", a.bytes, &a.sha256[..12]);
    }

    let b = MapBundle::load(&dir)?;
    println!(
        "loaded: {} products, {} nodes, {} zones, {} poses",
        b.products.len(),
        b.topology.nodes.len(),
        b.zones.zones.len(),
        b.posemap.len()
    );
    Ok(())
}
