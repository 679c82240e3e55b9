//! Build a synthetic bundle and serve it over HTTP until interrupted.
//!
//!     cargo run --example serve -- [127.0.0.1:8080]
//!     curl -s localhost:8080/health
//!     curl -s -XPOST localhost:8080/search -d '{"query":"biryani"}'

use semtopo::pipeline::{run_synthetic, MapBundle, PipelineConfig};
use semtopo::service::{serve, AppState};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use std::sync::Arc;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let addr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8080".into());
    let tmp = tempfile::tempdir()?;
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    run_synthetic(&store, &PipelineConfig::default(), tmp.path())?;
    let state = AppState::new(MapBundle::load(tmp.path())?)?;
    println!("serving {} on http://{addr}", state.bundle.manifest.digest);
    serve(Some(Arc::new(state)), &addr).await?;
    Ok(())
}
