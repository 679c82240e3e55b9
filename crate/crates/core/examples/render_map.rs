//! Draw a bundle's map with zones, graph, products and a route.
//!
//!     cargo run --example render_map -- [out.png]

use semtopo::pipeline::{run_synthetic, MapBundle, PipelineConfig};
use semtopo::render::{encode_png, render_map, Layers, RenderOptions};
use semtopo::routing::RouteTarget;
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "map.png".into());
    let tmp = tempfile::tempdir()?;
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    run_synthetic(&store, &PipelineConfig::default(), tmp.path())?;
    let b = MapBundle::load(tmp.path())?;

    let goal = &b.products[b.products.len() / 2];
    let plan = b.route(store.walkway_points(1.0)[0], &RouteTarget::Product(goal.product_id.clone()))?;
    let layers = Layers { overlay: Some(&b.overlay), topology: Some(&b.topology), products: &b.products, route: Some(&plan) };
    let img = render_map(&b.grid, layers, &RenderOptions { scale: 3, ..Default::default() });
    std::fs::write(&out, encode_png(&img)?)?;
    println!("{} x {} px -> {out}", img.width(), img.height());
    Ok(())
}
