//! Skeletonize a small floor plan into a topological graph.

use semtopo::ingest::{ProductLabel, ProductRecord};
use semtopo::spatial::{OccupancyGrid, WorldPoint};
use semtopo::topology::{build_topology, TopologyConfig};

const PLAN: &[&str] = &[
    "##############################",
    "#............................#",
    "#............................#",
    "#............................#",
    "#...######.....######.....####",
    "#...######.....######.....####",
    "#...######.....######.....####",
    "#...######.....######.....####",
    "#...######.....######.....####",
    "#............................#",
    "#............................#",
    "#............................#",
    "##############################",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = OccupancyGrid::from_ascii(PLAN, 0.25, WorldPoint::new(0.0, 0.0))?;
    let products = vec![ProductRecord {
        product_id: "p0".into(),
        label: ProductLabel::new("Basmati Rice 1kg", "Daawat", "bag", "rice"),
        x: 3.1,
        y: 1.6,
        refined: false,
        frame_id: "f0".into(),
    }];
    let g = build_topology(&grid, &products, &TopologyConfig::default())?;
    println!("{} nodes, {} edges", g.nodes.len(), g.edges.len());
    for (i, n) in g.nodes.iter().enumerate() {
        println!("  node {i}: {:?} at ({:.2}, {:.2})", n.kind, n.x, n.y);
    }
    for e in &g.edges {
        println!("  edge {} - {}: {:.2} m", e.a, e.b, e.length);
    }
    for (id, b) in &g.bindings {
        println!("  {id} stops at ({:.2}, {:.2}) on edge {} - {}", b.px, b.py, b.edge[0], b.edge[1]);
    }
    Ok(())
}
