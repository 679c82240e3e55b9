//! Plan a route to a product and print the spoken instructions.

use semtopo::routing::{route, RouteConfig, RouteTarget};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use semtopo::topology::{build_topology, TopologyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    let grid = store.truth_grid();
    let graph = build_topology(&grid, &store.products, &TopologyConfig::default())?;

    let start = store.walkway_points(1.0)[0];
    let goal = store.products.last().expect("store has products");
    let plan = route(&graph, &grid, &store.products, start, &RouteTarget::Product(goal.product_id.clone()), &RouteConfig::default())?;

    println!("from ({:.2}, {:.2}) to {} at ({:.2}, {:.2})", start.x, start.y, goal.label.name, goal.x, goal.y);
    println!("{:.1} m, {} turns, {} landmarks", plan.total_length, plan.turn_count(), plan.landmarks.len());
    for (i, line) in plan.instructions.iter().enumerate() {
        println!("{:>2}. {line}", i + 1);
    }
    Ok(())
}
