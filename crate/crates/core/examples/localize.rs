//! Precompute a pose map, then recover a pose from the labels it sees.

use semtopo::ingest::ProductRecord;
use semtopo::localization::{build_pose_map, localize, raycast_visible, HashedBagOfTokens, PoseGridSpec};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::unique_shelves())?;
    let grid = store.truth_grid();
    let provider = HashedBagOfTokens::default();
    let spec = PoseGridSpec::default();
    let map = build_pose_map(&grid, &store.products, &spec, &provider)?;
    println!("{} poses, {} see nothing", map.len(), map.sentinel_count());

    let truth = &map.poses[map.len() / 3];
    let seen = raycast_visible(&grid, &store.products, &truth.pose, &spec)?;
    let labels: Vec<_> = seen
        .iter()
        .filter_map(|id| store.products.iter().find(|p| &p.product_id == id))
        .map(|p: &ProductRecord| p.label.clone())
        .collect();
    let (x, y, deg) = (truth.pose.position.x, truth.pose.position.y, truth.pose.heading.to_degrees());
    println!("true pose ({x:.2}, {y:.2}, {deg:.0} deg) sees {} labels, e.g.", labels.len());
    for l in labels.iter().take(4) {
        println!("  {} / {}", l.brand, l.category);
    }
    for h in localize(&labels, &map, &provider, 3)? {
        println!("#{} score {:.3} at ({:.2}, {:.2}, {:.0} deg)", h.rank, h.score, h.x, h.y, h.theta.to_degrees());
    }
    Ok(())
}
