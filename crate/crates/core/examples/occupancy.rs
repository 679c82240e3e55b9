//! Height-slice a point cloud into an occupancy grid and compare it with
//! the store's true floor plan.

use semtopo::ingest::{build_occupancy, OccupancyConfig};
use semtopo::spatial::CellState;
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    let grid = build_occupancy(&store.cloud, &store.viewpoints(), &OccupancyConfig::default())?;
    let truth = store.truth_grid();

    let (mut agree, mut known) = (0usize, 0usize);
    for (p, s) in grid.iter_points() {
        let Ok(t) = truth.world_to_grid(grid.grid_to_world(p)) else { continue };
        if s != CellState::Unknown {
            known += 1;
            agree += (truth.get(t) == s) as usize;
        }
    }
    println!("{} x {} cells at {} m", grid.width(), grid.height(), grid.resolution());
    for s in [CellState::Free, CellState::Occupied, CellState::Unknown] {
        println!("  {s:?}: {}", grid.count(s));
    }
    println!("observed cells matching the floor plan: {:.1}%", 100.0 * agree as f64 / known.max(1) as f64);

    let tmp = tempfile::tempdir()?;
    grid.save(&tmp.path().join("occupancy.pgm"), &tmp.path().join("occupancy.json"))?;
    println!("{}", std::fs::read_to_string(tmp.path().join("occupancy.json"))?);
    Ok(())
}
