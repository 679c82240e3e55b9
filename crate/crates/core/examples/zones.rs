//! Classify products into zones and paint the floor with them.

use semtopo::zones::{assign_zones, vote_overlay, VoteConfig, ZoneRules, ZonesFile};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    let grid = store.truth_grid();
    let catalog = assign_zones(&store.products, &ZoneRules::default())?;
    let overlay = vote_overlay(&grid, &catalog, &store.products, &VoteConfig::default())?;

    let mut cells = vec![0usize; overlay.zones.len()];
    for z in overlay.cells.iter().flatten() {
        cells[*z as usize] += 1;
    }
    let zones = ZonesFile::new(&catalog, &overlay);
    for (i, name) in overlay.zones.iter().enumerate() {
        let products = catalog.product_zone.values().filter(|&&z| z == i).count();
        let anchor = zones.anchor(name).map(|a| format!("({:.2}, {:.2})", a.x, a.y)).unwrap_or_default();
        println!("{name:<22} {products:>3} products {:>6} cells  anchor {anchor}", cells[i]);
    }
    Ok(())
}
