//! Resolve shopping requests against a catalog, offline.
//!
//!     cargo run --example search -- "biryani for four"

use semtopo::search::{plan_query, SearchConfig, SearchIndex};
use semtopo::synthetic::{SyntheticConfig, SyntheticStore};
use semtopo::zones::{assign_zones, vote_overlay, VoteConfig, ZoneRules, ZonesFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = SyntheticStore::generate(&SyntheticConfig::default())?;
    let rules = ZoneRules::default();
    let catalog = assign_zones(&store.products, &rules)?;
    let overlay = vote_overlay(&store.truth_grid(), &catalog, &store.products, &VoteConfig::default())?;
    let index = SearchIndex::new(&store.products, &ZonesFile::new(&catalog, &overlay), &rules, SearchConfig::default())?;

    let queries: Vec<String> = match std::env::args().nth(1) {
        Some(q) => vec![q],
        None => vec!["biryani".into(), "ghee".into(), "masala chai for guests".into()],
    };
    for q in queries {
        let plan = plan_query(&index, &q, None)?;
        println!("{q:?} ({:?})", plan.source);
        for g in &plan.sub_goals {
            match g.results.first() {
                Some(r) => {
                    let what = r.product.as_ref().map_or("(zone)", |p| p.label.name.as_str());
                    println!("  {:<16} -> {:?} {what} in {}", g.query, r.tier, r.zone_name);
                }
                None => println!("  {:<16} -> nothing", g.query),
            }
        }
    }
    Ok(())
}
