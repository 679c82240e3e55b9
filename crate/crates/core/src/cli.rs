//! Command-line front end. Exit codes: 0 success, 1 domain error,
//! 2 usage or config error.

use crate::ingest::ProductLabel;
use crate::localization::localize;
use crate::pipeline::{
    self, load_grid, load_products_or_empty, MapBundle, PipelineConfig, PipelineError, TOPOLOGY_FILE,
};
use crate::render::{encode_png, render_map, Layers, RenderOptions};
use crate::routing::{RoutePlan, RouteTarget};
use crate::search::plan_query;
use crate::service::{self, AppState};
use crate::spatial::{OccupancyGrid, WorldPoint};
use crate::synthetic::{SyntheticConfig, SyntheticStore};
use crate::topology::build_topology;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Parser)]
#[command(name = "semtopo", version, about = "Semantic topological maps for indoor retail navigation")]
pub struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set occupancy.resolution=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Bundle directory; overrides the config's `output`.
    #[arg(long, global = true)]
    pub bundle: Option<PathBuf>,
    /// Report errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Height-slice the point cloud into occupancy.pgm.
    BuildOccupancy,
    /// Select keyframes and extract products from them.
    Keyframes,
    /// Skeletonize the map into topology.json and bind products.
    BuildTopology(TopologyArgs),
    /// Classify products into zones and paint the overlay.
    ClassifyZones,
    /// Precompute the pose map.
    BuildPosemap,
    /// Run every stage and seal the bundle.
    Build,
    /// Rank poses for a set of visible labels.
    Localize(LocalizeArgs),
    /// Plan a route to a product or zone.
    Route(RouteArgs),
    /// Resolve a shopping query.
    Search(SearchArgs),
    /// Render the map, optionally with a route, to PNG.
    RenderMap(RenderArgs),
    /// Serve the bundle over HTTP.
    Serve(ServeArgs),
    /// Generate a synthetic store and build its bundle.
    GenSynthetic(SyntheticArgs),
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// Occupancy PGM; its metadata is read from the same stem with `.json`.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub products: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// A visible label as `brand:category` (repeatable).
    #[arg(long = "label", value_parser = parse_label)]
    pub labels: Vec<ProductLabel>,
    /// JSON list of `{name, brand, category}`.
    #[arg(long)]
    pub labels_json: Option<PathBuf>,
    #[arg(short, long, default_value_t = service::DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Start as `x,y` in meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub from: WorldPoint,
    #[arg(long, conflicts_with = "zone", required_unless_present = "zone")]
    pub product: Option<String>,
    #[arg(long)]
    pub zone: Option<String>,
    /// Write route.json here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub query: String,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub route: Option<PathBuf>,
    #[arg(long, default_value = "map.png")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub scale: u32,
    #[arg(long)]
    pub no_zones: bool,
    #[arg(long)]
    pub no_topology: bool,
    #[arg(long)]
    pub no_products: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 4)]
    pub aisles: usize,
    #[arg(long, default_value_t = 100)]
    pub products: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Every product gets its own brand.
    #[arg(long)]
    pub unique_labels: bool,
    /// Also stock the front and back walls.
    #[arg(long)]
    pub stock_walls: bool,
    /// One product per shelf cell (ignores --products).
    #[arg(long)]
    pub full_shelves: bool,
    /// Output directory (bundle plus `inputs/`); defaults to the bundle dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<WorldPoint, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = x.trim().parse().map_err(|e| format!("x: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("y: {e}"))?;
    let p = WorldPoint::new(x, y);
    if !p.is_finite() {
        return Err("coordinates must be finite".into());
    }
    Ok(p)
}

fn parse_label(s: &str) -> Result<ProductLabel, String> {
    let (brand, category) = s.split_once(':').ok_or("expected brand:category")?;
    if brand.trim().is_empty() && category.trim().is_empty() {
        return Err("label is empty".into());
    }
    Ok(ProductLabel::new("", brand.trim(), "", category.trim()))
}

/// A failure with its exit code and machine-readable code.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { exit: 2, code: "usage".into(), message: message.into() }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        use crate::routing::RoutingError as R;
        let code = match &e {
            PipelineError::Config(_) => return Self { exit: 2, code: "config".into(), message: e.to_string() },
            PipelineError::MissingArtifact(_) => "missing_artifact",
            PipelineError::DigestMismatch(_) => "digest_mismatch",
            PipelineError::SchemaVersion { .. } => "schema_version",
            PipelineError::Routing(R::Unreachable) => "unreachable",
            PipelineError::Routing(R::NoVisibleEdge { .. }) => "no_visible_edge",
            PipelineError::Routing(R::UnknownProduct(_)) => "unknown_product",
            PipelineError::Routing(_) => "routing",
            PipelineError::Ingest(_) => "ingest",
            PipelineError::Spatial(_) => "spatial",
            PipelineError::Topology(_) => "topology",
            PipelineError::Zones(_) => "zones",
            PipelineError::Localization(_) => "localization",
            PipelineError::Search(_) => "search",
            PipelineError::Io(_) => "io",
            PipelineError::Json(_) => "json",
        };
        Self { exit: 1, code: code.into(), message: e.to_string() }
    }
}

fn domain(code: &str, e: impl std::fmt::Display) -> CliError {
    CliError { exit: 1, code: code.into(), message: e.to_string() }
}

fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).map_err(|e| domain("json", e))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(domain("io", e)),
        _ => Ok(()),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(b) = &cli.bundle {
        cfg.output = b.clone();
    }
    Ok(cfg)
}

fn load_bundle(cfg: &PipelineConfig) -> Result<MapBundle, PipelineError> {
    let mut b = MapBundle::load(&cfg.output)?;
    // the model endpoint is a runtime choice, not part of the sealed bundle
    if cfg.language_model.url.is_some() {
        b.config.language_model = cfg.language_model.clone();
    }
    Ok(b)
}

fn sidecar(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::BuildOccupancy => {
            let g = pipeline::stage_occupancy(&cfg)?;
            print_json(&json!({"stage": "build-occupancy", "width": g.width(), "height": g.height()}))
        }
        Command::Keyframes => {
            let (products, report) = pipeline::stage_keyframes(&cfg)?;
            print_json(&json!({"stage": "keyframes", "keyframes": report.keyframes.len(), "products": products.len()}))
        }
        Command::BuildTopology(a) => {
            let grid = match &a.map {
                Some(p) => OccupancyGrid::load(p, &sidecar(p)).map_err(PipelineError::from)?,
                None => load_grid(&cfg.output)?,
            };
            let products = match &a.products {
                Some(p) => crate::ingest::read_products(p).map_err(PipelineError::from)?,
                None if a.map.is_some() => Vec::new(),
                None => load_products_or_empty(&cfg.output)?,
            };
            let graph = build_topology(&grid, &products, &cfg.topology).map_err(PipelineError::from)?;
            let out = a.out.clone().unwrap_or_else(|| cfg.output.join(TOPOLOGY_FILE));
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(PipelineError::from)?;
            }
            graph.save(&out).map_err(PipelineError::from)?;
            if a.out.is_none() {
                pipeline::write_manifest(&cfg.output)?;
            }
            print_json(&json!({"stage": "build-topology", "nodes": graph.nodes.len(), "edges": graph.edges.len(), "path": out}))
        }
        Command::ClassifyZones => {
            let (zones, _) = pipeline::stage_zones(&cfg)?;
            print_json(&json!({"stage": "classify-zones", "zones": zones.zones.len(), "anchors": zones.anchors.len()}))
        }
        Command::BuildPosemap => {
            let m = pipeline::stage_posemap(&cfg)?;
            print_json(&json!({"stage": "build-posemap", "poses": m.len(), "sentinels": m.sentinel_count()}))
        }
        Command::Build => {
            let m = pipeline::run_all(&cfg)?;
            print_json(&json!({"stage": "build", "digest": m.digest, "artifacts": m.artifacts.len()}))
        }
        Command::Localize(a) => {
            let mut labels = a.labels.clone();
            if let Some(p) = &a.labels_json {
                let text = std::fs::read(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
                let extra: Vec<crate::service::LabelInput> =
                    serde_json::from_slice(&text).map_err(|e| CliError::usage(e.to_string()))?;
                labels.extend(extra.iter().map(|l| ProductLabel::new(&l.name, &l.brand, "", &l.category)));
            }
            if labels.is_empty() {
                return Err(CliError::usage("give at least one --label or --labels-json"));
            }
            if a.k == 0 {
                return Err(CliError::usage("k must be at least 1"));
            }
            let b = load_bundle(&cfg)?;
            let h = localize(&labels, &b.posemap, &b.provider, a.k).map_err(PipelineError::from)?;
            print_json(&json!({ "hypotheses": h }))
        }
        Command::Route(a) => {
            let b = load_bundle(&cfg)?;
            let target = match (&a.product, &a.zone) {
                (Some(id), _) => RouteTarget::Product(id.clone()),
                (None, Some(z)) => b.zone_target(z).ok_or_else(|| domain("unknown_zone", format!("unknown zone {z:?}")))?,
                (None, None) => return Err(CliError::usage("give --product or --zone")),
            };
            let plan = b.route(a.from, &target)?;
            if let Some(out) = &a.out {
                plan.save(out).map_err(PipelineError::from)?;
            }
            print_json(&plan)
        }
        Command::Search(a) => {
            let b = load_bundle(&cfg)?;
            let client = b.language_client();
            let plan = plan_query(&b.search, &a.query, client.as_ref().map(|c| c as _)).map_err(PipelineError::from)?;
            print_json(&plan)
        }
        Command::RenderMap(a) => {
            let b = load_bundle(&cfg)?;
            let route = match &a.route {
                Some(p) => Some(RoutePlan::load(p).map_err(PipelineError::from)?),
                None => None,
            };
            let opts = RenderOptions {
                scale: a.scale,
                zones: !a.no_zones,
                topology: !a.no_topology,
                products: !a.no_products,
                ..Default::default()
            };
            let layers = Layers {
                overlay: Some(&b.overlay),
                topology: Some(&b.topology),
                products: &b.products,
                route: route.as_ref(),
            };
            let png = encode_png(&render_map(&b.grid, layers, &opts)).map_err(|e| domain("render", e))?;
            std::fs::write(&a.out, png).map_err(PipelineError::from)?;
            print_json(&json!({"stage": "render-map", "path": a.out}))
        }
        Command::Serve(a) => {
            let state = match load_bundle(&cfg) {
                Ok(b) => Some(Arc::new(AppState::new(b).map_err(|e| domain("render", e))?)),
                Err(PipelineError::MissingArtifact(m)) => {
                    tracing::warn!("bundle not available ({m}); serving 503");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| domain("io", e))?;
            rt.block_on(service::serve(state, &a.bind)).map_err(|e| domain("io", e))
        }
        Command::GenSynthetic(a) => {
            let mut syn = SyntheticConfig {
                aisles: a.aisles,
                products: a.products,
                seed: a.seed,
                unique_labels: a.unique_labels,
                stock_walls: a.stock_walls,
                ..Default::default()
            };
            // the split back corridor needs a shelf unit between two aisles
            syn.closed_back = syn.closed_back.filter(|&k| k + 1 < syn.aisles);
            if a.full_shelves {
                syn.products = syn.shelf_cells();
            }
            let store = SyntheticStore::generate(&syn).map_err(CliError::usage)?;
            let out = a.out.clone().unwrap_or_else(|| cfg.output.clone());
            let m = pipeline::run_synthetic(&store, &cfg, &out)?;
            print_json(&json!({"stage": "gen-synthetic", "digest": m.digest, "products": store.products.len(), "bundle": out}))
        }
    }
}

/// Parses `args`, runs, reports, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if cli.json {
                eprintln!("{}", json!({"error": {"code": e.code, "message": e.message}}));
            } else {
                eprintln!("error: {}", e.message);
            }
            e.exit
        }
    }
}
