//! Pipeline front end with explicit file handoffs between stages.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad schema, bad
//! references, bad domain values), 2 on I/O errors. No subcommand mutates
//! its inputs, and every stage is byte-deterministic given the same inputs
//! and seed.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;
use spacevec::classifier::{
    assemble_features, cluster_personalities, cross_validate, label_histograms,
    read_feedback_csv, read_linked_feedback_csv, recommend_cells, split_plan, train_forest,
    write_linked_feedback_csv, ForestModel,
};
use spacevec::derive_seed;
use spacevec::embedding::{
    export_similarity_csv, export_similarity_geojson, random_walks, similarity_map,
    train_skipgram, EmbeddingMatrix,
};
use spacevec::geometry::Point;
use spacevec::graph::{
    build_graph, discretize, knn_build, link_feedback, AttributedGraph, Cell, GraphOptions,
    KnnConfig, KnnIndex, LocatedVote,
};
use spacevec::harness::{evaluate, generate_scene, EvaluateConfig, SceneConfig, SimConfig};
use spacevec::localization::{preprocess_stream, read_fixes_csv, snap_to_cell, write_fixes_csv};
use spacevec::spatial::{
    parse_floorplan, parse_ifc_subset, serialize_floorplan, AoiParams, ObjectKind, SpatialError,
    SpatialModel,
};

enum CliError {
    Validation(String),
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SpatialError> for CliError {
    fn from(e: SpatialError) -> Self {
        match e {
            SpatialError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(
    spacevec::graph::GraphError,
    spacevec::embedding::EmbeddingError,
    spacevec::classifier::ClassifierError,
    spacevec::localization::LocalizationError,
    spacevec::harness::HarnessError
);

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "spacevec",
    about = "Building digital-twin pipeline: cell graphs, embeddings, thermal-preference models"
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config file. Required by seeded stages.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config out_dir or the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a floor plan (canonical JSON or a STEP subset) and normalize it.
    Ingest(IngestArgs),
    /// Discretize spaces into the square cell lattice.
    Discretize(SceneArgs),
    /// Assemble the attributed graph and export its adjacency list.
    BuildGraph(BuildGraphArgs),
    /// Clean fix streams and snap fixes/votes to cells.
    Locate(LocateArgs),
    /// Learn node embeddings from the adjacency list.
    Embed(EmbedArgs),
    /// Export the similarity map of one anchor cell.
    SimilarityMap(SimilarityMapArgs),
    /// Train the preference forest on linked feedback.
    Train(TrainArgs),
    /// Run the shuffled-split validation protocol.
    CrossValidate(TrainArgs),
    /// Rank cells by predicted comfort for given wearable signals.
    Recommend(RecommendArgs),
    /// Generate a synthetic scene and occupant streams.
    Simulate(SimulateArgs),
    /// Run the full pipeline and the baseline comparison.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input floor plan: .json, or .ifc/.stp/.step for the STEP subset.
    #[arg(long)]
    input: PathBuf,
    /// Output file name (under --out).
    #[arg(long, default_value = "floorplan.json")]
    output: String,
}

#[derive(Args)]
struct SceneArgs {
    /// Floor-plan JSON (defaults to the config paths.scene).
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args)]
struct BuildGraphArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Ablation: skip cell-cell ADJACENT edges.
    #[arg(long)]
    no_cell_adjacency: bool,
    /// Linked feedback CSV to merge into the graph (optional).
    #[arg(long)]
    linked_feedback: Option<PathBuf>,
    /// Personalities CSV (`user_id,personality`) for occupant nodes.
    #[arg(long)]
    personalities: Option<PathBuf>,
}

#[derive(Args)]
struct LocateArgs {
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Raw fix stream CSV (defaults to config paths.fixes).
    #[arg(long)]
    fixes: Option<PathBuf>,
    /// Raw feedback CSV (defaults to config paths.feedback).
    #[arg(long)]
    feedback: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Adjacency list input (default: <out>/edges_linked.tsv, falling back
    /// to <out>/edges.tsv).
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityMapArgs {
    #[arg(long)]
    anchor: String,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    cells: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Min-max normalize similarities for display.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    linked_feedback: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Heart rate, bpm.
    #[arg(long)]
    hr: f64,
    /// Near-body temperature, degrees C.
    #[arg(long)]
    temp: f64,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scene preset.
    #[arg(long, value_parser = ["heterogeneous", "homogeneous", "replica", "small"])]
    preset: Option<String>,
    /// Scene config TOML (overrides --preset).
    #[arg(long)]
    scene_config: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    users: usize,
    #[arg(long, default_value_t = 6)]
    days: usize,
    /// Position error bound sigma in meters (0 = exact positions).
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_parser = ["heterogeneous", "homogeneous", "small"], default_value = "heterogeneous")]
    preset: String,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(()) => 0,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(CliError::Io(message)) => {
            eprintln!("I/O error: {message}");
            2
        }
    });
}

struct Context {
    config: PipelineConfig,
    seed: Option<u64>,
    out_dir: PathBuf,
}

impl Context {
    fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Validation(
                "a seed is required: pass --seed or set `seed` in the config file".to_string(),
            )
        })
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> CliResult {
        fs::create_dir_all(&self.out_dir)?;
        fs::write(self.out_path(name), contents)?;
        println!("wrote {}", self.out_path(name).display());
        Ok(())
    }

    fn scene_path(&self, flag: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.clone()
            .or_else(|| self.config.paths.scene.as_ref().map(PathBuf::from))
            .ok_or_else(|| {
                CliError::Validation("no scene given: pass --scene or set paths.scene".to_string())
            })
    }

    fn load_model(&self, path: &Path) -> Result<SpatialModel, CliError> {
        let extension = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        let (mut model, warnings) = match extension.as_str() {
            "ifc" | "stp" | "step" => {
                let text = fs::read_to_string(path)?;
                parse_ifc_subset(&text)?
            }
            _ => {
                let bytes = fs::read(path)?;
                parse_floorplan(&bytes)?
            }
        };
        for warning in warnings {
            eprintln!("warning: {warning}");
        }
        // AoI overrides from config: window bands that rely on the default
        // depth get the configured one.
        for object in &mut model.objects {
            if object.kind == ObjectKind::Window {
                if let Some(AoiParams::Window { depth_m, .. }) = &mut object.aoi {
                    if depth_m.is_none() {
                        *depth_m = Some(self.config.aoi.window_depth_m);
                    }
                }
            }
        }
        Ok(model)
    }
}

fn run(cli: Cli) -> CliResult {
    let config: PipelineConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("config: {e}")))?
        }
        None => PipelineConfig::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context {
        seed: cli.seed.or(config.seed),
        config,
        out_dir,
    };
    match cli.command {
        Command::Ingest(args) => cmd_ingest(&ctx, &args),
        Command::Discretize(args) => cmd_discretize(&ctx, &args),
        Command::BuildGraph(args) => cmd_build_graph(&ctx, &args),
        Command::Locate(args) => cmd_locate(&ctx, &args),
        Command::Embed(args) => cmd_embed(&ctx, &args),
        Command::SimilarityMap(args) => cmd_similarity_map(&ctx, &args),
        Command::Train(args) => cmd_train(&ctx, &args),
        Command::CrossValidate(args) => cmd_cross_validate(&ctx, &args),
        Command::Recommend(args) => cmd_recommend(&ctx, &args),
        Command::Simulate(args) => cmd_simulate(&ctx, &args),
        Command::Evaluate(args) => cmd_evaluate(&ctx, &args),
    }
}

fn cells_to_csv(cells: &[Cell]) -> String {
    let mut out = String::from("cell_id,x,y,space_id\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            cell.id, cell.center.x, cell.center.y, cell.space_id
        ));
    }
    out
}

fn cells_from_csv(text: &str) -> Result<Vec<Cell>, CliError> {
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "cell_id,x,y,space_id" {
                return Err(CliError::Validation(format!(
                    "cells file: expected header cell_id,x,y,space_id, got '{line}'"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(CliError::Validation(format!(
                "cells file line {}: expected 4 fields",
                i + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|_| CliError::Validation(format!("cells file line {}: bad number", i + 1)))
        };
        cells.push(Cell {
            id: parts[0].to_string(),
            center: Point::new(parse(parts[1])?, parse(parts[2])?),
            space_id: parts[3].to_string(),
        });
    }
    Ok(cells)
}

fn personalities_to_csv(map: &BTreeMap<String, usize>) -> String {
    let mut out = String::from("user_id,personality\n");
    for (user, personality) in map {
        out.push_str(&format!("{user},{personality}\n"));
    }
    out
}

fn personalities_from_csv(text: &str) -> Result<BTreeMap<String, usize>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let (user, personality) = line.split_once(',').ok_or_else(|| {
            CliError::Validation(format!("personalities file line {}: expected 2 fields", i + 1))
        })?;
        let id: usize = personality.parse().map_err(|_| {
            CliError::Validation(format!("personalities file line {}: bad cluster id", i + 1))
        })?;
        map.insert(user.to_string(), id);
    }
    Ok(map)
}

fn cmd_ingest(ctx: &Context, args: &IngestArgs) -> CliResult {
    let model = ctx.load_model(&args.input)?;
    println!(
        "parsed {} levels, {} spaces, {} objects",
        model.levels.len(),
        model.spaces.len(),
        model.objects.len()
    );
    ctx.write(&args.output, &serialize_floorplan(&model))
}

fn cmd_discretize(ctx: &Context, args: &SceneArgs) -> CliResult {
    let model = ctx.load_model(&ctx.scene_path(&args.scene)?)?;
    let (cells, warnings) = discretize(&model, ctx.config.cell_size)?;
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
    println!("{} cells at cell_size {}", cells.len(), ctx.config.cell_size);
    ctx.write("cells.csv", &cells_to_csv(&cells))
}

fn cmd_build_graph(ctx: &Context, args: &BuildGraphArgs) -> CliResult {
    let model = ctx.load_model(&ctx.scene_path(&args.scene)?)?;
    let (cells, _) = discretize(&model, ctx.config.cell_size)?;
    let options = GraphOptions {
        cell_size: ctx.config.cell_size,
        include_cell_adjacency: !args.no_cell_adjacency,
    };
    let mut graph = build_graph(&model, &cells, &options);

    if let Some(feedback_path) = &args.linked_feedback {
        let records = read_linked_feedback_csv(fs::File::open(feedback_path)?)?;
        let personalities = match &args.personalities {
            Some(path) => personalities_from_csv(&fs::read_to_string(path)?)?,
            None => BTreeMap::new(),
        };
        let by_id: BTreeMap<&str, &Cell> = cells.iter().map(|c| (c.id.as_str(), c)).collect();
        let level_of_space: BTreeMap<&str, i32> = model
            .spaces
            .iter()
            .map(|s| {
                (
                    s.id.as_str(),
                    model.level(&s.level_id).map(|l| l.index).unwrap_or(0),
                )
            })
            .collect();
        let votes: Vec<LocatedVote> = records
            .iter()
            .map(|r| {
                let cell = by_id.get(r.cell_id.as_str()).ok_or_else(|| {
                    CliError::Validation(format!("linked feedback references unknown cell {}", r.cell_id))
                })?;
                Ok(LocatedVote {
                    user_id: r.user_id.clone(),
                    timestamp: r.timestamp,
                    level_index: level_of_space[cell.space_id.as_str()],
                    position: cell.center,
                    label: r.label,
                    heart_rate: r.heart_rate,
                    near_body_temp: r.near_body_temp,
                })
            })
            .collect::<Result<_, CliError>>()?;
        let items: Vec<(String, Point)> = cells.iter().map(|c| (c.id.clone(), c.center)).collect();
        let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
        for level in &model.levels {
            let on_level: Vec<(String, Point)> = items
                .iter()
                .filter(|(id, _)| {
                    by_id
                        .get(id.as_str())
                        .map(|c| level_of_space[c.space_id.as_str()] == level.index)
                        .unwrap_or(false)
                })
                .cloned()
                .collect();
            if !on_level.is_empty() {
                indices.insert(level.index, knn_build(&on_level, KnnConfig::default()));
            }
        }
        link_feedback(&mut graph, &votes, &personalities, &indices)?;
        ctx.write("edges_linked.tsv", &graph.export_adjacency_list())?;
    } else {
        ctx.write("edges.tsv", &graph.export_adjacency_list())?;
    }
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());
    ctx.write("census.csv", &graph.export_census_csv())
}

fn cmd_locate(ctx: &Context, args: &LocateArgs) -> CliResult {
    let model = ctx.load_model(&ctx.scene_path(&args.scene)?)?;
    let (cells, _) = discretize(&model, ctx.config.cell_size)?;
    let level_of_space: BTreeMap<&str, i32> = model
        .spaces
        .iter()
        .map(|s| {
            (
                s.id.as_str(),
                model.level(&s.level_id).map(|l| l.index).unwrap_or(0),
            )
        })
        .collect();
    let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
    for level in &model.levels {
        let on_level: Vec<(String, Point)> = cells
            .iter()
            .filter(|c| level_of_space[c.space_id.as_str()] == level.index)
            .map(|c| (c.id.clone(), c.center))
            .collect();
        if !on_level.is_empty() {
            indices.insert(level.index, knn_build(&on_level, KnnConfig::default()));
        }
    }

    let fixes_path = args
        .fixes
        .clone()
        .or_else(|| ctx.config.paths.fixes.as_ref().map(PathBuf::from));
    if let Some(path) = fixes_path {
        let fixes = read_fixes_csv(fs::File::open(&path)?)?;
        let kept = preprocess_stream(&fixes, &ctx.config.preprocess_config());
        let mut buffer = Vec::new();
        write_fixes_csv(&mut buffer, &kept)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        ctx.write("fixes_clean.csv", &String::from_utf8_lossy(&buffer))?;

        let mut snapped = String::from("user_id,timestamp,cell_id\n");
        for fix in &kept {
            let index = indices
                .get(&fix.floor)
                .ok_or_else(|| CliError::Validation(format!("no cells on level {}", fix.floor)))?;
            let cell = snap_to_cell(fix, &model.transform, index)?;
            snapped.push_str(&format!("{},{},{}\n", fix.user_id, fix.timestamp, cell));
        }
        println!("kept {} of {} fixes", kept.len(), fixes.len());
        ctx.write("snapped_fixes.csv", &snapped)?;
    }

    let feedback_path = args
        .feedback
        .clone()
        .or_else(|| ctx.config.paths.feedback.as_ref().map(PathBuf::from));
    if let Some(path) = feedback_path {
        let seed = ctx.require_seed()?;
        let rows = read_feedback_csv(fs::File::open(&path)?)?;
        let mut located = Vec::with_capacity(rows.len());
        for row in &rows {
            located.push(LocatedVote {
                user_id: row.user_id.clone(),
                timestamp: row.timestamp,
                level_index: row.floor,
                position: model.transform.global_to_local(row.lat, row.lon)?,
                label: row.label,
                heart_rate: row.heart_rate,
                near_body_temp: row.near_body_temp,
            });
        }
        // Linking does not need the spatial graph; a scratch graph collects
        // the feedback nodes and the records carry the cell assignments.
        let mut scratch = AttributedGraph::new();
        let linked = link_feedback(&mut scratch, &located, &BTreeMap::new(), &indices)?;
        let histograms = label_histograms(&linked);
        let k = ctx.config.localization.personality_clusters.min(histograms.len());
        let personalities = cluster_personalities(&histograms, k, derive_seed(seed, 5))?;
        let mut buffer = Vec::new();
        write_linked_feedback_csv(&mut buffer, &linked)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        println!("linked {} votes from {} users", linked.len(), histograms.len());
        ctx.write("linked_feedback.csv", &String::from_utf8_lossy(&buffer))?;
        ctx.write("personalities.csv", &personalities_to_csv(&personalities))?;
    }
    Ok(())
}

fn cmd_embed(ctx: &Context, args: &EmbedArgs) -> CliResult {
    let seed = ctx.require_seed()?;
    let edges_path = match &args.edges {
        Some(path) => path.clone(),
        None => {
            let linked = ctx.out_path("edges_linked.tsv");
            if linked.exists() {
                linked
            } else {
                ctx.out_path("edges.tsv")
            }
        }
    };
    let text = fs::read_to_string(&edges_path)?;
    let graph = AttributedGraph::from_adjacency_list(&text)?;
    let corpus = random_walks(&graph, &ctx.config.walk_params(derive_seed(seed, 3)));
    let embeddings = train_skipgram(&corpus, &ctx.config.skipgram_params(derive_seed(seed, 4)))?;
    println!(
        "embedded {} nodes in {} dimensions from {}",
        embeddings.len(),
        embeddings.dim(),
        edges_path.display()
    );
    ctx.write("embeddings.tsv", &embeddings.export_tsv())
}

fn cmd_similarity_map(ctx: &Context, args: &SimilarityMapArgs) -> CliResult {
    let embeddings_path = args
        .embeddings
        .clone()
        .unwrap_or_else(|| ctx.out_path("embeddings.tsv"));
    let cells_path = args.cells.clone().unwrap_or_else(|| ctx.out_path("cells.csv"));
    let embeddings = EmbeddingMatrix::parse_tsv(&fs::read_to_string(&embeddings_path)?)?;
    let cells = cells_from_csv(&fs::read_to_string(&cells_path)?)?;
    let model = ctx.load_model(&ctx.scene_path(&args.scene)?)?;
    let rows = similarity_map(&embeddings, &args.anchor, &cells)?;
    let csv = export_similarity_csv(&rows, &cells, args.normalize);
    let geojson = export_similarity_geojson(&rows, &cells, &model.transform, args.normalize)?;
    ctx.write(&format!("simmap_{}.csv", args.anchor), &csv)?;
    ctx.write(&format!("simmap_{}.geojson", args.anchor), &geojson)
}

fn load_training_inputs(
    ctx: &Context,
    args: &TrainArgs,
) -> Result<(Vec<spacevec::classifier::FeedbackRecord>, EmbeddingMatrix), CliError> {
    let feedback_path = args
        .linked_feedback
        .clone()
        .unwrap_or_else(|| ctx.out_path("linked_feedback.csv"));
    let embeddings_path = args
        .embeddings
        .clone()
        .unwrap_or_else(|| ctx.out_path("embeddings.tsv"));
    let records = read_linked_feedback_csv(fs::File::open(&feedback_path)?)?;
    let embeddings = EmbeddingMatrix::parse_tsv(&fs::read_to_string(&embeddings_path)?)?;
    Ok((records, embeddings))
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> CliResult {
    let seed = ctx.require_seed()?;
    let (records, embeddings) = load_training_inputs(ctx, args)?;
    let dataset = assemble_features(&records, &embeddings, &BTreeMap::new())?;
    let model = train_forest(
        &dataset.features,
        &dataset.labels,
        &ctx.config.forest_params(),
        derive_seed(seed, 7),
    )?;
    if model.degenerate {
        eprintln!("warning: single-class training data; model is a constant predictor");
    }
    let accuracy = model.accuracy(&dataset.features, &dataset.labels)?;
    println!(
        "trained {} trees on {} rows x {} features, training accuracy {:.3}",
        model.trees.len(),
        dataset.len(),
        dataset.n_features(),
        accuracy
    );
    let json = serde_json::to_string(&model)
        .map_err(|e| CliError::Validation(format!("model serialization: {e}")))?;
    ctx.write("model.json", &json)
}

fn cmd_cross_validate(ctx: &Context, args: &TrainArgs) -> CliResult {
    let seed = ctx.require_seed()?;
    let (records, embeddings) = load_training_inputs(ctx, args)?;
    let dataset = assemble_features(&records, &embeddings, &BTreeMap::new())?;
    let plan = split_plan(
        dataset.len(),
        ctx.config.splits.n_splits,
        ctx.config.splits.test_fraction,
        derive_seed(seed, 6),
    )?;
    let metrics = cross_validate(&dataset, &plan, &ctx.config.forest_params(), derive_seed(seed, 7))?;
    println!(
        "{} splits ({} test rows each): mean test accuracy {:.3} +- {:.3}",
        plan.splits.len(),
        plan.splits[0].test.len(),
        metrics.mean_test_accuracy,
        metrics.sd_test_accuracy
    );
    ctx.write("metrics.json", &metrics.to_json())
}

fn cmd_recommend(ctx: &Context, args: &RecommendArgs) -> CliResult {
    let model_path = args.model.clone().unwrap_or_else(|| ctx.out_path("model.json"));
    let embeddings_path = args
        .embeddings
        .clone()
        .unwrap_or_else(|| ctx.out_path("embeddings.tsv"));
    let cells_path = args.cells.clone().unwrap_or_else(|| ctx.out_path("cells.csv"));
    let model: ForestModel = serde_json::from_str(&fs::read_to_string(&model_path)?)
        .map_err(|e| CliError::Validation(format!("model file: {e}")))?;
    let embeddings = EmbeddingMatrix::parse_tsv(&fs::read_to_string(&embeddings_path)?)?;
    let cells = cells_from_csv(&fs::read_to_string(&cells_path)?)?;
    if args.top < 1 {
        return Err(CliError::Validation("--top must be >= 1".to_string()));
    }
    let cell_ids: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let ranked = recommend_cells(&model, &embeddings, &cell_ids, args.hr, args.temp, args.top)?;
    let mut out = String::from("rank,cell_id,comfort_probability\n");
    println!("top {} cells for hr {} bpm, near-body temp {} C:", ranked.len(), args.hr, args.temp);
    for (i, (cell, score)) in ranked.iter().enumerate() {
        println!("  {:>3}. {cell}  P(no preference) = {score:.3}", i + 1);
        out.push_str(&format!("{},{cell},{score}\n", i + 1));
    }
    ctx.write("recommendations.csv", &out)
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> CliResult {
    let seed = ctx.require_seed()?;
    let scene_config = match (&args.scene_config, &args.preset) {
        (Some(path), _) => SceneConfig::from_toml(&fs::read_to_string(path)?)?,
        (None, Some(preset)) => preset_scene(preset, derive_seed(seed, 1))?,
        (None, None) => SceneConfig::heterogeneous(derive_seed(seed, 1)),
    };
    let (model, field) = generate_scene(&scene_config)?;
    let (cells, _) = discretize(&model, scene_config.cell_size)?;
    let sim_config = SimConfig {
        n_users: args.users,
        days: args.days,
        position_noise_m: args.noise,
        seed: derive_seed(seed, 2),
        ..SimConfig::default()
    };
    let sim = spacevec::harness::simulate_occupants(&model, &cells, &field, &sim_config)?;

    ctx.write("scene.json", &serialize_floorplan(&model))?;
    ctx.write("scene_config.toml", &scene_config.to_toml())?;
    let mut buffer = Vec::new();
    write_fixes_csv(&mut buffer, &sim.fixes).map_err(|e| CliError::Validation(e.to_string()))?;
    ctx.write("fixes.csv", &String::from_utf8_lossy(&buffer))?;
    let mut buffer = Vec::new();
    spacevec::classifier::write_feedback_csv(&mut buffer, &sim.votes)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    ctx.write("feedback.csv", &String::from_utf8_lossy(&buffer))?;
    let mut truth = String::from("user_id,timestamp,true_cell_id,archetype\n");
    for g in &sim.ground_truth {
        truth.push_str(&format!(
            "{},{},{},{}\n",
            g.user_id, g.timestamp, g.true_cell_id, g.archetype
        ));
    }
    ctx.write("ground_truth.csv", &truth)?;
    let graph = build_graph(&model, &cells, &GraphOptions::default());
    println!(
        "simulated {} fixes and {} votes over {} cells",
        sim.fixes.len(),
        sim.votes.len(),
        cells.len()
    );
    ctx.write("census.csv", &graph.export_census_csv())
}

fn preset_scene(preset: &str, seed: u64) -> Result<SceneConfig, CliError> {
    Ok(match preset {
        "heterogeneous" => SceneConfig::heterogeneous(seed),
        "homogeneous" => SceneConfig::homogeneous(seed),
        "replica" => SceneConfig::case_study_replica(seed),
        "small" => SceneConfig::small(seed),
        other => return Err(CliError::Validation(format!("unknown preset '{other}'"))),
    })
}

fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> CliResult {
    let seed = ctx.require_seed()?;
    let cfg = match args.preset.as_str() {
        "heterogeneous" => EvaluateConfig::heterogeneous(seed),
        "homogeneous" => EvaluateConfig::homogeneous(seed),
        "small" => EvaluateConfig::small(seed),
        other => return Err(CliError::Validation(format!("unknown preset '{other}'"))),
    };
    let artifacts = evaluate(&cfg)?;
    ctx.write("report.json", &artifacts.report_json)?;
    ctx.write("report.txt", &artifacts.report_text)?;
    ctx.write("embeddings.tsv", &artifacts.embedding_tsv)?;
    ctx.write("edges.tsv", &artifacts.adjacency_list)?;
    ctx.write("census.csv", &artifacts.census_csv)?;
    let mut buffer = Vec::new();
    write_linked_feedback_csv(&mut buffer, &artifacts.linked_feedback)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    ctx.write("linked_feedback.csv", &String::from_utf8_lossy(&buffer))?;
    for (anchor, geojson) in &artifacts.similarity_maps {
        ctx.write(&format!("simmap_{anchor}.geojson"), geojson)?;
    }
    print!("{}", artifacts.report_text);
    Ok(())
}
