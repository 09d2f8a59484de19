//! Occupant simulation, baseline feature sets, and the end-to-end
//! embedding-vs-baseline comparison.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{env_reading, generate_scene, ComfortField, HarnessError, SceneConfig};
use crate::classifier::{
    assemble_features, cluster_personalities, cross_validate, split_plan, label_histograms,
    CvMetrics, FeedbackRecord, ForestParams, SplitPlan, VoteRow,
};
use crate::embedding::{
    export_similarity_geojson, random_walks, similarity_map, train_skipgram, SkipGramParams,
    WalkParams,
};
use crate::geometry::Point;
use crate::graph::{
    build_graph, discretize, knn_build, link_feedback, Cell, GraphOptions, KnnConfig, KnnIndex,
    LocatedVote,
};
use crate::localization::LocationFix;
use crate::rng::derive_seed;
use crate::spatial::{ObjectKind, SpatialModel, VentilationMode};

/// Midnight anchor for simulated timestamps (Unix seconds).
pub const SIM_EPOCH: i64 = 1_699_920_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_users: usize,
    pub days: usize,
    pub segments_per_day: usize,
    /// Probability that a dwell segment produces a vote.
    pub vote_probability: f64,
    /// Position error bound sigma: per-axis noise is N(0, sigma/2) clipped to
    /// +-0.9 sigma, and sigma is reported as the fix accuracy. Zero disables
    /// noise entirely.
    pub position_noise_m: f64,
    pub fix_interval_s: i64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_users: 30,
            days: 6,
            segments_per_day: 8,
            vote_probability: 0.85,
            position_noise_m: 0.5,
            fix_interval_s: 120,
            seed: 0,
        }
    }
}

/// The label source of one simulated vote, for linkage diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthVote {
    pub user_id: String,
    pub timestamp: i64,
    pub true_cell_id: String,
    pub archetype: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub fixes: Vec<LocationFix>,
    pub votes: Vec<VoteRow>,
    pub ground_truth: Vec<GroundTruthVote>,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

struct NoiseModel {
    bound: f64,
}

impl NoiseModel {
    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        if self.bound <= 0.0 {
            return (0.0, 0.0, 0.25);
        }
        let sigma = rng.gen_range(0.25..self.bound.max(0.2501));
        let clip = 0.9 * sigma;
        let dx = (gauss(rng) * sigma / 2.0).clamp(-clip, clip);
        let dy = (gauss(rng) * sigma / 2.0).clamp(-clip, clip);
        (dx, dy, sigma)
    }
}

/// Simulates per-user dwell trajectories over cells with noisy fixes and
/// field-sampled votes. Users cycle through the ten archetypes; every vote
/// has a fix at its exact timestamp.
pub fn simulate_occupants(
    model: &SpatialModel,
    cells: &[Cell],
    field: &ComfortField,
    cfg: &SimConfig,
) -> Result<SimOutput, HarnessError> {
    if cfg.n_users == 0 {
        return Err(HarnessError::Config("n_users must be >= 1".to_string()));
    }
    if cells.is_empty() {
        return Err(HarnessError::Config("scene has no cells".to_string()));
    }
    let level_index = model.levels[0].index;
    let elevation = model.levels[0].elevation_m;
    let noise = NoiseModel {
        bound: cfg.position_noise_m,
    };
    let mut fixes = Vec::new();
    let mut votes = Vec::new();
    let mut ground_truth = Vec::new();

    for u in 0..cfg.n_users {
        let user_id = format!("user{u:02}");
        let archetype = u % super::ARCHETYPE_COUNT;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x0CC0 + u as u64));
        for day in 0..cfg.days {
            let mut t = SIM_EPOCH + day as i64 * 86_400 + 9 * 3600 + rng.gen_range(0..900);
            for _ in 0..cfg.segments_per_day {
                let cell = &cells[rng.gen_range(0..cells.len())];
                let dwell_s: i64 = rng.gen_range(1200..3600);
                let emit_fix = |timestamp: i64, rng: &mut ChaCha8Rng, fixes: &mut Vec<LocationFix>| {
                    let (dx, dy, sigma) = noise.sample(rng);
                    let p = Point::new(cell.center.x + dx, cell.center.y + dy);
                    let (lat, lon) = model.transform.local_to_global(p).expect("scene in range");
                    fixes.push(LocationFix {
                        user_id: user_id.clone(),
                        timestamp,
                        lat,
                        lon,
                        elevation,
                        floor: level_index,
                        accuracy: sigma,
                    });
                };
                let mut tick = t;
                while tick < t + dwell_s {
                    emit_fix(tick, &mut rng, &mut fixes);
                    tick += cfg.fix_interval_s;
                }
                if rng.gen::<f64>() < cfg.vote_probability {
                    let t_vote = t + rng.gen_range(0..dwell_s);
                    emit_fix(t_vote, &mut rng, &mut fixes);
                    let (dx, dy, _) = noise.sample(&mut rng);
                    let p = Point::new(cell.center.x + dx, cell.center.y + dy);
                    let (lat, lon) = model.transform.local_to_global(p).expect("scene in range");
                    let label = field.sample_label(&cell.id, archetype, &mut rng);
                    let near_body_temp = (field.near_body_temp_mean(&cell.id, archetype)
                        + 1.0 * gauss(&mut rng))
                    .clamp(15.1, 44.9);
                    let heart_rate =
                        (field.heart_rate_mean(archetype) + 8.0 * gauss(&mut rng)).clamp(20.5, 249.0);
                    votes.push(VoteRow {
                        user_id: user_id.clone(),
                        timestamp: t_vote,
                        lat,
                        lon,
                        floor: level_index,
                        label,
                        heart_rate,
                        near_body_temp,
                    });
                    ground_truth.push(GroundTruthVote {
                        user_id: user_id.clone(),
                        timestamp: t_vote,
                        true_cell_id: cell.id.clone(),
                        archetype,
                    });
                }
                t += dwell_s + rng.gen_range(0..300);
            }
        }
    }
    Ok(SimOutput {
        fixes,
        votes,
        ground_truth,
    })
}

/// Per-record context needed by the baseline feature builders.
struct RoomInfo {
    ordinal: usize,
    mode: VentilationMode,
    windows: usize,
}

fn room_info(model: &SpatialModel) -> BTreeMap<String, RoomInfo> {
    model
        .spaces
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let windows = model
                .objects
                .iter()
                .filter(|o| o.space_id == s.id && o.kind == ObjectKind::Window)
                .count();
            (
                s.id.clone(),
                RoomInfo {
                    ordinal: i + 1,
                    mode: s.ventilation_mode,
                    windows,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FeatureBlock {
    Time,
    EnvSensors,
    NearBody,
    HeartRate,
    Room,
    History,
}

impl FeatureBlock {
    fn name(&self) -> &'static str {
        match self {
            FeatureBlock::Time => "time",
            FeatureBlock::EnvSensors => "environmental sensors",
            FeatureBlock::NearBody => "near-body temperature",
            FeatureBlock::HeartRate => "heart rate",
            FeatureBlock::Room => "room",
            FeatureBlock::History => "preference history",
        }
    }
}

/// The six baseline feature sets, in report order.
fn baseline_sets() -> Vec<(&'static str, Vec<FeatureBlock>)> {
    use FeatureBlock::*;
    vec![
        ("B1", vec![Time]),
        ("B2", vec![Time, EnvSensors]),
        ("B3", vec![Time, EnvSensors, NearBody, HeartRate]),
        ("B4", vec![Time, NearBody, HeartRate, Room, History]),
        ("B5", vec![Time, HeartRate, Room, History]),
        ("B6", vec![Time, Room, History]),
    ]
}

/// Builds per-record history features: previous vote value and prior mean of
/// vote values (prefer cooler = -1, no preference = 0, prefer warmer = +1),
/// both 0 before a user's first vote.
fn history_features(records: &[FeedbackRecord]) -> Vec<[f64; 2]> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[a]
            .user_id
            .cmp(&records[b].user_id)
            .then(records[a].timestamp.cmp(&records[b].timestamp))
            .then(a.cmp(&b))
    });
    let numeric = |r: &FeedbackRecord| r.label.index() as f64 - 1.0;
    let mut out = vec![[0.0f64; 2]; records.len()];
    let mut i = 0;
    while i < order.len() {
        let user = &records[order[i]].user_id;
        let mut prev = 0.0;
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut j = i;
        while j < order.len() && &records[order[j]].user_id == user {
            let idx = order[j];
            let prior_mean = if count > 0 { sum / count as f64 } else { 0.0 };
            out[idx] = [prev, prior_mean];
            prev = numeric(&records[idx]);
            sum += prev;
            count += 1;
            j += 1;
        }
        i = j;
    }
    out
}

fn baseline_features(
    records: &[FeedbackRecord],
    blocks: &[FeatureBlock],
    rooms: &BTreeMap<String, RoomInfo>,
    cell_space: &BTreeMap<String, String>,
    scene_seed: u64,
) -> Vec<Vec<f64>> {
    let history = history_features(records);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let space_id = &cell_space[&r.cell_id];
            let room = &rooms[space_id];
            let day = (r.timestamp - SIM_EPOCH).div_euclid(86_400);
            let hour = (r.timestamp - SIM_EPOCH).rem_euclid(86_400) as u32 / 3600;
            let mut row = Vec::new();
            for block in blocks {
                match block {
                    FeatureBlock::Time => {
                        row.push(hour as f64);
                        row.push(day as f64);
                    }
                    FeatureBlock::EnvSensors => {
                        let env =
                            env_reading(scene_seed, room.ordinal, room.mode, room.windows, day, hour);
                        row.push(env.air_temp_c);
                        row.push(env.relative_humidity_pct);
                        row.push(env.noise_db);
                        row.push(env.illuminance_lux);
                    }
                    FeatureBlock::NearBody => row.push(r.near_body_temp),
                    FeatureBlock::HeartRate => row.push(r.heart_rate),
                    FeatureBlock::Room => row.push(room.ordinal as f64),
                    FeatureBlock::History => {
                        row.push(history[i][0]);
                        row.push(history[i][1]);
                    }
                }
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineResult {
    pub name: String,
    pub features: Vec<String>,
    pub mean_test_accuracy: f64,
    pub sd_test_accuracy: f64,
}

/// Trains the same forest on each baseline feature set under the given split
/// plan and reports per-set accuracy.
pub fn run_baselines(
    records: &[FeedbackRecord],
    model: &SpatialModel,
    cells: &[Cell],
    scene_seed: u64,
    plan: &SplitPlan,
    params: &ForestParams,
    seed: u64,
) -> Result<Vec<BaselineResult>, HarnessError> {
    let rooms = room_info(model);
    let cell_space: BTreeMap<String, String> = cells
        .iter()
        .map(|c| (c.id.clone(), c.space_id.clone()))
        .collect();
    let labels: Vec<_> = records.iter().map(|r| r.label).collect();
    let groups: Vec<_> = records.iter().map(|r| r.user_id.clone()).collect();
    let mut results = Vec::new();
    for (i, (name, blocks)) in baseline_sets().into_iter().enumerate() {
        let features = baseline_features(records, &blocks, &rooms, &cell_space, scene_seed);
        let ds = crate::classifier::LabeledDataset {
            features,
            labels: labels.clone(),
            groups: groups.clone(),
            personalities: vec![0; records.len()],
        };
        let metrics = cross_validate(&ds, plan, params, derive_seed(seed, 0xBA5E + i as u64))?;
        results.push(BaselineResult {
            name: name.to_string(),
            features: blocks.iter().map(|b| b.name().to_string()).collect(),
            mean_test_accuracy: metrics.mean_test_accuracy,
            sd_test_accuracy: metrics.sd_test_accuracy,
        });
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub seed: u64,
    pub scene: SceneConfig,
    pub sim: SimConfig,
    pub walks: WalkParams,
    pub skipgram: SkipGramParams,
    pub forest: ForestParams,
    pub n_splits: usize,
    pub test_fraction: f64,
    pub personality_clusters: usize,
    pub anchor_count: usize,
    pub normalize_maps: bool,
}

impl EvaluateConfig {
    fn with_scene(seed: u64, scene: SceneConfig) -> Self {
        EvaluateConfig {
            seed,
            scene,
            sim: SimConfig {
                seed: derive_seed(seed, 2),
                ..SimConfig::default()
            },
            walks: WalkParams {
                seed: derive_seed(seed, 3),
                ..WalkParams::default()
            },
            skipgram: SkipGramParams {
                seed: derive_seed(seed, 4),
                ..SkipGramParams::default()
            },
            forest: ForestParams::default(),
            n_splits: 30,
            test_fraction: 0.03,
            personality_clusters: 10,
            anchor_count: 5,
            normalize_maps: false,
        }
    }

    pub fn heterogeneous(seed: u64) -> Self {
        Self::with_scene(seed, SceneConfig::heterogeneous(derive_seed(seed, 1)))
    }

    pub fn homogeneous(seed: u64) -> Self {
        Self::with_scene(seed, SceneConfig::homogeneous(derive_seed(seed, 1)))
    }

    /// Reduced-size configuration for fast determinism checks.
    pub fn small(seed: u64) -> Self {
        let mut cfg = Self::with_scene(seed, SceneConfig::small(derive_seed(seed, 1)));
        cfg.sim.n_users = 12;
        cfg.sim.days = 2;
        cfg.sim.segments_per_day = 4;
        cfg.skipgram.epochs = 2;
        cfg.walks.walks_per_node = 5;
        cfg.forest.n_trees = 50;
        cfg.n_splits = 8;
        cfg.test_fraction = 0.1;
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScore {
    pub name: String,
    pub features: Vec<String>,
    pub mean_test_accuracy: f64,
    pub sd_test_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub n_users: usize,
    pub n_votes: usize,
    pub n_cells: usize,
    pub majority_class_rate: f64,
    /// Fraction of votes linked back to their true source cell.
    pub vote_link_recovery_rate: f64,
    pub census: Vec<(String, usize)>,
    pub embedding_model: ModelScore,
    pub baselines: Vec<BaselineResult>,
    /// Accuracy advantage of the embedding model in percentage points.
    pub improvement_points: Vec<(String, f64)>,
}

/// Everything `evaluate` produces, as deterministic strings ready to write.
#[derive(Debug, Clone)]
pub struct EvaluationArtifacts {
    pub report: EvaluationReport,
    pub report_json: String,
    pub report_text: String,
    pub embedding_tsv: String,
    pub adjacency_list: String,
    pub census_csv: String,
    pub linked_feedback: Vec<FeedbackRecord>,
    /// (anchor cell id, GeoJSON document) per anchor.
    pub similarity_maps: Vec<(String, String)>,
}

fn pick_anchors(model: &SpatialModel, cells: &[Cell], count: usize) -> Vec<String> {
    let mut anchors = Vec::new();
    for space in &model.spaces {
        let (min, max) = crate::geometry::bounding_box(&space.footprint);
        let centroid = Point::new((min.x + max.x) / 2.0, (min.y + max.y) / 2.0);
        if let Some(best) = cells
            .iter()
            .filter(|c| c.space_id == space.id)
            .min_by(|a, b| {
                centroid
                    .distance(a.center)
                    .total_cmp(&centroid.distance(b.center))
                    .then(a.id.cmp(&b.id))
            })
        {
            anchors.push(best.id.clone());
        }
        if anchors.len() == count {
            break;
        }
    }
    let mut extra = 0usize;
    while anchors.len() < count && extra < cells.len() {
        let id = &cells[extra].id;
        if !anchors.contains(id) {
            anchors.push(id.clone());
        }
        extra += cells.len() / count.max(1) + 1;
    }
    anchors
}

fn render_report_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str("Thermal preference model comparison\n");
    out.push_str(&format!(
        "seed {} | {} cells | {} users | {} votes | majority-class rate {:.3} | link recovery {:.3}\n\n",
        report.seed,
        report.n_cells,
        report.n_users,
        report.n_votes,
        report.majority_class_rate,
        report.vote_link_recovery_rate
    ));
    let rows = [
        "user location",
        "spatial data (graph)",
        "time",
        "environmental sensors",
        "near-body temperature",
        "heart rate",
        "room",
        "preference history",
    ];
    let has = |b: &BaselineResult, row: &str| b.features.iter().any(|f| f == row);
    out.push_str(&format!("{:<24}", "feature set"));
    for b in &report.baselines {
        out.push_str(&format!("{:>7}", b.name));
    }
    out.push_str(&format!("{:>7}\n", "EMB"));
    for row in rows {
        out.push_str(&format!("{row:<24}"));
        for b in &report.baselines {
            out.push_str(&format!("{:>7}", if has(b, row) { "x" } else { "-" }));
        }
        let emb = matches!(
            row,
            "user location" | "spatial data (graph)" | "near-body temperature" | "heart rate"
        );
        out.push_str(&format!("{:>7}\n", if emb { "x" } else { "-" }));
    }
    out.push_str(&format!("{}\n", "-".repeat(24 + 7 * (report.baselines.len() + 1))));
    out.push_str(&format!("{:<24}", "mean test accuracy"));
    for b in &report.baselines {
        out.push_str(&format!("{:>7.3}", b.mean_test_accuracy));
    }
    out.push_str(&format!("{:>7.3}\n", report.embedding_model.mean_test_accuracy));
    out.push_str(&format!("{:<24}", "improvement (points)"));
    for (_, delta) in &report.improvement_points {
        out.push_str(&format!("{:>+7.1}", delta));
    }
    out.push('\n');
    out
}

/// Runs the full pipeline on a generated scene: simulate, link, embed,
/// classify, and compare against the baselines under one split plan.
pub fn evaluate(cfg: &EvaluateConfig) -> Result<EvaluationArtifacts, HarnessError> {
    let (model, field) = generate_scene(&cfg.scene)?;
    let (cells, _) = discretize(&model, cfg.scene.cell_size)?;
    let graph_options = GraphOptions {
        cell_size: cfg.scene.cell_size,
        include_cell_adjacency: true,
    };
    let mut graph = build_graph(&model, &cells, &graph_options);

    let sim = simulate_occupants(&model, &cells, &field, &cfg.sim)?;

    // Personality clustering from per-user label histograms.
    let prelim_records: Vec<FeedbackRecord> = sim
        .votes
        .iter()
        .map(|v| FeedbackRecord {
            user_id: v.user_id.clone(),
            timestamp: v.timestamp,
            cell_id: String::new(),
            label: v.label,
            heart_rate: v.heart_rate,
            near_body_temp: v.near_body_temp,
        })
        .collect();
    let histograms = label_histograms(&prelim_records);
    let k = cfg.personality_clusters.min(histograms.len());
    let personalities = cluster_personalities(&histograms, k, derive_seed(cfg.seed, 5))?;

    // Link votes to cells through the k-NN index.
    let items: Vec<(String, Point)> = cells.iter().map(|c| (c.id.clone(), c.center)).collect();
    let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
    indices.insert(model.levels[0].index, knn_build(&items, KnnConfig::default()));
    let mut located = Vec::with_capacity(sim.votes.len());
    for vote in &sim.votes {
        let position = model.transform.global_to_local(vote.lat, vote.lon)?;
        located.push(LocatedVote {
            user_id: vote.user_id.clone(),
            timestamp: vote.timestamp,
            level_index: vote.floor,
            position,
            label: vote.label,
            heart_rate: vote.heart_rate,
            near_body_temp: vote.near_body_temp,
        });
    }
    let linked = link_feedback(&mut graph, &located, &personalities, &indices)?;
    let recovered = linked
        .iter()
        .zip(&sim.ground_truth)
        .filter(|(rec, truth)| rec.cell_id == truth.true_cell_id)
        .count();
    let recovery_rate = recovered as f64 / linked.len().max(1) as f64;

    // Embed the full graph (spatial structure plus linked feedback).
    let adjacency_list = graph.export_adjacency_list();
    let corpus = random_walks(&graph, &cfg.walks);
    let embeddings = train_skipgram(&corpus, &cfg.skipgram)?;

    // The embedding feature set: cell vector + heart rate + near-body temp.
    let dataset = assemble_features(&linked, &embeddings, &personalities)?;
    let plan = split_plan(
        dataset.len(),
        cfg.n_splits,
        cfg.test_fraction,
        derive_seed(cfg.seed, 6),
    )?;
    let metrics: CvMetrics =
        cross_validate(&dataset, &plan, &cfg.forest, derive_seed(cfg.seed, 7))?;
    let baselines = run_baselines(
        &linked,
        &model,
        &cells,
        cfg.scene.seed,
        &plan,
        &cfg.forest,
        derive_seed(cfg.seed, 8),
    )?;

    let embedding_model = ModelScore {
        name: "embedding".to_string(),
        features: vec![
            "user location".to_string(),
            "spatial data (graph)".to_string(),
            "near-body temperature".to_string(),
            "heart rate".to_string(),
        ],
        mean_test_accuracy: metrics.mean_test_accuracy,
        sd_test_accuracy: metrics.sd_test_accuracy,
    };
    let improvement_points: Vec<(String, f64)> = baselines
        .iter()
        .map(|b| {
            (
                b.name.clone(),
                (metrics.mean_test_accuracy - b.mean_test_accuracy) * 100.0,
            )
        })
        .collect();

    let anchors = pick_anchors(&model, &cells, cfg.anchor_count);
    let mut maps = Vec::with_capacity(anchors.len());
    for anchor in &anchors {
        let rows = similarity_map(&embeddings, anchor, &cells)?;
        let geojson = export_similarity_geojson(&rows, &cells, &model.transform, cfg.normalize_maps)?;
        maps.push((anchor.clone(), geojson));
    }

    let report = EvaluationReport {
        seed: cfg.seed,
        n_users: cfg.sim.n_users,
        n_votes: linked.len(),
        n_cells: cells.len(),
        majority_class_rate: dataset.majority_class_rate(),
        vote_link_recovery_rate: recovery_rate,
        census: graph.census(),
        embedding_model,
        baselines,
        improvement_points,
    };
    let report_json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    let report_text = render_report_text(&report);
    Ok(EvaluationArtifacts {
        report_json,
        report_text,
        embedding_tsv: embeddings.export_tsv(),
        adjacency_list,
        census_csv: graph.export_census_csv(),
        linked_feedback: linked,
        similarity_maps: maps,
        report,
    })
}
