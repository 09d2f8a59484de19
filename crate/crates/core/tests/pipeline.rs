//! Cross-module pipeline checks on harness-generated scenes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spacevec::classifier::{
    assemble_features, cluster_personalities, label_histograms, recommend_cells, train_forest,
    FeedbackRecord, ForestParams, PreferenceLabel,
};
use spacevec::embedding::{
    cluster_cells, cosine_similarity, random_walks, similarity_map, train_skipgram,
    SkipGramParams, WalkParams,
};
use spacevec::geometry::Point;
use spacevec::graph::{
    build_graph, discretize, knn_build, link_feedback, AttributedGraph, GraphOptions, KnnConfig,
    KnnIndex, LocatedVote, Relation,
};
use spacevec::harness::{
    comfort_field, generate_scene, simulate_occupants, SceneConfig, SimConfig, ARCHETYPE_COUNT,
};
use spacevec::kmeans::adjusted_rand_index;
use spacevec::spatial::{
    AoiParams, CoordinateTransform, Level, ObjectKind, Space, SpatialModel, SpatialObject,
    VentilationMode,
};

/// Population drawn from the ten archetypes is recovered by personality
/// clustering (ARI against the generating archetype).
#[test]
fn personality_clusters_recover_archetypes() {
    let scene = SceneConfig::heterogeneous(31);
    let (model, field) = generate_scene(&scene).unwrap();
    let (cells, _) = discretize(&model, scene.cell_size).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let n_users = 60;
    let votes_per_user = 800;
    let mut records = Vec::new();
    let mut truth = Vec::new();
    for u in 0..n_users {
        let archetype = u % ARCHETYPE_COUNT;
        truth.push(archetype);
        for v in 0..votes_per_user {
            let cell = &cells[rand::Rng::gen_range(&mut rng, 0..cells.len())];
            records.push(FeedbackRecord {
                user_id: format!("user{u:02}"),
                timestamp: v as i64,
                cell_id: cell.id.clone(),
                label: field.sample_label(&cell.id, archetype, &mut rng),
                heart_rate: 72.0,
                near_body_temp: 30.0,
            });
        }
    }
    let histograms = label_histograms(&records);
    let assignment = cluster_personalities(&histograms, ARCHETYPE_COUNT, 9).unwrap();
    let predicted: Vec<usize> = (0..n_users)
        .map(|u| assignment[&format!("user{u:02}")])
        .collect();
    let ari = adjusted_rand_index(&predicted, &truth);
    assert!(ari >= 0.6, "personality ARI {ari}");
}

fn embed_graph(graph: &AttributedGraph, seed: u64) -> spacevec::embedding::EmbeddingMatrix {
    let corpus = random_walks(
        graph,
        &WalkParams {
            seed,
            ..WalkParams::default()
        },
    );
    train_skipgram(
        &corpus,
        &SkipGramParams {
            seed: seed ^ 0xABCD,
            ..SkipGramParams::default()
        },
    )
    .unwrap()
}

/// Two well-separated AoI classes cluster apart in embedding space.
#[test]
fn embedding_clusters_separate_aoi_classes() {
    let model = SpatialModel {
        transform: CoordinateTransform::new(1.2975, 103.7767, 0.0),
        levels: vec![Level {
            id: "L1".into(),
            name: "L1".into(),
            index: 1,
            elevation_m: 0.0,
        }],
        spaces: vec![Space {
            id: "S01".into(),
            name: "Hall".into(),
            level_id: "L1".into(),
            footprint: vec![
                Point::new(0.0, 0.0),
                Point::new(20.0, 0.0),
                Point::new(20.0, 8.0),
                Point::new(0.0, 8.0),
            ],
            ventilation_mode: VentilationMode::HC,
            setpoint_c: Some(27.0),
        }],
        objects: vec![
            SpatialObject {
                id: "fan-1".into(),
                kind: ObjectKind::CeilingFan,
                space_id: "S01".into(),
                position: [4.5, 4.0, 2.8],
                aoi: Some(AoiParams::Fan { radius_m: 2.8 }),
            },
            SpatialObject {
                id: "fan-2".into(),
                kind: ObjectKind::CeilingFan,
                space_id: "S01".into(),
                position: [6.5, 4.0, 2.8],
                aoi: Some(AoiParams::Fan { radius_m: 2.8 }),
            },
            SpatialObject {
                id: "win-1".into(),
                kind: ObjectKind::Window,
                space_id: "S01".into(),
                position: [16.5, 8.0, 1.5],
                aoi: Some(AoiParams::Window {
                    start: Point::new(13.0, 8.0),
                    end: Point::new(20.0, 8.0),
                    depth_m: Some(3.0),
                }),
            },
        ],
    };
    let (cells, _) = discretize(&model, 1.0).unwrap();
    let graph = build_graph(&model, &cells, &GraphOptions::default());
    let emb = embed_graph(&graph, 17);
    let field = comfort_field(&model, 1.0).unwrap();

    // Restrict to cells in exactly one of the two classes.
    let labeled: Vec<(_, usize)> = cells
        .iter()
        .filter_map(|c| match field.zone(&c.id) {
            spacevec::harness::CellZone::FanZone => Some((c.clone(), 0usize)),
            spacevec::harness::CellZone::WindowBand => Some((c.clone(), 1usize)),
            _ => None,
        })
        .collect();
    assert!(labeled.len() > 30, "scene too small: {}", labeled.len());
    let class_cells: Vec<_> = labeled.iter().map(|(c, _)| c.clone()).collect();
    let truth: Vec<usize> = labeled.iter().map(|(_, z)| *z).collect();
    let clusters = cluster_cells(&emb, &class_cells, 2, 3).unwrap();
    let predicted: Vec<usize> = class_cells.iter().map(|c| clusters[&c.id]).collect();
    let ari = adjusted_rand_index(&predicted, &truth);
    assert!(ari >= 0.6, "AoI cluster ARI {ari}");
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(values: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let mut out = vec![0.0; values.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for &idx in &order[i..=j] {
                out[idx] = rank;
            }
            i = j + 1;
        }
        out
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    cov / (var_a.sqrt() * var_b.sqrt())
}

/// On a plain corridor, similarity to an anchor decays with lattice hop
/// distance (negative rank correlation).
#[test]
fn corridor_similarity_decays_with_hop_distance() {
    let model = SpatialModel {
        transform: CoordinateTransform::new(1.2975, 103.7767, 0.0),
        levels: vec![Level {
            id: "L1".into(),
            name: "L1".into(),
            index: 1,
            elevation_m: 0.0,
        }],
        spaces: vec![Space {
            id: "S01".into(),
            name: "Corridor".into(),
            level_id: "L1".into(),
            footprint: vec![
                Point::new(0.0, 0.0),
                Point::new(40.0, 0.0),
                Point::new(40.0, 3.0),
                Point::new(0.0, 3.0),
            ],
            ventilation_mode: VentilationMode::NV,
            setpoint_c: None,
        }],
        objects: vec![],
    };
    let (cells, _) = discretize(&model, 1.0).unwrap();
    let graph = build_graph(&model, &cells, &GraphOptions::default());
    let emb = embed_graph(&graph, 29);

    let anchor = &cells[0].id;
    let rows = similarity_map(&emb, anchor, &cells).unwrap();

    // Hop distance over ADJACENT edges only (lattice contiguity).
    let mut hops: BTreeMap<&str, f64> = BTreeMap::new();
    hops.insert(anchor.as_str(), 0.0);
    let mut frontier = vec![anchor.as_str()];
    let mut depth = 0.0;
    let adjacent: BTreeMap<&str, Vec<&str>> = {
        let mut m: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in graph.edges() {
            if e.relation == Relation::Adjacent {
                m.entry(e.src.as_str()).or_default().push(e.dst.as_str());
                m.entry(e.dst.as_str()).or_default().push(e.src.as_str());
            }
        }
        m
    };
    while !frontier.is_empty() {
        depth += 1.0;
        let mut next = Vec::new();
        for node in frontier {
            for &n in adjacent.get(node).into_iter().flatten() {
                if let std::collections::btree_map::Entry::Vacant(slot) = hops.entry(n) {
                    slot.insert(depth);
                    next.push(n);
                }
            }
        }
        frontier = next;
    }

    let mut hop_values = Vec::new();
    let mut sims = Vec::new();
    for (id, sim) in &rows {
        if id != anchor {
            hop_values.push(hops[id.as_str()]);
            sims.push(*sim);
        }
    }
    let rho = spearman(&hop_values, &sims);
    assert!(rho < -0.15, "Spearman rho {rho}");
}

/// Recommended cells are genuinely more comfortable than average under the
/// harness ground-truth comfort field.
#[test]
fn recommended_cells_beat_the_scene_average() {
    let scene = SceneConfig::heterogeneous(47);
    let (model, field) = generate_scene(&scene).unwrap();
    let (cells, _) = discretize(&model, scene.cell_size).unwrap();
    let mut graph = build_graph(&model, &cells, &GraphOptions::default());
    let sim = simulate_occupants(
        &model,
        &cells,
        &field,
        &SimConfig {
            n_users: 15,
            days: 3,
            seed: 48,
            ..SimConfig::default()
        },
    )
    .unwrap();

    let items: Vec<(String, Point)> = cells.iter().map(|c| (c.id.clone(), c.center)).collect();
    let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
    indices.insert(model.levels[0].index, knn_build(&items, KnnConfig::default()));
    let located: Vec<LocatedVote> = sim
        .votes
        .iter()
        .map(|v| LocatedVote {
            user_id: v.user_id.clone(),
            timestamp: v.timestamp,
            level_index: v.floor,
            position: model.transform.global_to_local(v.lat, v.lon).unwrap(),
            label: v.label,
            heart_rate: v.heart_rate,
            near_body_temp: v.near_body_temp,
        })
        .collect();
    let linked = link_feedback(&mut graph, &located, &BTreeMap::new(), &indices).unwrap();

    let emb = embed_graph(&graph, 50);
    let ds = assemble_features(&linked, &emb, &BTreeMap::new()).unwrap();
    let model_rf = train_forest(
        &ds.features,
        &ds.labels,
        &ForestParams {
            n_trees: 100,
            ..ForestParams::default()
        },
        51,
    )
    .unwrap();

    let cell_ids: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let top = recommend_cells(&model_rf, &emb, &cell_ids, 72.0, 30.0, 10).unwrap();
    let top_comfort: f64 = top
        .iter()
        .map(|(id, _)| field.comfort_probability(id))
        .sum::<f64>()
        / top.len() as f64;
    let scene_comfort: f64 = cells
        .iter()
        .map(|c| field.comfort_probability(&c.id))
        .sum::<f64>()
        / cells.len() as f64;
    assert!(
        top_comfort >= scene_comfort,
        "top-10 comfort {top_comfort} vs scene average {scene_comfort}"
    );

    // Full ranking covers every cell exactly once.
    let all = recommend_cells(&model_rf, &emb, &cell_ids, 72.0, 30.0, cell_ids.len()).unwrap();
    assert_eq!(all.len(), cell_ids.len());

    // Ten simulated personalities produce ten personality nodes once linked.
    let histograms = label_histograms(&linked);
    let personalities = cluster_personalities(&histograms, 10, 52).unwrap();
    let mut graph2 = build_graph(&model, &cells, &GraphOptions::default());
    link_feedback(&mut graph2, &located, &personalities, &indices).unwrap();
    let census: BTreeMap<String, usize> = graph2.census().into_iter().collect();
    assert_eq!(census["ThermalComfortPersonality"], 10);
    assert_eq!(census["Occupant"], 15);
}

/// Walk edge-respecting invariant on a full harness graph with linked votes.
#[test]
fn walks_on_linked_graph_respect_edges() {
    let scene = SceneConfig::small(61);
    let (model, field) = generate_scene(&scene).unwrap();
    let (cells, _) = discretize(&model, scene.cell_size).unwrap();
    let mut graph = build_graph(&model, &cells, &GraphOptions::default());
    let sim = simulate_occupants(
        &model,
        &cells,
        &field,
        &SimConfig {
            n_users: 5,
            days: 1,
            seed: 62,
            ..SimConfig::default()
        },
    )
    .unwrap();
    let items: Vec<(String, Point)> = cells.iter().map(|c| (c.id.clone(), c.center)).collect();
    let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
    indices.insert(model.levels[0].index, knn_build(&items, KnnConfig::default()));
    let located: Vec<LocatedVote> = sim
        .votes
        .iter()
        .map(|v| LocatedVote {
            user_id: v.user_id.clone(),
            timestamp: v.timestamp,
            level_index: v.floor,
            position: model.transform.global_to_local(v.lat, v.lon).unwrap(),
            label: v.label,
            heart_rate: v.heart_rate,
            near_body_temp: v.near_body_temp,
        })
        .collect();
    let personalities: BTreeMap<String, usize> = located
        .iter()
        .map(|v| (v.user_id.clone(), 0usize))
        .collect();
    link_feedback(&mut graph, &located, &personalities, &indices).unwrap();

    let corpus = random_walks(
        &graph,
        &WalkParams {
            walks_per_node: 2,
            walk_length: 15,
            seed: 63,
            ..WalkParams::default()
        },
    );
    for walk in &corpus.walks {
        for pair in walk.windows(2) {
            let src = &corpus.node_ids[pair[0] as usize];
            let dst = &corpus.node_ids[pair[1] as usize];
            assert!(graph.neighbors(src).iter().any(|n| n == dst));
        }
    }
    // Every node has a vector after training on this corpus.
    let emb = train_skipgram(
        &corpus,
        &SkipGramParams {
            epochs: 1,
            seed: 64,
            ..SkipGramParams::default()
        },
    )
    .unwrap();
    for id in graph.node_ids() {
        let v = emb.vector(id).unwrap();
        assert!(v.iter().any(|&x| x != 0.0));
    }
}

/// A harness-generated scene file echoes the case-study composition after a
/// full serialize/parse cycle: 5 spaces, 9 fans, 15 AC units.
#[test]
fn generated_scene_file_parses_with_case_study_counts() {
    let (model, _) = generate_scene(&SceneConfig::heterogeneous(77)).unwrap();
    let text = spacevec::spatial::serialize_floorplan(&model);
    let (parsed, warnings) = spacevec::spatial::parse_floorplan(text.as_bytes()).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(parsed.spaces.len(), 5);
    let count = |kind: ObjectKind| parsed.objects.iter().filter(|o| o.kind == kind).count();
    assert_eq!(count(ObjectKind::CeilingFan), 9);
    assert_eq!(count(ObjectKind::AirCond), 15);
}

/// The anchor under a fan is more similar to the other fan-zone cells than
/// to the window-band cells.
#[test]
fn fan_anchor_prefers_fan_zone_cells() {
    let scene = SceneConfig::heterogeneous(83);
    let (model, field) = generate_scene(&scene).unwrap();
    let (cells, _) = discretize(&model, scene.cell_size).unwrap();
    let graph = build_graph(&model, &cells, &GraphOptions::default());
    let emb = embed_graph(&graph, 84);

    let anchor = cells
        .iter()
        .find(|c| field.zone(&c.id) == spacevec::harness::CellZone::FanZone)
        .expect("scene has fan zones");
    let rows = similarity_map(&emb, &anchor.id, &cells).unwrap();
    let sim_of: BTreeMap<&str, f64> = rows.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    let mean_over = |zone: spacevec::harness::CellZone| {
        let picked: Vec<f64> = cells
            .iter()
            .filter(|c| c.id != anchor.id && field.zone(&c.id) == zone)
            .map(|c| sim_of[c.id.as_str()])
            .collect();
        picked.iter().sum::<f64>() / picked.len() as f64
    };
    let fan_mean = mean_over(spacevec::harness::CellZone::FanZone);
    let window_mean = mean_over(spacevec::harness::CellZone::WindowBand);
    assert!(
        fan_mean > window_mean,
        "fan-zone mean {fan_mean} vs window-band mean {window_mean}"
    );
}

/// Baseline sanity on a time-independent comfort field: the {time}-only
/// model scores close to the majority-class rate, and adding environmental
/// sensors never costs more than noise. Runs at the default stream size so
/// the per-(space, hour) sensor buckets hold several votes each.
#[test]
fn baseline_feature_sets_behave_sanely() {
    let scene = SceneConfig::heterogeneous(91);
    let (model, field) = generate_scene(&scene).unwrap();
    let (cells, _) = discretize(&model, scene.cell_size).unwrap();
    let mut graph = build_graph(&model, &cells, &GraphOptions::default());
    let sim = simulate_occupants(
        &model,
        &cells,
        &field,
        &SimConfig {
            seed: 92,
            ..SimConfig::default()
        },
    )
    .unwrap();
    let items: Vec<(String, Point)> = cells.iter().map(|c| (c.id.clone(), c.center)).collect();
    let mut indices: BTreeMap<i32, KnnIndex> = BTreeMap::new();
    indices.insert(model.levels[0].index, knn_build(&items, KnnConfig::default()));
    let located: Vec<LocatedVote> = sim
        .votes
        .iter()
        .map(|v| LocatedVote {
            user_id: v.user_id.clone(),
            timestamp: v.timestamp,
            level_index: v.floor,
            position: model.transform.global_to_local(v.lat, v.lon).unwrap(),
            label: v.label,
            heart_rate: v.heart_rate,
            near_body_temp: v.near_body_temp,
        })
        .collect();
    let linked = link_feedback(&mut graph, &located, &BTreeMap::new(), &indices).unwrap();

    let plan = spacevec::classifier::split_plan(linked.len(), 10, 0.1, 93).unwrap();
    let params = ForestParams {
        n_trees: 100,
        ..ForestParams::default()
    };
    let results = spacevec::harness::run_baselines(
        &linked, &model, &cells, scene.seed, &plan, &params, 94,
    )
    .unwrap();
    assert_eq!(results.len(), 6);

    let mut counts = [0usize; 3];
    for r in &linked {
        counts[r.label.index()] += 1;
    }
    let majority = *counts.iter().max().unwrap() as f64 / linked.len() as f64;
    let time_only = results
        .iter()
        .find(|b| b.features == vec!["time".to_string()])
        .unwrap();
    assert!(
        (time_only.mean_test_accuracy - majority).abs() <= 0.06,
        "{{time}} accuracy {} vs majority rate {}",
        time_only.mean_test_accuracy,
        majority
    );
    let time_env = results
        .iter()
        .find(|b| b.features == vec!["time".to_string(), "environmental sensors".to_string()])
        .unwrap();
    assert!(
        time_env.mean_test_accuracy >= time_only.mean_test_accuracy - 0.03,
        "env sensors hurt: {} vs {}",
        time_env.mean_test_accuracy,
        time_only.mean_test_accuracy
    );
}

/// Labels parse both ways through the public label API.
#[test]
fn preference_labels_round_trip() {
    for label in PreferenceLabel::all() {
        assert_eq!(PreferenceLabel::parse(label.as_str()), Some(label));
        let sim = cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((sim - 1.0).abs() < 1e-12);
    }
    assert_eq!(PreferenceLabel::parse("chilly"), None);
}
