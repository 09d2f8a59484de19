//! Thermal-preference classification: feature assembly, random forest,
//! shuffled-split validation protocol, and cell recommendation.

mod forest;

pub use forest::{train_forest, DecisionTree, ForestModel, ForestParams, TreeNode};

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;
use crate::kmeans::kmeans;
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("k = {k} exceeds the number of items {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("no embedding vector for cell '{0}'")]
    MissingEmbedding(String),
    #[error("feature vector has {got} entries, model expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// The three-class thermal preference vote. The declaration order is the
/// fixed class order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceLabel {
    PreferCooler,
    NoPreference,
    PreferWarmer,
}

pub const CLASS_COUNT: usize = 3;

impl PreferenceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PreferenceLabel::PreferCooler => "prefer_cooler",
            PreferenceLabel::NoPreference => "no_preference",
            PreferenceLabel::PreferWarmer => "prefer_warmer",
        }
    }

    pub fn parse(text: &str) -> Option<PreferenceLabel> {
        Some(match text {
            "prefer_cooler" => PreferenceLabel::PreferCooler,
            "no_preference" => PreferenceLabel::NoPreference,
            "prefer_warmer" => PreferenceLabel::PreferWarmer,
            _ => return None,
        })
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_index(i: usize) -> PreferenceLabel {
        match i {
            0 => PreferenceLabel::PreferCooler,
            1 => PreferenceLabel::NoPreference,
            _ => PreferenceLabel::PreferWarmer,
        }
    }

    pub fn all() -> [PreferenceLabel; 3] {
        [
            PreferenceLabel::PreferCooler,
            PreferenceLabel::NoPreference,
            PreferenceLabel::PreferWarmer,
        ]
    }
}

/// One linked occupant vote: position resolved to a cell, plus the wearable
/// signals captured at vote time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub user_id: String,
    pub timestamp: i64,
    pub cell_id: String,
    pub label: PreferenceLabel,
    pub heart_rate: f64,
    pub near_body_temp: f64,
}

impl FeedbackRecord {
    /// Plausibility ranges for the wearable readings.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.heart_rate > 20.0 && self.heart_rate < 250.0) {
            return Err(ClassifierError::InvalidInput(format!(
                "heart rate {} out of range (20, 250)",
                self.heart_rate
            )));
        }
        if !(self.near_body_temp > 15.0 && self.near_body_temp < 45.0) {
            return Err(ClassifierError::InvalidInput(format!(
                "near-body temperature {} out of range (15, 45)",
                self.near_body_temp
            )));
        }
        Ok(())
    }
}

/// A raw occupant vote before cell linking, as ingested from CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRow {
    pub user_id: String,
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    pub floor: i32,
    pub label: PreferenceLabel,
    pub heart_rate: f64,
    pub near_body_temp: f64,
}

/// Feedback ingest CSV:
/// `user_id,timestamp,lat,lon,floor,label,heart_rate,near_body_temp`.
pub fn read_feedback_csv<R: Read>(reader: R) -> Result<Vec<VoteRow>, ClassifierError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (i, row) in csv_reader.deserialize::<VoteRow>().enumerate() {
        let row = row.map_err(|e| ClassifierError::InvalidInput(format!("row {}: {e}", i + 2)))?;
        if !(row.heart_rate > 20.0 && row.heart_rate < 250.0) {
            return Err(ClassifierError::InvalidInput(format!(
                "row {}: heart rate {} out of range (20, 250)",
                i + 2,
                row.heart_rate
            )));
        }
        if !(row.near_body_temp > 15.0 && row.near_body_temp < 45.0) {
            return Err(ClassifierError::InvalidInput(format!(
                "row {}: near-body temperature {} out of range (15, 45)",
                i + 2,
                row.near_body_temp
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_feedback_csv<W: Write>(writer: W, rows: &[VoteRow]) -> Result<(), ClassifierError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer
            .serialize(row)
            .map_err(|e| ClassifierError::InvalidInput(e.to_string()))?;
    }
    csv_writer
        .flush()
        .map_err(|e| ClassifierError::InvalidInput(e.to_string()))?;
    Ok(())
}

/// Linked-feedback CSV (post cell linking):
/// `user_id,timestamp,cell_id,label,heart_rate,near_body_temp`.
pub fn read_linked_feedback_csv<R: Read>(reader: R) -> Result<Vec<FeedbackRecord>, ClassifierError> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (i, row) in csv_reader.deserialize::<FeedbackRecord>().enumerate() {
        let row = row.map_err(|e| ClassifierError::InvalidInput(format!("row {}: {e}", i + 2)))?;
        row.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_linked_feedback_csv<W: Write>(
    writer: W,
    rows: &[FeedbackRecord],
) -> Result<(), ClassifierError> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer
            .serialize(row)
            .map_err(|e| ClassifierError::InvalidInput(e.to_string()))?;
    }
    csv_writer
        .flush()
        .map_err(|e| ClassifierError::InvalidInput(e.to_string()))?;
    Ok(())
}

/// Feature matrix with labels and per-row provenance. For dim-20 embeddings
/// the layout is 22 columns: embedding, then heart rate, then near-body
/// temperature.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<PreferenceLabel>,
    /// user_id per row.
    pub groups: Vec<String>,
    /// personality cluster per row.
    pub personalities: Vec<usize>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map(Vec::len).unwrap_or(0)
    }

    pub fn majority_class_rate(&self) -> f64 {
        let mut counts = [0usize; CLASS_COUNT];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        *counts.iter().max().unwrap() as f64 / self.len().max(1) as f64
    }
}

/// Builds the classification dataset from linked records and embeddings.
/// Row order follows record order; rows at the same cell share the embedding
/// columns.
pub fn assemble_features(
    records: &[FeedbackRecord],
    emb: &EmbeddingMatrix,
    personalities: &BTreeMap<String, usize>,
) -> Result<LabeledDataset, ClassifierError> {
    let mut features = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut groups = Vec::with_capacity(records.len());
    let mut assigned = Vec::with_capacity(records.len());
    for record in records {
        let vector = emb
            .vector(&record.cell_id)
            .ok_or_else(|| ClassifierError::MissingEmbedding(record.cell_id.clone()))?;
        let mut row = Vec::with_capacity(vector.len() + 2);
        row.extend_from_slice(vector);
        row.push(record.heart_rate);
        row.push(record.near_body_temp);
        features.push(row);
        labels.push(record.label);
        groups.push(record.user_id.clone());
        assigned.push(personalities.get(&record.user_id).copied().unwrap_or(0));
    }
    Ok(LabeledDataset {
        features,
        labels,
        groups,
        personalities: assigned,
    })
}

/// Clusters users into preference personalities from their 3-class label
/// frequency histograms (points on the simplex).
pub fn cluster_personalities(
    histograms: &BTreeMap<String, [f64; CLASS_COUNT]>,
    k: usize,
    seed: u64,
) -> Result<BTreeMap<String, usize>, ClassifierError> {
    if k == 0 {
        return Err(ClassifierError::InvalidInput("k must be >= 1".to_string()));
    }
    if k > histograms.len() {
        return Err(ClassifierError::KTooLarge {
            k,
            n: histograms.len(),
        });
    }
    let users: Vec<&String> = histograms.keys().collect();
    let points: Vec<Vec<f64>> = histograms.values().map(|h| h.to_vec()).collect();
    let labels = kmeans(&points, k, seed);
    Ok(users
        .into_iter()
        .zip(labels)
        .map(|(u, l)| (u.clone(), l))
        .collect())
}

/// Per-user label histograms from linked feedback.
pub fn label_histograms(records: &[FeedbackRecord]) -> BTreeMap<String, [f64; CLASS_COUNT]> {
    let mut counts: BTreeMap<String, [usize; CLASS_COUNT]> = BTreeMap::new();
    for r in records {
        counts.entry(r.user_id.clone()).or_default()[r.label.index()] += 1;
    }
    counts
        .into_iter()
        .map(|(user, c)| {
            let total: usize = c.iter().sum();
            let mut h = [0.0; CLASS_COUNT];
            for i in 0..CLASS_COUNT {
                h[i] = c[i] as f64 / total.max(1) as f64;
            }
            (user, h)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

/// The validation protocol: `n_splits` independently shuffled splits, each
/// holding out round(test_fraction * N) rows (at least one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n_rows: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub splits: Vec<Split>,
}

pub fn split_plan(
    n_rows: usize,
    n_splits: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan, ClassifierError> {
    if n_rows < 2 {
        return Err(ClassifierError::InvalidInput(format!(
            "need at least 2 rows to split, got {n_rows}"
        )));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(ClassifierError::InvalidInput(format!(
            "test_fraction {test_fraction} outside (0, 1)"
        )));
    }
    let test_size = ((n_rows as f64 * test_fraction).round() as usize).clamp(1, n_rows - 1);
    let mut splits = Vec::with_capacity(n_splits);
    for s in 0..n_splits {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, s as u64));
        let mut indices: Vec<u32> = (0..n_rows as u32).collect();
        // Fisher-Yates shuffle.
        for i in (1..indices.len()).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            indices.swap(i, j);
        }
        let mut test: Vec<u32> = indices[..test_size].to_vec();
        let mut train: Vec<u32> = indices[test_size..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        splits.push(Split { train, test });
    }
    Ok(SplitPlan {
        n_rows,
        test_fraction,
        seed,
        splits,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Cross-validation report; the JSON metrics artifact serializes this shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvMetrics {
    pub per_split: Vec<SplitMetrics>,
    pub mean_train_accuracy: f64,
    pub mean_test_accuracy: f64,
    pub sd_test_accuracy: f64,
    /// rows = actual class, columns = predicted class, summed over splits.
    pub confusion_matrix: [[usize; CLASS_COUNT]; CLASS_COUNT],
    pub feature_importances: Vec<f64>,
}

impl CvMetrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialization cannot fail")
    }
}

/// Trains one forest per split and aggregates accuracy, the confusion matrix
/// on held-out rows, and mean feature importances.
pub fn cross_validate(
    ds: &LabeledDataset,
    plan: &SplitPlan,
    params: &ForestParams,
    seed: u64,
) -> Result<CvMetrics, ClassifierError> {
    if plan.n_rows != ds.len() {
        return Err(ClassifierError::InvalidInput(format!(
            "split plan covers {} rows, dataset has {}",
            plan.n_rows,
            ds.len()
        )));
    }
    let mut per_split = Vec::with_capacity(plan.splits.len());
    let mut confusion = [[0usize; CLASS_COUNT]; CLASS_COUNT];
    let mut importances = vec![0.0f64; ds.n_features()];
    for (s, split) in plan.splits.iter().enumerate() {
        let gather = |idx: &[u32]| -> (Vec<Vec<f64>>, Vec<PreferenceLabel>) {
            (
                idx.iter().map(|&i| ds.features[i as usize].clone()).collect(),
                idx.iter().map(|&i| ds.labels[i as usize]).collect(),
            )
        };
        let (train_x, train_y) = gather(&split.train);
        let (test_x, test_y) = gather(&split.test);
        let model = train_forest(&train_x, &train_y, params, derive_seed(seed, s as u64))?;
        let train_accuracy = model.accuracy(&train_x, &train_y)?;
        let mut hits = 0usize;
        for (x, y) in test_x.iter().zip(&test_y) {
            let (predicted, _) = model.predict(x)?;
            confusion[y.index()][predicted.index()] += 1;
            if predicted == *y {
                hits += 1;
            }
        }
        let test_accuracy = hits as f64 / test_x.len() as f64;
        for (acc, v) in importances.iter_mut().zip(&model.feature_importances) {
            *acc += v;
        }
        per_split.push(SplitMetrics {
            split: s,
            train_accuracy,
            test_accuracy,
        });
    }
    let n = per_split.len() as f64;
    let mean_train = per_split.iter().map(|m| m.train_accuracy).sum::<f64>() / n;
    let mean_test = per_split.iter().map(|m| m.test_accuracy).sum::<f64>() / n;
    let var_test = per_split
        .iter()
        .map(|m| (m.test_accuracy - mean_test).powi(2))
        .sum::<f64>()
        / n;
    for v in importances.iter_mut() {
        *v /= n;
    }
    Ok(CvMetrics {
        per_split,
        mean_train_accuracy: mean_train,
        mean_test_accuracy: mean_test,
        sd_test_accuracy: var_test.sqrt(),
        confusion_matrix: confusion,
        feature_importances: importances,
    })
}

/// Scores every cell with P(no preference) for the given wearable signals
/// and returns the `top_n` most likely comfortable cells (ties by cell id).
pub fn recommend_cells(
    model: &ForestModel,
    emb: &EmbeddingMatrix,
    cell_ids: &[String],
    heart_rate: f64,
    near_body_temp: f64,
    top_n: usize,
) -> Result<Vec<(String, f64)>, ClassifierError> {
    let mut scored = Vec::with_capacity(cell_ids.len());
    for id in cell_ids {
        let vector = emb
            .vector(id)
            .ok_or_else(|| ClassifierError::MissingEmbedding(id.clone()))?;
        let mut row = Vec::with_capacity(vector.len() + 2);
        row.extend_from_slice(vector);
        row.push(heart_rate);
        row.push(near_body_temp);
        let (_, probs) = model.predict(&row)?;
        scored.push((id.clone(), probs[PreferenceLabel::NoPreference.index()]));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(top_n);
    Ok(scored)
}
