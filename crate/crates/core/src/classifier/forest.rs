//! Random forest of Gini decision trees, trained on bootstrap resamples with
//! per-node random feature subsets. Per-tree seeds derive from the forest
//! seed, so training is reproducible and order-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, PreferenceLabel, CLASS_COUNT};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` -> floor(sqrt(n_features)).
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 220,
            max_features: None,
            min_samples_split: 2,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Internal {
        feature: u16,
        threshold: f64,
        left: u32,
        right: u32,
        /// Number of candidate features sampled at this split.
        n_candidates: u16,
    },
    Leaf { class: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn depth_at(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + depth_at(nodes, *left as usize).max(depth_at(nodes, *right as usize))
                }
            }
        }
        depth_at(&self.nodes, 0)
    }

    pub fn max_candidates_seen(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                TreeNode::Internal { n_candidates, .. } => *n_candidates as usize,
                TreeNode::Leaf { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
    /// Resolved candidate-feature budget per split.
    pub max_features_used: usize,
    pub trees: Vec<DecisionTree>,
    /// Mean impurity-decrease importance per feature, normalized to sum 1.
    pub feature_importances: Vec<f64>,
    /// True when training saw a single class; the model is constant.
    pub degenerate: bool,
}

fn gini(counts: &[usize; CLASS_COUNT], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn majority_class(counts: &[usize; CLASS_COUNT]) -> u8 {
    let mut best = 0usize;
    for c in 1..CLASS_COUNT {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best as u8
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [u8],
    params: &'a ForestParams,
    max_features: usize,
    nodes: Vec<TreeNode>,
    importances: Vec<f64>,
    n_root: f64,
    pairs: Vec<(f64, u8)>,
}

impl<'a> TreeBuilder<'a> {
    fn class_counts(&self, indices: &[u32]) -> [usize; CLASS_COUNT] {
        let mut counts = [0usize; CLASS_COUNT];
        for &i in indices {
            counts[self.labels[i as usize] as usize] += 1;
        }
        counts
    }

    fn sample_candidates(&self, rng: &mut ChaCha8Rng) -> Vec<u16> {
        let n = self.columns.len();
        let k = self.max_features.min(n);
        // Partial Fisher-Yates over feature indices.
        let mut pool: Vec<u16> = (0..n as u16).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Best (feature, threshold) by Gini impurity decrease among sampled
    /// candidates, or None when no valid split exists. Ties keep the first
    /// candidate in sampling order, which makes the choice depend only on
    /// value orderings and class counts.
    fn best_split(
        &mut self,
        indices: &[u32],
        counts: &[usize; CLASS_COUNT],
        rng: &mut ChaCha8Rng,
    ) -> Option<(u16, f64, f64, usize)> {
        let n = indices.len();
        let parent_impurity = gini(counts, n);
        let candidates = self.sample_candidates(rng);
        let n_candidates = candidates.len();
        let mut best: Option<(u16, f64, f64)> = None; // (feature, threshold, weighted impurity)
        let mut best_weighted = f64::INFINITY;

        for &feature in &candidates {
            let column = &self.columns[feature as usize];
            self.pairs.clear();
            self.pairs
                .extend(indices.iter().map(|&i| (column[i as usize], self.labels[i as usize])));
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = [0usize; CLASS_COUNT];
            for pos in 0..n - 1 {
                left[self.pairs[pos].1 as usize] += 1;
                if self.pairs[pos].0 >= self.pairs[pos + 1].0 {
                    continue; // only split between distinct values
                }
                let n_left = pos + 1;
                let n_right = n - n_left;
                if n_left < self.params.min_samples_leaf || n_right < self.params.min_samples_leaf {
                    continue;
                }
                let mut right = *counts;
                for c in 0..CLASS_COUNT {
                    right[c] -= left[c];
                }
                let weighted = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / n as f64;
                if weighted + 1e-15 < best_weighted && weighted + 1e-12 < parent_impurity {
                    best_weighted = weighted;
                    let threshold = (self.pairs[pos].0 + self.pairs[pos + 1].0) / 2.0;
                    best = Some((feature, threshold, weighted));
                }
            }
        }
        best.map(|(f, t, w)| (f, t, parent_impurity - w, n_candidates))
    }

    fn build(&mut self, indices: &mut [u32], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let counts = self.class_counts(indices);
        let n = indices.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let slot = self.nodes.len() as u32;

        if pure || depth >= self.params.max_depth || n < self.params.min_samples_split {
            self.nodes.push(TreeNode::Leaf {
                class: majority_class(&counts),
            });
            return slot;
        }
        let Some((feature, threshold, gain, n_candidates)) = self.best_split(indices, &counts, rng)
        else {
            self.nodes.push(TreeNode::Leaf {
                class: majority_class(&counts),
            });
            return slot;
        };

        self.importances[feature as usize] += gain * n as f64 / self.n_root;

        let column = &self.columns[feature as usize];
        let split_at = partition_in_place(indices, |i| column[i as usize] <= threshold);
        let (left_idx, right_idx) = indices.split_at_mut(split_at);

        self.nodes.push(TreeNode::Internal {
            feature,
            threshold,
            left: 0,
            right: 0,
            n_candidates: n_candidates as u16,
        });
        let left = self.build(left_idx, depth + 1, rng);
        let right = self.build(right_idx, depth + 1, rng);
        if let TreeNode::Internal {
            left: l, right: r, ..
        } = &mut self.nodes[slot as usize]
        {
            *l = left;
            *r = right;
        }
        slot
    }
}

/// Stable in-place partition; returns the split point.
fn partition_in_place(indices: &mut [u32], pred: impl Fn(u32) -> bool) -> usize {
    let mut buffer: Vec<u32> = Vec::with_capacity(indices.len());
    let mut keep = 0usize;
    for i in 0..indices.len() {
        if pred(indices[i]) {
            indices[keep] = indices[i];
            keep += 1;
        } else {
            buffer.push(indices[i]);
        }
    }
    indices[keep..].copy_from_slice(&buffer);
    keep
}

/// Trains a forest on row-major features. With single-class labels the model
/// degenerates to a constant predictor (flagged, not an error).
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[PreferenceLabel],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, ClassifierError> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(ClassifierError::InvalidInput(format!(
            "{} feature rows for {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let n_features = rows[0].len();
    if n_features == 0 || rows.iter().any(|r| r.len() != n_features) {
        return Err(ClassifierError::InvalidInput(
            "feature rows must be non-empty and rectangular".to_string(),
        ));
    }
    let max_features = params
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features);

    // Column-major copy for cache-friendly split scans.
    let mut columns = vec![vec![0.0f64; rows.len()]; n_features];
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            columns[c][r] = v;
        }
    }
    let y: Vec<u8> = labels.iter().map(|l| l.index() as u8).collect();
    let degenerate = y.iter().all(|&c| c == y[0]);

    let n = rows.len();
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut importance_sum = vec![0.0f64; n_features];
    for t in 0..params.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let mut bootstrap: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
        let mut builder = TreeBuilder {
            columns: &columns,
            labels: &y,
            params,
            max_features,
            nodes: Vec::new(),
            importances: vec![0.0f64; n_features],
            n_root: n as f64,
            pairs: Vec::new(),
        };
        builder.build(&mut bootstrap, 0, &mut rng);
        for (acc, v) in importance_sum.iter_mut().zip(&builder.importances) {
            *acc += v;
        }
        trees.push(DecisionTree {
            nodes: builder.nodes,
        });
    }

    let total: f64 = importance_sum.iter().sum();
    let feature_importances = if total > 0.0 {
        importance_sum.iter().map(|v| v / total).collect()
    } else {
        importance_sum
    };

    Ok(ForestModel {
        params: params.clone(),
        seed,
        n_features,
        max_features_used: max_features,
        trees,
        feature_importances,
        degenerate,
    })
}

impl ForestModel {
    /// Majority vote over trees; probabilities are vote fractions. Ties are
    /// broken by the fixed class order.
    pub fn predict(&self, x: &[f64]) -> Result<(PreferenceLabel, [f64; CLASS_COUNT]), ClassifierError> {
        if x.len() != self.n_features {
            return Err(ClassifierError::DimensionMismatch {
                got: x.len(),
                want: self.n_features,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::InvalidInput(
                "feature vector contains non-finite entries".to_string(),
            ));
        }
        let mut votes = [0usize; CLASS_COUNT];
        for tree in &self.trees {
            votes[tree.predict(x) as usize] += 1;
        }
        let mut probs = [0.0f64; CLASS_COUNT];
        for c in 0..CLASS_COUNT {
            probs[c] = votes[c] as f64 / self.trees.len() as f64;
        }
        Ok((PreferenceLabel::from_index(majority_class(&votes) as usize), probs))
    }

    pub fn accuracy(&self, rows: &[Vec<f64>], labels: &[PreferenceLabel]) -> Result<f64, ClassifierError> {
        let mut hits = 0usize;
        for (row, label) in rows.iter().zip(labels) {
            if self.predict(row)?.0 == *label {
                hits += 1;
            }
        }
        Ok(hits as f64 / rows.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn xor_clusters(per_cluster: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<PreferenceLabel>) {
        // Four well-separated clusters with XOR labels over the quadrants.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (cx, cy, label) in [
            (0.0, 0.0, PreferenceLabel::PreferCooler),
            (10.0, 10.0, PreferenceLabel::PreferCooler),
            (0.0, 10.0, PreferenceLabel::PreferWarmer),
            (10.0, 0.0, PreferenceLabel::PreferWarmer),
        ] {
            for _ in 0..per_cluster {
                rows.push(vec![
                    cx + rng.gen_range(-1.0..1.0),
                    cy + rng.gen_range(-1.0..1.0),
                ]);
                labels.push(label);
            }
        }
        (rows, labels)
    }

    #[test]
    fn single_class_data_yields_constant_predictor() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, -(i as f64)]).collect();
        let labels = vec![PreferenceLabel::NoPreference; 20];
        let model = train_forest(&rows, &labels, &ForestParams::default(), 1).unwrap();
        assert!(model.degenerate);
        assert!((model.accuracy(&rows, &labels).unwrap() - 1.0).abs() < 1e-12);
        let (label, probs) = model.predict(&[3.0, 4.0]).unwrap();
        assert_eq!(label, PreferenceLabel::NoPreference);
        assert_eq!(probs[PreferenceLabel::NoPreference.index()], 1.0);
    }

    #[test]
    fn xor_pattern_is_shattered() {
        let (rows, labels) = xor_clusters(40, 2);
        let model = train_forest(&rows, &labels, &ForestParams::default(), 3).unwrap();
        let acc = model.accuracy(&rows, &labels).unwrap();
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn same_seed_gives_identical_predictions() {
        let (rows, labels) = xor_clusters(25, 5);
        let a = train_forest(&rows, &labels, &ForestParams::default(), 9).unwrap();
        let b = train_forest(&rows, &labels, &ForestParams::default(), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..50 {
            let probe = vec![rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)];
            assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
        }
    }

    #[test]
    fn prediction_matches_per_tree_replay() {
        let (rows, labels) = xor_clusters(25, 6);
        let model = train_forest(&rows, &labels, &ForestParams::default(), 10).unwrap();
        let probe = vec![4.2, 7.7];
        let (label, probs) = model.predict(&probe).unwrap();
        let mut votes = [0usize; CLASS_COUNT];
        for tree in &model.trees {
            votes[tree.predict(&probe) as usize] += 1;
        }
        let top = (0..CLASS_COUNT).max_by_key(|&c| (votes[c], CLASS_COUNT - c)).unwrap();
        assert_eq!(label.index(), top);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for c in 0..CLASS_COUNT {
            assert!((probs[c] - votes[c] as f64 / model.trees.len() as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn vote_is_invariant_under_tree_reordering() {
        let (rows, labels) = xor_clusters(20, 7);
        let model = train_forest(&rows, &labels, &ForestParams::default(), 11).unwrap();
        let mut reordered = model.clone();
        reordered.trees.reverse();
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        for _ in 0..30 {
            let probe = vec![rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)];
            assert_eq!(model.predict(&probe).unwrap(), reordered.predict(&probe).unwrap());
        }
    }

    #[test]
    fn structural_limits_hold() {
        let (rows, labels) = xor_clusters(30, 8);
        let params = ForestParams {
            n_trees: 50,
            ..ForestParams::default()
        };
        let model = train_forest(&rows, &labels, &params, 12).unwrap();
        assert_eq!(model.trees.len(), 50);
        assert_eq!(model.max_features_used, 1); // floor(sqrt(2))
        for tree in &model.trees {
            assert!(tree.depth() <= params.max_depth);
            assert!(tree.max_candidates_seen() <= model.max_features_used);
            for node in tree.nodes() {
                if let TreeNode::Internal { feature, .. } = node {
                    assert!((*feature as usize) < model.n_features);
                }
            }
        }
    }

    #[test]
    fn monotone_column_transform_leaves_predictions_unchanged() {
        let (rows, labels) = xor_clusters(30, 13);
        let transformed: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| 2.0 * v + 1.0).collect())
            .collect();
        let a = train_forest(&rows, &labels, &ForestParams::default(), 21).unwrap();
        let b = train_forest(&transformed, &labels, &ForestParams::default(), 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(300);
        for _ in 0..100 {
            let probe = vec![rng.gen_range(-2.0..12.0), rng.gen_range(-2.0..12.0)];
            let probe_t: Vec<f64> = probe.iter().map(|v| 2.0 * v + 1.0).collect();
            assert_eq!(
                a.predict(&probe).unwrap().0,
                b.predict(&probe_t).unwrap().0
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (rows, labels) = xor_clusters(10, 14);
        let model = train_forest(&rows, &labels, &ForestParams::default(), 1).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0, 3.0]),
            Err(ClassifierError::DimensionMismatch { got: 3, want: 2 })
        ));
    }
}
