//! Pipeline configuration file (TOML).
//!
//! Every stage reads its knobs from here; the seed has no wall-clock
//! fallback and must come from the file or `--seed`.

use serde::Deserialize;

use spacevec::classifier::ForestParams;
use spacevec::embedding::{SkipGramParams, WalkParams};
use spacevec::localization::PreprocessConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub scene: Option<String>,
    pub fixes: Option<String>,
    pub feedback: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_negatives")]
    pub negatives: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr_start")]
    pub lr_start: f64,
    #[serde(default = "default_lr_end")]
    pub lr_end: f64,
    #[serde(default = "default_walks_per_node")]
    pub walks_per_node: usize,
    #[serde(default = "default_walk_length")]
    pub walk_length: usize,
    /// Second-order walk biases; 1.0 / 1.0 keeps walks uniform.
    #[serde(default = "default_walk_bias")]
    pub return_param: f64,
    #[serde(default = "default_walk_bias")]
    pub in_out_param: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_dim() -> usize { 20 }
fn default_window() -> usize { 5 }
fn default_negatives() -> usize { 5 }
fn default_epochs() -> usize { 5 }
fn default_lr_start() -> f64 { 0.025 }
fn default_lr_end() -> f64 { 0.0001 }
fn default_walks_per_node() -> usize { 10 }
fn default_walk_length() -> usize { 40 }
fn default_walk_bias() -> f64 { 1.0 }
fn default_workers() -> usize { 1 }

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            dim: default_dim(),
            window: default_window(),
            negatives: default_negatives(),
            epochs: default_epochs(),
            lr_start: default_lr_start(),
            lr_end: default_lr_end(),
            walks_per_node: default_walks_per_node(),
            walk_length: default_walk_length(),
            return_param: default_walk_bias(),
            in_out_param: default_walk_bias(),
            workers: default_workers(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    pub max_features: Option<usize>,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
}

fn default_n_trees() -> usize { 200 }
fn default_max_depth() -> usize { 220 }
fn default_min_samples_split() -> usize { 2 }
fn default_min_samples_leaf() -> usize { 2 }

impl Default for ForestSection {
    fn default() -> Self {
        ForestSection {
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
            max_features: None,
            min_samples_split: default_min_samples_split(),
            min_samples_leaf: default_min_samples_leaf(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitsSection {
    #[serde(default = "default_n_splits")]
    pub n_splits: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_n_splits() -> usize { 30 }
fn default_test_fraction() -> f64 { 0.03 }

impl Default for SplitsSection {
    fn default() -> Self {
        SplitsSection {
            n_splits: default_n_splits(),
            test_fraction: default_test_fraction(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSection {
    #[serde(default = "default_max_accuracy")]
    pub max_accuracy_m: f64,
    #[serde(default = "default_min_displacement")]
    pub min_displacement_m: f64,
    #[serde(default = "default_min_interval")]
    pub min_interval_s: i64,
    #[serde(default = "default_personality_clusters")]
    pub personality_clusters: usize,
}

fn default_max_accuracy() -> f64 { 5.0 }
fn default_min_displacement() -> f64 { 0.5 }
fn default_min_interval() -> i64 { 60 }
fn default_personality_clusters() -> usize { 10 }

impl Default for LocalizationSection {
    fn default() -> Self {
        LocalizationSection {
            max_accuracy_m: default_max_accuracy(),
            min_displacement_m: default_min_displacement(),
            min_interval_s: default_min_interval(),
            personality_clusters: default_personality_clusters(),
        }
    }
}

/// AoI parameter overrides applied to objects that rely on defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoiSection {
    #[serde(default = "default_window_depth")]
    pub window_depth_m: f64,
}

fn default_window_depth() -> f64 { 2.13 }

impl Default for AoiSection {
    fn default() -> Self {
        AoiSection {
            window_depth_m: default_window_depth(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub aoi: AoiSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub splits: SplitsSection,
    #[serde(default)]
    pub localization: LocalizationSection,
}

fn default_cell_size() -> f64 { 1.0 }

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            cell_size: default_cell_size(),
            out_dir: None,
            paths: PathsSection::default(),
            aoi: AoiSection::default(),
            embedding: EmbeddingSection::default(),
            forest: ForestSection::default(),
            splits: SplitsSection::default(),
            localization: LocalizationSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn walk_params(&self, seed: u64) -> WalkParams {
        WalkParams {
            walks_per_node: self.embedding.walks_per_node,
            walk_length: self.embedding.walk_length,
            return_param: self.embedding.return_param,
            in_out_param: self.embedding.in_out_param,
            seed,
        }
    }

    pub fn skipgram_params(&self, seed: u64) -> SkipGramParams {
        SkipGramParams {
            dim: self.embedding.dim,
            window: self.embedding.window,
            negatives: self.embedding.negatives,
            epochs: self.embedding.epochs,
            lr_start: self.embedding.lr_start,
            lr_end: self.embedding.lr_end,
            seed,
            workers: self.embedding.workers,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.forest.n_trees,
            max_depth: self.forest.max_depth,
            max_features: self.forest.max_features,
            min_samples_split: self.forest.min_samples_split,
            min_samples_leaf: self.forest.min_samples_leaf,
        }
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            max_accuracy_m: self.localization.max_accuracy_m,
            min_displacement_m: self.localization.min_displacement_m,
            min_interval_s: self.localization.min_interval_s,
        }
    }
}
