//! Digital-twin pipeline for occupant thermal-preference modeling.
//!
//! The crate turns building spatial data into an attributed cell graph, fuses
//! occupant location and feedback streams into it, learns node embeddings
//! from random walks, and trains a random-forest classifier on the resulting
//! feature vectors. A synthetic harness generates scenes with known
//! micro-climate ground truth to compare the embedding feature set against
//! conventional baselines.

pub mod classifier;
pub mod embedding;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod kmeans;
pub mod localization;
pub mod spatial;

mod rng;
pub use rng::derive_seed;
