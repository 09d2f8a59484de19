//! Node embeddings of the cell graph and the similarity operations built on
//! them: cosine similarity, per-anchor similarity maps, and embedding-space
//! cell clustering.

mod skipgram;
mod walks;

pub use skipgram::{pair_gradients, pair_loss, train_skipgram, SkipGramParams};
pub use walks::{random_walks, WalkCorpus, WalkParams};

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::Cell;
use crate::kmeans::kmeans;
use crate::spatial::CoordinateTransform;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("unknown cell '{0}'")]
    UnknownCell(String),
    #[error("no embedding vector for node '{0}'")]
    MissingVector(String),
    #[error("k = {k} exceeds the number of cells {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Per-node embedding vectors (the trained input matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub(crate) fn from_parts(ids: Vec<String>, data: Vec<f64>, dim: usize) -> Self {
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        EmbeddingMatrix {
            dim,
            ids,
            index,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in canonical (sorted) order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// TSV export, one `node_id<TAB>v1..vd` line per node in id order.
    pub fn export_tsv(&self) -> String {
        let mut out = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                out.push('\t');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<EmbeddingMatrix, EmbeddingError> {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let id = parts
                .next()
                .ok_or_else(|| EmbeddingError::InvalidInput(format!("line {}: empty", lineno + 1)))?;
            let values: Result<Vec<f64>, _> = parts.map(|p| p.parse::<f64>()).collect();
            let values = values.map_err(|e| {
                EmbeddingError::InvalidInput(format!("line {}: {e}", lineno + 1))
            })?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(EmbeddingError::InvalidInput(format!(
                        "line {}: expected {d} values, got {}",
                        lineno + 1,
                        values.len()
                    )))
                }
                _ => {}
            }
            ids.push(id.to_string());
            data.extend(values);
        }
        let dim = dim.ok_or(EmbeddingError::EmptyCorpus)?;
        Ok(EmbeddingMatrix::from_parts(ids, data, dim))
    }
}

/// Cosine similarity of two nonzero vectors, in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a <= 0.0 || norm_b <= 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    // Rounding can push the ratio a ULP past the mathematical bound.
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// Similarity of every cell to the anchor cell, in the order of `cells`.
pub fn similarity_map(
    emb: &EmbeddingMatrix,
    anchor: &str,
    cells: &[Cell],
) -> Result<Vec<(String, f64)>, EmbeddingError> {
    if !cells.iter().any(|c| c.id == anchor) {
        return Err(EmbeddingError::UnknownCell(anchor.to_string()));
    }
    let anchor_vec = emb
        .vector(anchor)
        .ok_or_else(|| EmbeddingError::MissingVector(anchor.to_string()))?;
    let mut rows = Vec::with_capacity(cells.len());
    for cell in cells {
        let similarity = if cell.id == anchor {
            1.0 // self-similarity, exactly
        } else {
            let vec = emb
                .vector(&cell.id)
                .ok_or_else(|| EmbeddingError::MissingVector(cell.id.clone()))?;
            cosine_similarity(anchor_vec, vec)?
        };
        rows.push((cell.id.clone(), similarity));
    }
    Ok(rows)
}

fn normalized(values: Vec<(String, f64)>) -> Vec<(String, f64)> {
    let min = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    let max = values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    values
        .into_iter()
        .map(|(id, v)| (id, if span > 0.0 { (v - min) / span } else { 1.0 }))
        .collect()
}

/// Similarity map as CSV `cell_id,x,y,similarity` (local coordinates).
pub fn export_similarity_csv(
    rows: &[(String, f64)],
    cells: &[Cell],
    normalize: bool,
) -> String {
    let rows = if normalize {
        normalized(rows.to_vec())
    } else {
        rows.to_vec()
    };
    let centers: HashMap<&str, &Cell> = cells.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut out = String::from("cell_id,x,y,similarity\n");
    for (id, sim) in &rows {
        let cell = centers[id.as_str()];
        out.push_str(&format!("{id},{},{},{sim}\n", cell.center.x, cell.center.y));
    }
    out
}

/// Similarity map as a GeoJSON FeatureCollection of cell points (WGS84) with
/// a `similarity` property, ready for heat-map rendering.
pub fn export_similarity_geojson(
    rows: &[(String, f64)],
    cells: &[Cell],
    transform: &CoordinateTransform,
    normalize: bool,
) -> Result<String, EmbeddingError> {
    let rows = if normalize {
        normalized(rows.to_vec())
    } else {
        rows.to_vec()
    };
    let centers: HashMap<&str, &Cell> = cells.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut features = Vec::with_capacity(rows.len());
    for (id, sim) in &rows {
        let cell = centers[id.as_str()];
        let (lat, lon) = transform
            .local_to_global(cell.center)
            .map_err(|e| EmbeddingError::InvalidInput(e.to_string()))?;
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [lon, lat] },
            "properties": { "cell_id": id, "similarity": sim }
        }));
    }
    let collection = serde_json::json!({
        "type": "FeatureCollection",
        "features": features
    });
    Ok(serde_json::to_string_pretty(&collection).expect("geojson serialization cannot fail"))
}

/// k-means over cell embedding vectors; returns cell_id -> cluster.
///
/// Vectors are unit-normalized first so clusters follow the cosine geometry
/// the embedding is trained for, not frequency-driven norm differences.
pub fn cluster_cells(
    emb: &EmbeddingMatrix,
    cells: &[Cell],
    k: usize,
    seed: u64,
) -> Result<std::collections::BTreeMap<String, usize>, EmbeddingError> {
    if k == 0 {
        return Err(EmbeddingError::InvalidInput("k must be >= 1".to_string()));
    }
    if k > cells.len() {
        return Err(EmbeddingError::KTooLarge { k, n: cells.len() });
    }
    let mut vectors = Vec::with_capacity(cells.len());
    for cell in cells {
        let v = emb
            .vector(&cell.id)
            .ok_or_else(|| EmbeddingError::MissingVector(cell.id.clone()))?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(EmbeddingError::ZeroVector);
        }
        vectors.push(v.iter().map(|x| x / norm).collect());
    }
    let labels = kmeans(&vectors, k, seed);
    Ok(cells
        .iter()
        .zip(labels)
        .map(|(c, l)| (c.id.clone(), l))
        .collect())
}
