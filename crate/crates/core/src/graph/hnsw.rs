//! Hierarchical navigable small-world index over cell centers.
//!
//! Approximate k-nearest-neighbor queries by Euclidean distance. Layered
//! greedy search: node levels follow a geometric law, each layer holds a
//! navigable neighbor graph, queries descend greedily and run a beam search
//! of width `ef_search` on the base layer.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GraphError;
use crate::geometry::Point;

#[derive(Debug, Clone)]
pub struct KnnConfig {
    /// Max neighbors per node on upper layers (base layer allows 2M).
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            m: 16,
            ef_construction: 200,
            ef_search: 64,
            seed: 0x6b6e_6e01,
        }
    }
}

/// Distance ordered with an id tie-break so results are fully deterministic
/// and equidistant points resolve to the smaller insertion index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Scored {
    dist_bits: u64,
    node: u32,
}

impl Scored {
    fn new(dist: f64, node: u32) -> Self {
        Scored {
            dist_bits: dist.to_bits(),
            node,
        }
    }

    fn dist(&self) -> f64 {
        f64::from_bits(self.dist_bits)
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Distances are nonnegative, so bit order equals numeric order.
        self.dist_bits
            .cmp(&other.dist_bits)
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

pub struct KnnIndex {
    ids: Vec<String>,
    points: Vec<Point>,
    /// neighbors[node][layer] -> adjacency on that layer.
    neighbors: Vec<Vec<Vec<u32>>>,
    entry: u32,
    max_level: usize,
    config: KnnConfig,
}

impl KnnIndex {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn config(&self) -> &KnnConfig {
        &self.config
    }

    fn dist(&self, q: Point, node: u32) -> f64 {
        q.distance(self.points[node as usize])
    }

    fn greedy_descend(&self, q: Point, mut current: u32, layer: usize) -> u32 {
        let mut best = self.dist(q, current);
        loop {
            let mut improved = false;
            for &n in &self.neighbors[current as usize][layer] {
                let d = self.dist(q, n);
                if d < best {
                    best = d;
                    current = n;
                    improved = true;
                }
            }
            if !improved {
                return current;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` closest, sorted ascending.
    fn search_layer(&self, q: Point, entry: u32, ef: usize, layer: usize) -> Vec<Scored> {
        let mut visited: HashSet<u32> = HashSet::new();
        visited.insert(entry);
        let start = Scored::new(self.dist(q, entry), entry);
        let mut candidates: BinaryHeap<Reverse<Scored>> = BinaryHeap::new();
        let mut results: BinaryHeap<Scored> = BinaryHeap::new();
        candidates.push(Reverse(start));
        results.push(start);

        while let Some(Reverse(closest)) = candidates.pop() {
            let worst = results.peek().copied().unwrap();
            if closest.dist_bits > worst.dist_bits && results.len() >= ef {
                break;
            }
            for &n in &self.neighbors[closest.node as usize][layer] {
                if !visited.insert(n) {
                    continue;
                }
                let scored = Scored::new(self.dist(q, n), n);
                let worst = results.peek().copied().unwrap();
                if results.len() < ef || scored < worst {
                    candidates.push(Reverse(scored));
                    results.push(scored);
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let mut out = results.into_vec();
        out.sort_unstable();
        out
    }

    fn insert(&mut self, node: u32, level: usize) {
        let q = self.points[node as usize];
        if node == 0 {
            self.entry = 0;
            self.max_level = level;
            return;
        }
        let mut ep = self.entry;
        if level < self.max_level {
            for layer in ((level + 1)..=self.max_level).rev() {
                ep = self.greedy_descend(q, ep, layer);
            }
        }
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(q, ep, self.config.m.max(self.config.ef_construction), layer);
            let max_degree = if layer == 0 { self.config.m * 2 } else { self.config.m };
            for s in found.iter().take(self.config.m) {
                self.neighbors[node as usize][layer].push(s.node);
                let peer = &mut self.neighbors[s.node as usize][layer];
                peer.push(node);
                if peer.len() > max_degree {
                    // Prune to the closest max_degree neighbors.
                    let center = self.points[s.node as usize];
                    let mut scored: Vec<Scored> = self.neighbors[s.node as usize][layer]
                        .iter()
                        .map(|&n| Scored::new(center.distance(self.points[n as usize]), n))
                        .collect();
                    scored.sort_unstable();
                    scored.truncate(max_degree);
                    self.neighbors[s.node as usize][layer] = scored.iter().map(|s| s.node).collect();
                }
            }
            ep = found[0].node;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = node;
        }
    }
}

/// Builds an index over `(id, center)` items. Insertion order is the id
/// tie-break order for equidistant results, so callers pass items sorted.
pub fn knn_build(items: &[(String, Point)], config: KnnConfig) -> KnnIndex {
    let level_scale = 1.0 / (config.m as f64).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut index = KnnIndex {
        ids: items.iter().map(|(id, _)| id.clone()).collect(),
        points: items.iter().map(|(_, p)| *p).collect(),
        neighbors: Vec::with_capacity(items.len()),
        entry: 0,
        max_level: 0,
        config,
    };
    for i in 0..items.len() {
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let level = ((-u.ln() * level_scale).floor() as usize).min(24);
        index.neighbors.push(vec![Vec::new(); level + 1]);
        index.insert(i as u32, level);
    }
    index
}

/// Approximate k nearest neighbors of `q`, sorted by nondecreasing distance
/// (ties by id). Returns at most `k` results.
pub fn knn_query(index: &KnnIndex, q: Point, k: usize) -> Result<Vec<(String, f64)>, GraphError> {
    if index.is_empty() {
        return Err(GraphError::EmptyIndex);
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut ep = index.entry;
    for layer in (1..=index.max_level).rev() {
        ep = index.greedy_descend(q, ep, layer);
    }
    let ef = index.config.ef_search.max(k);
    let found = index.search_layer(q, ep, ef, 0);
    Ok(found
        .into_iter()
        .take(k)
        .map(|s| (index.ids[s.node as usize].clone(), s.dist()))
        .collect())
}
