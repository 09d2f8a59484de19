//! Uniform random walks over the attributed graph.
//!
//! Every node starts `walks_per_node` walks; each step moves to a uniformly
//! random neighbor. A walk hitting a degree-0 node truncates there. Each walk
//! draws from its own RNG stream derived from (seed, node, walk), so the
//! corpus is bit-identical for a fixed seed no matter how walks are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::AttributedGraph;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub walks_per_node: usize,
    /// Maximum number of nodes in one walk, including the start node.
    pub walk_length: usize,
    /// Second-order return bias: < 1 revisits the previous node more often.
    /// 1.0 (with `in_out_param` 1.0) is a plain uniform walk.
    pub return_param: f64,
    /// Second-order in-out bias: < 1 favors moving outward.
    pub in_out_param: f64,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walks_per_node: 10,
            walk_length: 40,
            return_param: 1.0,
            in_out_param: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkCorpus {
    /// Graph node ids in sorted order; walks store indices into this list.
    pub node_ids: Vec<String>,
    pub walks: Vec<Vec<u32>>,
    pub params: WalkParams,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

pub fn random_walks(graph: &AttributedGraph, params: &WalkParams) -> WalkCorpus {
    let node_ids: Vec<String> = graph.node_ids().cloned().collect();
    let index_of: std::collections::HashMap<&str, u32> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();
    let adjacency: Vec<Vec<u32>> = node_ids
        .iter()
        .map(|id| {
            graph
                .neighbors(id)
                .iter()
                .map(|n| index_of[n.as_str()])
                .collect()
        })
        .collect();

    let uniform = params.return_param == 1.0 && params.in_out_param == 1.0;
    let mut walks = Vec::with_capacity(node_ids.len() * params.walks_per_node);
    let mut weights: Vec<f64> = Vec::new();
    for start in 0..node_ids.len() as u32 {
        for w in 0..params.walks_per_node {
            let stream = start as u64 * params.walks_per_node as u64 + w as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, stream));
            let mut walk = Vec::with_capacity(params.walk_length);
            let mut current = start;
            walk.push(current);
            while walk.len() < params.walk_length {
                let neighbors = &adjacency[current as usize];
                if neighbors.is_empty() {
                    break;
                }
                let next = if uniform || walk.len() < 2 {
                    neighbors[rng.gen_range(0..neighbors.len())]
                } else {
                    // Second-order bias relative to the previous node.
                    let previous = walk[walk.len() - 2];
                    weights.clear();
                    let mut total = 0.0;
                    for &n in neighbors {
                        let weight = if n == previous {
                            1.0 / params.return_param
                        } else if adjacency[previous as usize].contains(&n) {
                            1.0
                        } else {
                            1.0 / params.in_out_param
                        };
                        total += weight;
                        weights.push(total);
                    }
                    let target = rng.gen_range(0.0..total);
                    let pick = weights.partition_point(|&cum| cum <= target);
                    neighbors[pick.min(neighbors.len() - 1)]
                };
                current = next;
                walk.push(current);
            }
            walks.push(walk);
        }
    }
    WalkCorpus {
        node_ids,
        walks,
        params: params.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Relation;

    fn graph_from_edges(edges: &[(&str, &str)]) -> AttributedGraph {
        let mut graph = AttributedGraph::new();
        for (a, b) in edges {
            graph.add_node(a, "Cell");
            graph.add_node(b, "Cell");
            graph.add_edge(a, Relation::Adjacent, b);
        }
        graph
    }

    #[test]
    fn path_graph_walk_is_forced() {
        let graph = graph_from_edges(&[("a", "b"), ("b", "c")]);
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 5,
                walk_length: 2,
                seed: 1,
                ..WalkParams::default()
            },
        );
        let a = corpus.node_ids.iter().position(|id| id == "a").unwrap() as u32;
        let b = corpus.node_ids.iter().position(|id| id == "b").unwrap() as u32;
        for walk in corpus.walks.iter().filter(|w| w[0] == a) {
            assert_eq!(walk, &vec![a, b]);
        }
    }

    #[test]
    fn star_first_steps_are_uniform() {
        let graph = graph_from_edges(&[("hub", "l1"), ("hub", "l2"), ("hub", "l3"), ("hub", "l4")]);
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 2500,
                walk_length: 2,
                seed: 2,
                ..WalkParams::default()
            },
        );
        let hub = corpus.node_ids.iter().position(|id| id == "hub").unwrap() as u32;
        let mut counts = std::collections::BTreeMap::new();
        let mut total = 0usize;
        for walk in corpus.walks.iter().filter(|w| w[0] == hub) {
            *counts.entry(walk[1]).or_insert(0usize) += 1;
            total += 1;
        }
        assert_eq!(total, 2500);
        assert_eq!(counts.len(), 4);
        for (_, c) in counts {
            let freq = c as f64 / total as f64;
            assert!((freq - 0.25).abs() < 0.02, "leaf frequency {freq}");
        }
    }

    #[test]
    fn isolated_node_walk_truncates_immediately() {
        let mut graph = graph_from_edges(&[("a", "b")]);
        graph.add_node("lonely", "Cell");
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 3,
                walk_length: 10,
                seed: 3,
                ..WalkParams::default()
            },
        );
        let lonely = corpus.node_ids.iter().position(|id| id == "lonely").unwrap() as u32;
        for walk in corpus.walks.iter().filter(|w| w[0] == lonely) {
            assert_eq!(walk.len(), 1);
        }
    }

    #[test]
    fn return_bias_shifts_backtracking_frequency() {
        // On a path graph, a tiny return_param makes walks bounce between
        // the first two nodes; a huge one pushes them outward.
        let graph = graph_from_edges(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")]);
        let walk_of = |return_param: f64| {
            let corpus = random_walks(
                &graph,
                &WalkParams {
                    walks_per_node: 40,
                    walk_length: 12,
                    return_param,
                    in_out_param: 1.0,
                    seed: 5,
                },
            );
            let a = corpus.node_ids.iter().position(|id| id == "a").unwrap() as u32;
            let mut backtracks = 0usize;
            let mut steps = 0usize;
            for walk in corpus.walks.iter().filter(|w| w[0] == a) {
                for window in walk.windows(3) {
                    steps += 1;
                    if window[0] == window[2] {
                        backtracks += 1;
                    }
                }
            }
            backtracks as f64 / steps as f64
        };
        let clingy = walk_of(0.05);
        let roaming = walk_of(20.0);
        assert!(clingy > roaming + 0.2, "backtrack rates {clingy} vs {roaming}");
    }

    #[test]
    fn walks_respect_edges_and_are_seed_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let names: Vec<String> = (0..30).map(|i| format!("n{i:02}")).collect();
        let mut edges = Vec::new();
        for _ in 0..60 {
            let a = rng.gen_range(0..names.len());
            let b = rng.gen_range(0..names.len());
            if a != b {
                edges.push((names[a].as_str(), names[b].as_str()));
            }
        }
        let graph = graph_from_edges(&edges);
        let params = WalkParams {
            walks_per_node: 4,
            walk_length: 12,
            seed: 99,
            ..WalkParams::default()
        };
        let corpus = random_walks(&graph, &params);
        for walk in &corpus.walks {
            assert!(walk.len() <= params.walk_length);
            for pair in walk.windows(2) {
                let src = &corpus.node_ids[pair[0] as usize];
                let dst = &corpus.node_ids[pair[1] as usize];
                assert!(
                    graph.neighbors(src).iter().any(|n| n == dst),
                    "walk step {src} -> {dst} is not an edge"
                );
            }
        }
        let again = random_walks(&graph, &params);
        assert_eq!(corpus.walks, again.walks);
        assert_eq!(corpus.node_ids, again.node_ids);
    }
}
