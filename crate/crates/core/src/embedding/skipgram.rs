//! Skip-gram with negative sampling over walk corpora.
//!
//! Plain SGD on sigmoid cross-entropy: each (center, context) pair within the
//! window pulls the pair together and pushes `negatives` samples from the
//! unigram^0.75 distribution apart. Single-worker mode is bit-deterministic
//! for a fixed seed; multi-worker mode runs lock-free concurrent updates over
//! atomic cells and trades determinism for throughput.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingMatrix};
use crate::embedding::walks::WalkCorpus;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    /// 1 = sequential and deterministic; >1 = concurrent updates.
    pub workers: usize,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams {
            dim: 20,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 0,
            workers: 1,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss of one training pair: -ln s(u.v_pos) - sum_n ln s(-u.v_neg).
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut loss = -sigmoid(dot(center, context)).ln();
    for neg in negatives {
        loss -= sigmoid(-dot(center, neg)).ln();
    }
    loss
}

/// Analytic gradients of `pair_loss` with respect to every parameter vector.
pub fn pair_gradients(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let dim = center.len();
    let mut grad_center = vec![0.0; dim];

    let g_pos = sigmoid(dot(center, context)) - 1.0;
    let grad_context: Vec<f64> = center.iter().map(|u| g_pos * u).collect();
    for (gc, v) in grad_center.iter_mut().zip(context) {
        *gc += g_pos * v;
    }
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let g_neg = sigmoid(dot(center, neg));
        grad_negatives.push(center.iter().map(|u| g_neg * u).collect());
        for (gc, v) in grad_center.iter_mut().zip(*neg) {
            *gc += g_neg * v;
        }
    }
    (grad_center, grad_context, grad_negatives)
}

/// Row-major matrix of f64 bits behind relaxed atomics. Single-threaded use
/// is exactly plain loads and stores; multi-worker training accepts lost
/// updates but never undefined behavior.
struct AtomicMatrix {
    cells: Vec<AtomicU64>,
    dim: usize,
}

impl AtomicMatrix {
    fn from_vec(data: Vec<f64>, dim: usize) -> Self {
        AtomicMatrix {
            cells: data.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
            dim,
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }

    #[inline]
    fn get(&self, row: usize, j: usize) -> f64 {
        f64::from_bits(self.cells[row * self.dim + j].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, row: usize, j: usize, value: f64) {
        self.cells[row * self.dim + j].store(value.to_bits(), Ordering::Relaxed);
    }

    #[inline]
    fn dot_row(&self, row: usize, other: &[f64]) -> f64 {
        let base = row * self.dim;
        self.cells[base..base + self.dim]
            .iter()
            .zip(other)
            .map(|(cell, &x)| f64::from_bits(cell.load(Ordering::Relaxed)) * x)
            .sum()
    }
}

/// Seeded uniform init in [-0.5/dim, 0.5/dim], input matrix then output.
pub(crate) fn seeded_init(n: usize, dim: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let half = 0.5 / dim as f64;
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-half..half)).collect()
    };
    let input = draw(n * dim);
    let output = draw(n * dim);
    (input, output)
}

struct NegativeTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        NegativeTable {
            cumulative,
            total: acc,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let r = rng.gen_range(0.0..self.total);
        self.cumulative.partition_point(|&c| c <= r)
    }
}

struct Trainer<'a> {
    input: &'a AtomicMatrix,
    output: &'a AtomicMatrix,
    table: &'a NegativeTable,
    negatives: usize,
    dim: usize,
    grad_center: Vec<f64>,
    center_buf: Vec<f64>,
}

impl<'a> Trainer<'a> {
    fn update_pair(&mut self, center: usize, context: usize, lr: f64, rng: &mut ChaCha8Rng) {
        let dim = self.dim;
        for j in 0..dim {
            self.center_buf[j] = self.input.get(center, j);
            self.grad_center[j] = 0.0;
        }

        // Positive example.
        let g_pos = sigmoid(self.output.dot_row(context, &self.center_buf)) - 1.0;
        for j in 0..dim {
            let v = self.output.get(context, j);
            self.grad_center[j] += g_pos * v;
            self.output.set(context, j, v - lr * g_pos * self.center_buf[j]);
        }

        // Negative samples; the positive target is excluded.
        for _ in 0..self.negatives {
            let mut neg = self.table.sample(rng);
            let mut tries = 0;
            while neg == context && tries < 32 {
                neg = self.table.sample(rng);
                tries += 1;
            }
            if neg == context {
                continue;
            }
            let g_neg = sigmoid(self.output.dot_row(neg, &self.center_buf));
            for j in 0..dim {
                let v = self.output.get(neg, j);
                self.grad_center[j] += g_neg * v;
                self.output.set(neg, j, v - lr * g_neg * self.center_buf[j]);
            }
        }

        for j in 0..dim {
            self.input
                .set(center, j, self.center_buf[j] - lr * self.grad_center[j]);
        }
    }

    fn run_walks(
        &mut self,
        walks: &[Vec<u32>],
        params: &SkipGramParams,
        total_centers: u64,
        processed: &AtomicUsize,
        rng: &mut ChaCha8Rng,
    ) {
        let lr_span = params.lr_end - params.lr_start;
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let done = processed.fetch_add(1, Ordering::Relaxed) as f64;
                let lr = params.lr_start + lr_span * (done / total_centers as f64);
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window).min(walk.len() - 1);
                for (j, &context) in walk[lo..=hi].iter().enumerate() {
                    if lo + j != i {
                        self.update_pair(center as usize, context as usize, lr, rng);
                    }
                }
            }
        }
    }
}

pub fn train_skipgram(
    corpus: &WalkCorpus,
    params: &SkipGramParams,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    if corpus.walks.is_empty() || corpus.node_ids.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let n = corpus.node_ids.len();
    let dim = params.dim;
    let mut counts = vec![0u64; n];
    for walk in &corpus.walks {
        for &t in walk {
            counts[t as usize] += 1;
        }
    }
    let table = NegativeTable::new(&counts);
    let (input_init, output_init) = seeded_init(n, dim, params.seed);
    let input = AtomicMatrix::from_vec(input_init, dim);
    let output = AtomicMatrix::from_vec(output_init, dim);

    let total_centers = (params.epochs * corpus.token_count()).max(1) as u64;
    let processed = AtomicUsize::new(0);
    let workers = params.workers.max(1);

    if workers == 1 {
        let mut trainer = Trainer {
            input: &input,
            output: &output,
            table: &table,
            negatives: params.negatives,
            dim,
            grad_center: vec![0.0; dim],
            center_buf: vec![0.0; dim],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, 1));
        for _ in 0..params.epochs {
            trainer.run_walks(&corpus.walks, params, total_centers, &processed, &mut rng);
        }
    } else {
        let chunk = corpus.walks.len().div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, shard) in corpus.walks.chunks(chunk).enumerate() {
                let input = &input;
                let output = &output;
                let table = &table;
                let processed = &processed;
                scope.spawn(move || {
                    let mut trainer = Trainer {
                        input,
                        output,
                        table,
                        negatives: params.negatives,
                        dim,
                        grad_center: vec![0.0; dim],
                        center_buf: vec![0.0; dim],
                    };
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(params.seed, 1000 + w as u64));
                    for _ in 0..params.epochs {
                        trainer.run_walks(shard, params, total_centers, processed, &mut rng);
                    }
                });
            }
        });
    }

    Ok(EmbeddingMatrix::from_parts(
        corpus.node_ids.clone(),
        input.into_vec(),
        dim,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::walks::{random_walks, WalkParams};
    use crate::graph::{AttributedGraph, Relation};

    fn line_graph(n: usize) -> AttributedGraph {
        let mut graph = AttributedGraph::new();
        for i in 0..n {
            graph.add_node(&format!("n{i}"), "Cell");
        }
        for i in 0..n - 1 {
            graph.add_edge(&format!("n{i}"), Relation::Adjacent, &format!("n{}", i + 1));
        }
        graph
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = WalkCorpus {
            node_ids: vec![],
            walks: vec![],
            params: WalkParams::default(),
        };
        assert!(matches!(
            train_skipgram(&corpus, &SkipGramParams::default()),
            Err(EmbeddingError::EmptyCorpus)
        ));
    }

    #[test]
    fn zero_epochs_returns_the_seeded_initialization() {
        let graph = line_graph(5);
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 2,
                walk_length: 5,
                seed: 4,
                ..WalkParams::default()
            },
        );
        let params = SkipGramParams {
            epochs: 0,
            seed: 31,
            ..SkipGramParams::default()
        };
        let emb = train_skipgram(&corpus, &params).unwrap();
        let (expected, _) = seeded_init(corpus.node_ids.len(), params.dim, params.seed);
        for (i, id) in corpus.node_ids.iter().enumerate() {
            assert_eq!(emb.vector(id).unwrap(), &expected[i * params.dim..(i + 1) * params.dim]);
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        // 5-node toy setup, h = 1e-5, relative error <= 1e-4.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dim = 20;
        let mut vecs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect())
            .collect();
        let h = 1e-5;
        let (g_center, g_context, g_negs) = {
            let negs: Vec<&[f64]> = vec![&vecs[2], &vecs[3], &vecs[4]];
            pair_gradients(&vecs[0], &vecs[1], &negs)
        };
        let mut check = |vec_idx: usize, coord: usize, analytic: f64| {
            let original = vecs[vec_idx][coord];
            vecs[vec_idx][coord] = original + h;
            let up = pair_loss(&vecs[0], &vecs[1], &[&vecs[2], &vecs[3], &vecs[4]]);
            vecs[vec_idx][coord] = original - h;
            let down = pair_loss(&vecs[0], &vecs[1], &[&vecs[2], &vecs[3], &vecs[4]]);
            vecs[vec_idx][coord] = original;
            let numeric = (up - down) / (2.0 * h);
            let scale = numeric.abs().max(analytic.abs()).max(1e-8);
            let rel = (numeric - analytic).abs() / scale;
            assert!(rel <= 1e-4, "vec {vec_idx} coord {coord}: rel err {rel}");
        };
        for j in 0..dim {
            check(0, j, g_center[j]);
            check(1, j, g_context[j]);
            check(2, j, g_negs[0][j]);
            check(3, j, g_negs[1][j]);
            check(4, j, g_negs[2][j]);
        }
    }

    #[test]
    fn fixed_seed_is_bit_deterministic_single_worker() {
        let graph = line_graph(8);
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 4,
                walk_length: 10,
                seed: 5,
                ..WalkParams::default()
            },
        );
        let params = SkipGramParams {
            epochs: 2,
            seed: 77,
            ..SkipGramParams::default()
        };
        let a = train_skipgram(&corpus, &params).unwrap();
        let b = train_skipgram(&corpus, &params).unwrap();
        for id in a.ids() {
            assert_eq!(a.vector(id).unwrap(), b.vector(id).unwrap());
        }
    }

    #[test]
    fn multi_worker_mode_produces_finite_vectors() {
        let graph = line_graph(12);
        let corpus = random_walks(
            &graph,
            &WalkParams {
                walks_per_node: 6,
                walk_length: 10,
                seed: 6,
                ..WalkParams::default()
            },
        );
        let params = SkipGramParams {
            epochs: 2,
            seed: 90,
            workers: 3,
            ..SkipGramParams::default()
        };
        let emb = train_skipgram(&corpus, &params).unwrap();
        for id in emb.ids() {
            assert!(emb.vector(id).unwrap().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn path_end_nodes_are_equally_similar_to_the_center() {
        // Automorphic ends of a 3-path: similarity to the middle node agrees
        // within stochastic tolerance, averaged over 10 seeds.
        let graph = line_graph(3);
        let mut gap_sum = 0.0;
        for seed in 0..10u64 {
            let corpus = random_walks(
                &graph,
                &WalkParams {
                    walks_per_node: 50,
                    walk_length: 10,
                    seed,
                    ..WalkParams::default()
                },
            );
            let params = SkipGramParams {
                seed,
                ..SkipGramParams::default()
            };
            let emb = train_skipgram(&corpus, &params).unwrap();
            let sim = |a: &str, b: &str| {
                super::super::cosine_similarity(emb.vector(a).unwrap(), emb.vector(b).unwrap())
                    .unwrap()
            };
            gap_sum += (sim("n0", "n1") - sim("n2", "n1")).abs();
        }
        let mean_gap = gap_sum / 10.0;
        assert!(mean_gap <= 0.05, "mean symmetry gap {mean_gap}");
    }
}
