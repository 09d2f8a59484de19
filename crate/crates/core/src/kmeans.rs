//! Lloyd k-means with k-means++ seeding, plus the adjusted Rand index used
//! to score clusterings against ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITERS: usize = 300;
const TOLERANCE: f64 = 1e-4;

fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters `points` into `k` groups; returns the assignment per point.
///
/// Deterministic for a fixed seed. Callers validate `1 <= k <= points.len()`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    assert!(k >= 1 && k <= points.len());
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut best_dist2: Vec<f64> = points.iter().map(|p| distance2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best_dist2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass is zero (duplicate points); take the first
            // point not already a center.
            (0..n)
                .find(|&i| !centers.iter().any(|c| c == &points[i]))
                .unwrap_or(0)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in best_dist2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            best_dist2[i] = best_dist2[i].min(distance2(p, centers.last().unwrap()));
        }
    }

    let dim = points[0].len();
    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = distance2(p, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = distance2(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignment[i] = best;
        }
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue; // empty cluster keeps its previous center
            }
            let new_center: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            movement = movement.max(distance2(&new_center, &centers[c]).sqrt());
            centers[c] = new_center;
        }
        if movement < TOLERANCE {
            break;
        }
    }
    assignment
}

/// Adjusted Rand index between two labelings of the same items, in [-1, 1];
/// 1 means identical partitions, ~0 means chance agreement.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut table: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    let mut rows: std::collections::BTreeMap<usize, usize> = Default::default();
    let mut cols: std::collections::BTreeMap<usize, usize> = Default::default();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let choose2 = |m: usize| (m * m.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.values().map(|&m| choose2(m)).sum();
    let sum_rows: f64 = rows.values().map(|&m| choose2(m)).sum();
    let sum_cols: f64 = cols.values().map(|&m| choose2(m)).sum();
    let expected = sum_rows * sum_cols / choose2(n);
    let max_index = (sum_rows + sum_cols) / 2.0;
    if (max_index - expected).abs() < 1e-15 {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}
