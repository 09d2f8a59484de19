//! Seed derivation for independent, reproducible RNG streams.

/// Derives a child seed from a root seed and a stream index (SplitMix64).
///
/// Every component that needs its own RNG stream (per-tree, per-walk,
/// per-user) derives it this way, so parallel or reordered execution cannot
/// change the sampled values.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9E3779B97F4A7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
