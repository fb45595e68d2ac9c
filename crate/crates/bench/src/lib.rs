//! Seeded graph generators shared by the benchmarks.

use btdw_core::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Each unordered pair is joined with probability `p` in a random direction;
/// the reverse edge is then added with probability `recip`.
pub fn random_digraph(n: usize, p: f64, recip: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let (a, b) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                edges.push((a, b));
                if rng.random_bool(recip) {
                    edges.push((b, a));
                }
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are in range and loop-free")
}

/// Sparse graph with about `avg_degree` out-edges per node.
pub fn sparse_digraph(n: usize, avg_degree: usize, recip: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * avg_degree);
    for i in 0..n {
        for _ in 0..avg_degree {
            let j = rng.random_range(0..n);
            if j != i {
                edges.push((i, j));
                if rng.random_bool(recip) {
                    edges.push((j, i));
                }
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are in range and loop-free")
}

/// Uniform scores in `[0, 1)`, for the ranking benchmarks.
pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}
