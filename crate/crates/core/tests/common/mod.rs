#![allow(dead_code)]

use btdw_core::Graph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each ordered pair (i, j), i != j, is an edge with probability `p`.
pub fn random_digraph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Graph from an adjacency bit pattern (row-major, diagonal ignored).
pub fn from_bits(n: usize, bits: &[bool]) -> Graph {
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && bits[i * n + j]);
    Graph::from_edges(n, edges).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn vec_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `Σ_{k ≤ K} (αA)^k / k!` until the terms vanish in double precision.
pub fn dense_exp(a: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..400 {
        term = &term * a * (alpha / k as f64);
        sum += &term;
        if term.abs().max() <= 1e-18 * sum.abs().max() {
            break;
        }
    }
    sum
}
