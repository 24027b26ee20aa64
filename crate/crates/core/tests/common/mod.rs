#![allow(dead_code)]

use std::collections::BTreeSet;

use cyclingam::graph::DirectedGraph;
use cyclingam::sem::SemParameters;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let w = rng.random_range(lo..hi);
    if rng.random::<bool>() {
        w
    } else {
        -w
    }
}

/// Random cycle-disjoint model: vertices are split into blocks of size
/// `1..=max_block`, blocks of size >= 2 become directed cycles, and an earlier
/// block points to a later one with probability `density` per vertex pair.
/// Weights lie in `(-0.9, -0.3) U (0.3, 0.9)`, so every cycle product is
/// below 1 and the spectral radius is at most 0.9.
pub fn random_cycle_disjoint(rng: &mut ChaCha8Rng, p: usize, max_block: usize, density: f64) -> SemParameters {
    let mut labels: Vec<usize> = (0..p).collect();
    labels.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &labels[..];
    while !rest.is_empty() {
        let size = rng.random_range(1..=max_block.min(rest.len()));
        blocks.push(rest[..size].to_vec());
        rest = &rest[size..];
    }
    let mut edges = BTreeSet::new();
    for b in &blocks {
        if b.len() >= 2 {
            for k in 0..b.len() {
                edges.insert((b[k], b[(k + 1) % b.len()]));
            }
        }
    }
    for a in 0..blocks.len() {
        for c in a + 1..blocks.len() {
            for &u in &blocks[a] {
                for &v in &blocks[c] {
                    if rng.random_bool(density) {
                        edges.insert((u, v));
                    }
                }
            }
        }
    }
    let mut lambda = DMatrix::zeros(p, p);
    for &(i, j) in &edges {
        lambda[(i, j)] = signed(rng, 0.3, 0.9);
    }
    let omega2 = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
    let omega3 = (0..p).map(|_| signed(rng, 0.5, 1.5)).collect();
    let g = DirectedGraph::new(p, edges).unwrap();
    SemParameters::new(g, lambda, omega2, omega3).unwrap()
}

/// A single directed cycle `0 -> 1 -> ... -> k-1 -> 0` with the given weights.
pub fn cycle_model(weights: &[f64], omega2: Vec<f64>, omega3: Vec<f64>) -> SemParameters {
    let k = weights.len();
    let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k, weights[i])).collect();
    SemParameters::from_weighted_edges(k, &edges, omega2, omega3).unwrap()
}

pub fn single_edge_model() -> SemParameters {
    SemParameters::from_weighted_edges(3, &[(0, 1, 3.0)], vec![1.0, 2.0, 1.0], vec![1.0, 2.0, 1.0]).unwrap()
}

pub fn chained_cycles() -> DirectedGraph {
    DirectedGraph::from_one_based(8, &[(1, 3), (2, 4), (3, 4), (4, 5), (5, 3), (5, 6), (6, 7), (7, 8), (8, 6)]).unwrap()
}

pub fn chorded_four_cycle() -> DirectedGraph {
    DirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)]).unwrap()
}

/// Generic parameters on a fixed graph.
pub fn random_weights(rng: &mut ChaCha8Rng, g: &DirectedGraph) -> SemParameters {
    let p = g.p();
    let mut lambda = DMatrix::zeros(p, p);
    for &(i, j) in g.edges() {
        lambda[(i, j)] = signed(rng, 0.3, 0.9);
    }
    let omega2 = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
    let omega3 = (0..p).map(|_| signed(rng, 0.5, 1.5)).collect();
    SemParameters::new(g.clone(), lambda, omega2, omega3).unwrap()
}
