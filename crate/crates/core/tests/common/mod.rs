#![allow(dead_code)]

use filtlab::mmspace::{DiscreteMeasure, Partition, PartitionChain, SemimetricMatrix};
use rand::Rng;

/// Random semimetric: shortest-path closure of random positive weights, so the
/// triangle inequality holds by construction.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize) -> SemimetricMatrix {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.random_range(0.05..1.0);
            d[i * n + j] = w;
            d[j * n + i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    SemimetricMatrix::new(n, d).unwrap()
}

/// Random probability vector on `n` points supported on at most `max_support`
/// of them.
pub fn random_measure<R: Rng>(rng: &mut R, n: usize, max_support: usize) -> DiscreteMeasure {
    let k = rng.random_range(1..=max_support.min(n));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut w = vec![0.0; n];
    for &i in &idx[..k] {
        w[i] = rng.random_range(0.01..1.0);
    }
    DiscreteMeasure::normalized(&w).unwrap()
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Random chain of successively coarser partitions of `0..n`, each obtained by
/// merging the blocks of the previous one through a random map.
pub fn random_chain<R: Rng>(rng: &mut R, n: usize, depth: usize) -> PartitionChain {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut parts = Vec::with_capacity(depth);
    let mut width = n;
    for _ in 0..depth {
        width = (width / 2).max(1);
        let map: Vec<usize> = (0..n).map(|_| rng.random_range(0..width)).collect();
        labels = labels.iter().map(|&l| map[l]).collect();
        parts.push(Partition::from_labels(&labels).unwrap());
    }
    PartitionChain::new(n, parts).unwrap()
}

/// Random probability vector with every point charged.
pub fn random_full_measure<R: Rng>(rng: &mut R, n: usize) -> DiscreteMeasure {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    DiscreteMeasure::normalized(&w).unwrap()
}
