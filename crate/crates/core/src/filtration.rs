//! Iterated Kantorovich semimetrics over a finite partition chain.
//!
//! Level `k` is stored over the quotient by `xi_k`: one row per block of
//! positive measure. Null blocks are skipped; only direct queries involving
//! them fail.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mmspace::{DiscreteMeasure, Partition, PartitionChain, SemimetricMatrix};
use crate::numeric::canonical_sum_iter;
use crate::transport::solve_transport;

/// Slack allowed when checking that `c_n` does not increase.
pub const MONOTONE_TOL: f64 = 1e-9;

/// One level of the iteration: `rho_k` over the active blocks of `xi_k`.
#[derive(Debug, Clone)]
pub struct IteratedLevel {
    level: usize,
    partition: Partition,
    /// Quotient index of each block, `None` for null blocks.
    quotient: Vec<Option<usize>>,
    /// Block id of each quotient point.
    active: Vec<usize>,
    weights: Vec<f64>,
    rho: SemimetricMatrix,
}

impl IteratedLevel {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// `rho_k` over the quotient points, indexed like [`Self::active_blocks`].
    pub fn quotient_matrix(&self) -> &SemimetricMatrix {
        &self.rho
    }

    pub fn active_blocks(&self) -> &[usize] {
        &self.active
    }

    /// Measure of each quotient point.
    pub fn quotient_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quotient index of point `x`.
    pub fn quotient_index(&self, x: usize) -> Result<usize> {
        let b = self.partition.block_of(x);
        self.quotient[b].ok_or(Error::DegenerateBlock { block: b })
    }

    /// `rho_k(x, y)` for points `x`, `y`.
    pub fn distance(&self, x: usize, y: usize) -> Result<f64> {
        let n = self.partition.size();
        if x >= n || y >= n {
            return Err(Error::Structural(format!("point out of range 0..{n}")));
        }
        Ok(self.rho.get(self.quotient_index(x)?, self.quotient_index(y)?))
    }

    /// `rho_k` expanded to a matrix over all points. Fails if any block is null.
    pub fn point_matrix(&self) -> Result<SemimetricMatrix> {
        let n = self.partition.size();
        let idx = (0..n)
            .map(|x| self.quotient_index(x))
            .collect::<Result<Vec<_>>>()?;
        self.rho.restrict(&idx)
    }

    /// `c_k = sum mu(B) mu(B') rho_k(B, B')` over the quotient.
    pub fn mean_distance(&self) -> f64 {
        let q = self.weights.len();
        canonical_sum_iter((0..q).flat_map(|i| {
            (0..q).map(move |j| self.weights[i] * self.weights[j] * self.rho.get(i, j))
        }))
    }
}

/// `rho_0, rho_1, ..., rho_n`.
#[derive(Debug, Clone)]
pub struct Iteration {
    levels: Vec<IteratedLevel>,
}

impl Iteration {
    /// Number of iterated levels (excluding `rho_0`).
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, k: usize) -> &IteratedLevel {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[IteratedLevel] {
        &self.levels
    }

    pub fn mean_distances(&self) -> Vec<f64> {
        self.levels.iter().map(IteratedLevel::mean_distance).collect()
    }
}

/// `rho_k(x, y) = k_{rho_{k-1}}(mu^{C_k(x)}, mu^{C_k(y)})` for `k = 1..depth`.
///
/// The conditional measure of a `xi_k` block is taken over the `xi_{k-1}`
/// quotient points it contains, weighted by their mass.
pub fn iterate_semimetric(
    rho0: &SemimetricMatrix,
    mu: &DiscreteMeasure,
    chain: &PartitionChain,
    depth: usize,
) -> Result<Iteration> {
    let n = rho0.size();
    for got in [mu.size(), chain.space_size()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if depth > chain.len() {
        return Err(Error::Structural(format!(
            "chain has {} partitions, depth {depth} requested",
            chain.len()
        )));
    }
    let mut levels = Vec::with_capacity(depth + 1);
    levels.push(IteratedLevel {
        level: 0,
        partition: Partition::singletons(n),
        quotient: (0..n).map(Some).collect(),
        active: (0..n).collect(),
        weights: mu.weights().to_vec(),
        rho: rho0.clone(),
    });
    for k in 1..=depth {
        let next = iterate_once(&levels[k - 1], mu, chain.level(k), k)?;
        levels.push(next);
    }
    Ok(Iteration { levels })
}

fn iterate_once(
    prev: &IteratedLevel,
    mu: &DiscreteMeasure,
    xi: Partition,
    level: usize,
) -> Result<IteratedLevel> {
    let masses = xi.masses(mu);
    let mut quotient = vec![None; xi.block_count()];
    let mut active = Vec::new();
    for (b, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            quotient[b] = Some(active.len());
            active.push(b);
        }
    }
    // Conditional measure of each active block over previous quotient points.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); active.len()];
    for (qi, &pb) in prev.active.iter().enumerate() {
        if prev.weights[qi] <= 0.0 {
            continue;
        }
        let rep = prev.partition.block(pb)[0];
        let b = xi.block_of(rep);
        if let Some(q) = quotient[b] {
            members[q].push(qi);
        }
    }
    let cond: Vec<Vec<f64>> = members
        .iter()
        .zip(&active)
        .map(|(mem, &b)| mem.iter().map(|&qi| prev.weights[qi] / masses[b]).collect())
        .collect();

    let q = active.len();
    let pairs: Vec<(usize, usize)> = (0..q)
        .flat_map(|i| (i + 1..q).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (mi, mj) = (&members[i], &members[j]);
            solve_transport(&cond[i], &cond[j], |a, b| prev.rho.get(mi[a], mj[b]))
                .map(|s| s.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut d = vec![0.0; q * q];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        d[i * q + j] = v;
        d[j * q + i] = v;
    }
    let weights = active.iter().map(|&b| masses[b]).collect();
    Ok(IteratedLevel {
        level,
        partition: xi,
        quotient,
        active,
        weights,
        rho: SemimetricMatrix::new(q, d)?,
    })
}

/// `sum_{i,j} mu_i mu_j rho[i][j]`.
pub fn mean_distance(rho: &SemimetricMatrix, mu: &DiscreteMeasure) -> Result<f64> {
    let n = rho.size();
    if mu.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.size(),
        });
    }
    Ok(canonical_sum_iter((0..n).flat_map(|i| {
        (0..n).map(move |j| mu.weight(i) * mu.weight(j) * rho.get(i, j))
    })))
}

/// The sequence `c_0, ..., c_N` with a finite-scale indicator `c_N / c_0`.
///
/// The ratio is a heuristic; no threshold is applied here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardnessProfile {
    pub c: Vec<f64>,
    pub strictly_decreasing: bool,
    pub terminal_ratio: f64,
}

pub fn standardness_profile(
    rho0: &SemimetricMatrix,
    mu: &DiscreteMeasure,
    chain: &PartitionChain,
) -> Result<StandardnessProfile> {
    let it = iterate_semimetric(rho0, mu, chain, chain.len())?;
    profile_from(it.mean_distances())
}

pub(crate) fn profile_from(c: Vec<f64>) -> Result<StandardnessProfile> {
    for k in 1..c.len() {
        if c[k] > c[k - 1] + MONOTONE_TOL {
            return Err(Error::Solver(format!(
                "mean distance increased from {} to {} at level {k}",
                c[k - 1],
                c[k]
            )));
        }
    }
    let strictly_decreasing = c.windows(2).all(|w| w[1] < w[0]);
    let terminal_ratio = match (c.first(), c.last()) {
        (Some(&c0), Some(&cn)) if c0 > 0.0 => cn / c0,
        _ => f64::NAN,
    };
    Ok(StandardnessProfile {
        c,
        strictly_decreasing,
        terminal_ratio,
    })
}

/// Uniform measure on `{0,1}^bits` (point `x` has bit `t` equal to
/// `(x >> t) & 1`) with the chain whose `n`-th partition forgets the first
/// `n` bits, for `n = 1..=depth`.
pub fn dyadic_bernoulli(bits: u32, depth: u32) -> Result<(DiscreteMeasure, PartitionChain)> {
    if bits == 0 || bits > 20 {
        return Err(Error::SizeLimit {
            what: "dyadic bits",
            value: bits as u128,
            limit: 20,
        });
    }
    if depth > bits {
        return Err(Error::Structural(format!(
            "depth {depth} exceeds the number of bits {bits}"
        )));
    }
    let size = 1usize << bits;
    let parts = (1..=depth)
        .map(|n| {
            let labels: Vec<usize> = (0..size).map(|x| x >> n).collect();
            Partition::from_labels(&labels)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((DiscreteMeasure::uniform(size), PartitionChain::new(size, parts)?))
}

/// Cylinder Hamming semimetric of order `m` on `{0,1}^bits`: the fraction of
/// the first `m` bits in which two points differ.
pub fn cylinder_hamming(bits: u32, order: u32) -> Result<SemimetricMatrix> {
    if order == 0 || order > bits {
        return Err(Error::Structural(format!(
            "cylinder order must lie in 1..={bits}, got {order}"
        )));
    }
    let mask = (1usize << order) - 1;
    SemimetricMatrix::from_fn(1 << bits, |x, y| {
        ((x ^ y) & mask).count_ones() as f64 / order as f64
    })
}
