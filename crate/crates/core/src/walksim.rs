//! Finite models of the filtration of pasts of a random walk over a
//! Bernoulli scenery.
//!
//! An element of `xi_n` is a tree whose leaves are the `r^n` increment words
//! `w = (w_1, ..., w_n)`, `r = 2s`, read outward from the common tail
//! position: `w_1` is the root digit and `w_n` the leaf digit. The leaf label
//! is the string of scenery bits at the positions `tail * w_1 ... w_j` for the
//! last `m' = min(m, n)` values of `j`, i.e. what the point itself has
//! observed most recently.
//!
//! Subtrees only depend on the group element they start from, and isomorphic
//! subtrees are interchangeable, so distances are computed by dynamic
//! programming over pairs of subtree classes in exact integer arithmetic.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec, Scenery};
use crate::mmspace::{DiscreteMeasure, Partition, PartitionChain, SemimetricMatrix};
use crate::numeric::derive_seed;
use crate::stats::{mean_ci, wilson, Estimate};
use crate::treewalk::{BaseMetric, TreeLeafSystem, MAX_RADIX};

/// Default bound on the number of leaves `(2s)^n`.
pub const DEFAULT_LEAF_CAP: usize = 1 << 14;

/// Seed streams for the samplers.
pub const STREAM_PROFILE: u64 = 1;
pub const STREAM_BALL: u64 = 2;
pub const STREAM_SPACE: u64 = 3;
pub const STREAM_CENTER: u64 = 4;
pub const STREAM_MEETING: u64 = 5;

/// A point of the walk space: scenery, position at time zero, and the depth
/// of its initial cylinder observation.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPoint {
    pub scenery: Scenery,
    pub tail: GroupElement,
    pub m: usize,
}

impl WalkPoint {
    /// Independent scenery drawn from `(master, stream, index)`, tail at the
    /// identity.
    pub fn sampled(spec: &GroupSpec, m: usize, master: u64, stream: u64, index: u64) -> Self {
        WalkPoint {
            scenery: Scenery::new(derive_seed(master, stream, index)),
            tail: spec.identity(),
            m,
        }
    }
}

fn check_cap(spec: &GroupSpec, n: usize, leaf_cap: usize) -> Result<usize> {
    let r = spec.symbol_count();
    if r > MAX_RADIX {
        return Err(Error::SizeLimit {
            what: "walk alphabet",
            value: r as u128,
            limit: MAX_RADIX as u128,
        });
    }
    let leaves = (r as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if leaves > leaf_cap as u128 {
        return Err(Error::SizeLimit {
            what: "leaf count",
            value: leaves,
            limit: leaf_cap as u128,
        });
    }
    Ok(leaves as usize)
}

fn effective_depth(m: usize, n: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::Structural("observation depth m must be positive".into()));
    }
    Ok(m.min(n))
}

/// The leaf system of the `xi_n` element of `p`, with normalized Hamming
/// distance on `m'`-bit labels.
pub fn leaf_observations(
    p: &WalkPoint,
    spec: &GroupSpec,
    n: usize,
    leaf_cap: usize,
) -> Result<TreeLeafSystem> {
    let leaves = check_cap(spec, n, leaf_cap)?;
    let m_eff = effective_depth(p.m, n)?;
    let r = spec.symbol_count();
    let first = n - m_eff + 1;
    let mut labels = Vec::with_capacity(leaves);
    let mut path = vec![0u8; n];
    for leaf in 0..leaves {
        let mut rest = leaf;
        for j in (0..n).rev() {
            path[j] = (rest % r) as u8;
            rest /= r;
        }
        let mut g = p.tail.clone();
        let mut label = 0u32;
        for (j, &s) in path.iter().enumerate() {
            g = spec.step(&g, s);
            if j + 1 >= first {
                label |= (p.scenery.value(&g) as u32) << (j + 1 - first);
            }
        }
        labels.push(label);
    }
    TreeLeafSystem::homogeneous(
        r,
        n,
        labels,
        Arc::new(BaseMetric::Hamming {
            bits: m_eff as u32,
        }),
    )
}

/// The `xi_n` element of a walk point, compressed to classes of isomorphic
/// subtrees at each depth.
#[derive(Debug, Clone)]
pub struct ObservedWalk {
    r: usize,
    n: usize,
    m_eff: usize,
    positions: Vec<usize>,
    /// `children[j][a * r + c]`: class at depth `j + 1` of the `c`-th child
    /// (in sorted order) of class `a` at depth `j`.
    children: Vec<Vec<u32>>,
    /// `bits[j][a]`: scenery bit read at the root of class `a` of depth `j`.
    bits: Vec<Vec<u8>>,
}

impl ObservedWalk {
    pub fn new(p: &WalkPoint, spec: &GroupSpec, n: usize, leaf_cap: usize) -> Result<Self> {
        check_cap(spec, n, leaf_cap)?;
        let m_eff = effective_depth(p.m, n)?;
        let r = spec.symbol_count();
        // distinct positions per depth and the position graph
        let mut levels: Vec<Vec<GroupElement>> = vec![vec![p.tail.clone()]];
        let mut edges: Vec<Vec<u32>> = Vec::with_capacity(n);
        for _ in 0..n {
            let cur = levels.last().unwrap();
            let mut index: HashMap<GroupElement, u32> = HashMap::new();
            let mut next = Vec::new();
            let mut ch = Vec::with_capacity(cur.len() * r);
            for g in cur {
                for s in 0..r as u8 {
                    let h = spec.step(g, s);
                    let id = *index.entry(h.clone()).or_insert_with(|| {
                        next.push(h);
                        next.len() as u32 - 1
                    });
                    ch.push(id);
                }
            }
            edges.push(ch);
            levels.push(next);
        }
        let positions = levels.iter().map(Vec::len).collect();
        // intern subtrees bottom-up: a class is (bit, sorted child classes)
        let mut class_of: Vec<u32> = Vec::new();
        let mut children = vec![Vec::new(); n];
        let mut bits = vec![Vec::new(); n + 1];
        for j in (0..=n).rev() {
            let mut table: HashMap<(u8, Vec<u32>), u32> = HashMap::new();
            let mut next_class = Vec::with_capacity(levels[j].len());
            for (a, g) in levels[j].iter().enumerate() {
                let bit = p.scenery.value(g);
                let mut kids: Vec<u32> = if j < n {
                    edges[j][a * r..(a + 1) * r]
                        .iter()
                        .map(|&c| class_of[c as usize])
                        .collect()
                } else {
                    Vec::new()
                };
                kids.sort_unstable();
                let fresh = table.len() as u32;
                let id = *table.entry((bit, kids.clone())).or_insert_with(|| {
                    bits[j].push(bit);
                    if j < n {
                        children[j].extend_from_slice(&kids);
                    }
                    fresh
                });
                next_class.push(id);
            }
            class_of = next_class;
        }
        Ok(ObservedWalk {
            r,
            n,
            m_eff,
            positions,
            children,
            bits,
        })
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    /// Number of distinct positions at each depth.
    pub fn positions(&self) -> Vec<usize> {
        self.positions.clone()
    }

    /// Number of distinct subtree classes at each depth.
    pub fn classes(&self) -> Vec<usize> {
        self.bits.iter().map(Vec::len).collect()
    }
}

/// `rho_n` between two observed walks of the same shape.
pub fn observed_distance(x: &ObservedWalk, y: &ObservedWalk) -> Result<f64> {
    if (x.r, x.n, x.m_eff) != (y.r, y.n, y.m_eff) {
        return Err(Error::Structural(format!(
            "walk shapes differ: (r, n, m') = {:?} vs {:?}",
            (x.r, x.n, x.m_eff),
            (y.r, y.n, y.m_eff)
        )));
    }
    let (r, n) = (x.r, x.n);
    if n == 0 {
        return Ok(0.0);
    }
    let first = n - x.m_eff + 1;
    let mut below = vec![0u64; x.bits[n].len() * y.bits[n].len()];
    let mut below_width = y.bits[n].len();
    let mut leaves_below: u64 = 1;
    let mut cost = [0u64; MAX_RADIX * MAX_RADIX];
    for j in (0..n).rev() {
        let (xa, yb) = (x.bits[j].len(), y.bits[j].len());
        let mut cur = vec![0u64; xa * yb];
        let weight = if j + 1 >= first { leaves_below } else { 0 };
        let (xc, yc) = (&x.children[j], &y.children[j]);
        let (xbits, ybits) = (&x.bits[j + 1], &y.bits[j + 1]);
        for a in 0..xa {
            for b in 0..yb {
                for c in 0..r {
                    let ca = xc[a * r + c] as usize;
                    for d in 0..r {
                        let cb = yc[b * r + d] as usize;
                        let mismatch = (xbits[ca] != ybits[cb]) as u64;
                        cost[c * r + d] = weight * mismatch + below[ca * below_width + cb];
                    }
                }
                cur[a * yb + b] = min_assignment(&cost[..r * r], r);
            }
        }
        leaves_below *= r as u64;
        below = cur;
        below_width = yb;
    }
    let total = below[0];
    Ok(total as f64 / (leaves_below as f64 * x.m_eff as f64))
}

/// Minimum-cost perfect matching of an `r x r` table by subset DP.
fn min_assignment(cost: &[u64], r: usize) -> u64 {
    if r == 2 {
        return (cost[0] + cost[3]).min(cost[1] + cost[2]);
    }
    let full = (1usize << r) - 1;
    let mut dp = [u64::MAX; 1 << MAX_RADIX];
    dp[0] = 0;
    for mask in 0..full {
        let base = dp[mask];
        if base == u64::MAX {
            continue;
        }
        let i = mask.count_ones() as usize;
        for c in 0..r {
            if mask & (1 << c) == 0 {
                let v = base + cost[i * r + c];
                let slot = &mut dp[mask | (1 << c)];
                if v < *slot {
                    *slot = v;
                }
            }
        }
    }
    dp[full]
}

/// `rho_n(p, q)` for two walk points.
pub fn pair_distance(
    p: &WalkPoint,
    q: &WalkPoint,
    spec: &GroupSpec,
    n: usize,
    leaf_cap: usize,
) -> Result<f64> {
    if p.m != q.m {
        return Err(Error::Structural(format!(
            "observation depths differ: {} vs {}",
            p.m, q.m
        )));
    }
    let x = ObservedWalk::new(p, spec, n, leaf_cap)?;
    let y = ObservedWalk::new(q, spec, n, leaf_cap)?;
    observed_distance(&x, &y)
}

/// Fraction of sampled points within `rho_n < epsilon` of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallMeasure {
    pub hits: usize,
    pub samples: usize,
    pub estimate: Estimate,
}

/// Monte Carlo estimate of `mu{q : rho_n(p, q) < epsilon}` from `samples`
/// independent sceneries drawn from `(master, STREAM_BALL, i)`.
pub fn ball_measure_estimate(
    p: &WalkPoint,
    spec: &GroupSpec,
    n: usize,
    epsilon: f64,
    samples: usize,
    master: u64,
    leaf_cap: usize,
) -> Result<BallMeasure> {
    if samples < 100 {
        return Err(Error::InsufficientData {
            needed: 100,
            got: samples,
        });
    }
    let center = ObservedWalk::new(p, spec, n, leaf_cap)?;
    let d = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let q = WalkPoint::sampled(spec, p.m, master, STREAM_BALL, i);
            observed_distance(&center, &ObservedWalk::new(&q, spec, n, leaf_cap)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = d.iter().filter(|&&v| v < epsilon).count();
    Ok(BallMeasure {
        hits,
        samples,
        estimate: wilson(hits, samples),
    })
}

/// Monte Carlo `c_n` for one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub m_eff: usize,
    pub estimate: Estimate,
}

/// `c_n` estimates for `n = 1..=n_max` from `pairs` independent pairs. The
/// same pairs are reused at every depth.
pub fn mean_distance_profile(
    spec: &GroupSpec,
    n_max: usize,
    m: usize,
    pairs: usize,
    master: u64,
    leaf_cap: usize,
) -> Result<Vec<ProfileRow>> {
    if pairs < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pairs,
        });
    }
    check_cap(spec, n_max, leaf_cap)?;
    (1..=n_max)
        .map(|n| {
            let d = (0..pairs as u64)
                .into_par_iter()
                .map(|i| {
                    let p = WalkPoint::sampled(spec, m, master, STREAM_PROFILE, 2 * i);
                    let q = WalkPoint::sampled(spec, m, master, STREAM_PROFILE, 2 * i + 1);
                    pair_distance(&p, &q, spec, n, leaf_cap)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ProfileRow {
                n,
                m_eff: m.min(n),
                estimate: mean_ci(&d),
            })
        })
        .collect()
}

/// Empirical walk space: `k` independently sampled points with their
/// pairwise `rho_n` and the uniform measure.
pub fn sampled_space(
    spec: &GroupSpec,
    n: usize,
    m: usize,
    k: usize,
    master: u64,
    leaf_cap: usize,
) -> Result<(SemimetricMatrix, DiscreteMeasure)> {
    if k == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let walks = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let p = WalkPoint::sampled(spec, m, master, STREAM_SPACE, i);
            ObservedWalk::new(&p, spec, n, leaf_cap)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pairwise_matrix(&walks)?, DiscreteMeasure::uniform(k)))
}

/// Pairwise `rho_n` over a list of observed walks.
pub fn pairwise_matrix(walks: &[ObservedWalk]) -> Result<SemimetricMatrix> {
    let k = walks.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| observed_distance(&walks[i], &walks[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut d = vec![0.0; k * k];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        d[i * k + j] = v;
        d[j * k + i] = v;
    }
    SemimetricMatrix::new(k, d)
}

/// The two `xi_n` elements of `p` and `q` as a generic partition chain on
/// `2 r^n` points (point `t * r^n + leaf`), with the normalized Hamming
/// `rho_0` on leaf labels and the uniform measure. Block `0` of the top
/// partition belongs to `p`, block `1` to `q`.
pub fn two_point_chain(
    p: &WalkPoint,
    q: &WalkPoint,
    spec: &GroupSpec,
    n: usize,
    leaf_cap: usize,
) -> Result<(SemimetricMatrix, DiscreteMeasure, PartitionChain)> {
    let x = leaf_observations(p, spec, n, leaf_cap)?;
    let y = leaf_observations(q, spec, n, leaf_cap)?;
    let leaves = x.leaf_count();
    let labels: Vec<u32> = x.labels().iter().chain(y.labels()).copied().collect();
    let base = x.base().clone();
    let size = 2 * leaves;
    let rho0 = SemimetricMatrix::from_fn(size, |i, j| base.distance(labels[i], labels[j]))?;
    let r = spec.symbol_count();
    let mut parts = Vec::with_capacity(n);
    let mut span = 1usize;
    for _ in 0..n {
        span *= r;
        let ids: Vec<(usize, usize)> = (0..size)
            .map(|i| (i / leaves, (i % leaves) / span))
            .collect();
        parts.push(Partition::from_labels(&ids)?);
    }
    Ok((
        rho0,
        DiscreteMeasure::uniform(size),
        PartitionChain::new(size, parts)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treewalk::tree_distance;

    fn z1() -> GroupSpec {
        GroupSpec::Lattice { dim: 1 }
    }

    #[test]
    fn one_step_labels() {
        let spec = z1();
        let p = WalkPoint::sampled(&spec, 1, 4, 0, 0);
        let t = leaf_observations(&p, &spec, 1, DEFAULT_LEAF_CAP).unwrap();
        let right = p.scenery.value(&GroupElement::Lattice(vec![1])) as u32;
        let left = p.scenery.value(&GroupElement::Lattice(vec![-1])) as u32;
        assert_eq!(t.labels(), &[right, left]);
    }

    #[test]
    fn fast_distance_matches_tree_distance() {
        for spec in [
            z1(),
            GroupSpec::Lattice { dim: 2 },
            GroupSpec::Free { generators: 2 },
            GroupSpec::Heisenberg,
        ] {
            for n in 0..=4 {
                for m in [1, 2, 4] {
                    for i in 0..3 {
                        let p = WalkPoint::sampled(&spec, m, 10, 0, 2 * i);
                        let q = WalkPoint::sampled(&spec, m, 10, 0, 2 * i + 1);
                        let fast = pair_distance(&p, &q, &spec, n, DEFAULT_LEAF_CAP).unwrap();
                        let slow = tree_distance(
                            &leaf_observations(&p, &spec, n, DEFAULT_LEAF_CAP).unwrap(),
                            &leaf_observations(&q, &spec, n, DEFAULT_LEAF_CAP).unwrap(),
                        )
                        .unwrap();
                        assert_eq!(fast, slow, "{spec:?} n={n} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let spec = GroupSpec::Free { generators: 2 };
        let p = WalkPoint::sampled(&spec, 3, 1, 0, 0);
        assert_eq!(pair_distance(&p, &p, &spec, 3, DEFAULT_LEAF_CAP).unwrap(), 0.0);
        let zero = WalkPoint {
            scenery: Scenery::constant(0),
            tail: spec.identity(),
            m: 3,
        };
        let zero2 = WalkPoint {
            tail: GroupElement::Free(vec![1, 2]),
            ..zero.clone()
        };
        let t = leaf_observations(&zero, &spec, 3, DEFAULT_LEAF_CAP).unwrap();
        assert!(t.labels().iter().all(|&l| l == 0));
        assert_eq!(pair_distance(&zero, &zero2, &spec, 3, DEFAULT_LEAF_CAP).unwrap(), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let spec = GroupSpec::Free { generators: 2 };
        let p = WalkPoint::sampled(&spec, 3, 1, 0, 0);
        assert!(matches!(
            leaf_observations(&p, &spec, 8, DEFAULT_LEAF_CAP),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn assignment_dp() {
        let c = [4, 1, 3, 2, 0, 5, 3, 2, 2];
        assert_eq!(min_assignment(&c, 3), 5);
        assert_eq!(min_assignment(&[1, 0, 0, 1], 2), 0);
    }
}
