//! Distances between labelings of a rooted tree, minimized over the tree's
//! automorphism group, and orbit partitions of leaf words.
//!
//! Radices are listed bottom-up: `radices[0]` is the branching of nodes just
//! above the leaves and `radices[n - 1]` the branching of the root. Leaves are
//! numbered lexicographically with the root digit most significant, so every
//! subtree covers a contiguous range of leaves.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mmspace::{partition_entropy, DiscreteMeasure, Partition, SemimetricMatrix};
use crate::numeric::canonical_sum_iter;

/// Largest branching handled by exhaustive permutation search.
pub const MAX_RADIX: usize = 8;
/// Leaf budget of [`tree_distance_bruteforce`].
pub const BRUTEFORCE_MAX_LEAVES: usize = 16;
/// Word budget of [`orbit_partition`].
pub const ORBIT_MAX_WORDS: usize = 1 << 20;

/// Semimetric on leaf labels.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseMetric {
    Matrix(SemimetricMatrix),
    /// Normalized Hamming distance between `bits`-bit labels.
    Hamming { bits: u32 },
}

impl BaseMetric {
    fn alphabet_size(&self) -> usize {
        match self {
            BaseMetric::Matrix(d) => d.size(),
            BaseMetric::Hamming { bits } => 1usize << bits,
        }
    }

    /// Distance before division by [`Self::denominator`]. Hamming distances
    /// stay integral so sums over leaves are exact.
    #[inline]
    fn raw(&self, a: u32, b: u32) -> f64 {
        match self {
            BaseMetric::Matrix(d) => d.get(a as usize, b as usize),
            BaseMetric::Hamming { .. } => (a ^ b).count_ones() as f64,
        }
    }

    fn denominator(&self) -> f64 {
        match self {
            BaseMetric::Matrix(_) => 1.0,
            BaseMetric::Hamming { bits } => (*bits).max(1) as f64,
        }
    }

    pub fn distance(&self, a: u32, b: u32) -> f64 {
        self.raw(a, b) / self.denominator()
    }
}

/// Labels on the leaves of a rooted tree with per-level radices.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLeafSystem {
    radices: Vec<usize>,
    labels: Vec<u32>,
    base: Arc<BaseMetric>,
}

impl TreeLeafSystem {
    pub fn new(radices: Vec<usize>, labels: Vec<u32>, base: Arc<BaseMetric>) -> Result<Self> {
        if let Some(&r) = radices.iter().find(|&&r| !(2..=MAX_RADIX).contains(&r)) {
            return Err(Error::Structural(format!(
                "radix {r} outside 2..={MAX_RADIX}"
            )));
        }
        let leaves = leaf_count(&radices)?;
        if labels.len() != leaves {
            return Err(Error::DimensionMismatch {
                expected: leaves,
                got: labels.len(),
            });
        }
        let k = base.alphabet_size();
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= k) {
            return Err(Error::Structural(format!(
                "label {l} outside alphabet of size {k}"
            )));
        }
        Ok(TreeLeafSystem {
            radices,
            labels,
            base,
        })
    }

    /// Homogeneous tree of valence `r` and height `n`.
    pub fn homogeneous(r: usize, n: usize, labels: Vec<u32>, base: Arc<BaseMetric>) -> Result<Self> {
        Self::new(vec![r; n], labels, base)
    }

    pub fn height(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn base(&self) -> &BaseMetric {
        &self.base
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    fn check_shape(&self, other: &TreeLeafSystem) -> Result<()> {
        if self.radices != other.radices {
            return Err(Error::Structural("trees have different shapes".into()));
        }
        if !Arc::ptr_eq(&self.base, &other.base) && self.base != other.base {
            return Err(Error::Structural("trees use different base metrics".into()));
        }
        Ok(())
    }

    /// Labels after applying a leaf permutation: leaf `i` receives the label
    /// of leaf `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: perm.len(),
            });
        }
        Ok(TreeLeafSystem {
            radices: self.radices.clone(),
            labels: perm.iter().map(|&p| self.labels[p]).collect(),
            base: self.base.clone(),
        })
    }
}

fn leaf_count(radices: &[usize]) -> Result<usize> {
    radices.iter().try_fold(1usize, |acc, &r| {
        acc.checked_mul(r)
            .filter(|&v| v <= 1 << 26)
            .ok_or(Error::SizeLimit {
                what: "leaf count",
                value: u128::MAX,
                limit: 1 << 26,
            })
    })
}

/// All permutations of `0..r` in lexicographic order.
pub(crate) fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..r).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..r).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..r).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// `min_{a} (1/N) sum_i rho(x_i, y_{a(i)})` over tree automorphisms `a`,
/// computed by optimal assignment of children at every node.
pub fn tree_distance(x: &TreeLeafSystem, y: &TreeLeafSystem) -> Result<f64> {
    x.check_shape(y)?;
    let mut engine = TreeEngine::new(&x.radices, &x.base);
    let a = engine.intern(&x.labels);
    let b = engine.intern(&y.labels);
    let total = engine.cost(x.height(), a, b);
    Ok(total / (x.leaf_count() as f64 * x.base.denominator()))
}

/// Identity-matching average `(1/N) sum_i rho(x_i, y_i)`, an upper bound for
/// [`tree_distance`].
pub fn identity_matching(x: &TreeLeafSystem, y: &TreeLeafSystem) -> Result<f64> {
    x.check_shape(y)?;
    let s = canonical_sum_iter(
        x.labels
            .iter()
            .zip(&y.labels)
            .map(|(&a, &b)| x.base.raw(a, b)),
    );
    Ok(s / (x.leaf_count() as f64 * x.base.denominator()))
}

/// Memoized recursive assignment over interned subtrees.
struct TreeEngine<'a> {
    radices: &'a [usize],
    base: &'a BaseMetric,
    perms: Vec<Vec<Vec<usize>>>,
    /// `ids[h]` maps sorted child ids of a height-`h` node to its id.
    ids: Vec<HashMap<Vec<u32>, u32>>,
    children: Vec<Vec<Vec<u32>>>,
    memo: HashMap<(usize, u32, u32), f64>,
}

impl<'a> TreeEngine<'a> {
    fn new(radices: &'a [usize], base: &'a BaseMetric) -> Self {
        let h = radices.len();
        TreeEngine {
            radices,
            base,
            perms: radices.iter().map(|&r| permutations(r)).collect(),
            ids: vec![HashMap::new(); h + 1],
            children: vec![Vec::new(); h + 1],
            memo: HashMap::new(),
        }
    }

    /// Interns every subtree of `labels`; returns the root id. Children are
    /// sorted, so automorphic subtrees share an id.
    fn intern(&mut self, labels: &[u32]) -> u32 {
        let mut level: Vec<u32> = labels.to_vec();
        for h in 1..=self.radices.len() {
            let r = self.radices[h - 1];
            level = level
                .chunks(r)
                .map(|c| {
                    let mut key = c.to_vec();
                    key.sort_unstable();
                    let next = self.children[h].len() as u32;
                    let id = *self.ids[h].entry(key.clone()).or_insert(next);
                    if id == next {
                        self.children[h].push(key);
                    }
                    id
                })
                .collect();
        }
        level[0]
    }

    /// Unnormalized cost of two height-`h` subtrees.
    fn cost(&mut self, h: usize, a: u32, b: u32) -> f64 {
        if h == 0 {
            return self.base.raw(a, b);
        }
        if a == b {
            return 0.0;
        }
        let key = (h, a.min(b), a.max(b));
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let (ca, cb) = (
            self.children[h][key.1 as usize].clone(),
            self.children[h][key.2 as usize].clone(),
        );
        let r = ca.len();
        let mut table = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                table[i * r + j] = self.cost(h - 1, ca[i], cb[j]);
            }
        }
        let v = self.perms[h - 1]
            .iter()
            .map(|p| canonical_sum_iter((0..r).map(|i| table[i * r + p[i]])))
            .fold(f64::INFINITY, f64::min);
        self.memo.insert(key, v);
        v
    }
}

/// Test oracle: minimum over every automorphism, enumerated explicitly.
pub fn tree_distance_bruteforce(x: &TreeLeafSystem, y: &TreeLeafSystem) -> Result<f64> {
    x.check_shape(y)?;
    let leaves = x.leaf_count();
    if leaves > BRUTEFORCE_MAX_LEAVES {
        return Err(Error::SizeLimit {
            what: "leaf count",
            value: leaves as u128,
            limit: BRUTEFORCE_MAX_LEAVES as u128,
        });
    }
    let mut best = f64::INFINITY;
    for_each_automorphism(&x.radices, |a| {
        let s = canonical_sum_iter((0..leaves).map(|i| x.base.raw(x.labels[i], y.labels[a[i]])));
        best = best.min(s);
    });
    Ok(best / (leaves as f64 * x.base.denominator()))
}

/// Calls `f` with the leaf map of every automorphism of the tree.
pub fn for_each_automorphism(radices: &[usize], mut f: impl FnMut(&[usize])) {
    let n = radices.len();
    let leaves: usize = radices.iter().product();
    // Internal nodes top-down: height h has leaves / L_h nodes, L_h = prod r_1..r_h.
    let mut span = vec![1usize; n + 1];
    for h in 1..=n {
        span[h] = span[h - 1] * radices[h - 1];
    }
    let mut node_height = Vec::new();
    let mut node_offset = vec![0usize; n + 1];
    for h in (1..=n).rev() {
        node_offset[h] = node_height.len();
        node_height.extend(std::iter::repeat_n(h, leaves / span[h]));
    }
    let perms: Vec<Vec<Vec<usize>>> = radices.iter().map(|&r| permutations(r)).collect();
    let mut choice = vec![0usize; node_height.len()];
    let mut map = vec![0usize; leaves];
    loop {
        for (leaf, out) in map.iter_mut().enumerate() {
            let mut image = 0;
            for h in (1..=n).rev() {
                let node = leaf / span[h];
                let digit = (leaf / span[h - 1]) % radices[h - 1];
                let p = &perms[h - 1][choice[node_offset[h] + node]];
                image += p[digit] * span[h - 1];
            }
            *out = image;
        }
        f(&map);
        let mut k = 0;
        loop {
            if k == choice.len() {
                return;
            }
            choice[k] += 1;
            if choice[k] < perms[node_height[k] - 1].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Orbit partition of leaf words together with its entropy.
#[derive(Debug, Clone)]
pub struct OrbitPartition {
    pub partition: Partition,
    pub orbit_count: usize,
    pub entropy_bits: f64,
}

/// Partitions the `k^N` words of leaf labels into automorphism orbits.
/// Word `w` assigns leaf `i` the `i`-th base-`k` digit of `w`, leaf 0 most
/// significant.
pub fn orbit_partition(radices: &[usize], k: usize, mu: &DiscreteMeasure) -> Result<OrbitPartition> {
    let classes: Vec<u32> = (0..k as u32).collect();
    orbits_with_classes(radices, k, mu, &classes)
}

/// [`orbit_partition`] after identifying letters in the same block of `gamma`,
/// a partition of the alphabet.
pub fn orbit_partition_of(
    radices: &[usize],
    k: usize,
    mu: &DiscreteMeasure,
    gamma: &Partition,
) -> Result<OrbitPartition> {
    if gamma.size() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: gamma.size(),
        });
    }
    let classes: Vec<u32> = (0..k).map(|a| gamma.block_of(a) as u32).collect();
    orbits_with_classes(radices, k, mu, &classes)
}

fn orbits_with_classes(
    radices: &[usize],
    k: usize,
    mu: &DiscreteMeasure,
    classes: &[u32],
) -> Result<OrbitPartition> {
    let leaves = leaf_count(radices)?;
    let words = word_count(k, leaves)?;
    if mu.size() != words {
        return Err(Error::DimensionMismatch {
            expected: words,
            got: mu.size(),
        });
    }
    let mut labels = vec![0u32; leaves];
    let keys: Vec<Vec<u32>> = (0..words)
        .map(|w| {
            let mut rest = w;
            for i in (0..leaves).rev() {
                labels[i] = classes[rest % k];
                rest /= k;
            }
            canonical_labels(radices, &labels)
        })
        .collect();
    let partition = Partition::from_labels(&keys)?;
    Ok(OrbitPartition {
        orbit_count: partition.block_count(),
        entropy_bits: partition_entropy(mu, &partition),
        partition,
    })
}

fn word_count(k: usize, leaves: usize) -> Result<usize> {
    let words = (k as u128).checked_pow(leaves as u32).unwrap_or(u128::MAX);
    if k == 0 || words > ORBIT_MAX_WORDS as u128 {
        return Err(Error::SizeLimit {
            what: "word count",
            value: words,
            limit: ORBIT_MAX_WORDS as u128,
        });
    }
    Ok(words as usize)
}

/// Orbit representative: children sorted recursively.
pub fn canonical_labels(radices: &[usize], labels: &[u32]) -> Vec<u32> {
    let mut cur: Vec<Vec<u32>> = labels.iter().map(|&l| vec![l]).collect();
    for &r in radices {
        cur = cur
            .chunks_mut(r)
            .map(|c| {
                c.sort_unstable();
                c.concat()
            })
            .collect();
    }
    cur.pop().unwrap_or_default()
}

/// Product measure on words of length `leaves` with i.i.d. letters.
pub fn iid_word_measure(letter: &DiscreteMeasure, leaves: usize) -> Result<DiscreteMeasure> {
    let k = letter.size();
    let words = word_count(k, leaves)?;
    let mut w = vec![1.0f64; words];
    for (idx, v) in w.iter_mut().enumerate() {
        let mut rest = idx;
        for _ in 0..leaves {
            *v *= letter.weight(rest % k);
            rest /= k;
        }
    }
    DiscreteMeasure::normalized(&w)
}

/// Default bound on the number of orbits in [`orbit_quotient`].
pub const QUOTIENT_MAX_POINTS: usize = 4096;

/// The orbit space: one point per orbit of `orbits`, carrying the orbit's
/// mass, at tree distance (over `base`) between orbit representatives.
pub fn orbit_quotient(
    radices: &[usize],
    k: usize,
    mu: &DiscreteMeasure,
    orbits: &OrbitPartition,
    base: Arc<BaseMetric>,
    max_points: usize,
) -> Result<(SemimetricMatrix, DiscreteMeasure)> {
    let leaves = leaf_count(radices)?;
    let count = orbits.partition.block_count();
    if count > max_points {
        return Err(Error::SizeLimit {
            what: "orbit count",
            value: count as u128,
            limit: max_points as u128,
        });
    }
    let reps = orbits
        .partition
        .blocks()
        .iter()
        .map(|b| {
            let mut rest = b[0];
            let mut labels = vec![0u32; leaves];
            for i in (0..leaves).rev() {
                labels[i] = (rest % k) as u32;
                rest /= k;
            }
            TreeLeafSystem::new(radices.to_vec(), labels, base.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = vec![0.0; count * count];
    for i in 0..count {
        for j in i + 1..count {
            let v = tree_distance(&reps[i], &reps[j])?;
            d[i * count + j] = v;
            d[j * count + i] = v;
        }
    }
    Ok((
        SemimetricMatrix::new(count, d)?,
        DiscreteMeasure::new(orbits.partition.masses(mu))?,
    ))
}

/// Normalized orbit entropies `h_n = H(gamma_n) / prod_{i<=n} r_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialEntropy {
    pub h: Vec<f64>,
    /// `h_n <= h_{n-1} + 1e-9` for every `n`.
    pub nonincreasing: bool,
    /// `h_N`, the finite-scale estimate.
    pub estimate: f64,
}

/// `entropies[i]` is `H(gamma_{i+1})`; `radices[i]` is `r_{i+1}`.
pub fn exponential_entropy_estimate(entropies: &[f64], radices: &[usize]) -> Result<ExponentialEntropy> {
    if radices.len() < entropies.len() {
        return Err(Error::DimensionMismatch {
            expected: entropies.len(),
            got: radices.len(),
        });
    }
    let mut scale = 1.0;
    let h: Vec<f64> = entropies
        .iter()
        .zip(radices)
        .map(|(&e, &r)| {
            scale *= r as f64;
            e / scale
        })
        .collect();
    let nonincreasing = h.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    Ok(ExponentialEntropy {
        estimate: h.last().copied().unwrap_or(0.0),
        h,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn discrete(k: usize) -> Arc<BaseMetric> {
        Arc::new(BaseMetric::Matrix(SemimetricMatrix::discrete(k)))
    }

    fn sys(r: usize, n: usize, labels: &[u32]) -> TreeLeafSystem {
        TreeLeafSystem::homogeneous(r, n, labels.to_vec(), discrete(2)).unwrap()
    }

    #[test]
    fn small_examples() {
        let b = discrete(2);
        let x0 = TreeLeafSystem::homogeneous(2, 0, vec![0], b.clone()).unwrap();
        let y0 = TreeLeafSystem::homogeneous(2, 0, vec![1], b).unwrap();
        assert_eq!(tree_distance(&x0, &y0).unwrap(), 1.0);
        assert_eq!(tree_distance(&sys(2, 1, &[0, 1]), &sys(2, 1, &[1, 0])).unwrap(), 0.0);
        assert_eq!(tree_distance(&sys(2, 1, &[0, 0]), &sys(2, 1, &[0, 1])).unwrap(), 0.5);
    }

    #[test]
    fn automorphism_counts() {
        let mut count = 0;
        for_each_automorphism(&[2, 2], |_| count += 1);
        assert_eq!(count, 8);
        count = 0;
        for_each_automorphism(&[3], |_| count += 1);
        assert_eq!(count, 6);
        count = 0;
        for_each_automorphism(&[2, 3], |_| count += 1);
        // root S_3 and three S_2 below it
        assert_eq!(count, 6 * 8);
    }

    #[test]
    fn automorphisms_are_bijections() {
        for_each_automorphism(&[2, 2, 2], |a| {
            let mut seen = [false; 8];
            for &i in a {
                seen[i] = true;
            }
            assert!(seen.iter().all(|&s| s));
        });
    }

    #[test]
    fn orbit_examples() {
        let fair = DiscreteMeasure::uniform(2);
        let mu1 = iid_word_measure(&fair, 2).unwrap();
        let o1 = orbit_partition(&[2], 2, &mu1).unwrap();
        assert_eq!(o1.orbit_count, 3);
        assert!((o1.entropy_bits - 1.5).abs() < 1e-12);

        let mu2 = iid_word_measure(&fair, 4).unwrap();
        let o2 = orbit_partition(&[2, 2], 2, &mu2).unwrap();
        assert_eq!(o2.orbit_count, 6);
        assert!((o2.entropy_bits - 2.375).abs() < 1e-12);

        let one = DiscreteMeasure::uniform(1);
        let o = orbit_partition(&[2, 2], 1, &iid_word_measure(&one, 4).unwrap()).unwrap();
        assert_eq!(o.orbit_count, 1);
        assert_eq!(o.entropy_bits, 0.0);

        let e = exponential_entropy_estimate(&[1.5, 2.375], &[2, 2]).unwrap();
        assert_eq!(e.h, vec![0.75, 0.59375]);
        assert!(e.nonincreasing);
        assert_eq!(e.estimate, 0.59375);
    }

    #[test]
    fn orbit_guard() {
        let fair = DiscreteMeasure::uniform(2);
        assert!(matches!(
            iid_word_measure(&fair, 21),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn hamming_base_matches_matrix_base() {
        let h = Arc::new(BaseMetric::Hamming { bits: 2 });
        let m = Arc::new(BaseMetric::Matrix(
            SemimetricMatrix::from_fn(4, |a, b| ((a ^ b).count_ones()) as f64 / 2.0).unwrap(),
        ));
        let lx = vec![0, 3, 1, 2];
        let ly = vec![3, 3, 0, 1];
        let dh = tree_distance(
            &TreeLeafSystem::homogeneous(2, 2, lx.clone(), h.clone()).unwrap(),
            &TreeLeafSystem::homogeneous(2, 2, ly.clone(), h).unwrap(),
        )
        .unwrap();
        let dm = tree_distance(
            &TreeLeafSystem::homogeneous(2, 2, lx, m.clone()).unwrap(),
            &TreeLeafSystem::homogeneous(2, 2, ly, m).unwrap(),
        )
        .unwrap();
        assert_eq!(dh, dm);
    }

    #[test]
    fn shape_mismatch() {
        assert!(tree_distance(&sys(2, 1, &[0, 1]), &sys(2, 2, &[0, 1, 0, 1])).is_err());
        assert!(TreeLeafSystem::homogeneous(2, 1, vec![0, 2], discrete(2)).is_err());
    }
}
