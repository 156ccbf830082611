//! Finite metric-measure spaces.
//!
//! Everything here is a finite model: a semimetric is a symmetric matrix with
//! zero diagonal, a measure is a weight vector summing to one, and a
//! filtration fragment is a chain of successively coarser partitions of the
//! index set `0..size`.
//!
//! JSON layout (used by the cache and the CLI):
//!
//! ```text
//! semimetric: {"size": n, "d": [row-major n*n numbers]}
//! measure:    {"size": n, "w": [n numbers]}
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::numeric::{canonical_sum_iter, entropy_bits, mix64};

/// Absolute tolerance on `sum(w) == 1`.
pub const MEASURE_TOL: f64 = 1e-12;

/// Tolerance used when checking the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// A finite semimetric: symmetric, nonnegative, zero on the diagonal.
///
/// Construction checks symmetry and the diagonal; the triangle inequality is
/// O(n^3) and is only checked by [`validate_semimetric`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SemimetricJson", into = "SemimetricJson")]
pub struct SemimetricMatrix {
    size: usize,
    d: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SemimetricJson {
    size: usize,
    d: Vec<f64>,
}

impl TryFrom<SemimetricJson> for SemimetricMatrix {
    type Error = Error;
    fn try_from(j: SemimetricJson) -> Result<Self> {
        SemimetricMatrix::new(j.size, j.d)
    }
}

impl From<SemimetricMatrix> for SemimetricJson {
    fn from(m: SemimetricMatrix) -> Self {
        SemimetricJson {
            size: m.size,
            d: m.d,
        }
    }
}

impl SemimetricMatrix {
    /// Builds a semimetric from a row-major `size * size` array.
    pub fn new(size: usize, d: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(structural("semimetric must have at least one point"));
        }
        if d.len() != size * size {
            return Err(structural(format!(
                "expected {} entries for a {size}x{size} matrix, got {}",
                size * size,
                d.len()
            )));
        }
        check_entries(&d)?;
        let m = SemimetricMatrix { size, d };
        let report = m.report(false);
        if let Some(i) = report.diagonal_violation {
            return Err(structural(format!("nonzero diagonal entry at {i}")));
        }
        if let Some((i, j)) = report.asymmetry {
            return Err(structural(format!("asymmetric entries at ({i}, {j})")));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = square_size(rows)?;
        Self::new(size, rows.concat())
    }

    /// Builds the matrix from a distance function. `f` is only evaluated for
    /// `i < j`.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut d = vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let v = f(i, j);
                d[i * size + j] = v;
                d[j * size + i] = v;
            }
        }
        Self::new(size, d)
    }

    /// `d(i, j) = [i != j]`.
    pub fn discrete(size: usize) -> Self {
        Self::from_fn(size, |_, _| 1.0).expect("discrete metric is valid")
    }

    pub fn zeros(size: usize) -> Self {
        Self::from_fn(size, |_, _| 0.0).expect("zero semimetric is valid")
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.size + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.size..(i + 1) * self.size]
    }

    pub fn max_entry(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every distance by `t >= 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.size, self.d.iter().map(|v| v * t).collect())
    }

    /// The matrix of `d(perm[i], perm[j])`, i.e. the pullback along `perm`.
    pub fn pullback(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                got: perm.len(),
            });
        }
        Self::from_fn(self.size, |i, j| self.get(perm[i], perm[j]))
    }

    /// Restriction to a subset of points, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    fn report(&self, with_triangle: bool) -> ValidityReport {
        let n = self.size;
        let mut r = ValidityReport::default();
        r.diagonal_violation = (0..n).find(|&i| self.get(i, i) != 0.0);
        'sym: for i in 0..n {
            for j in i + 1..n {
                if self.get(i, j) != self.get(j, i) {
                    r.asymmetry = Some((i, j));
                    break 'sym;
                }
            }
        }
        if with_triangle {
            r.triangle_checked = true;
            r.triangle_violation = first_triangle_violation(n, |i, j| self.get(i, j));
        }
        r
    }
}

fn check_entries(d: &[f64]) -> Result<()> {
    if let Some(v) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(structural(format!(
            "distances must be finite and nonnegative, found {v}"
        )));
    }
    Ok(())
}

fn square_size(rows: &[Vec<f64>]) -> Result<usize> {
    let n = rows.len();
    if n == 0 {
        return Err(structural("empty matrix"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(structural(format!(
            "matrix is not square: {n} rows but a row of length {}",
            r.len()
        )));
    }
    Ok(n)
}

fn first_triangle_violation(
    n: usize,
    d: impl Fn(usize, usize) -> f64,
) -> Option<(usize, usize, usize)> {
    for i in 0..n {
        for j in 0..n {
            let dij = d(i, j);
            for k in 0..n {
                if dij > d(i, k) + d(k, j) + TRIANGLE_TOL * (1.0 + dij) {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

/// Outcome of [`validate_semimetric`], one field per invariant.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidityReport {
    /// First index with a nonzero diagonal entry.
    pub diagonal_violation: Option<usize>,
    /// First `(i, j)` with `d[i][j] != d[j][i]`.
    pub asymmetry: Option<(usize, usize)>,
    pub triangle_checked: bool,
    /// First `(i, j, k)` with `d[i][j] > d[i][k] + d[k][j]`.
    pub triangle_violation: Option<(usize, usize, usize)>,
}

impl ValidityReport {
    pub fn zero_diagonal(&self) -> bool {
        self.diagonal_violation.is_none()
    }
    pub fn symmetric(&self) -> bool {
        self.asymmetry.is_none()
    }
    pub fn triangle(&self) -> bool {
        self.triangle_violation.is_none()
    }
    pub fn is_valid(&self) -> bool {
        self.zero_diagonal() && self.symmetric() && self.triangle()
    }
}

/// Checks a raw square array against the semimetric axioms.
///
/// Non-square input and negative or non-finite entries are structural
/// errors; the remaining axioms are reported, not raised.
pub fn validate_semimetric(rows: &[Vec<f64>]) -> Result<ValidityReport> {
    let size = square_size(rows)?;
    let flat = rows.concat();
    check_entries(&flat)?;
    let m = SemimetricMatrix { size, d: flat };
    Ok(m.report(true))
}

/// Full validation of an already constructed matrix (adds the triangle check).
pub fn validate_matrix(d: &SemimetricMatrix) -> ValidityReport {
    d.report(true)
}

/// Probability weights over `0..size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct DiscreteMeasure {
    w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    size: usize,
    w: Vec<f64>,
}

impl TryFrom<MeasureJson> for DiscreteMeasure {
    type Error = Error;
    fn try_from(j: MeasureJson) -> Result<Self> {
        if j.size != j.w.len() {
            return Err(Error::DimensionMismatch {
                expected: j.size,
                got: j.w.len(),
            });
        }
        DiscreteMeasure::new(j.w)
    }
}

impl From<DiscreteMeasure> for MeasureJson {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureJson {
            size: m.w.len(),
            w: m.w,
        }
    }
}

impl DiscreteMeasure {
    /// Rejects weights that are negative, non-finite, or do not sum to one
    /// within [`MEASURE_TOL`]. Nothing is renormalized.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(structural("measure must have at least one point"));
        }
        if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(structural(format!(
                "weights must be finite and nonnegative, found {v}"
            )));
        }
        let total = canonical_sum_iter(w.iter().copied());
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::Domain(format!(
                "weights sum to {total}, not 1 (tolerance {MEASURE_TOL})"
            )));
        }
        Ok(DiscreteMeasure { w })
    }

    /// Divides nonnegative masses by their total. Explicit opt-in for callers
    /// holding unnormalized counts.
    pub fn normalized(masses: &[f64]) -> Result<Self> {
        let total = canonical_sum_iter(masses.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Domain(format!("cannot normalize total mass {total}")));
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform measure on an empty set");
        DiscreteMeasure {
            w: vec![1.0 / size as f64; size],
        }
    }

    pub fn dirac(size: usize, at: usize) -> Self {
        assert!(at < size);
        let mut w = vec![0.0; size];
        w[at] = 1.0;
        DiscreteMeasure { w }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&i| self.w[i] > 0.0).collect()
    }

    /// Mass of a set of points.
    pub fn mass_of(&self, pts: &[usize]) -> f64 {
        canonical_sum_iter(pts.iter().map(|&i| self.w[i]))
    }

    /// Entropy in bits of the atoms.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.w)
    }

    /// The image measure `mu(perm^-1 .)`: point `i` carries the weight that
    /// `perm[i]` carried before, matching [`SemimetricMatrix::pullback`].
    pub fn pullback(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.w.len() {
            return Err(Error::DimensionMismatch {
                expected: self.w.len(),
                got: perm.len(),
            });
        }
        Ok(DiscreteMeasure {
            w: perm.iter().map(|&p| self.w[p]).collect(),
        })
    }
}

/// A partition of `0..size` into nonempty disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Blocks from arbitrary labels; block indices follow first occurrence.
    pub fn from_labels<L: std::hash::Hash + Eq + Clone>(labels: &[L]) -> Result<Self> {
        if labels.is_empty() {
            return Err(structural("partition of an empty set"));
        }
        let mut ids: HashMap<L, usize> = HashMap::new();
        let mut block_of = Vec::with_capacity(labels.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let id = *ids.entry(l.clone()).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[id].push(i);
            block_of.push(id);
        }
        Ok(Partition { block_of, blocks })
    }

    /// Checks that `blocks` are nonempty, disjoint and cover `0..size`.
    pub fn from_blocks(size: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if size == 0 {
            return Err(structural("partition of an empty set"));
        }
        let mut block_of = vec![usize::MAX; size];
        for (b, members) in blocks.iter().enumerate() {
            if members.is_empty() {
                return Err(structural(format!("block {b} is empty")));
            }
            for &i in members {
                if i >= size {
                    return Err(structural(format!("point {i} out of range 0..{size}")));
                }
                if block_of[i] != usize::MAX {
                    return Err(structural(format!("point {i} is in two blocks")));
                }
                block_of[i] = b;
            }
        }
        if let Some(i) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(structural(format!("point {i} is not covered")));
        }
        Ok(Partition { block_of, blocks })
    }

    pub fn singletons(size: usize) -> Self {
        Partition {
            block_of: (0..size).collect(),
            blocks: (0..size).map(|i| vec![i]).collect(),
        }
    }

    pub fn trivial(size: usize) -> Self {
        Partition {
            block_of: vec![0; size],
            blocks: vec![(0..size).collect()],
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.block_of.len()
    }

    #[inline]
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `true` when every block of `finer` lies inside a single block of `self`.
    pub fn is_coarser_than(&self, finer: &Partition) -> bool {
        self.size() == finer.size()
            && finer.blocks.iter().all(|b| {
                let target = self.block_of[b[0]];
                b.iter().all(|&i| self.block_of[i] == target)
            })
    }

    /// Block masses under `mu`.
    pub fn masses(&self, mu: &DiscreteMeasure) -> Vec<f64> {
        self.blocks.iter().map(|b| mu.mass_of(b)).collect()
    }

    /// Relabels points: point `i` of the result plays the role of `perm[i]`.
    pub fn pullback(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                got: perm.len(),
            });
        }
        let labels: Vec<usize> = perm.iter().map(|&p| self.block_of[p]).collect();
        Partition::from_labels(&labels)
    }
}

/// A decreasing sequence of partitions `xi_1, ..., xi_N`, each coarser than the
/// previous one (`xi_0` is the partition into points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionChain {
    space_size: usize,
    partitions: Vec<Partition>,
}

impl PartitionChain {
    pub fn new(space_size: usize, partitions: Vec<Partition>) -> Result<Self> {
        let mut prev = Partition::singletons(space_size);
        for (k, p) in partitions.iter().enumerate() {
            if p.size() != space_size {
                return Err(Error::DimensionMismatch {
                    expected: space_size,
                    got: p.size(),
                });
            }
            if !p.is_coarser_than(&prev) {
                return Err(structural(format!(
                    "partition {} is not coarser than partition {}",
                    k + 1,
                    k
                )));
            }
            prev = p.clone();
        }
        Ok(PartitionChain {
            space_size,
            partitions,
        })
    }

    pub fn space_size(&self) -> usize {
        self.space_size
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// `xi_k` for `k >= 1`; `level(0)` is the partition into points.
    pub fn level(&self, k: usize) -> Partition {
        if k == 0 {
            Partition::singletons(self.space_size)
        } else {
            self.partitions[k - 1].clone()
        }
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn truncated(&self, depth: usize) -> Self {
        PartitionChain {
            space_size: self.space_size,
            partitions: self.partitions[..depth.min(self.partitions.len())].to_vec(),
        }
    }

    pub fn pullback(&self, perm: &[usize]) -> Result<Self> {
        let parts = self
            .partitions
            .iter()
            .map(|p| p.pullback(perm))
            .collect::<Result<Vec<_>>>()?;
        PartitionChain::new(self.space_size, parts)
    }
}

/// The conditional measure `mu^C` on block `block` of `xi`.
pub fn conditional_measure(
    mu: &DiscreteMeasure,
    xi: &Partition,
    block: usize,
) -> Result<DiscreteMeasure> {
    if mu.size() != xi.size() {
        return Err(Error::DimensionMismatch {
            expected: xi.size(),
            got: mu.size(),
        });
    }
    if block >= xi.block_count() {
        return Err(structural(format!(
            "block {block} out of range 0..{}",
            xi.block_count()
        )));
    }
    let members = xi.block(block);
    let mass = mu.mass_of(members);
    if mass <= 0.0 {
        return Err(Error::DegenerateBlock { block });
    }
    let mut w = vec![0.0; mu.size()];
    for &i in members {
        w[i] = mu.weight(i) / mass;
    }
    Ok(DiscreteMeasure { w })
}

/// Binary entropy `-sum mu(B) log2 mu(B)` of a finite partition.
pub fn partition_entropy(mu: &DiscreteMeasure, gamma: &Partition) -> f64 {
    entropy_bits(&gamma.masses(mu))
}

/// Rokhlin distance `H(g1 | g2) + H(g2 | g1) = 2 H(g1 v g2) - H(g1) - H(g2)`.
pub fn partition_rokhlin_distance(
    mu: &DiscreteMeasure,
    gamma1: &Partition,
    gamma2: &Partition,
) -> Result<f64> {
    if gamma1.size() != gamma2.size() || gamma1.size() != mu.size() {
        return Err(Error::DimensionMismatch {
            expected: mu.size(),
            got: if gamma1.size() != mu.size() {
                gamma1.size()
            } else {
                gamma2.size()
            },
        });
    }
    let labels: Vec<(usize, usize)> = (0..mu.size())
        .map(|i| (gamma1.block_of(i), gamma2.block_of(i)))
        .collect();
    let join = Partition::from_labels(&labels)?;
    let h = 2.0 * partition_entropy(mu, &join)
        - partition_entropy(mu, gamma1)
        - partition_entropy(mu, gamma2);
    Ok(h.max(0.0))
}

/// Leaf budget of the search in [`canonical_point_order`].
pub const CANONICAL_LEAF_BUDGET: usize = 4096;

/// An order of the points that depends only on the isometry class of
/// `(d, mu)`, so that pulling both back along it gives the same matrix and
/// measure for every relabeling.
///
/// Colour refinement starts from the masses and refines by sorted
/// (distance, colour) profiles. While a colour class has several points, one
/// of them is individualized and the refinement repeats; among the complete
/// orders reached, the one whose pulled-back masses and distances are
/// lexicographically smallest wins. Classes of exact twins (points that a
/// transposition maps onto each other) are not branched on. Past
/// [`CANONICAL_LEAF_BUDGET`] complete orders the best one found so far is
/// returned, and the result may then depend on the labeling.
pub fn canonical_point_order(d: &SemimetricMatrix, mu: &DiscreteMeasure) -> Result<Vec<usize>> {
    let n = d.size();
    if mu.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.size(),
        });
    }
    let colour = refine(d, rank_by(n, |i, j| mu.weight(i).total_cmp(&mu.weight(j))));
    let mut search = CanonicalSearch {
        d,
        mu,
        best: None,
        leaves: 0,
    };
    search.visit(colour);
    Ok(search.best.expect("the first leaf is always reached"))
}

struct CanonicalSearch<'a> {
    d: &'a SemimetricMatrix,
    mu: &'a DiscreteMeasure,
    best: Option<Vec<usize>>,
    leaves: usize,
}

impl CanonicalSearch<'_> {
    fn visit(&mut self, colour: Vec<usize>) {
        if self.leaves >= CANONICAL_LEAF_BUDGET {
            return;
        }
        let n = colour.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| colour[i]);
        let cell = order
            .chunk_by(|&a, &b| colour[a] == colour[b])
            .find(|c| c.len() > 1)
            .map(<[usize]>::to_vec);
        let Some(cell) = cell else {
            self.leaves += 1;
            if self.best.as_ref().is_none_or(|b| self.cmp_orders(&order, b).is_lt()) {
                self.best = Some(order);
            }
            return;
        };
        let branches = if self.twins(&cell) { &cell[..1] } else { &cell[..] };
        for &u in branches {
            let split = rank_by(n, |i, j| colour[i].cmp(&colour[j]).then((i != u).cmp(&(j != u))));
            self.visit(refine(self.d, split));
        }
    }

    /// Every point of `cell` has the mass and the distances of the first.
    fn twins(&self, cell: &[usize]) -> bool {
        let (u, n) = (cell[0], self.d.size());
        cell[1..].iter().all(|&w| {
            self.mu.weight(w).to_bits() == self.mu.weight(u).to_bits()
                && (0..n)
                    .filter(|&x| x != u && x != w)
                    .all(|x| self.d.get(u, x).to_bits() == self.d.get(w, x).to_bits())
        })
    }

    fn cmp_orders(&self, a: &[usize], b: &[usize]) -> std::cmp::Ordering {
        let masses = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| self.mu.weight(x).total_cmp(&self.mu.weight(y)));
        let dists = a.iter().zip(b).flat_map(|(&xi, &yi)| {
            a.iter()
                .zip(b)
                .map(move |(&xj, &yj)| self.d.get(xi, xj).total_cmp(&self.d.get(yi, yj)))
        });
        masses
            .chain(dists)
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Stable refinement of `colour` (dense ranks) by sorted (distance, colour)
/// profiles.
fn refine(d: &SemimetricMatrix, mut colour: Vec<usize>) -> Vec<usize> {
    let n = colour.len();
    let mut classes = colour.iter().max().map_or(0, |&c| c + 1);
    let mut row: Vec<(u64, usize)> = Vec::with_capacity(n);
    loop {
        // a collision only merges classes, which keeps the result invariant
        let sig: Vec<u64> = (0..n)
            .map(|i| {
                row.clear();
                row.extend((0..n).filter(|&j| j != i).map(|j| (d.get(i, j).to_bits(), colour[j])));
                row.sort_unstable();
                row.iter()
                    .fold(mix64(colour[i] as u64), |h, &(x, c)| mix64(h ^ mix64(x ^ mix64(c as u64))))
            })
            .collect();
        let next = rank_by(n, |i, j| colour[i].cmp(&colour[j]).then(sig[i].cmp(&sig[j])));
        let count = next.iter().max().map_or(0, |&c| c + 1);
        colour = next;
        if count == classes {
            return colour;
        }
        classes = count;
    }
}

/// Dense ranks of `0..n` under `cmp`; equal elements share a rank.
fn rank_by(n: usize, cmp: impl Fn(usize, usize) -> std::cmp::Ordering) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| cmp(a, b));
    let mut rank = vec![0; n];
    for k in 1..n {
        let same = cmp(idx[k - 1], idx[k]) == std::cmp::Ordering::Equal;
        rank[idx[k]] = rank[idx[k - 1]] + usize::from(!same);
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_pullback(d: &SemimetricMatrix, mu: &DiscreteMeasure) -> (SemimetricMatrix, DiscreteMeasure) {
        let order = canonical_point_order(d, mu).unwrap();
        (d.pullback(&order).unwrap(), mu.pullback(&order).unwrap())
    }

    #[test]
    fn canonical_order_forgets_the_labels() {
        // 3x3 torus grid: vertex-transitive, so refinement alone keeps one class
        let d = SemimetricMatrix::from_fn(9, |i, j| {
            let dx = (i % 3).abs_diff(j % 3).min(1) as f64;
            let dy = (i / 3).abs_diff(j / 3).min(1) as f64;
            dx + dy
        })
        .unwrap();
        let mu = DiscreteMeasure::uniform(9);
        let base = canonical_pullback(&d, &mu);
        for perm in [[8, 7, 6, 5, 4, 3, 2, 1, 0], [4, 0, 8, 2, 6, 1, 3, 7, 5]] {
            let moved = canonical_pullback(&d.pullback(&perm).unwrap(), &mu.pullback(&perm).unwrap());
            assert_eq!(moved, base);
        }
    }

    #[test]
    fn twins_do_not_branch() {
        let n = 200;
        let d = SemimetricMatrix::discrete(n);
        let order = canonical_point_order(&d, &DiscreteMeasure::uniform(n)).unwrap();
        assert_eq!(order, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn discrete_two_point_is_valid() {
        let r = validate_semimetric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(r.is_valid());
    }

    #[test]
    fn triangle_violation_is_reported() {
        let rows = vec![
            vec![0.0, 3.0, 1.0],
            vec![3.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let r = validate_semimetric(&rows).unwrap();
        assert!(r.zero_diagonal() && r.symmetric());
        assert_eq!(r.triangle_violation, Some((0, 1, 2)));
    }

    #[test]
    fn asymmetry_is_reported() {
        let r = validate_semimetric(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(r.asymmetry, Some((0, 1)));
        assert!(!r.is_valid());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            validate_semimetric(&[vec![0.0, 1.0]]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            validate_semimetric(&[vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(Error::Structural(_))
        ));
        assert!(SemimetricMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn measure_rejects_unnormalized() {
        assert!(DiscreteMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(DiscreteMeasure::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn conditional_uniform_halves() {
        let mu = DiscreteMeasure::uniform(4);
        let xi = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let c = conditional_measure(&mu, &xi, 0).unwrap();
        assert_eq!(c.weights(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn conditional_renormalizes() {
        let mu = DiscreteMeasure::new(vec![0.1, 0.3, 0.6]).unwrap();
        let xi = Partition::from_blocks(3, vec![vec![0, 1], vec![2]]).unwrap();
        let c = conditional_measure(&mu, &xi, 0).unwrap();
        assert!((c.weight(0) - 0.25).abs() < 1e-15);
        assert!((c.weight(1) - 0.75).abs() < 1e-15);
        assert_eq!(c.weight(2), 0.0);
    }

    #[test]
    fn conditional_on_singletons_is_dirac() {
        let mu = DiscreteMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let xi = Partition::singletons(3);
        for i in 0..3 {
            assert_eq!(conditional_measure(&mu, &xi, i).unwrap(), DiscreteMeasure::dirac(3, i));
        }
    }

    #[test]
    fn conditional_on_null_block_errors() {
        let mu = DiscreteMeasure::new(vec![0.0, 0.0, 1.0]).unwrap();
        let xi = Partition::from_blocks(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(matches!(
            conditional_measure(&mu, &xi, 0),
            Err(Error::DegenerateBlock { block: 0 })
        ));
    }

    #[test]
    fn entropy_examples() {
        let mu = DiscreteMeasure::uniform(4);
        assert_eq!(partition_entropy(&mu, &Partition::singletons(4)), 2.0);
        assert_eq!(partition_entropy(&mu, &Partition::trivial(4)), 0.0);
        let mu = DiscreteMeasure::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!((partition_entropy(&mu, &Partition::singletons(3)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rokhlin_examples() {
        let mu = DiscreteMeasure::uniform(2);
        let s = Partition::singletons(2);
        let t = Partition::trivial(2);
        assert_eq!(partition_rokhlin_distance(&mu, &s, &s).unwrap(), 0.0);
        assert!((partition_rokhlin_distance(&mu, &s, &t).unwrap() - 1.0).abs() < 1e-15);

        let mu = DiscreteMeasure::uniform(4);
        let a = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let b = Partition::from_blocks(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert!((partition_rokhlin_distance(&mu, &a, &b).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chain_requires_coarsening() {
        let a = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let b = Partition::from_blocks(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert!(PartitionChain::new(4, vec![a.clone(), Partition::trivial(4)]).is_ok());
        assert!(PartitionChain::new(4, vec![a, b]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d = SemimetricMatrix::discrete(3);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"size\":3"));
        let back: SemimetricMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"size":2,"d":[0,1,2,0]}"#;
        assert!(serde_json::from_str::<SemimetricMatrix>(bad).is_err());
        let m: DiscreteMeasure = serde_json::from_str(r#"{"size":2,"w":[0.25,0.75]}"#).unwrap();
        assert_eq!(m.weight(1), 0.75);
        assert!(serde_json::from_str::<DiscreteMeasure>(r#"{"size":3,"w":[0.25,0.75]}"#).is_err());
    }
}
