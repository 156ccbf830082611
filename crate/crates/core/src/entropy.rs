//! Epsilon-entropy of finite metric-measure spaces, scaled entropy and
//! scaling-exponent regression.
//!
//! `H_eps = inf { H(lambda) : k(lambda, mu) < eps }`. The strict inequality is
//! evaluated as `k <= eps - STRICT_SLACK`.
//!
//! Upper bounds come from an eps-independent family of quantizations of `mu`
//! (greedy covers, agglomerative merging), each optionally improved by moving
//! part of its smallest cluster with the leftover budget; the winner is
//! certified with the exact transport solver. Lower bounds push any feasible
//! `lambda` onto the Voronoi cells of a center set and apply the continuity of
//! entropy under total variation. Because both families are eps-independent,
//! both bounds are nonincreasing in eps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::{canonical_point_order, DiscreteMeasure, SemimetricMatrix};
use crate::numeric::{binary_entropy, canonical_sum_iter, entropy_bits, neg_xlog2x};
use crate::stats::{linear_fit, LinearFit};
use crate::transport::solve_transport;

/// Slack turning `k < eps` into a closed condition.
pub const STRICT_SLACK: f64 = 1e-12;
/// Atom budget of [`epsilon_entropy_oracle`].
pub const ORACLE_MAX_ATOMS: usize = 5;
/// Error bar reported by [`epsilon_entropy_oracle`].
pub const ORACLE_ERROR: f64 = 1e-9;

const COVER_RADII: usize = 24;
const CORE_FRACTIONS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

/// Certified bracket `lower <= H_eps <= upper` in bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyBounds {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    /// Exact transport cost of the quantization achieving `upper`.
    pub upper_cost: f64,
    /// Candidate family that produced `upper`.
    pub method: &'static str,
    /// The raw lower bound exceeded `upper` and was clamped.
    pub clamped: bool,
}

/// Bounds for a single `eps`.
pub fn epsilon_entropy_bounds(
    d: &SemimetricMatrix,
    mu: &DiscreteMeasure,
    epsilon: f64,
) -> Result<EntropyBounds> {
    Ok(epsilon_entropy_bounds_grid(d, mu, &[epsilon])?.remove(0))
}

/// Bounds for several `eps` sharing one candidate family.
pub fn epsilon_entropy_bounds_grid(
    d: &SemimetricMatrix,
    mu: &DiscreteMeasure,
    epsilons: &[f64],
) -> Result<Vec<EntropyBounds>> {
    if mu.size() != d.size() {
        return Err(Error::DimensionMismatch {
            expected: d.size(),
            got: mu.size(),
        });
    }
    if let Some(&e) = epsilons.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {e}")));
    }
    // the covering heuristics break ties by index, so run them on a
    // relabeling-free copy of the space
    let order = canonical_point_order(d, mu)?;
    let (d, mu) = (&d.pullback(&order)?, &mu.pullback(&order)?);
    let space = Space::new(d, mu);
    let states = space.quantizations();
    let partitions = space.voronoi_family();
    epsilons
        .iter()
        .map(|&eps| {
            let budget = eps - STRICT_SLACK;
            let (upper, upper_cost, method) = space.best_upper(&states, budget)?;
            let raw_lower = partitions
                .iter()
                .map(|p| p.lower_bound(eps))
                .fold(0.0, f64::max);
            let clamped = raw_lower > upper;
            Ok(EntropyBounds {
                epsilon: eps,
                lower: raw_lower.min(upper),
                upper,
                upper_cost,
                method,
                clamped,
            })
        })
        .collect()
}

/// Bounds that only use the masses and a lower bound `separation` on the
/// distance between any two distinct points of the space.
///
/// The upper bound is `H(mu)` (no quantization); the lower bound is the
/// all-singletons cell bound with `tau = eps / separation`. Tight as
/// `eps -> 0`, and usable on spaces too large to hold a distance matrix.
pub fn epsilon_entropy_bounds_separated(
    weights: &[f64],
    separation: f64,
    epsilon: f64,
) -> Result<EntropyBounds> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(separation > 0.0) {
        return Err(Error::Domain(format!("separation must be positive, got {separation}")));
    }
    let atoms: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    let upper = entropy_bits(&atoms);
    let raw = CellBound {
        cells: atoms.len(),
        entropy: upper,
        outside: 0.0,
        delta: separation,
    }
    .lower_bound(epsilon);
    Ok(EntropyBounds {
        epsilon,
        lower: raw.min(upper),
        upper,
        upper_cost: 0.0,
        method: "identity",
        clamped: raw > upper,
    })
}

/// Atoms of positive mass with their distances.
struct Space<'a> {
    d: &'a SemimetricMatrix,
    /// Support points (indices into `d`).
    pts: Vec<usize>,
    w: Vec<f64>,
}

/// A quantization: every support atom is sent to a center.
#[derive(Debug, Clone)]
struct Quantization {
    method: &'static str,
    /// `assign[a]`: center point (index into `d`) of support atom `a`.
    assign: Vec<usize>,
    /// Pushforward cost `sum_a w_a d(a, assign[a])`, an upper bound on the
    /// transport cost.
    cost: f64,
}

impl<'a> Space<'a> {
    fn new(d: &'a SemimetricMatrix, mu: &DiscreteMeasure) -> Self {
        let pts = mu.support();
        let w = pts.iter().map(|&i| mu.weight(i)).collect();
        Space { d, pts, w }
    }

    fn len(&self) -> usize {
        self.pts.len()
    }

    #[inline]
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d.get(self.pts[a], self.pts[b])
    }

    fn pushforward_cost(&self, assign: &[usize]) -> f64 {
        canonical_sum_iter(
            (0..self.len()).map(|a| self.w[a] * self.d.get(self.pts[a], assign[a])),
        )
    }

    fn quantization(&self, method: &'static str, assign: Vec<usize>) -> Quantization {
        let cost = self.pushforward_cost(&assign);
        Quantization {
            method,
            assign,
            cost,
        }
    }

    /// Center masses of a quantization, keyed by center point.
    fn masses(&self, assign: &[usize]) -> BTreeMap<usize, f64> {
        let mut parts: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (a, &c) in assign.iter().enumerate() {
            parts.entry(c).or_default().push(self.w[a]);
        }
        parts
            .into_iter()
            .map(|(c, v)| (c, canonical_sum_iter(v)))
            .collect()
    }

    /// Distinct positive distances at evenly spaced quantiles.
    fn radius_grid(&self) -> Vec<f64> {
        let n = self.len();
        let mut all: Vec<f64> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for a in 0..n {
            for b in a + 1..n {
                let v = self.dist(a, b);
                if v > 0.0 {
                    all.push(v);
                }
            }
        }
        all.sort_unstable_by(f64::total_cmp);
        let mut out = vec![0.0];
        if all.is_empty() {
            return out;
        }
        for q in 0..COVER_RADII {
            let idx = (q * (all.len() - 1)) / (COVER_RADII - 1).max(1);
            out.push(all[idx]);
        }
        out.dedup();
        out
    }

    /// Greedy cover by balls of radius `radius`: repeatedly pick the point
    /// whose ball holds the most uncovered mass. Returns the centers (support
    /// indices) in order of choice.
    fn greedy_centers(&self, radius: f64) -> Vec<usize> {
        let n = self.len();
        let mut gain: Vec<f64> = (0..n)
            .map(|c| canonical_sum_iter((0..n).filter(|&i| self.dist(i, c) <= radius).map(|i| self.w[i])))
            .collect();
        let mut covered = vec![false; n];
        let mut centers = Vec::new();
        let mut left = n;
        while left > 0 {
            let mut best = usize::MAX;
            for c in 0..n {
                if best == usize::MAX || gain[c] > gain[best] {
                    best = c;
                }
            }
            centers.push(best);
            for i in 0..n {
                if !covered[i] && self.dist(i, best) <= radius {
                    covered[i] = true;
                    left -= 1;
                    for (c, g) in gain.iter_mut().enumerate() {
                        if self.dist(i, c) <= radius {
                            *g -= self.w[i];
                        }
                    }
                }
            }
        }
        centers
    }

    /// Nearest center of every atom; ties go to the earliest center.
    fn voronoi(&self, centers: &[usize]) -> Vec<usize> {
        (0..self.len())
            .map(|a| {
                let mut best = 0;
                for (k, &c) in centers.iter().enumerate() {
                    if self.dist(a, c) < self.dist(a, centers[best]) {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// The eps-independent candidate family.
    fn quantizations(&self) -> Vec<Quantization> {
        let n = self.len();
        let mut out = vec![self.quantization("identity", self.pts.clone())];
        // best single atom
        let best = (0..self.d.size())
            .map(|z| {
                (
                    canonical_sum_iter((0..n).map(|a| self.w[a] * self.d.get(self.pts[a], z))),
                    z,
                )
            })
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((_, z)) = best {
            out.push(self.quantization("single-atom", vec![z; n]));
        }
        for r in self.radius_grid() {
            let centers = self.greedy_centers(r);
            let cell = self.voronoi(&centers);
            let assign = cell.iter().map(|&k| self.pts[centers[k]]).collect();
            out.push(self.quantization("greedy-cover", assign));
        }
        out.extend(self.agglomerate());
        out
    }

    /// Agglomerative merging: repeatedly fold a cluster into another where the
    /// ratio of added cost to removed entropy is smallest, re-centering the
    /// merged cluster at its weighted medoid. Every intermediate state is a
    /// candidate.
    fn agglomerate(&self) -> Vec<Quantization> {
        let n = self.len();
        let big = self.d.size();
        if n < 2 {
            return Vec::new();
        }
        // load[k][z] = sum_{a in cluster k} w_a d(a, z) over all points z.
        let mut load: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..big).map(|z| self.w[a] * self.d.get(self.pts[a], z)).collect())
            .collect();
        let mut alive: Vec<bool> = vec![true; n];
        let mut mass = self.w.clone();
        let mut center: Vec<usize> = self.pts.clone();
        let mut own_cost: Vec<f64> = vec![0.0; n];
        let mut member: Vec<usize> = (0..n).collect();
        let mut out = Vec::with_capacity(n - 1);
        for _ in 1..n {
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..n {
                if !alive[a] {
                    continue;
                }
                for b in 0..n {
                    if a == b || !alive[b] || mass[a] > mass[b] || (mass[a] == mass[b] && a < b) {
                        continue;
                    }
                    let added = load[a][center[b]] - own_cost[a];
                    let dh = neg_xlog2x(mass[a]) + neg_xlog2x(mass[b])
                        - neg_xlog2x(mass[a] + mass[b]);
                    let score = if dh > 0.0 { added.max(0.0) / dh } else { f64::INFINITY };
                    if best.is_none_or(|(s, _, _)| score < s) {
                        best = Some((score, a, b));
                    }
                }
            }
            let Some((_, a, b)) = best else { break };
            alive[a] = false;
            mass[b] += mass[a];
            let la = std::mem::take(&mut load[a]);
            for (x, y) in load[b].iter_mut().zip(&la) {
                *x += y;
            }
            let (c, cost) = load[b]
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(&y.0)))
                .map(|(z, &v)| (z, v))
                .unwrap();
            center[b] = c;
            own_cost[b] = cost;
            for m in member.iter_mut() {
                if *m == a {
                    *m = b;
                }
            }
            let assign = member.iter().map(|&k| center[k]).collect();
            out.push(self.quantization("agglomerative", assign));
        }
        out
    }

    /// Lowest entropy over the family within `budget`, certified exactly.
    fn best_upper(&self, states: &[Quantization], budget: f64) -> Result<(f64, f64, &'static str)> {
        let mut best: Option<(f64, Vec<(usize, f64)>, &'static str)> = None;
        for q in states {
            if q.cost > budget {
                continue;
            }
            let lambda = self.with_partial_move(q, budget);
            let h = entropy_bits(&lambda.iter().map(|x| x.1).collect::<Vec<_>>());
            if best.as_ref().is_none_or(|b| h < b.0) {
                best = Some((h, lambda, q.method));
            }
        }
        let (h, lambda, method) = best.ok_or_else(|| Error::Solver("no feasible quantization".into()))?;
        let cost = self.certify(&lambda)?;
        if cost > budget {
            // Exact cost can only be lower than the pushforward bound when the
            // ground semimetric satisfies the triangle inequality; fall back
            // to the unperturbed state otherwise.
            return self.best_upper_without_moves(states, budget);
        }
        Ok((h, cost, method))
    }

    fn best_upper_without_moves(
        &self,
        states: &[Quantization],
        budget: f64,
    ) -> Result<(f64, f64, &'static str)> {
        let q = states
            .iter()
            .filter(|q| q.cost <= budget)
            .map(|q| (self.masses(&q.assign), q))
            .min_by(|x, y| {
                entropy_bits(&x.0.values().copied().collect::<Vec<_>>())
                    .total_cmp(&entropy_bits(&y.0.values().copied().collect::<Vec<_>>()))
            })
            .ok_or_else(|| Error::Solver("no feasible quantization".into()))?;
        let lambda: Vec<(usize, f64)> = q.0.into_iter().collect();
        let cost = self.certify(&lambda)?;
        let h = entropy_bits(&lambda.iter().map(|x| x.1).collect::<Vec<_>>());
        Ok((h, cost, q.1.method))
    }

    /// Moves up to the leftover budget from the lightest center to its
    /// nearest center of at least equal mass.
    fn with_partial_move(&self, q: &Quantization, budget: f64) -> Vec<(usize, f64)> {
        let mut lambda: Vec<(usize, f64)> = self.masses(&q.assign).into_iter().collect();
        let left = budget - q.cost;
        if lambda.len() < 2 || left <= 0.0 {
            return lambda;
        }
        let small = (0..lambda.len())
            .min_by(|&x, &y| lambda[x].1.total_cmp(&lambda[y].1).then(x.cmp(&y)))
            .unwrap();
        let target = (0..lambda.len())
            .filter(|&k| k != small && lambda[k].1 >= lambda[small].1)
            .min_by(|&x, &y| {
                let dx = self.d.get(lambda[small].0, lambda[x].0);
                let dy = self.d.get(lambda[small].0, lambda[y].0);
                dx.total_cmp(&dy).then(x.cmp(&y))
            });
        let Some(target) = target else {
            return lambda;
        };
        let dist = self.d.get(lambda[small].0, lambda[target].0);
        let t = if dist > 0.0 {
            (left * (1.0 - 1e-9) / dist).min(lambda[small].1)
        } else {
            lambda[small].1
        };
        lambda[small].1 -= t;
        lambda[target].1 += t;
        lambda.retain(|x| x.1 > 0.0);
        lambda
    }

    /// Exact `k(lambda, mu)`.
    fn certify(&self, lambda: &[(usize, f64)]) -> Result<f64> {
        let supply: Vec<f64> = lambda.iter().map(|x| x.1).collect();
        let sol = solve_transport(&supply, &self.w, |i, j| self.d.get(lambda[i].0, self.pts[j]))?;
        Ok(sol.value)
    }

    /// Voronoi partitions for the lower bound, over the same radius grid.
    fn voronoi_family(&self) -> Vec<CellBound> {
        let n = self.len();
        let mut out = Vec::new();
        let mut seen: Vec<Vec<usize>> = Vec::new();
        for r in self.radius_grid() {
            let mut centers = self.greedy_centers(r);
            centers.sort_unstable();
            if seen.contains(&centers) {
                continue;
            }
            seen.push(centers.clone());
            let cell = self.voronoi(&centers);
            let k = centers.len();
            let mut parts: Vec<Vec<f64>> = vec![Vec::new(); k];
            for a in 0..n {
                parts[cell[a]].push(self.w[a]);
            }
            let p: Vec<f64> = parts.into_iter().map(canonical_sum_iter).collect();
            let h = entropy_bits(&p);
            let to_center: Vec<f64> = (0..n).map(|a| self.dist(a, centers[cell[a]])).collect();
            let space_cell: Vec<usize> =
                (0..self.d.size()).map(|z| self.nearest_cell(z, &centers)).collect();
            let max_reach = to_center.iter().copied().fold(0.0, f64::max);
            for frac in CORE_FRACTIONS {
                let a_rad = frac * max_reach;
                let core: Vec<bool> = to_center.iter().map(|&t| t <= a_rad).collect();
                let outside = canonical_sum_iter(
                    (0..n).filter(|&a| !core[a]).map(|a| self.w[a]),
                );
                // Points of lambda may sit anywhere in the space, so the
                // separation is measured against every point, not just atoms.
                let mut delta = f64::INFINITY;
                for a in (0..n).filter(|&a| core[a]) {
                    for (z, &cz) in space_cell.iter().enumerate() {
                        if cz != cell[a] {
                            delta = delta.min(self.d.get(self.pts[a], z));
                        }
                    }
                }
                out.push(CellBound {
                    cells: k,
                    entropy: h,
                    outside,
                    delta,
                });
            }
        }
        out
    }

    /// Cell of an arbitrary point `z` of the space.
    fn nearest_cell(&self, z: usize, centers: &[usize]) -> usize {
        let mut best = 0;
        for (k, &c) in centers.iter().enumerate() {
            if self.d.get(z, self.pts[c]) < self.d.get(z, self.pts[centers[best]]) {
                best = k;
            }
        }
        best
    }
}

/// One member of the lower-bound family.
#[derive(Debug, Clone)]
struct CellBound {
    cells: usize,
    entropy: f64,
    /// `mu` mass outside the cores.
    outside: f64,
    /// Smallest distance from a core atom to a point of another cell.
    delta: f64,
}

impl CellBound {
    /// `H(p) - tau log2(k - 1) - H2(tau)` with `tau = outside + eps / delta`.
    fn lower_bound(&self, eps: f64) -> f64 {
        if self.cells < 2 {
            return 0.0;
        }
        let tau = if self.delta > 0.0 {
            self.outside + eps / self.delta
        } else {
            f64::INFINITY
        };
        let k = self.cells as f64;
        if tau > 1.0 - 1.0 / k {
            return 0.0;
        }
        (self.entropy - tau * (k - 1.0).log2() - binary_entropy(tau)).max(0.0)
    }
}

/// Oracle value with its error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub error: f64,
}

/// Test oracle: the exact infimum for spaces of at most five atoms.
///
/// The feasible set of couplings `Q >= 0` with row sums `mu` and cost at most
/// `eps` is a polytope and `H(lambda)` is concave in `Q`, so the minimum sits
/// at a vertex. Vertices send every atom to a single point, except possibly one
/// atom split between two points with the cost constraint tight; all of them
/// are enumerated.
pub fn epsilon_entropy_oracle(
    d: &SemimetricMatrix,
    mu: &DiscreteMeasure,
    epsilon: f64,
) -> Result<OracleValue> {
    let n = d.size();
    if mu.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu.size(),
        });
    }
    if n > ORACLE_MAX_ATOMS {
        return Err(Error::SizeLimit {
            what: "atom count",
            value: n as u128,
            limit: ORACLE_MAX_ATOMS as u128,
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let budget = epsilon - STRICT_SLACK;
    let rows = mu.support();
    let k = rows.len();
    let mut f = vec![0usize; k];
    let mut best = f64::INFINITY;
    let mut lambda = vec![0.0; n];
    loop {
        let cost = canonical_sum_iter((0..k).map(|a| mu.weight(rows[a]) * d.get(rows[a], f[a])));
        if cost <= budget {
            lambda.fill(0.0);
            for a in 0..k {
                lambda[f[a]] += mu.weight(rows[a]);
            }
            best = best.min(entropy_bits(&lambda));
            // split one atom with the cost constraint tight
            for a in 0..k {
                let i = rows[a];
                for j in 0..n {
                    let extra = d.get(i, j) - d.get(i, f[a]);
                    if extra <= 0.0 {
                        continue;
                    }
                    let t = (budget - cost) / extra;
                    if t <= 0.0 || t >= mu.weight(i) {
                        continue;
                    }
                    lambda[f[a]] -= t;
                    lambda[j] += t;
                    best = best.min(entropy_bits(&lambda));
                    lambda[f[a]] += t;
                    lambda[j] -= t;
                }
            }
        }
        let mut p = 0;
        loop {
            if p == k {
                return Ok(OracleValue {
                    value: best,
                    error: ORACLE_ERROR,
                });
            }
            f[p] += 1;
            if f[p] < n {
                break;
            }
            f[p] = 0;
            p += 1;
        }
    }
}

/// Scaling function `c(eps, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalingFamily {
    /// `(n log2(1/eps))^beta`.
    Power { beta: f64 },
    /// `prod_{i <= n} r_i`; the last radix repeats beyond the list.
    Exponential { radices: Vec<usize> },
    /// Explicit values.
    Custom { table: Vec<ScalingEntry> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub n: usize,
    pub epsilon: f64,
    pub value: f64,
}

impl ScalingFamily {
    pub fn eval(&self, epsilon: f64, n: usize) -> Result<f64> {
        match self {
            ScalingFamily::Power { beta } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::Domain(format!(
                        "power scaling needs 0 < eps < 1, got {epsilon}"
                    )));
                }
                Ok((n as f64 * (1.0 / epsilon).log2()).powf(*beta))
            }
            ScalingFamily::Exponential { radices } => {
                let last = *radices
                    .last()
                    .ok_or_else(|| Error::Structural("empty radix list".into()))?;
                Ok((0..n)
                    .map(|i| radices.get(i).copied().unwrap_or(last) as f64)
                    .product())
            }
            ScalingFamily::Custom { table } => table
                .iter()
                .find(|e| e.n == n && e.epsilon == epsilon)
                .map(|e| e.value)
                .ok_or_else(|| Error::Domain(format!("no custom scaling value at n={n}, eps={epsilon}"))),
        }
    }

    /// Checks that `c` is positive, increasing in `n` and nonincreasing in
    /// `eps` on the grid.
    pub fn validate(&self, epsilons: &[f64], ns: &[usize]) -> Result<()> {
        let mut eps = epsilons.to_vec();
        eps.sort_by(f64::total_cmp);
        let mut ns = ns.to_vec();
        ns.sort_unstable();
        for &e in &eps {
            let vals = ns.iter().map(|&n| self.eval(e, n)).collect::<Result<Vec<_>>>()?;
            if vals.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Domain(format!("scaling is not positive at eps={e}")));
            }
            if vals.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain(format!("scaling is not increasing in n at eps={e}")));
            }
        }
        for &n in &ns {
            let vals = eps.iter().map(|&e| self.eval(e, n)).collect::<Result<Vec<_>>>()?;
            if vals.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::Domain(format!("scaling increases with eps at n={n}")));
            }
        }
        Ok(())
    }
}

/// One cell of an entropy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEntry {
    pub n: usize,
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Finite-scale scaled entropy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledEntropy {
    /// Value at the smallest eps.
    pub h: f64,
    /// `(eps, max over the top n-quartile of H / c)` for every eps, ascending.
    pub profile: Vec<(f64, f64)>,
}

fn grid_axes(table: &[HEntry]) -> (Vec<f64>, Vec<usize>) {
    let mut eps: Vec<f64> = table.iter().map(|e| e.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut ns: Vec<usize> = table.iter().map(|e| e.n).collect();
    ns.sort_unstable();
    ns.dedup();
    (eps, ns)
}

/// Surrogate of `limsup_eps limsup_n H / c` using the `upper` column: for
/// each eps the maximum of `H / c` over the largest quarter of the `n`
/// values, reported at the smallest eps.
pub fn scaled_entropy_eval(table: &[HEntry], family: &ScalingFamily) -> Result<ScaledEntropy> {
    let (eps, ns) = grid_axes(table);
    if eps.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: eps.len(),
        });
    }
    if ns.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: ns.len(),
        });
    }
    let mut profile = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut row: Vec<&HEntry> = table.iter().filter(|t| t.epsilon == e).collect();
        row.sort_by_key(|t| t.n);
        let top = row.len().div_ceil(4);
        let mut best = f64::NEG_INFINITY;
        for t in &row[row.len() - top..] {
            best = best.max(t.upper / family.eval(e, t.n)?);
        }
        profile.push((e, best));
    }
    Ok(ScaledEntropy {
        h: profile[0].1,
        profile,
    })
}

/// Slope of `log2 H` against `log2(n log2(1/eps))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Pooled least-squares exponent over the `upper` column. Cells with
/// nonpositive `H` (or `eps >= 1`) are skipped.
pub fn scaling_exponent_fit(table: &[HEntry]) -> Result<ScalingFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = table
        .iter()
        .filter(|t| t.upper > 0.0 && t.epsilon > 0.0 && t.epsilon < 1.0 && t.n > 0)
        .map(|t| ((t.n as f64 * (1.0 / t.epsilon).log2()).log2(), t.upper.log2()))
        .unzip();
    if x.len() < 6 {
        return Err(Error::InsufficientData {
            needed: 6,
            got: x.len(),
        });
    }
    let LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        points,
    } = linear_fit(&x, &y)?;
    Ok(ScalingFit {
        beta: slope,
        stderr: slope_stderr,
        intercept,
        r_squared,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Exponential,
    Subexponential,
}

impl std::fmt::Display for Growth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Growth::Exponential => "exponential",
            Growth::Subexponential => "subexponential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthVerdict {
    pub verdict: Growth,
    /// Slope of `log2 H` against `n`.
    pub rate: f64,
    pub r_squared: f64,
    /// `R^2` of `log2 H` against `log2 n`, the competing power law.
    pub power_r_squared: f64,
}

/// Exponential when `log2 H` grows linearly in `n` with slope above 0.1 and
/// `R^2 > 0.9`, and the linear fit in `n` explains at least as much as a
/// power law in `n`.
pub fn exponential_growth_test(ns: &[usize], hs: &[f64]) -> Result<GrowthVerdict> {
    if ns.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: hs.len(),
        });
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(hs)
        .filter(|(&n, &h)| n > 0 && h > 0.0)
        .map(|(&n, &h)| (n as f64, h.log2()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: pts.len(),
        });
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let lin = linear_fit(&x, &y)?;
    let pow = linear_fit(&lx, &y)?;
    let exponential = lin.slope > 0.1 && lin.r_squared > 0.9 && lin.r_squared >= pow.r_squared;
    Ok(GrowthVerdict {
        verdict: if exponential {
            Growth::Exponential
        } else {
            Growth::Subexponential
        },
        rate: lin.slope,
        r_squared: lin.r_squared,
        power_r_squared: pow.r_squared,
    })
}
