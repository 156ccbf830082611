//! Exact Kantorovich distance between discrete measures.
//!
//! The transportation problem is solved with the primal transportation
//! simplex (the network simplex on a complete bipartite graph). Flows only
//! ever change by adding or subtracting input masses, and the final basis is
//! certified optimal by complementary slackness before a value is returned.
//!
//! Rows and columns are put into a canonical order before solving, so the
//! returned value does not depend on how the points are labeled.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};
use crate::mmspace::{DiscreteMeasure, SemimetricMatrix};
use crate::numeric::canonical_sum_iter;

/// Marginal tolerance of a returned plan.
pub const PLAN_TOL: f64 = 1e-9;

/// Largest support accepted by [`kantorovich_bruteforce`].
pub const BRUTEFORCE_MAX_SUPPORT: usize = 5;

/// A transport plan `q[i][j]` between two measures on the same point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    size: usize,
    q: Vec<f64>,
}

impl Coupling {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.size + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|i| canonical_sum_iter((0..self.size).map(|j| self.get(i, j))))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|j| canonical_sum_iter((0..self.size).map(|i| self.get(i, j))))
            .collect()
    }

    /// `true` if the plan is nonnegative with marginals `mu`, `nu` within `tol`.
    pub fn is_feasible(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
        self.q.iter().all(|&v| v >= 0.0)
            && self
                .row_sums()
                .iter()
                .zip(mu.weights())
                .all(|(a, b)| (a - b).abs() <= tol)
            && self
                .col_sums()
                .iter()
                .zip(nu.weights())
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// `sum q[i][j] d[i][j]`.
    pub fn cost(&self, d: &SemimetricMatrix) -> f64 {
        canonical_sum_iter(
            self.q
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(k, &v)| v * d.get(k / self.size, k % self.size)),
        )
    }

    /// Writes the nonzero entries as `i,j,mass` lines.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "mass"])?;
        for i in 0..self.size {
            for j in 0..self.size {
                let v = self.get(i, j);
                if v > 0.0 {
                    out.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Optimal value and plan.
#[derive(Debug, Clone)]
pub struct Transport {
    pub value: f64,
    pub plan: Coupling,
}

/// `k_d(mu, nu) = min { sum q[i][j] d[i][j] : q has marginals mu and nu }`.
pub fn kantorovich(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    d: &SemimetricMatrix,
) -> Result<Transport> {
    let n = d.size();
    for m in [mu.size(), nu.size()] {
        if m != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m,
            });
        }
    }
    let sol = solve_transport(mu.weights(), nu.weights(), |i, j| d.get(i, j))?;
    let mut q = vec![0.0; n * n];
    for &(i, j, f) in &sol.flows {
        q[i * n + j] += f;
    }
    Ok(Transport {
        value: sol.value,
        plan: Coupling { size: n, q },
    })
}

/// Optimal value only.
pub fn kantorovich_value(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    d: &SemimetricMatrix,
) -> Result<f64> {
    kantorovich(mu, nu, d).map(|t| t.value)
}

/// Solution of a transportation problem in sparse form.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub value: f64,
    /// `(supply index, demand index, mass)` with positive mass.
    pub flows: Vec<(usize, usize, f64)>,
}

/// Solves `min sum f[i][j] cost(i, j)` over flows with row sums `supply` and
/// column sums `demand`. Zero-mass rows and columns are dropped first.
pub fn solve_transport(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<TransportSolution> {
    let sa = canonical_sum_iter(supply.iter().copied());
    let sb = canonical_sum_iter(demand.iter().copied());
    if supply.iter().chain(demand).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Structural("masses must be finite and nonnegative".into()));
    }
    if (sa - sb).abs() > PLAN_TOL * sa.max(sb).max(1.0) {
        return Err(Error::Domain(format!(
            "unbalanced transport problem: {sa} vs {sb}"
        )));
    }
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(TransportSolution {
            value: 0.0,
            flows: Vec::new(),
        });
    }

    // The simplex is not symmetric under transposition, so the side with the
    // smaller canonical key always plays the supply. On a tie both
    // orientations are solved and the smaller value wins.
    let row_key = side_key(&rows, &cols, |&i| supply[i], |r, c| cost(r, c));
    let col_key = side_key(&cols, &rows, |&j| demand[j], |c, r| cost(r, c));
    let transposed = |cost: &dyn Fn(usize, usize) -> f64| -> Result<TransportSolution> {
        let mut t = solve_oriented(demand, supply, &cols, &rows, |a, b| cost(b, a))?;
        for f in &mut t.flows {
            *f = (f.1, f.0, f.2);
        }
        Ok(t)
    };
    match cmp_keys(&row_key, &col_key) {
        Ordering::Less => solve_oriented(supply, demand, &rows, &cols, &cost),
        Ordering::Greater => transposed(&cost),
        Ordering::Equal => {
            let a = solve_oriented(supply, demand, &rows, &cols, &cost)?;
            let b = transposed(&cost)?;
            Ok(if b.value < a.value { b } else { a })
        }
    }
}

type SideKey = Vec<(f64, Vec<f64>)>;

/// Sorted `(mass, sorted cost profile)` pairs of one side.
fn side_key(
    idx: &[usize],
    others: &[usize],
    mass: impl Fn(&usize) -> f64,
    cost: impl Fn(usize, usize) -> f64,
) -> SideKey {
    let mut key: SideKey = idx
        .iter()
        .map(|&i| {
            let mut prof: Vec<f64> = others.iter().map(|&o| cost(i, o)).collect();
            prof.sort_unstable_by(f64::total_cmp);
            (mass(&i), prof)
        })
        .collect();
    key.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| cmp_profiles(&x.1, &y.1)));
    key
}

fn cmp_keys(a: &SideKey, b: &SideKey) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.0.total_cmp(&y.0).then_with(|| cmp_profiles(&x.1, &y.1));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn solve_oriented(
    supply: &[f64],
    demand: &[f64],
    rows: &[usize],
    cols: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<TransportSolution> {
    let rows = canonical_order(rows, cols, |&i| supply[i], |r, c| cost(r, c));
    let cols = canonical_order(cols, &rows, |&j| demand[j], |c, r| cost(r, c));

    let m = rows.len();
    let n = cols.len();
    let mut c = Vec::with_capacity(m * n);
    for &r in &rows {
        for &k in &cols {
            let v = cost(r, k);
            if !v.is_finite() {
                return Err(Error::Structural(format!("non-finite cost at ({r}, {k})")));
            }
            c.push(v);
        }
    }
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();

    let basis = TransportSimplex::new(m, n, c, &a, &b).run()?;
    let mut flows = Vec::with_capacity(basis.len());
    for (i, j, f) in basis {
        if f > 0.0 {
            flows.push((rows[i], cols[j], f));
        }
    }
    let value = canonical_sum_iter(flows.iter().map(|&(i, j, f)| f * cost(i, j)));
    Ok(TransportSolution { value, flows })
}

/// Sorts indices by (mass, sorted cost profile against `others`), falling back
/// to the input order only for exact ties.
fn canonical_order(
    idx: &[usize],
    others: &[usize],
    mass: impl Fn(&usize) -> f64,
    cost: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    let mut keyed: Vec<(f64, Vec<f64>, usize)> = idx
        .iter()
        .map(|&i| {
            let mut prof: Vec<f64> = others.iter().map(|&o| cost(i, o)).collect();
            prof.sort_unstable_by(f64::total_cmp);
            (mass(&i), prof, i)
        })
        .collect();
    keyed.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then_with(|| cmp_profiles(&x.1, &y.1))
            .then(x.2.cmp(&y.2))
    });
    keyed.into_iter().map(|k| k.2).collect()
}

fn cmp_profiles(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

struct TransportSimplex {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    /// Basic cells `(row, col)` and their flows; always `m + n - 1` of them.
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    in_basis: Vec<bool>,
    tol: f64,
}

impl TransportSimplex {
    fn new(m: usize, n: usize, cost: Vec<f64>, a: &[f64], b: &[f64]) -> Self {
        let scale = cost.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut s = TransportSimplex {
            m,
            n,
            cost,
            cells: Vec::with_capacity(m + n - 1),
            flow: Vec::with_capacity(m + n - 1),
            in_basis: vec![false; m * n],
            tol: 1e-12 * (1.0 + scale),
        };
        // Northwest corner: a staircase spanning tree with m + n - 1 cells.
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = if i == m - 1 && j == n - 1 {
                ra[i].max(0.0)
            } else {
                ra[i].min(rb[j]).max(0.0)
            };
            s.push_cell(i, j, x);
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] <= rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        s
    }

    fn push_cell(&mut self, i: usize, j: usize, x: f64) {
        self.cells.push((i, j));
        self.flow.push(x);
        self.in_basis[i * self.n + j] = true;
    }

    fn run(mut self) -> Result<Vec<(usize, usize, f64)>> {
        let nodes = self.m + self.n;
        let max_iter = 50 * nodes * nodes + 1000;
        let bland_after = 10 * nodes * nodes + 100;
        let mut tree = Tree::new(nodes);
        for iter in 0..max_iter {
            tree.build(self.m, &self.cells, &self.cost);
            let entering = if iter < bland_after {
                self.price_dantzig(&tree)
            } else {
                self.price_bland(&tree)
            };
            let Some((ei, ej)) = entering else {
                return self.certify(&tree);
            };
            self.pivot(&tree, ei, ej, iter >= bland_after);
        }
        Err(Error::Solver(format!(
            "transport simplex did not converge in {max_iter} pivots"
        )))
    }

    fn reduced(&self, tree: &Tree, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j] - tree.pot[i] - tree.pot[self.m + j]
    }

    fn price_dantzig(&self, tree: &Tree) -> Option<(usize, usize)> {
        let mut best = -self.tol;
        let mut arg = None;
        for i in 0..self.m {
            for j in 0..self.n {
                if self.in_basis[i * self.n + j] {
                    continue;
                }
                let r = self.reduced(tree, i, j);
                if r < best {
                    best = r;
                    arg = Some((i, j));
                }
            }
        }
        arg
    }

    fn price_bland(&self, tree: &Tree) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.n {
                if !self.in_basis[i * self.n + j] && self.reduced(tree, i, j) < -self.tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn pivot(&mut self, tree: &Tree, ei: usize, ej: usize, bland: bool) {
        // Cycle: entering cell (+), then the tree path from column ej back to
        // row ei with alternating signs starting with (-).
        let path = tree.path(self.m + ej, ei);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &edge) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = self.flow[edge];
                let better = f < theta
                    || (f == theta && bland && self.cells[edge] < self.cells[leave]);
                if better {
                    theta = f;
                    leave = edge;
                }
            }
        }
        for (k, &edge) in path.iter().enumerate() {
            if edge == leave {
                continue;
            }
            if k % 2 == 0 {
                self.flow[edge] = (self.flow[edge] - theta).max(0.0);
            } else {
                self.flow[edge] += theta;
            }
        }
        let (li, lj) = self.cells[leave];
        self.in_basis[li * self.n + lj] = false;
        self.in_basis[ei * self.n + ej] = true;
        self.cells[leave] = (ei, ej);
        self.flow[leave] = theta;
    }

    /// Complementary slackness: primal feasible basis with nonnegative
    /// reduced costs everywhere.
    fn certify(self, tree: &Tree) -> Result<Vec<(usize, usize, f64)>> {
        if self.flow.iter().any(|&f| f < 0.0) {
            return Err(Error::Solver("negative flow in final basis".into()));
        }
        for i in 0..self.m {
            for j in 0..self.n {
                let r = self.reduced(tree, i, j);
                let basic = self.in_basis[i * self.n + j];
                if r < -self.tol || (basic && r.abs() > self.tol * 4.0) {
                    return Err(Error::Solver(format!(
                        "optimality certificate failed at ({i}, {j}): reduced cost {r}"
                    )));
                }
            }
        }
        Ok(self
            .cells
            .iter()
            .zip(&self.flow)
            .map(|(&(i, j), &f)| (i, j, f))
            .collect())
    }
}

/// Spanning tree of the basis rooted at row 0, with node potentials.
struct Tree {
    adj: Vec<Vec<(usize, usize)>>,
    pot: Vec<f64>,
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
    queue: Vec<usize>,
}

impl Tree {
    fn new(nodes: usize) -> Self {
        Tree {
            adj: vec![Vec::new(); nodes],
            pot: vec![0.0; nodes],
            parent: vec![usize::MAX; nodes],
            parent_edge: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            queue: Vec::with_capacity(nodes),
        }
    }

    fn build(&mut self, m: usize, cells: &[(usize, usize)], cost: &[f64]) {
        let n = self.adj.len() - m;
        for a in &mut self.adj {
            a.clear();
        }
        for (e, &(i, j)) in cells.iter().enumerate() {
            self.adj[i].push((m + j, e));
            self.adj[m + j].push((i, e));
        }
        self.parent.fill(usize::MAX);
        self.queue.clear();
        self.queue.push(0);
        self.pot[0] = 0.0;
        self.depth[0] = 0;
        self.parent[0] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for k in 0..self.adj[v].len() {
                let (w, e) = self.adj[v][k];
                if self.parent[w] != usize::MAX {
                    continue;
                }
                let (i, j) = cells[e];
                let c = cost[i * n + j];
                // u_i + v_j = c_ij on basic cells.
                self.pot[w] = c - self.pot[v];
                self.parent[w] = v;
                self.parent_edge[w] = e;
                self.depth[w] = self.depth[v] + 1;
                self.queue.push(w);
            }
        }
        debug_assert_eq!(self.queue.len(), self.adj.len(), "basis is not spanning");
    }

    /// Edges on the tree path from `from` to `to`, in order.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut head = Vec::new();
        let mut tail = Vec::new();
        let (mut a, mut b) = (from, to);
        while self.depth[a] > self.depth[b] {
            head.push(self.parent_edge[a]);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            tail.push(self.parent_edge[b]);
            b = self.parent[b];
        }
        while a != b {
            head.push(self.parent_edge[a]);
            a = self.parent[a];
            tail.push(self.parent_edge[b]);
            b = self.parent[b];
        }
        tail.reverse();
        head.extend(tail);
        head
    }
}

/// Test oracle: the exact optimum by enumerating every vertex of the
/// transportation polytope. Each vertex is a basic solution supported on a
/// spanning tree of the bipartite support graph; all spanning trees are
/// enumerated as parent functions rooted at the first supply point.
pub fn kantorovich_bruteforce(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    d: &SemimetricMatrix,
) -> Result<f64> {
    let n = d.size();
    for m in [mu.size(), nu.size()] {
        if m != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m,
            });
        }
    }
    let rows = mu.support();
    let cols = nu.support();
    for s in [rows.len(), cols.len()] {
        if s > BRUTEFORCE_MAX_SUPPORT {
            return Err(Error::SizeLimit {
                what: "support size",
                value: s as u128,
                limit: BRUTEFORCE_MAX_SUPPORT as u128,
            });
        }
    }
    let a: Vec<f64> = rows.iter().map(|&i| mu.weight(i)).collect();
    let b: Vec<f64> = cols.iter().map(|&j| nu.weight(j)).collect();
    let (ra, cb) = (rows.len(), cols.len());
    let nodes = ra + cb;
    // Node v < ra is a row; otherwise column v - ra. Net supply per node.
    let net: Vec<f64> = a.iter().copied().chain(b.iter().map(|x| -x)).collect();

    // Choice counts: rows 1..ra choose among cb columns, columns among ra rows.
    let radix: Vec<usize> = (1..nodes).map(|v| if v < ra { cb } else { ra }).collect();
    let mut digits = vec![0usize; radix.len()];
    let mut best = f64::INFINITY;
    let mut parent = vec![0usize; nodes];
    let mut order: Vec<usize> = Vec::with_capacity(nodes);
    let mut depth = vec![0usize; nodes];
    let mut sub = vec![0.0; nodes];
    loop {
        for v in 1..nodes {
            let dgt = digits[v - 1];
            parent[v] = if v < ra { ra + dgt } else { dgt };
        }
        if let Some(value) = tree_vertex_cost(
            &parent, &net, ra, &rows, &cols, d, &mut order, &mut depth, &mut sub,
        ) {
            best = best.min(value);
        }
        // Next parent function.
        let mut k = 0;
        loop {
            if k == digits.len() {
                return Ok(if best.is_finite() { best } else { 0.0 });
            }
            digits[k] += 1;
            if digits[k] < radix[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn tree_vertex_cost(
    parent: &[usize],
    net: &[f64],
    ra: usize,
    rows: &[usize],
    cols: &[usize],
    d: &SemimetricMatrix,
    order: &mut Vec<usize>,
    depth: &mut [usize],
    sub: &mut [f64],
) -> Option<f64> {
    let nodes = parent.len();
    // Reject parent functions with cycles; compute depths.
    for v in 0..nodes {
        let mut w = v;
        let mut steps = 0;
        while w != 0 {
            w = parent[w];
            steps += 1;
            if steps > nodes {
                return None;
            }
        }
        depth[v] = steps;
    }
    order.clear();
    order.extend(0..nodes);
    order.sort_by_key(|&v| std::cmp::Reverse(depth[v]));
    sub.copy_from_slice(net);
    let mut terms = Vec::with_capacity(nodes);
    for &v in order.iter() {
        if v == 0 {
            continue;
        }
        let p = parent[v];
        let (r, c, f) = if v < ra {
            // row v -> column p carries the subtree's surplus
            (v, p - ra, sub[v])
        } else {
            (p, v - ra, -sub[v])
        };
        if f < -1e-12 {
            return None;
        }
        sub[p] += sub[v];
        terms.push(f.max(0.0) * d.get(rows[r], cols[c]));
    }
    Some(canonical_sum_iter(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> SemimetricMatrix {
        SemimetricMatrix::discrete(2)
    }

    #[test]
    fn point_masses() {
        let t = kantorovich(
            &DiscreteMeasure::dirac(2, 0),
            &DiscreteMeasure::dirac(2, 1),
            &two_point(),
        )
        .unwrap();
        assert_eq!(t.value, 1.0);
        assert_eq!(t.plan.get(0, 1), 1.0);
    }

    #[test]
    fn equal_measures_have_diagonal_plan() {
        let mu = DiscreteMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let d = SemimetricMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let t = kantorovich(&mu, &mu, &d).unwrap();
        assert_eq!(t.value, 0.0);
        for i in 0..3 {
            assert_eq!(t.plan.get(i, i), mu.weight(i));
        }
    }

    #[test]
    fn two_point_closed_form() {
        let mu = DiscreteMeasure::new(vec![0.3, 0.7]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let t = kantorovich(&mu, &nu, &two_point()).unwrap();
        assert!((t.value - 0.2).abs() < 1e-12);
        assert!(t.plan.is_feasible(&mu, &nu, PLAN_TOL));
        // extreme couplings on two points: only one is feasible with q01 = 0
        let b = kantorovich_bruteforce(&mu, &nu, &two_point()).unwrap();
        assert!((b - 0.2).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_line_metric() {
        let d = SemimetricMatrix::from_fn(3, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let u = DiscreteMeasure::uniform(3);
        let v = DiscreteMeasure::dirac(3, 0);
        assert!((kantorovich_bruteforce(&u, &v, &d).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(kantorovich_bruteforce(&u, &u, &d).unwrap(), 0.0);
    }

    #[test]
    fn bruteforce_refuses_large_support() {
        let d = SemimetricMatrix::discrete(6);
        let u = DiscreteMeasure::uniform(6);
        assert!(matches!(
            kantorovich_bruteforce(&u, &u, &d),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let d = SemimetricMatrix::discrete(3);
        let u = DiscreteMeasure::uniform(2);
        assert!(matches!(
            kantorovich(&u, &u, &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_rows_are_dropped() {
        let mu = DiscreteMeasure::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let d = SemimetricMatrix::from_fn(4, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let t = kantorovich(&mu, &nu, &d).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!(t.plan.is_feasible(&mu, &nu, PLAN_TOL));
    }

    #[test]
    fn plan_csv_dump() {
        let mu = DiscreteMeasure::new(vec![0.3, 0.7]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let t = kantorovich(&mu, &nu, &two_point()).unwrap();
        let mut buf = Vec::new();
        t.plan.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("i,j,mass\n"));
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn larger_instance_is_certified() {
        // 40 points on a line, random-ish masses: the 1-d optimum is the L1
        // distance between CDFs.
        let n = 40;
        let raw_a: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) + 1) as f64).collect();
        let raw_b: Vec<f64> = (0..n).map(|i| ((i * 53 % 7) + 1) as f64).collect();
        let mu = DiscreteMeasure::normalized(&raw_a).unwrap();
        let nu = DiscreteMeasure::normalized(&raw_b).unwrap();
        let d = SemimetricMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let t = kantorovich(&mu, &nu, &d).unwrap();
        let mut cdf = 0.0;
        let mut l1 = 0.0;
        for i in 0..n {
            cdf += mu.weight(i) - nu.weight(i);
            l1 += cdf.abs();
        }
        assert!((t.value - l1).abs() < 1e-9, "{} vs {}", t.value, l1);
        assert!(t.plan.is_feasible(&mu, &nu, PLAN_TOL));
    }
}
