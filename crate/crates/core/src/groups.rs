//! Finitely generated groups used as walk state spaces: `Z^d`, free groups
//! and the discrete Heisenberg group.
//!
//! A walk step is a symbol `0..2s`: symbol `2i` is generator `g_i`, symbol
//! `2i + 1` its inverse. Positions evolve by right multiplication.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::mix64;

/// Radius of the exact Heisenberg ball used by [`GroupSpec::word_norm`].
pub const HEISENBERG_EXACT_RADIUS: u64 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GroupSpec {
    Lattice { dim: usize },
    Free { generators: usize },
    Heisenberg,
}

/// Group element in normal form. Equal elements have equal normal forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    /// Reduced word; letter `+(i+1)` is `g_i`, `-(i+1)` its inverse.
    Free(Vec<i32>),
    /// Upper unitriangular matrix `[[1,a,c],[0,1,b],[0,0,1]]` as `(a, b, c)`.
    Heisenberg([i64; 3]),
}

/// Word length bracket. `lower == upper` when the length is known exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WordNorm {
    pub lower: u64,
    pub upper: u64,
}

impl WordNorm {
    fn exact(v: u64) -> Self {
        WordNorm { lower: v, upper: v }
    }

    pub fn value(&self) -> Option<u64> {
        (self.lower == self.upper).then_some(self.lower)
    }
}

impl GroupSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GroupSpec::Lattice { dim: 0 } | GroupSpec::Free { generators: 0 } => {
                Err(Error::Structural("a group needs at least one generator".into()))
            }
            GroupSpec::Free { generators } if generators > 1000 => Err(Error::SizeLimit {
                what: "free generators",
                value: generators as u128,
                limit: 1000,
            }),
            _ => Ok(()),
        }
    }

    /// Number of generators `s`.
    pub fn generators(&self) -> usize {
        match *self {
            GroupSpec::Lattice { dim } => dim,
            GroupSpec::Free { generators } => generators,
            GroupSpec::Heisenberg => 2,
        }
    }

    /// Walk alphabet size `2s`.
    pub fn symbol_count(&self) -> usize {
        2 * self.generators()
    }

    /// Short label such as `Z1`, `F2` or `H3`.
    pub fn name(&self) -> String {
        match *self {
            GroupSpec::Lattice { dim } => format!("Z{dim}"),
            GroupSpec::Free { generators } => format!("F{generators}"),
            GroupSpec::Heisenberg => "H3".into(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            GroupSpec::Lattice { dim } => GroupElement::Lattice(vec![0; dim]),
            GroupSpec::Free { .. } => GroupElement::Free(Vec::new()),
            GroupSpec::Heisenberg => GroupElement::Heisenberg([0; 3]),
        }
    }

    /// The element named by walk symbol `sym`.
    pub fn symbol(&self, sym: usize) -> Result<GroupElement> {
        if sym >= self.symbol_count() {
            return Err(Error::Structural(format!(
                "symbol {sym} outside 0..{}",
                self.symbol_count()
            )));
        }
        Ok(self.step(&self.identity(), sym as u8))
    }

    fn check(&self, a: &GroupElement) -> Result<()> {
        let ok = match (self, a) {
            (GroupSpec::Lattice { dim }, GroupElement::Lattice(v)) => v.len() == *dim,
            (GroupSpec::Free { generators }, GroupElement::Free(w)) => w
                .iter()
                .all(|&l| l != 0 && l.unsigned_abs() as usize <= *generators),
            (GroupSpec::Heisenberg, GroupElement::Heisenberg(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "element {a:?} does not belong to {}",
                self.name()
            )))
        }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (a, b) {
            (GroupElement::Lattice(x), GroupElement::Lattice(y)) => {
                GroupElement::Lattice(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (GroupElement::Free(x), GroupElement::Free(y)) => {
                let mut w = x.clone();
                for &l in y {
                    push_reduced(&mut w, l);
                }
                GroupElement::Free(w)
            }
            (GroupElement::Heisenberg(x), GroupElement::Heisenberg(y)) => {
                GroupElement::Heisenberg(heis_mul(*x, *y))
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        Ok(match a {
            GroupElement::Lattice(x) => GroupElement::Lattice(x.iter().map(|v| -v).collect()),
            GroupElement::Free(w) => GroupElement::Free(w.iter().rev().map(|l| -l).collect()),
            GroupElement::Heisenberg([a, b, c]) => GroupElement::Heisenberg([-a, -b, a * b - c]),
        })
    }

    /// `a` times the generator named by `sym`. `a` must belong to this group.
    pub fn step(&self, a: &GroupElement, sym: u8) -> GroupElement {
        let gen = (sym / 2) as usize;
        let sign: i64 = if sym % 2 == 0 { 1 } else { -1 };
        match a {
            GroupElement::Lattice(x) => {
                let mut y = x.clone();
                y[gen] += sign;
                GroupElement::Lattice(y)
            }
            GroupElement::Free(w) => {
                let mut y = w.clone();
                push_reduced(&mut y, sign as i32 * (gen as i32 + 1));
                GroupElement::Free(y)
            }
            GroupElement::Heisenberg([p, q, c]) => GroupElement::Heisenberg(if gen == 0 {
                [p + sign, *q, *c]
            } else {
                [*p, q + sign, c + sign * p]
            }),
        }
    }

    /// Word length with respect to the symmetric generating set.
    pub fn word_norm(&self, a: &GroupElement) -> Result<WordNorm> {
        self.check(a)?;
        Ok(match a {
            GroupElement::Lattice(x) => WordNorm::exact(x.iter().map(|v| v.unsigned_abs()).sum()),
            GroupElement::Free(w) => WordNorm::exact(w.len() as u64),
            GroupElement::Heisenberg(h) => heisenberg_norm(*h),
        })
    }

    /// Weighted rank `sum_i i (n_i - n_{i-1})` of the lower central series.
    pub fn weighted_rank(&self) -> Result<u32> {
        match *self {
            GroupSpec::Lattice { dim } => Ok(dim as u32),
            GroupSpec::Heisenberg => {
                // ranks of G / G_{i+1} along the lower central series
                let ranks = [0u32, 2, 3];
                Ok((1..ranks.len() as u32)
                    .map(|i| i * (ranks[i as usize] - ranks[i as usize - 1]))
                    .sum())
            }
            GroupSpec::Free { .. } => Err(Error::Unsupported(
                "free groups are not nilpotent; their walks scale exponentially".into(),
            )),
        }
    }

    /// Positions `tail * u_1 ... u_j` for `j = 0..=len`.
    pub fn path(&self, tail: &GroupElement, steps: &[u8]) -> Result<Vec<GroupElement>> {
        self.check(tail)?;
        let mut out = Vec::with_capacity(steps.len() + 1);
        out.push(tail.clone());
        for &s in steps {
            if s as usize >= self.symbol_count() {
                return Err(Error::Structural(format!("symbol {s} outside 0..{}", self.symbol_count())));
            }
            let next = self.step(out.last().unwrap(), s);
            out.push(next);
        }
        Ok(out)
    }
}

fn push_reduced(w: &mut Vec<i32>, l: i32) {
    if w.last() == Some(&-l) {
        w.pop();
    } else {
        w.push(l);
    }
}

fn heis_mul(x: [i64; 3], y: [i64; 3]) -> [i64; 3] {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]]
}

fn heisenberg_ball() -> &'static HashMap<[i64; 3], u8> {
    static BALL: OnceLock<HashMap<[i64; 3], u8>> = OnceLock::new();
    BALL.get_or_init(|| {
        let spec = GroupSpec::Heisenberg;
        let mut dist = HashMap::new();
        dist.insert([0i64; 3], 0u8);
        let mut frontier = vec![[0i64; 3]];
        for r in 1..=HEISENBERG_EXACT_RADIUS as u8 {
            let mut next = Vec::new();
            for h in &frontier {
                for s in 0..4u8 {
                    let GroupElement::Heisenberg(g) = spec.step(&GroupElement::Heisenberg(*h), s)
                    else {
                        unreachable!()
                    };
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(g) {
                        e.insert(r);
                        next.push(g);
                    }
                }
            }
            frontier = next;
        }
        dist
    })
}

/// Cheapest commutator construction of `z^k` found by the rectangle
/// `[x^p, y^q]` plus a `1 x rem` correction.
fn central_cost(k: u64) -> u64 {
    if k == 0 {
        return 0;
    }
    let p = (k as f64).sqrt().floor() as u64;
    let p = (p.max(1)..=p + 1).rev().find(|&p| p * p <= k).unwrap_or(1);
    let q = k / p;
    let rem = k - p * q;
    2 * p + 2 * q + if rem > 0 { 2 * rem + 2 } else { 0 }
}

fn heisenberg_norm(h: [i64; 3]) -> WordNorm {
    if let Some(&d) = heisenberg_ball().get(&h) {
        return WordNorm::exact(d as u64);
    }
    let [a, b, c] = h;
    let planar = a.unsigned_abs() + b.unsigned_abs();
    // A word of length L reaches at most |c| <= L^2 / 4.
    let area = (2.0 * (c.unsigned_abs() as f64).sqrt()).ceil() as u64;
    let lower = (HEISENBERG_EXACT_RADIUS + 1).max(planar).max(area);
    // x^a y^b = (a, b, ab); fix the centre with a commutator word.
    let upper = planar + central_cost((c - a * b).unsigned_abs());
    WordNorm {
        lower,
        upper: upper.max(lower),
    }
}

/// I.i.d. uniform walk symbols from the counter-based stream `(seed, stream)`.
pub fn sample_increments(spec: &GroupSpec, len: usize, seed: u64, stream: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let r = spec.symbol_count() as u8;
    (0..len).map(|_| rng.random_range(0..r)).collect()
}

/// Smallest `n` in `[h, h^5]` (capped by the sequence lengths) with
/// `|u_1...u_n| / sqrt(n) < c` and `|v_1...v_n| / sqrt(n) < c`.
///
/// Norms beyond the exact range are replaced by their upper bound, so a
/// returned `n` always qualifies.
pub fn meeting_diagnostic(
    spec: &GroupSpec,
    u: &[u8],
    v: &[u8],
    h: usize,
    c: f64,
) -> Result<Option<usize>> {
    let cap = (h as u128).pow(5).min(u.len().min(v.len()) as u128) as usize;
    if h == 0 || cap < h {
        return Ok(None);
    }
    let mut pu = spec.identity();
    let mut pv = spec.identity();
    for n in 1..=cap {
        pu = spec.step(&pu, u[n - 1]);
        pv = spec.step(&pv, v[n - 1]);
        if n < h {
            continue;
        }
        let root = (n as f64).sqrt();
        let nu = spec.word_norm(&pu)?.upper as f64 / root;
        let nv = spec.word_norm(&pv)?.upper as f64 / root;
        if nu < c && nv < c {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// A point of the Bernoulli configuration space: one fair bit per group
/// element, computed lazily from a keyed hash of the normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenery {
    seed: u64,
    /// `(spec, h^-1)` for the translate `g -> f(h^-1 g)`.
    shift: Option<(GroupSpec, GroupElement)>,
    constant: Option<u8>,
}

impl Scenery {
    pub fn new(seed: u64) -> Self {
        Scenery {
            seed,
            shift: None,
            constant: None,
        }
    }

    /// Every element reads `bit`. Test hook for degenerate sceneries.
    pub fn constant(bit: u8) -> Self {
        Scenery {
            seed: 0,
            shift: None,
            constant: Some(bit & 1),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The left translate by `h`: `value'(g) = value(h^-1 g)`.
    pub fn translated(&self, spec: &GroupSpec, h: &GroupElement) -> Result<Self> {
        let hinv = spec.inverse(h)?;
        let shift = match &self.shift {
            // (h1 h2)^-1 = h2^-1 h1^-1 where h1 is the existing shift
            Some((s, old)) => (s.clone(), spec.multiply(old, &hinv)?),
            None => (spec.clone(), hinv),
        };
        Ok(Scenery {
            seed: self.seed,
            shift: Some(shift),
            constant: self.constant,
        })
    }

    pub fn value(&self, g: &GroupElement) -> u8 {
        if let Some(b) = self.constant {
            return b;
        }
        match &self.shift {
            Some((spec, hinv)) => {
                let moved = spec.multiply(hinv, g).expect("scenery shift and element share a group");
                hash_bit(self.seed, &moved)
            }
            None => hash_bit(self.seed, g),
        }
    }
}

fn hash_bit(seed: u64, g: &GroupElement) -> u8 {
    let (tag, coords): (u64, Vec<i64>) = match g {
        GroupElement::Lattice(v) => (1, v.clone()),
        GroupElement::Free(w) => (2, w.iter().map(|&l| l as i64).collect()),
        GroupElement::Heisenberg(h) => (3, h.to_vec()),
    };
    let mut acc = mix64(seed ^ mix64(tag) ^ (coords.len() as u64).rotate_left(32));
    for c in coords {
        acc = mix64(acc ^ c as u64);
    }
    (acc >> 63) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_and_free_arithmetic() {
        let z2 = GroupSpec::Lattice { dim: 2 };
        let p = z2
            .multiply(&GroupElement::Lattice(vec![1, 0]), &GroupElement::Lattice(vec![0, 1]))
            .unwrap();
        assert_eq!(p, GroupElement::Lattice(vec![1, 1]));
        assert_eq!(z2.word_norm(&GroupElement::Lattice(vec![3, -2])).unwrap().value(), Some(5));

        let f2 = GroupSpec::Free { generators: 2 };
        let a = f2.symbol(0).unwrap();
        let ainv = f2.symbol(1).unwrap();
        assert_eq!(f2.multiply(&a, &ainv).unwrap(), f2.identity());
        let w = GroupElement::Free(vec![1, 2, 1, -2]);
        assert_eq!(f2.word_norm(&w).unwrap().value(), Some(4));
    }

    #[test]
    fn heisenberg_commutator() {
        let h = GroupSpec::Heisenberg;
        let x = GroupElement::Heisenberg([1, 0, 0]);
        let y = GroupElement::Heisenberg([0, 1, 0]);
        let xi = h.inverse(&x).unwrap();
        let yi = h.inverse(&y).unwrap();
        let z = [&y, &xi, &yi]
            .iter()
            .try_fold(x.clone(), |acc, g| h.multiply(&acc, g))
            .unwrap();
        assert_eq!(z, GroupElement::Heisenberg([0, 0, 1]));
        assert_eq!(h.word_norm(&z).unwrap().value(), Some(4));
        assert_eq!(h.symbol(2).unwrap(), y);
    }

    #[test]
    fn heisenberg_bracket_outside_ball() {
        let h = GroupSpec::Heisenberg;
        for g in [[30, 0, 0], [0, 0, 500], [7, -9, 1000], [25, 3, -4]] {
            let n = h.word_norm(&GroupElement::Heisenberg(g)).unwrap();
            assert!(n.lower > HEISENBERG_EXACT_RADIUS && n.lower <= n.upper, "{g:?} {n:?}");
        }
        assert_eq!(
            h.word_norm(&GroupElement::Heisenberg([30, 0, 0])).unwrap().value(),
            Some(30)
        );
    }

    #[test]
    fn central_cost_matches_ball() {
        let ball = heisenberg_ball();
        for k in 1..=20u64 {
            if let Some(&d) = ball.get(&[0, 0, k as i64]) {
                assert!(central_cost(k) >= d as u64, "k = {k}");
            }
        }
        assert_eq!(central_cost(1), 4);
    }

    #[test]
    fn ranks() {
        assert_eq!(GroupSpec::Lattice { dim: 3 }.weighted_rank().unwrap(), 3);
        assert_eq!(GroupSpec::Heisenberg.weighted_rank().unwrap(), 4);
        assert!(matches!(
            GroupSpec::Free { generators: 2 }.weighted_rank(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn meeting_examples() {
        let z1 = GroupSpec::Lattice { dim: 1 };
        let alt: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        // The product is trivial at every even n, so n = 2 already qualifies.
        assert_eq!(meeting_diagnostic(&z1, &alt, &alt, 2, 0.5).unwrap(), Some(2));
        assert_eq!(
            meeting_diagnostic(&z1, &alt, &alt, 3, f64::INFINITY).unwrap(),
            Some(3)
        );
        let up = vec![0u8; 100_000];
        assert_eq!(meeting_diagnostic(&z1, &up, &up, 10, 0.1).unwrap(), None);
    }

    #[test]
    fn mixed_specs_are_rejected() {
        let z1 = GroupSpec::Lattice { dim: 1 };
        assert!(z1.multiply(&z1.identity(), &GroupElement::Free(vec![])).is_err());
    }

    #[test]
    fn increments_are_reproducible() {
        let f2 = GroupSpec::Free { generators: 2 };
        assert_eq!(sample_increments(&f2, 50, 9, 1), sample_increments(&f2, 50, 9, 1));
        assert_ne!(sample_increments(&f2, 50, 9, 1), sample_increments(&f2, 50, 9, 2));
        assert!(sample_increments(&f2, 0, 9, 1).is_empty());
    }

    #[test]
    fn translated_scenery() {
        let h = GroupSpec::Heisenberg;
        let f = Scenery::new(3);
        let t = GroupElement::Heisenberg([2, -1, 5]);
        let ft = f.translated(&h, &t).unwrap();
        for g in [[0, 0, 0], [1, 2, 3], [-4, 0, 9]] {
            let g = GroupElement::Heisenberg(g);
            let tg = h.multiply(&t, &g).unwrap();
            assert_eq!(ft.value(&tg), f.value(&g));
        }
    }

    #[test]
    fn spec_json() {
        let s: GroupSpec = serde_json::from_str(r#"{"kind":"free","generators":2}"#).unwrap();
        assert_eq!(s, GroupSpec::Free { generators: 2 });
        let s: GroupSpec = serde_json::from_str(r#"{"kind":"heisenberg"}"#).unwrap();
        assert_eq!(s.symbol_count(), 4);
        assert!(serde_json::from_str::<GroupSpec>(r#"{"kind":"torus"}"#).is_err());
    }
}
