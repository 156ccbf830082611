//! Small numeric helpers shared across modules.
//!
//! Sums that feed values compared for exact equality under relabeling go
//! through [`canonical_sum`]: the terms are sorted before accumulation, so the
//! result depends only on the multiset of terms and not on their order.

/// Sum of the terms in ascending order.
pub fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

/// [`canonical_sum`] over an iterator.
pub fn canonical_sum_iter(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.into_iter().collect();
    canonical_sum(&mut v)
}

/// `-p log2 p`, with the convention `0 log 0 = 0`.
#[inline]
pub fn neg_xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a mass vector. Zero masses are ignored.
pub fn entropy_bits(masses: &[f64]) -> f64 {
    let h = canonical_sum_iter(masses.iter().map(|&p| neg_xlog2x(p)));
    h.max(0.0)
}

/// Binary entropy `H2(t)` in bits.
pub fn binary_entropy(t: f64) -> f64 {
    neg_xlog2x(t) + neg_xlog2x(1.0 - t)
}

/// SplitMix64 finalizer. Used to derive child seeds and as the mixing step of
/// the scenery hash.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for `(master, stream, index)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix64(mix64(master ^ mix64(stream)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sum_is_order_free() {
        let a = [0.1, 1e16, -1e16, 0.3, 0.2];
        let mut b = a;
        b.reverse();
        assert_eq!(
            canonical_sum(&mut a.clone()).to_bits(),
            canonical_sum(&mut b).to_bits()
        );
    }

    #[test]
    fn entropy_of_uniform() {
        assert_eq!(entropy_bits(&[0.25; 4]), 2.0);
        assert_eq!(entropy_bits(&[1.0, 0.0]), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, 1, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
    }
}
