mod common;

use common::{random_measure, random_metric, random_permutation};
use filtlab::mmspace::{DiscreteMeasure, SemimetricMatrix};
use filtlab::transport::{kantorovich, kantorovich_bruteforce, kantorovich_value, PLAN_TOL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(1..=7);
        let d = random_metric(&mut rng, n);
        let mu = random_measure(&mut rng, n, 5);
        let nu = random_measure(&mut rng, n, 5);
        let t = kantorovich(&mu, &nu, &d).unwrap();
        let b = kantorovich_bruteforce(&mu, &nu, &d).unwrap();
        assert!((t.value - b).abs() <= 1e-9, "{} vs {}", t.value, b);
        assert!(t.plan.is_feasible(&mu, &nu, PLAN_TOL));
        assert!((t.plan.cost(&d) - t.value).abs() <= 1e-12);
    }
}

#[test]
fn value_is_label_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let n = rng.random_range(2..=30);
        let d = random_metric(&mut rng, n);
        let mu = random_measure(&mut rng, n, n);
        let nu = random_measure(&mut rng, n, n);
        let p = random_permutation(&mut rng, n);
        let a = kantorovich_value(&mu, &nu, &d).unwrap();
        let b = kantorovich_value(
            &mu.pullback(&p).unwrap(),
            &nu.pullback(&p).unwrap(),
            &d.pullback(&p).unwrap(),
        )
        .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn uniform_on_many_points() {
    // Two uniform measures on disjoint halves of a 200-point line: every unit
    // of mass travels exactly 100.
    let n = 200;
    let d = SemimetricMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs()).unwrap();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n / 2 {
        a[i] = 1.0;
        b[i + n / 2] = 1.0;
    }
    let mu = DiscreteMeasure::normalized(&a).unwrap();
    let nu = DiscreteMeasure::normalized(&b).unwrap();
    let t = kantorovich(&mu, &nu, &d).unwrap();
    assert!((t.value - 100.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_metric(&mut rng, n);
        let m: Vec<_> = (0..3).map(|_| random_measure(&mut rng, n, n)).collect();
        let k = |a: usize, b: usize| kantorovich_value(&m[a], &m[b], &d).unwrap();
        prop_assert!((k(0, 1) - k(1, 0)).abs() <= 1e-12);
        prop_assert!(k(0, 2) <= k(0, 1) + k(1, 2) + 1e-8);
        prop_assert_eq!(k(0, 0), 0.0);
    }

    #[test]
    fn scale_equivariance(seed in any::<u64>(), n in 2usize..9, t in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_metric(&mut rng, n);
        let mu = random_measure(&mut rng, n, n);
        let nu = random_measure(&mut rng, n, n);
        let a = kantorovich_value(&mu, &nu, &d).unwrap();
        let b = kantorovich_value(&mu, &nu, &d.scaled(t).unwrap()).unwrap();
        prop_assert!((b - t * a).abs() <= 1e-9 * (1.0 + t));
    }

    #[test]
    fn total_variation_bound(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_metric(&mut rng, n);
        let mu = random_measure(&mut rng, n, n);
        let nu = random_measure(&mut rng, n, n);
        let tv: f64 = (0..n).map(|i| (mu.weight(i) - nu.weight(i)).abs()).sum::<f64>() / 2.0;
        let k = kantorovich_value(&mu, &nu, &d).unwrap();
        prop_assert!(k <= tv * d.max_entry() + 1e-12);
    }
}
