use filtlab::filtration::iterate_semimetric;
use filtlab::groups::{GroupSpec, Scenery};
use filtlab::treewalk::identity_matching;
use filtlab::walksim::{
    ball_measure_estimate, leaf_observations, mean_distance_profile, pair_distance, two_point_chain,
    WalkPoint, DEFAULT_LEAF_CAP,
};

const MASTER: u64 = 77;

fn point(spec: &GroupSpec, m: usize, i: u64) -> WalkPoint {
    WalkPoint::sampled(spec, m, MASTER, 9, i)
}

#[test]
fn generic_iteration_agrees_on_two_points() {
    for spec in [GroupSpec::Lattice { dim: 1 }, GroupSpec::Free { generators: 2 }, GroupSpec::Heisenberg] {
        let max_n = if spec.symbol_count() == 2 { 4 } else { 2 };
        for n in 1..=max_n {
            for i in 0..4 {
                let (p, q) = (point(&spec, n, 2 * i), point(&spec, n, 2 * i + 1));
                let (rho0, mu, chain) = two_point_chain(&p, &q, &spec, n, DEFAULT_LEAF_CAP).unwrap();
                let it = iterate_semimetric(&rho0, &mu, &chain, n).unwrap();
                let leaves = spec.symbol_count().pow(n as u32);
                let generic = it.level(n).distance(0, leaves).unwrap();
                let fast = pair_distance(&p, &q, &spec, n, DEFAULT_LEAF_CAP).unwrap();
                assert!((generic - fast).abs() <= 1e-12, "{} n={n}: {generic} vs {fast}", spec.name());
            }
        }
    }
}

#[test]
fn left_translation_leaves_distances_unchanged() {
    for spec in [GroupSpec::Lattice { dim: 2 }, GroupSpec::Heisenberg] {
        let h = spec
            .path(&spec.identity(), &[0, 2, 2, 1, 3, 0])
            .unwrap()
            .pop()
            .unwrap();
        for i in 0..6 {
            let (p, q) = (point(&spec, 4, 2 * i), point(&spec, 4, 2 * i + 1));
            let shift = |w: &WalkPoint| WalkPoint {
                scenery: w.scenery.translated(&spec, &h).unwrap(),
                tail: spec.multiply(&h, &w.tail).unwrap(),
                m: w.m,
            };
            let a = pair_distance(&p, &q, &spec, 4, DEFAULT_LEAF_CAP).unwrap();
            let b = pair_distance(&shift(&p), &shift(&q), &spec, 4, DEFAULT_LEAF_CAP).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "{}", spec.name());
        }
    }
}

#[test]
fn bounded_by_identity_matching_and_symmetric() {
    let spec = GroupSpec::Lattice { dim: 1 };
    let n = 6;
    let mut total = 0.0;
    let mut total_identity = 0.0;
    for i in 0..200 {
        let (p, q) = (point(&spec, n, 2 * i), point(&spec, n, 2 * i + 1));
        let d = pair_distance(&p, &q, &spec, n, DEFAULT_LEAF_CAP).unwrap();
        let x = leaf_observations(&p, &spec, n, DEFAULT_LEAF_CAP).unwrap();
        let y = leaf_observations(&q, &spec, n, DEFAULT_LEAF_CAP).unwrap();
        let id = identity_matching(&x, &y).unwrap();
        assert!(d <= id);
        assert_eq!(d, pair_distance(&q, &p, &spec, n, DEFAULT_LEAF_CAP).unwrap());
        total += d;
        total_identity += id;
    }
    assert!(total > 0.0 && total < total_identity);
}

#[test]
fn constant_scenery_gives_zero() {
    let spec = GroupSpec::Free { generators: 2 };
    let flat = |m| WalkPoint {
        scenery: Scenery::constant(0),
        tail: spec.identity(),
        m,
    };
    let p = point(&spec, 3, 0);
    assert_eq!(pair_distance(&flat(3), &flat(3), &spec, 3, DEFAULT_LEAF_CAP).unwrap(), 0.0);
    assert_eq!(pair_distance(&p, &p, &spec, 3, DEFAULT_LEAF_CAP).unwrap(), 0.0);
}

#[test]
fn ball_measure_grows_with_the_radius() {
    let spec = GroupSpec::Lattice { dim: 1 };
    let center = point(&spec, 5, 1000);
    let mut last = 0usize;
    for eps in [0.0, 0.1, 0.2, 0.3, 0.5, 1.01] {
        let b = ball_measure_estimate(&center, &spec, 5, eps, 200, MASTER, DEFAULT_LEAF_CAP).unwrap();
        assert!(b.hits >= last);
        assert!(b.estimate.ci_low <= b.estimate.value && b.estimate.value <= b.estimate.ci_high);
        last = b.hits;
    }
    assert_eq!(last, 200);
    assert!(ball_measure_estimate(&center, &spec, 5, 0.1, 99, MASTER, DEFAULT_LEAF_CAP).is_err());
}

#[test]
fn profiles_do_not_depend_on_the_pool() {
    let spec = GroupSpec::Free { generators: 2 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mean_distance_profile(&spec, 4, 4, 60, MASTER, DEFAULT_LEAF_CAP).unwrap())
    };
    let a = run(1);
    for t in [2, 5] {
        assert_eq!(a, run(t));
    }
    assert!(a.iter().all(|r| r.estimate.value > 0.0));
}
