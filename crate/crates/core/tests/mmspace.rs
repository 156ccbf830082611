mod common;

use common::{random_full_measure, random_measure};
use filtlab::mmspace::{
    conditional_measure, partition_entropy, partition_rokhlin_distance, DiscreteMeasure, Partition,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Partition {
    let k = rng.random_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    Partition::from_labels(&labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conditionals_recompose_the_measure(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n, n);
        let xi = random_partition(&mut rng, n);
        let mut total = vec![0.0; n];
        for b in 0..xi.block_count() {
            let mass = mu.mass_of(xi.block(b));
            if mass == 0.0 {
                prop_assert!(conditional_measure(&mu, &xi, b).is_err());
                continue;
            }
            let c = conditional_measure(&mu, &xi, b).unwrap();
            prop_assert!((c.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for i in 0..n {
                if xi.block_of(i) != b {
                    prop_assert_eq!(c.weight(i), 0.0);
                }
                total[i] += mass * c.weight(i);
            }
        }
        for i in 0..n {
            prop_assert!((total[i] - mu.weight(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_is_at_most_log_blocks(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_full_measure(&mut rng, n);
        let xi = random_partition(&mut rng, n);
        let h = partition_entropy(&mu, &xi);
        prop_assert!(h <= (xi.block_count() as f64).log2() + 1e-12);
    }

    #[test]
    fn rokhlin_is_a_semimetric(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_full_measure(&mut rng, n);
        let p: Vec<Partition> = (0..3).map(|_| random_partition(&mut rng, n)).collect();
        let d = |a: &Partition, b: &Partition| partition_rokhlin_distance(&mu, a, b).unwrap();
        prop_assert!((d(&p[0], &p[1]) - d(&p[1], &p[0])).abs() <= 1e-12);
        prop_assert!(d(&p[0], &p[0]).abs() <= 1e-12);
        prop_assert!(d(&p[0], &p[1]) <= d(&p[0], &p[2]) + d(&p[2], &p[1]) + 1e-9);
    }
}

#[test]
fn equiprobable_blocks_attain_the_maximum() {
    let mu = DiscreteMeasure::uniform(6);
    let xi = Partition::from_labels(&[0, 0, 1, 1, 2, 2]).unwrap();
    assert!((partition_entropy(&mu, &xi) - 3f64.log2()).abs() <= 1e-12);
    let skew = Partition::from_labels(&[0, 0, 0, 0, 1, 2]).unwrap();
    assert!(partition_entropy(&mu, &skew) < 3f64.log2() - 1e-3);
}
