mod common;

use std::sync::Arc;

use common::{random_measure, random_metric};
use filtlab::mmspace::{partition_rokhlin_distance, DiscreteMeasure, Partition, SemimetricMatrix};
use filtlab::treewalk::{
    for_each_automorphism, identity_matching, iid_word_measure, orbit_partition,
    orbit_partition_of, tree_distance, tree_distance_bruteforce, BaseMetric, TreeLeafSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_labels<R: Rng>(rng: &mut R, len: usize, k: usize) -> Vec<u32> {
    (0..len).map(|_| rng.random_range(0..k as u32)).collect()
}

#[test]
fn exhaustive_binary_trees() {
    let base = Arc::new(BaseMetric::Matrix(SemimetricMatrix::discrete(2)));
    for n in 0..=2usize {
        let leaves = 1usize << n;
        for a in 0..(1u32 << leaves) {
            for b in 0..(1u32 << leaves) {
                let bits = |w: u32| (0..leaves).map(|i| (w >> i) & 1).collect::<Vec<u32>>();
                let x = TreeLeafSystem::homogeneous(2, n, bits(a), base.clone()).unwrap();
                let y = TreeLeafSystem::homogeneous(2, n, bits(b), base.clone()).unwrap();
                assert_eq!(
                    tree_distance(&x, &y).unwrap(),
                    tree_distance_bruteforce(&x, &y).unwrap()
                );
            }
        }
    }
}

#[test]
fn mixed_shapes_match_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for radices in [vec![3], vec![2, 3], vec![3, 2], vec![2, 2, 2], vec![4, 2], vec![2, 2, 2, 2]] {
        let leaves: usize = radices.iter().product();
        for _ in 0..20 {
            let k = rng.random_range(2..5);
            let base = Arc::new(BaseMetric::Matrix(random_metric(&mut rng, k)));
            let x = TreeLeafSystem::new(radices.clone(), random_labels(&mut rng, leaves, k), base.clone())
                .unwrap();
            let y = TreeLeafSystem::new(radices.clone(), random_labels(&mut rng, leaves, k), base).unwrap();
            let fast = tree_distance(&x, &y).unwrap();
            let slow = tree_distance_bruteforce(&x, &y).unwrap();
            assert!((fast - slow).abs() <= 1e-12, "{radices:?}: {fast} vs {slow}");
        }
    }
}

#[test]
fn semimetric_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let base = Arc::new(BaseMetric::Hamming { bits: 3 });
        let mk = |rng: &mut ChaCha8Rng| {
            TreeLeafSystem::homogeneous(3, 3, random_labels(rng, 27, 8), base.clone()).unwrap()
        };
        let (x, y, z) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let dxy = tree_distance(&x, &y).unwrap();
        assert_eq!(dxy.to_bits(), tree_distance(&y, &x).unwrap().to_bits());
        assert!(
            tree_distance(&x, &z).unwrap() <= dxy + tree_distance(&y, &z).unwrap() + 1e-9
        );
        assert!(dxy <= identity_matching(&x, &y).unwrap());
        assert_eq!(tree_distance(&x, &x).unwrap(), 0.0);
    }
}

#[test]
fn automorphisms_leave_distance_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = Arc::new(BaseMetric::Matrix(random_metric(&mut rng, 4)));
    let x = TreeLeafSystem::new(vec![2, 3], random_labels(&mut rng, 6, 4), base.clone()).unwrap();
    let y = TreeLeafSystem::new(vec![2, 3], random_labels(&mut rng, 6, 4), base).unwrap();
    let d = tree_distance(&x, &y).unwrap();
    for_each_automorphism(&[2, 3], |a| {
        let ya = y.permuted(a).unwrap();
        assert_eq!(tree_distance(&x, &ya).unwrap().to_bits(), d.to_bits());
        assert_eq!(tree_distance(&ya, &x).unwrap().to_bits(), d.to_bits());
    });
}

#[test]
fn orbit_counts_of_binary_trees() {
    let fair = DiscreteMeasure::uniform(2);
    let mut counts = Vec::new();
    for n in 1..=4usize {
        let mu = iid_word_measure(&fair, 1 << n).unwrap();
        counts.push(orbit_partition(&vec![2; n], 2, &mu).unwrap().orbit_count);
    }
    assert_eq!(counts, vec![3, 6, 21, 231]);
}

#[test]
fn orbit_entropy_is_continuous_in_the_letter_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let k = rng.random_range(2..=4);
        let letter = random_measure(&mut rng, k, k);
        let g1 = Partition::from_labels(&random_labels(&mut rng, k, k)).unwrap();
        let g2 = Partition::from_labels(&random_labels(&mut rng, k, k)).unwrap();
        let dist = partition_rokhlin_distance(&letter, &g1, &g2).unwrap();
        for radices in [vec![2], vec![2, 2], vec![3]] {
            let leaves: usize = radices.iter().product();
            let mu = iid_word_measure(&letter, leaves).unwrap();
            let h1 = orbit_partition_of(&radices, k, &mu, &g1).unwrap().entropy_bits;
            let h2 = orbit_partition_of(&radices, k, &mu, &g2).unwrap().entropy_bits;
            assert!(
                (h1 - h2).abs() / leaves as f64 <= dist + 1e-9,
                "{radices:?}: {h1} {h2} {dist}"
            );
        }
    }
}
