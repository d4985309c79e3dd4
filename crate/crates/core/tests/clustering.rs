mod common;

use common::*;
use isp_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn inertia_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..50 {
        let n = rng.gen_range(10..80);
        let dim = rng.gen_range(1..6);
        let rows = random_rows(&mut rng, n, dim);
        let metric = if trial % 5 == 4 { Metric::Cosine } else { Metric::Euclidean };
        let e = points(&rows, metric);
        let k = rng.gen_range(1..=n.min(8));
        let model = kmeans(&e, k, trial, 100).unwrap();
        for w in model.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "trial {trial}: {:?}", model.inertia_trace);
        }
        assert_eq!(*model.inertia_trace.last().unwrap(), model.inertia);
    }
}

#[test]
fn two_blobs_are_recovered() {
    let e = points(&two_blobs(), Metric::Euclidean);
    for seed in 0..10 {
        let model = kmeans(&e, 2, seed, 100).unwrap();
        let a = &model.assignments;
        assert!(a[..10].iter().all(|&x| x == a[0]));
        assert!(a[10..].iter().all(|&x| x == a[10]));
        assert_ne!(a[0], a[10]);
    }
}

#[test]
fn reported_inertia_matches_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for seed in 0..20 {
        let rows = random_rows(&mut rng, 40, 3);
        let e = points(&rows, Metric::Euclidean);
        let model = kmeans(&e, 4, seed, 100).unwrap();
        let direct: f64 = rows
            .iter()
            .zip(&model.assignments)
            .map(|(x, &a)| euclid(x, &model.centroids[a]).powi(2))
            .sum();
        assert!((direct - model.inertia).abs() < 1e-9 * direct.max(1.0));
        if model.converged {
            for (x, &a) in rows.iter().zip(&model.assignments) {
                let best = model.centroids.iter().map(|c| euclid(x, c)).fold(f64::INFINITY, f64::min);
                assert!(euclid(x, &model.centroids[a]) <= best + 1e-12);
            }
        }
    }
}

#[test]
fn diversity_costs_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for seed in 0..20 {
        let rows = random_rows(&mut rng, 30, 4);
        let e = points(&rows, Metric::Euclidean);
        let model = kmeans(&e, 5, seed, 100).unwrap();
        let costs = diversity_costs(&e, &model).unwrap();
        for (x, c) in rows.iter().zip(&costs) {
            let best = model.centroids.iter().map(|m| euclid(x, m)).fold(f64::INFINITY, f64::min);
            assert!((best - c).abs() < 1e-12);
        }
    }
}

#[test]
fn same_seed_same_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let e = points(&random_rows(&mut rng, 60, 3), Metric::Euclidean);
    assert_eq!(kmeans(&e, 6, 9, 100).unwrap(), kmeans(&e, 6, 9, 100).unwrap());
}

#[test]
fn invalid_k() {
    let e = points(&two_blobs(), Metric::Euclidean);
    assert!(matches!(kmeans(&e, 0, 0, 10), Err(Error::InvalidK { k: 0, n: 20 })));
    assert!(matches!(kmeans(&e, 21, 0, 10), Err(Error::InvalidK { k: 21, n: 20 })));
}

#[test]
fn duplicate_points_keep_k_centroids() {
    let rows = vec![vec![1.0, 1.0]; 6];
    let e = points(&rows, Metric::Euclidean);
    let model = kmeans(&e, 3, 0, 50).unwrap();
    assert_eq!(model.centroids.len(), 3);
    assert_eq!(model.inertia, 0.0);
}

proptest! {
    #[test]
    fn k_equals_n_gives_zero_inertia(seed in 0u64..500, n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = points(&random_rows(&mut rng, n, 2), Metric::Euclidean);
        let model = kmeans(&e, n, seed, 50).unwrap();
        prop_assert!(model.inertia < 1e-18);
        prop_assert!(diversity_costs(&e, &model).unwrap().iter().all(|&c| c < 1e-9));
    }
}
