mod common;

use std::time::Duration;

use common::*;
use isp_core::setcover::InstanceFile;
use isp_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: Duration = Duration::from_secs(30);

fn random_costs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(1..=20) as f64 / 4.0).collect()
}

#[test]
fn exact_unicost_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (n_rows, cols) = random_instance(&mut rng, 12, 18);
        let m = matrix(n_rows, &cols);
        let sel = solve_unicost(&CoverInstance::unicost(&m), Backend::Exact, BUDGET).unwrap();
        let best = brute_min_cover(n_rows, &cols, &vec![1.0; cols.len()], None).unwrap();
        assert!(sel.optimal);
        assert_eq!(sel.len() as f64, best);
        assert_eq!(union_rows(&m, &sel.columns), n_rows);
    }
}

#[test]
fn exact_weighted_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (n_rows, cols) = random_instance(&mut rng, 12, 18);
        let costs = random_costs(&mut rng, cols.len());
        let m = matrix(n_rows, &cols);
        let sel = solve_weighted(&CoverInstance::weighted(&m, costs.clone()), Backend::Exact, BUDGET).unwrap();
        let best = brute_min_cover(n_rows, &cols, &costs, None).unwrap();
        assert!((sel.objective - best).abs() < 1e-9, "{} vs {best}", sel.objective);
        let direct: f64 = sel.columns.iter().map(|&c| costs[c]).sum();
        assert!((direct - sel.objective).abs() < 1e-9);
    }
}

#[test]
fn cardinality_bound_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let (n_rows, cols) = random_instance(&mut rng, 10, 14);
        let costs = random_costs(&mut rng, cols.len());
        let m = matrix(n_rows, &cols);
        let k = brute_min_cover(n_rows, &cols, &vec![1.0; cols.len()], None).unwrap() as usize;
        let unicost = solve_unicost(&CoverInstance::unicost(&m), Backend::Exact, BUDGET).unwrap();
        let opts = CoverOptions {
            max_items: Some(k),
            incumbent: Some(unicost.columns.clone()),
        };
        let sel = solve_weighted_with(&CoverInstance::weighted(&m, costs.clone()), Backend::Exact, BUDGET, &opts).unwrap();
        let best = brute_min_cover(n_rows, &cols, &costs, Some(k)).unwrap();
        assert!(sel.len() <= k);
        assert!((sel.objective - best).abs() < 1e-9);
    }
}

#[test]
fn exact_max_cover_matches_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let ratio = 1.0 - (-1.0f64).exp();
    for _ in 0..100 {
        let (n_rows, cols) = random_instance(&mut rng, 12, 18);
        let m = matrix(n_rows, &cols);
        let t = rng.gen_range(1..=3);
        let best = brute_max_cover(&cols, t);
        let exact = solve_max_cover(&CoverInstance::unicost(&m), t, Backend::Exact, BUDGET).unwrap();
        let greedy = solve_max_cover(&CoverInstance::unicost(&m), t, Backend::Greedy, BUDGET).unwrap();
        assert_eq!(exact.covered_rows, best);
        assert!(exact.len() <= t && greedy.len() <= t);
        assert!(greedy.covered_rows as f64 >= ratio * best as f64);
        assert_eq!(union_rows(&m, &greedy.columns), greedy.covered_rows);
    }
}

#[test]
fn greedy_unicost_within_harmonic_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let (n_rows, cols) = random_instance(&mut rng, 12, 18);
        let m = matrix(n_rows, &cols);
        let greedy = solve_unicost(&CoverInstance::unicost(&m), Backend::Greedy, BUDGET).unwrap();
        let best = brute_min_cover(n_rows, &cols, &vec![1.0; cols.len()], None).unwrap();
        let d = cols.iter().map(Vec::len).max().unwrap();
        assert!(greedy.len() as f64 <= harmonic(d) * best + 1e-9);
    }
}

/// Disjoint group rows plus a few secondary rows spread across groups, the
/// shape that a recursive selection round produces.
fn grouped_instance(seed: u64, groups: usize, per_group: usize, extra: usize) -> (usize, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (0..groups * per_group)
        .map(|i| {
            let tail = groups + (rng.gen_range(0.0f64..1.0).powi(2) * extra as f64) as usize;
            vec![i / per_group, tail]
        })
        .collect();
    (groups + extra, cols)
}

#[test]
fn grouped_instances_are_proven_quickly() {
    for seed in 0..20 {
        let (n_rows, cols) = grouped_instance(seed, 20, 5, 6);
        let m = matrix(n_rows, &cols);
        let inst = CoverInstance::unicost(&m);
        let sel = solve_unicost(&inst, Backend::Exact, Duration::from_secs(2)).unwrap();
        assert!(sel.optimal, "seed {seed}");
        let costs: Vec<f64> = (0..cols.len()).map(|c| 1.0 + (c * 7919 % 13) as f64 / 13.0).collect();
        let opts = CoverOptions {
            max_items: Some(sel.len()),
            incumbent: Some(sel.columns.clone()),
        };
        let w = solve_weighted_with(&CoverInstance::weighted(&m, costs), Backend::Exact, Duration::from_secs(2), &opts)
            .unwrap();
        assert!(w.optimal, "seed {seed}");
    }
}

#[test]
fn greedy_picks_largest_column_first_with_low_index_ties() {
    let m = matrix(4, &[vec![0, 1], vec![2, 3], vec![0, 1, 2], vec![3]]);
    let sel = solve_unicost(&CoverInstance::unicost(&m), Backend::Greedy, BUDGET).unwrap();
    // c2 first (3 rows), then c1 beats c3 on a gain-1 tie; greedy keeps pick order.
    assert_eq!(sel.columns, vec![2, 1]);
}

#[test]
fn candidate_restriction_is_respected() {
    let m = matrix(3, &[vec![0, 1, 2], vec![0], vec![1], vec![2]]);
    let inst = CoverInstance::unicost(&m).with_candidates(vec![1, 2, 3]);
    let sel = solve_unicost(&inst, Backend::Exact, BUDGET).unwrap();
    assert_eq!(sel.columns, vec![1, 2, 3]);
    let bounded = solve_max_cover(&CoverInstance::unicost(&m).with_candidates(vec![1, 2]), 5, Backend::Exact, BUDGET).unwrap();
    assert_eq!(bounded.columns, vec![1, 2]);
}

#[test]
fn infeasible_instance_reports_rows() {
    let m = matrix(3, &[vec![0], vec![1], vec![2]]);
    let inst = CoverInstance::unicost(&m).with_candidates(vec![0, 1]);
    assert!(matches!(
        solve_unicost(&inst, Backend::Greedy, BUDGET),
        Err(Error::Infeasible(1))
    ));
}

#[test]
fn instance_dump_round_trips() {
    let m = matrix(3, &[vec![0, 1], vec![2], vec![1, 2]]);
    let inst = CoverInstance::weighted(&m, vec![1.0, 2.0, 0.5]);
    let dump = InstanceFile::from_instance(&inst);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    dump.save(&path).unwrap();
    let back = InstanceFile::load(&path).unwrap();
    assert_eq!(back, dump);
    assert_eq!(back.incidence().unwrap(), m);
}

fn instance_strategy() -> impl Strategy<Value = (usize, Vec<Vec<usize>>, Vec<f64>)> {
    (2usize..10, 2usize..14).prop_flat_map(|(rows, cols)| {
        (
            Just(rows),
            prop::collection::vec(prop::collection::btree_set(0..rows, 0..=rows), cols),
            prop::collection::vec(0.25f64..5.0, cols),
        )
            .prop_map(|(rows, sets, costs)| {
                let mut cols: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
                for r in 0..rows {
                    if !cols.iter().any(|c| c.contains(&r)) {
                        let c = r % cols.len();
                        cols[c].push(r);
                        cols[c].sort_unstable();
                    }
                }
                (rows, cols, costs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_backend_returns_a_cover((rows, cols, costs) in instance_strategy()) {
        let m = matrix(rows, &cols);
        for backend in [Backend::Greedy, Backend::Exact, Backend::Auto] {
            let u = solve_unicost(&CoverInstance::unicost(&m), backend, BUDGET).unwrap();
            prop_assert_eq!(union_rows(&m, &u.columns), rows);
            let w = solve_weighted(&CoverInstance::weighted(&m, costs.clone()), backend, BUDGET).unwrap();
            prop_assert_eq!(union_rows(&m, &w.columns), rows);
            prop_assert_eq!(w.covered_rows, rows);
        }
    }

    #[test]
    fn exact_never_worse_than_greedy((rows, cols, costs) in instance_strategy()) {
        let m = matrix(rows, &cols);
        let g = solve_weighted(&CoverInstance::weighted(&m, costs.clone()), Backend::Greedy, BUDGET).unwrap();
        let e = solve_weighted(&CoverInstance::weighted(&m, costs), Backend::Exact, BUDGET).unwrap();
        prop_assert!(e.objective <= g.objective + 1e-9);
        prop_assert!(e.optimal);
    }

    #[test]
    fn max_cover_is_monotone_in_t((_rows, cols, _c) in instance_strategy()) {
        let m = matrix(_rows, &cols);
        let mut last = 0;
        for t in 1..=cols.len() {
            for backend in [Backend::Greedy, Backend::Exact] {
                let s = solve_max_cover(&CoverInstance::unicost(&m), t, backend, BUDGET).unwrap();
                prop_assert!(s.len() <= t);
                if backend == Backend::Exact {
                    prop_assert!(s.covered_rows >= last);
                    last = s.covered_rows;
                }
            }
        }
    }

    #[test]
    fn selections_have_no_duplicates((rows, cols, costs) in instance_strategy()) {
        let m = matrix(rows, &cols);
        let w = solve_weighted(&CoverInstance::weighted(&m, costs), Backend::Auto, BUDGET).unwrap();
        let mut sorted = w.columns.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), w.columns.len());
        for (id, &c) in w.item_ids.iter().zip(&w.columns) {
            prop_assert_eq!(id, &format!("c{c}"));
        }
    }
}
