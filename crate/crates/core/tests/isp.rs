mod common;

use std::collections::BTreeSet;

use common::*;
use isp_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ten items, six labels over two categories, points in the plane.
fn ten_items() -> (IncidenceMatrix, EmbeddingMatrix) {
    let spec: [(&[&str], &str, [f64; 2]); 10] = [
        (&["drama"], "en", [0.0, 0.0]),
        (&["drama", "comedy"], "en", [0.5, 0.2]),
        (&["comedy"], "fr", [5.0, 5.0]),
        (&["horror"], "fr", [5.5, 4.5]),
        (&["horror", "drama"], "de", [9.0, 1.0]),
        (&["comedy"], "de", [9.5, 0.5]),
        (&["drama"], "fr", [1.0, 8.0]),
        (&["horror"], "en", [1.5, 8.5]),
        (&["comedy", "horror"], "en", [4.0, 1.0]),
        (&["drama"], "de", [6.0, 9.0]),
    ];
    let items: Vec<Item> = spec
        .iter()
        .enumerate()
        .map(|(i, (genres, lang, _))| Item {
            id: format!("i{i}"),
            labels: genres
                .iter()
                .map(|g| Label::new("genre", *g))
                .chain([Label::new("language", *lang)])
                .collect(),
            text: None,
        })
        .collect();
    let cat = Catalog::new(items, vec!["genre".into(), "language".into()]).unwrap();
    let m = build_incidence(&cat, &cat.categories, &[]).unwrap();
    let rows: Vec<Vec<f64>> = spec.iter().map(|s| s.2.to_vec()).collect();
    let ids = cat.item_ids();
    let e = EmbeddingMatrix::new(ids, 2, rows.concat(), Metric::Euclidean).unwrap();
    (m, e)
}

#[test]
fn ten_item_fixture_full_selection() {
    let (m, e) = ten_items();
    assert_eq!(m.n_rows(), 6);
    let best = brute_min_cover(m.n_rows(), &m.columns, &vec![1.0; m.n_cols()], None).unwrap() as usize;
    for seed in 0..5 {
        let r = solve_isp(&m, &e, &IspConfig { seed, ..Default::default() }).unwrap();
        assert_eq!(r.k, best);
        assert_eq!(r.final_selection.covered_rows, 6);
        assert_eq!(union_rows(&m, &r.final_selection.columns), 6);
        assert!(r.final_selection.len() <= best);
        assert_eq!(r.final_selection.columns, r.diverse.columns);
        assert_eq!(r.coverage.final_selection.fraction(), 1.0);
    }
}

#[test]
fn ten_item_fixture_bounded_to_two() {
    let (m, e) = ten_items();
    let r = solve_isp(&m, &e, &IspConfig { t: Some(2), ..Default::default() }).unwrap();
    assert_eq!(r.final_selection.len(), 2);
    let diverse = &r.diverse.columns;
    let mut best = 0;
    for a in 0..diverse.len() {
        for b in a + 1..diverse.len() {
            best = best.max(union_rows(&m, &[diverse[a], diverse[b]]));
        }
    }
    assert_eq!(r.final_selection.covered_rows, best);
    assert!(r.final_selection.columns.iter().all(|c| diverse.contains(c)));
}

#[test]
fn diverse_level_matches_weighted_oracle() {
    let (m, e) = ten_items();
    let r = solve_isp(&m, &e, &IspConfig::default()).unwrap();
    let best = brute_min_cover(m.n_rows(), &m.columns, &r.costs, Some(r.k)).unwrap();
    assert!((r.diverse.objective - best).abs() < 1e-9);
    let free = solve_isp(
        &m,
        &e,
        &IspConfig {
            diversity_mode: DiversityMode::WarmStart,
            ..Default::default()
        },
    )
    .unwrap();
    let unbounded = brute_min_cover(m.n_rows(), &m.columns, &free.costs, None).unwrap();
    assert!((free.diverse.objective - unbounded).abs() < 1e-9);
    assert!(free.diverse.objective <= r.diverse.objective + 1e-9);
}

#[test]
fn coverage_matches_union_oracle() {
    let cat = load_catalog(fixture("movies_1000.csv"), CatalogFormat::Csv).unwrap();
    let m = build_incidence(&cat, &cat.categories, &[("genre".into(), "language".into())]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for size in [1, 7, 50, 400] {
        let sel = baseline_random(&m, size, rng.gen()).unwrap();
        let report = coverage(&sel, &m).unwrap();
        assert_eq!(report.overall.covered, union_rows(&m, &sel.columns));
        assert_eq!(report.overall.total, m.n_rows());
        for cat_cov in &report.per_category {
            let rows: Vec<usize> = (0..m.n_rows()).filter(|&r| m.labels[r].category == cat_cov.category).collect();
            let hit = rows.iter().filter(|&&r| sel.columns.iter().any(|&c| m.covers(r, c))).count();
            assert_eq!((cat_cov.covered, cat_cov.total), (hit, rows.len()));
        }
    }
}

#[test]
fn empty_selection_covers_nothing() {
    let (m, _) = ten_items();
    let sel = Selection::from_columns(&m, vec![], 0.0, true);
    let report = coverage(&sel, &m).unwrap();
    assert_eq!(report.overall.covered, 0);
    assert!(report.per_category.iter().all(|c| c.fraction == 0.0));
}

#[test]
fn kmeans_baseline_takes_one_item_per_blob() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![if i % 2 == 0 { 0.0 } else { 50.0 } + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let e = points(&rows, Metric::Euclidean);
    let m = matrix(1, &(0..20).map(|_| vec![0]).collect::<Vec<_>>());
    let m = IncidenceMatrix {
        item_ids: e.item_ids().to_vec(),
        ..m
    };
    for seed in 0..5 {
        let sel = baseline_kmeans(&m, &e, 2, seed).unwrap();
        let parity: BTreeSet<usize> = sel.columns.iter().map(|c| c % 2).collect();
        assert_eq!(parity.len(), 2);
    }
}

#[test]
fn baselines_are_deterministic_and_sized() {
    let (m, e) = ten_items();
    assert_eq!(baseline_random(&m, 4, 9).unwrap(), baseline_random(&m, 4, 9).unwrap());
    assert_eq!(baseline_kmeans(&m, &e, 4, 9).unwrap(), baseline_kmeans(&m, &e, 4, 9).unwrap());
    assert_eq!(baseline_random(&m, 4, 9).unwrap().len(), 4);
    assert!(matches!(baseline_random(&m, 11, 0), Err(Error::InvalidSize { size: 11, n: 10 })));
    assert!(matches!(baseline_kmeans(&m, &e, 0, 0), Err(Error::InvalidSize { .. })));
}

#[test]
fn strict_mode_rejects_uncoverable_labels() {
    let (mut m, e) = ten_items();
    m.uncoverable.push(Label::new("genre", "western"));
    let cfg = IspConfig { strict: true, ..Default::default() };
    assert!(matches!(solve_isp(&m, &e, &cfg), Err(Error::InfeasibleCatalog(1))));
    assert!(solve_isp(&m, &e, &IspConfig::default()).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn levels_nest_and_cover(seed in 0u64..10_000, t in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_rows, cols) = random_instance(&mut rng, 10, 16);
        let m = matrix(n_rows, &cols);
        let rows: Vec<Vec<f64>> = (0..cols.len()).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let e = EmbeddingMatrix::new(m.item_ids.clone(), 2, rows.concat(), Metric::Euclidean).unwrap();
        let r = solve_isp(&m, &e, &IspConfig { seed, ..Default::default() }).unwrap();
        prop_assert_eq!(r.k, r.unicost.len());
        prop_assert!(r.diverse.len() <= r.k);
        prop_assert_eq!(r.diverse.covered_rows, n_rows);
        prop_assert_eq!(&r.final_selection.columns, &r.diverse.columns);
        let b = solve_isp(&m, &e, &IspConfig { seed, t: Some(t), ..Default::default() }).unwrap();
        prop_assert!(b.final_selection.len() <= t);
        prop_assert!(b.final_selection.columns.iter().all(|c| b.diverse.columns.contains(c)));
    }
}
