//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use isp_core::{EmbeddingMatrix, IncidenceMatrix, Label, Metric};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Incidence matrix with rows `r000..` and columns `c0..` from per-column row lists.
pub fn matrix(n_rows: usize, cols: &[Vec<usize>]) -> IncidenceMatrix {
    let mut rows: BTreeMap<Label, Vec<usize>> =
        (0..n_rows).map(|r| (Label::new("r", format!("{r:03}")), Vec::new())).collect();
    for (c, col) in cols.iter().enumerate() {
        for &r in col {
            rows.get_mut(&Label::new("r", format!("{r:03}"))).unwrap().push(c);
        }
    }
    IncidenceMatrix::from_rows(rows, (0..cols.len()).map(|c| format!("c{c}")).collect(), Vec::new())
}

/// Random feasible instance: every row has at least one column.
pub fn random_instance(rng: &mut impl Rng, max_rows: usize, max_cols: usize) -> (usize, Vec<Vec<usize>>) {
    let n_rows = rng.gen_range(2..=max_rows);
    let n_cols = rng.gen_range(2..=max_cols);
    let density = rng.gen_range(0.1..0.5);
    let mut cols: Vec<Vec<usize>> = (0..n_cols)
        .map(|_| (0..n_rows).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    for r in 0..n_rows {
        if !cols.iter().any(|c| c.contains(&r)) {
            let c = rng.gen_range(0..n_cols);
            cols[c].push(r);
            cols[c].sort_unstable();
        }
    }
    (n_rows, cols)
}

pub fn masks(cols: &[Vec<usize>]) -> Vec<u64> {
    cols.iter().map(|c| c.iter().fold(0u64, |m, &r| m | 1 << r)).collect()
}

/// Cheapest cover by enumerating every column subset; `max_items` bounds its size.
pub fn brute_min_cover(n_rows: usize, cols: &[Vec<usize>], costs: &[f64], max_items: Option<usize>) -> Option<f64> {
    let m = masks(cols);
    let full = (1u64 << n_rows) - 1;
    let mut best: Option<f64> = None;
    for subset in 0u64..1 << cols.len() {
        if max_items.is_some_and(|k| subset.count_ones() as usize > k) {
            continue;
        }
        let mut covered = 0;
        let mut cost = 0.0;
        for (c, mask) in m.iter().enumerate() {
            if subset >> c & 1 == 1 {
                covered |= mask;
                cost += costs[c];
            }
        }
        if covered == full && best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    best
}

/// Most rows covered by at most `t` columns, by enumeration.
pub fn brute_max_cover(cols: &[Vec<usize>], t: usize) -> usize {
    let m = masks(cols);
    let mut best = 0;
    for subset in 0u64..1 << cols.len() {
        if subset.count_ones() as usize > t {
            continue;
        }
        let covered = m
            .iter()
            .enumerate()
            .filter(|(c, _)| subset >> c & 1 == 1)
            .fold(0u64, |acc, (_, mask)| acc | mask);
        best = best.max(covered.count_ones() as usize);
    }
    best
}

pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|i| 1.0 / i as f64).sum()
}

/// Rows covered by the union of the selected columns, recomputed from the matrix.
pub fn union_rows(m: &IncidenceMatrix, selected: &[usize]) -> usize {
    (0..m.n_rows()).filter(|&r| selected.iter().any(|&c| m.covers(r, c))).count()
}

pub fn points(rows: &[Vec<f64>], metric: Metric) -> EmbeddingMatrix {
    let dim = rows[0].len();
    let ids = (0..rows.len()).map(|i| format!("p{i}")).collect();
    EmbeddingMatrix::new(ids, dim, rows.concat(), metric).unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn random_rows(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect()
}

pub fn two_blobs() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..20)
        .map(|i| {
            let cx = if i < 10 { 0.0 } else { 100.0 };
            vec![cx + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        })
        .collect()
}

pub fn fifty_points(seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
    points(&rows, Metric::Euclidean)
}

/// Sorted list of every unordered pair distance.
pub fn all_pairs(e: &EmbeddingMatrix) -> Vec<f64> {
    let mut d = Vec::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            d.push(euclid(e.row(i), e.row(j)));
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Textbook linear interpolation between closest ranks.
pub fn reference_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Exhaustive nearest-warm scan: `(cold, donor, distance)` for cold items within `w`.
pub fn brute_matches(e: &EmbeddingMatrix, warm: &[usize], cold: &[usize], w: f64) -> Vec<(String, String, f64)> {
    let mut cold = cold.to_vec();
    cold.sort_unstable();
    let mut out = Vec::new();
    for c in cold {
        let mut best: Option<(usize, f64)> = None;
        let mut sorted_warm = warm.to_vec();
        sorted_warm.sort_unstable();
        for &d in &sorted_warm {
            let dist = euclid(e.row(c), e.row(d));
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((d, dist));
            }
        }
        let (d, dist) = best.unwrap();
        if dist <= w {
            out.push((e.item_ids()[c].clone(), e.item_ids()[d].clone(), dist));
        }
    }
    out
}

pub fn ids(e: &EmbeddingMatrix, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| e.item_ids()[i].clone()).collect()
}

pub fn split(rng: &mut impl Rng, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let n_warm = rng.gen_range(1..n);
    let cold = all.split_off(n_warm);
    (all, cold)
}
