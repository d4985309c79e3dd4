//! Warm-starting cold items from their nearest warm neighbour, gated by a
//! distance threshold taken as a quantile of the pairwise-distance
//! distribution over all items.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::IncidenceMatrix;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::isp::{columns_of, coverage_of_columns, CoverageReport};

/// Pair count above which the distance distribution is sampled.
pub const DEFAULT_SAMPLE_CAP: usize = 1_000_000;

pub(crate) const THRESHOLD_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cold: String,
    pub donor: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStartMap {
    pub q: f64,
    /// Resolved distance threshold.
    pub w: f64,
    pub warm: Vec<String>,
    /// Matched cold items in embedding row order.
    pub assignments: Vec<Assignment>,
    pub unmatched: Vec<String>,
}

impl WarmStartMap {
    pub fn matched(&self) -> impl Iterator<Item = &str> {
        self.assignments.iter().map(|a| a.cold.as_str())
    }

    pub fn donor_of(&self, cold: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.cold == cold)
    }
}

fn check_quantile(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidQuantile(q))
    }
}

/// Sorted distances over all unordered item pairs, or over `sample_cap`
/// uniformly drawn pairs when there are more pairs than that.
pub fn pair_distances(e: &EmbeddingMatrix, sample_cap: usize, seed: u64) -> Vec<f64> {
    let n = e.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let mut d: Vec<f64> = if pairs <= sample_cap {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| e.distance(i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sample_cap)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                e.distance(i, j)
            })
            .collect()
    };
    d.sort_by(f64::total_cmp);
    d
}

/// Linear-interpolation quantile of ascending `sorted` values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn resolve_threshold(e: &EmbeddingMatrix, q: f64, sample_cap: usize, seed: u64) -> Result<f64> {
    check_quantile(q)?;
    if sample_cap == 0 {
        return Err(Error::Config("sample cap must be positive".into()));
    }
    Ok(quantile(&pair_distances(e, sample_cap, seed), q))
}

fn row_indices(e: &EmbeddingMatrix, ids: &[String]) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = e.item_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    ids.iter()
        .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::UnknownItem(id.clone())))
        .collect()
}

/// Nearest warm row for `cold` with its distance; ties go to the lower row.
pub(crate) fn nearest_warm(e: &EmbeddingMatrix, warm: &[usize], cold: usize) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for &w in warm {
        let d = e.distance(cold, w);
        if d < best.1 || (d == best.1 && w < best.0) {
            best = (w, d);
        }
    }
    best
}

/// Index-level warm start with a known threshold. Returns
/// `(cold, donor, distance)` for matches and the unmatched cold rows.
pub(crate) fn match_cold(
    e: &EmbeddingMatrix,
    warm: &[usize],
    cold: &[usize],
    w: f64,
) -> (Vec<(usize, usize, f64)>, Vec<usize>) {
    let mut cold = cold.to_vec();
    cold.sort_unstable();
    let nearest: Vec<(usize, f64)> = cold.par_iter().map(|&c| nearest_warm(e, warm, c)).collect();
    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    for (c, (donor, d)) in cold.into_iter().zip(nearest) {
        if d <= w {
            matched.push((c, donor, d));
        } else {
            unmatched.push(c);
        }
    }
    (matched, unmatched)
}

pub fn warm_start(warm: &[String], cold: &[String], e: &EmbeddingMatrix, q: f64) -> Result<WarmStartMap> {
    check_quantile(q)?;
    let w = resolve_threshold(e, q, DEFAULT_SAMPLE_CAP, THRESHOLD_SEED)?;
    warm_start_with_threshold(warm, cold, e, q, w)
}

pub fn warm_start_with_threshold(
    warm: &[String],
    cold: &[String],
    e: &EmbeddingMatrix,
    q: f64,
    w: f64,
) -> Result<WarmStartMap> {
    if warm.is_empty() {
        return Err(Error::EmptyWarmSet);
    }
    let warm_idx = row_indices(e, warm)?;
    let cold_idx = row_indices(e, cold)?;
    let mut is_warm = vec![false; e.len()];
    for &i in &warm_idx {
        is_warm[i] = true;
    }
    if let Some(&c) = cold_idx.iter().find(|&&c| is_warm[c]) {
        return Err(Error::Config(format!("item `{}` is both warm and cold", e.item_ids()[c])));
    }
    let ids = e.item_ids();
    let (matched, unmatched) = match_cold(e, &warm_idx, &cold_idx, w);
    Ok(WarmStartMap {
        q,
        w,
        warm: warm.to_vec(),
        assignments: matched
            .into_iter()
            .map(|(c, d, dist)| Assignment {
                cold: ids[c].clone(),
                donor: ids[d].clone(),
                distance: dist,
            })
            .collect(),
        unmatched: unmatched.into_iter().map(|c| ids[c].clone()).collect(),
    })
}

/// Coverage of the warm items together with every warm-started cold item.
pub fn post_warmstart_coverage(map: &WarmStartMap, incidence: &IncidenceMatrix) -> Result<CoverageReport> {
    let ids: Vec<String> = map
        .warm
        .iter()
        .cloned()
        .chain(map.matched().map(str::to_owned))
        .collect();
    Ok(coverage_of_columns(incidence, &columns_of(incidence, &ids)?))
}

/// Labels covered after warm-start, per selected item.
pub fn unit_coverage(selection_size: usize, map: &WarmStartMap, incidence: &IncidenceMatrix) -> Result<f64> {
    if selection_size == 0 {
        return Err(Error::Config("selection size must be at least 1".into()));
    }
    let covered = post_warmstart_coverage(map, incidence)?.overall.covered;
    Ok(covered as f64 / selection_size as f64)
}
