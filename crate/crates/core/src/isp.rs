//! Three-level item selection: smallest covering subset, re-solved with
//! cluster-distance costs for diversity, then trimmed to at most `t` items
//! by maximum coverage.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use log::info;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::IncidenceMatrix;
use crate::clustering::{diversity_costs, kmeans, DEFAULT_MAX_ITERS};
use crate::embed::{EmbeddingMatrix, Metric};
use crate::error::{Error, Result};
use crate::setcover::{
    solve_max_cover, solve_unicost, solve_weighted_with, Backend, CoverInstance, CoverOptions, Selection,
    DEFAULT_TIME_BUDGET,
};

/// How the first-level solution constrains the diversity cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversityMode {
    /// At most `k` items, `k` being the first-level cover size.
    #[default]
    CardinalityBound,
    /// No size bound; the first-level cover only seeds the incumbent.
    WarmStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelBackends {
    pub unicost: Backend,
    pub diverse: Backend,
    pub max_cover: Backend,
}

impl LevelBackends {
    pub fn all(backend: Backend) -> Self {
        LevelBackends {
            unicost: backend,
            diverse: backend,
            max_cover: backend,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IspConfig {
    /// Upper bound on the final selection size.
    pub t: Option<usize>,
    pub seed: u64,
    pub backends: LevelBackends,
    /// Per-solve wall-clock budget for exact backends.
    pub time_budget_ms: u64,
    /// Overrides the embedding's own metric when set.
    pub metric: Option<Metric>,
    pub diversity_mode: DiversityMode,
    pub kmeans_max_iters: usize,
    /// Fail when the incidence matrix recorded uncoverable labels.
    pub strict: bool,
    /// Per-item multipliers applied to diversity costs (side preferences).
    pub cost_multipliers: Option<Vec<f64>>,
}

impl Default for IspConfig {
    fn default() -> Self {
        IspConfig {
            t: None,
            seed: 0,
            backends: LevelBackends::default(),
            time_budget_ms: DEFAULT_TIME_BUDGET.as_millis() as u64,
            metric: None,
            diversity_mode: DiversityMode::default(),
            kmeans_max_iters: DEFAULT_MAX_ITERS,
            strict: false,
            cost_multipliers: None,
        }
    }
}

impl IspConfig {
    pub fn time_budget(&self) -> Duration {
        Duration::from_millis(self.time_budget_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCoverage {
    pub category: String,
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
}

impl CategoryCoverage {
    fn new(category: String, covered: usize, total: usize) -> Self {
        let fraction = if total == 0 { 1.0 } else { covered as f64 / total as f64 };
        CategoryCoverage {
            category,
            covered,
            total,
            fraction,
        }
    }
}

/// Label coverage of a selection, measured over coverable rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub selected: usize,
    pub overall: CategoryCoverage,
    pub per_category: Vec<CategoryCoverage>,
    pub uncoverable: usize,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        self.overall.fraction
    }
}

pub(crate) fn coverage_of_columns(incidence: &IncidenceMatrix, columns: &[usize]) -> CoverageReport {
    let mut hit = vec![false; incidence.n_rows()];
    for &c in columns {
        for &r in &incidence.columns[c] {
            hit[r] = true;
        }
    }
    let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (label, &h) in incidence.labels.iter().zip(&hit) {
        let e = per.entry(label.category.as_str()).or_default();
        e.1 += 1;
        if h {
            e.0 += 1;
        }
    }
    let covered = hit.iter().filter(|h| **h).count();
    CoverageReport {
        selected: columns.len(),
        overall: CategoryCoverage::new("all".into(), covered, incidence.n_rows()),
        per_category: per
            .into_iter()
            .map(|(c, (covered, total))| CategoryCoverage::new(c.to_owned(), covered, total))
            .collect(),
        uncoverable: incidence.uncoverable.len(),
    }
}

pub(crate) fn columns_of(incidence: &IncidenceMatrix, ids: &[String]) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = incidence
        .item_ids
        .iter()
        .enumerate()
        .map(|(c, id)| (id.as_str(), c))
        .collect();
    ids.iter()
        .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::UnknownItem(id.clone())))
        .collect()
}

pub fn coverage(selection: &Selection, incidence: &IncidenceMatrix) -> Result<CoverageReport> {
    let cols = columns_of(incidence, &selection.item_ids)?;
    Ok(coverage_of_columns(incidence, &cols))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCoverage {
    pub unicost: CoverageReport,
    pub diverse: CoverageReport,
    #[serde(rename = "final")]
    pub final_selection: CoverageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IspResult {
    pub k: usize,
    pub unicost: Selection,
    pub diverse: Selection,
    #[serde(rename = "final")]
    pub final_selection: Selection,
    /// Diversity cost per item, in catalog order.
    pub costs: Vec<f64>,
    pub cluster_inertia: f64,
    pub coverage: LevelCoverage,
}

pub fn solve_isp(incidence: &IncidenceMatrix, embedding: &EmbeddingMatrix, config: &IspConfig) -> Result<IspResult> {
    embedding.ensure_aligned(&incidence.item_ids)?;
    if config.t == Some(0) {
        return Err(Error::Config("t must be at least 1".into()));
    }
    if config.strict && !incidence.uncoverable.is_empty() {
        return Err(Error::InfeasibleCatalog(incidence.uncoverable.len()));
    }
    let relabeled;
    let embedding = match config.metric {
        Some(m) if m != embedding.metric() => {
            relabeled = embedding.clone().with_metric(m)?;
            &relabeled
        }
        _ => embedding,
    };
    let budget = config.time_budget();

    if incidence.n_rows() == 0 {
        let empty = Selection::from_columns(incidence, Vec::new(), 0.0, true);
        let cov = coverage_of_columns(incidence, &[]);
        return Ok(IspResult {
            k: 0,
            unicost: empty.clone(),
            diverse: empty.clone(),
            final_selection: empty,
            costs: vec![0.0; incidence.n_cols()],
            cluster_inertia: 0.0,
            coverage: LevelCoverage {
                unicost: cov.clone(),
                diverse: cov.clone(),
                final_selection: cov,
            },
        });
    }

    let unicost = solve_unicost(&CoverInstance::unicost(incidence), config.backends.unicost, budget)?;
    let k = unicost.len();
    info!("level 1: {k} item(s) cover {} label(s)", incidence.n_rows());

    let model = kmeans(embedding, k, config.seed, config.kmeans_max_iters)?;
    let mut costs = diversity_costs(embedding, &model)?;
    if let Some(mult) = &config.cost_multipliers {
        if mult.len() != costs.len() {
            return Err(Error::DimMismatch {
                expected: costs.len(),
                found: mult.len(),
            });
        }
        for (c, m) in costs.iter_mut().zip(mult) {
            *c *= m;
        }
    }
    let options = CoverOptions {
        max_items: (config.diversity_mode == DiversityMode::CardinalityBound).then_some(k),
        incumbent: Some(unicost.columns.clone()),
    };
    let weighted = CoverInstance::weighted(incidence, costs.clone());
    let diverse = solve_weighted_with(&weighted, config.backends.diverse, budget, &options)?;
    info!("level 2: {} item(s), total cost {:.6}", diverse.len(), diverse.objective);

    let t = config.t.unwrap_or(diverse.len()).min(diverse.len());
    let bounded = CoverInstance::unicost(incidence).with_candidates(diverse.columns.clone());
    let final_selection = solve_max_cover(&bounded, t, config.backends.max_cover, budget)?;
    info!(
        "level 3: {} item(s) cover {} of {} label(s)",
        final_selection.len(),
        final_selection.covered_rows,
        incidence.n_rows()
    );

    let coverage = LevelCoverage {
        unicost: coverage_of_columns(incidence, &unicost.columns),
        diverse: coverage_of_columns(incidence, &diverse.columns),
        final_selection: coverage_of_columns(incidence, &final_selection.columns),
    };
    Ok(IspResult {
        k,
        unicost,
        diverse,
        final_selection,
        costs,
        cluster_inertia: model.inertia,
        coverage,
    })
}

/// Uniform sample of `size` items without replacement.
pub fn baseline_random(incidence: &IncidenceMatrix, size: usize, seed: u64) -> Result<Selection> {
    let n = incidence.n_cols();
    if size == 0 || size > n {
        return Err(Error::InvalidSize { size, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = index::sample(&mut rng, n, size).into_vec();
    cols.sort_unstable();
    Ok(Selection::from_columns(incidence, cols, size as f64, false))
}

/// Clusters into `size` groups and takes the item nearest each centroid.
pub fn baseline_kmeans(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    size: usize,
    seed: u64,
) -> Result<Selection> {
    embedding.ensure_aligned(&incidence.item_ids)?;
    let n = incidence.n_cols();
    if size == 0 || size > n {
        return Err(Error::InvalidSize { size, n });
    }
    let model = kmeans(embedding, size, seed, DEFAULT_MAX_ITERS)?;
    let metric = embedding.metric();
    let mut taken = vec![false; n];
    let mut cols = Vec::with_capacity(size);
    for centroid in &model.centroids {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let d = metric.distance(embedding.row(i), centroid);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("size <= n leaves an untaken item");
        taken[i] = true;
        cols.push(i);
    }
    Ok(Selection::from_columns(incidence, cols, size as f64, false))
}
