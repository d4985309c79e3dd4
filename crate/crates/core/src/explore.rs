//! Active exploration on top of item selection.
//!
//! [`recursive_isp`] re-solves the selection over the items not yet picked,
//! one fixed-size round at a time, until the catalog is exhausted; earlier
//! rounds get larger [`order_weights`]. [`simulate`] runs the offline
//! protocol: seed a random warm set, explore one batch of cold items under a
//! policy, warm-start what remains, and count how many items end up with a
//! usable model.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::IncidenceMatrix;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::isp::{solve_isp, IspConfig};
use crate::setcover::Selection;
use crate::warmstart::{match_cold, pair_distances, quantile, resolve_threshold, DEFAULT_SAMPLE_CAP, THRESHOLD_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `1 / round`
    #[default]
    InverseRound,
    /// `(R - round + 1) / R`
    LinearDecay,
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse_round" => Ok(WeightScheme::InverseRound),
            "linear_decay" => Ok(WeightScheme::LinearDecay),
            other => Err(Error::Config(format!("unknown weight scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPlan {
    /// Rounds in order, each tagged with its 1-based round index.
    pub rounds: Vec<Selection>,
    pub weights: BTreeMap<String, f64>,
}

/// Adds items to `picks` from `pool` by marginal row coverage until it holds
/// `batch` items; zero-gain steps take the lowest unpicked index.
fn pad_by_coverage(incidence: &IncidenceMatrix, pool: &[usize], picks: &mut Vec<usize>, batch: usize) {
    let mut hit = vec![false; incidence.n_rows()];
    for &c in picks.iter() {
        for &r in &incidence.columns[c] {
            hit[r] = true;
        }
    }
    let mut picked: Vec<bool> = vec![false; incidence.n_cols()];
    for &c in picks.iter() {
        picked[c] = true;
    }
    while picks.len() < batch {
        let mut best: Option<(usize, usize)> = None;
        for &c in pool.iter().filter(|&&c| !picked[c]) {
            let gain = incidence.columns[c].iter().filter(|&&r| !hit[r]).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((c, gain));
            }
        }
        let Some((c, _)) = best else { break };
        picked[c] = true;
        for &r in &incidence.columns[c] {
            hit[r] = true;
        }
        picks.push(c);
    }
}

/// One recursive round: item selection restricted to `remaining` (sorted
/// column indices) with level-3 bound `batch`, padded to `batch` items.
fn isp_round(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    remaining: &[usize],
    batch: usize,
    config: &IspConfig,
    round: usize,
) -> Result<Vec<usize>> {
    let sub = incidence.restrict(remaining);
    let mut picks = Vec::with_capacity(batch);
    if sub.n_rows() > 0 {
        let cfg = IspConfig {
            t: Some(batch),
            seed: config.seed.wrapping_add(round as u64),
            strict: false,
            cost_multipliers: config
                .cost_multipliers
                .as_ref()
                .map(|m| remaining.iter().map(|&c| m[c]).collect()),
            ..config.clone()
        };
        let result = solve_isp(&sub, &embedding.subset(remaining), &cfg)?;
        picks.extend(result.final_selection.columns.iter().map(|&c| remaining[c]));
    }
    pad_by_coverage(incidence, remaining, &mut picks, batch);
    Ok(picks)
}

/// Successive item-selection rounds over the shrinking pool `items`.
/// `max_rounds` stops early; `None` runs until the pool is empty.
fn plan_rounds(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    items: &[usize],
    batch: usize,
    config: &IspConfig,
    max_rounds: Option<usize>,
) -> Result<Vec<Vec<usize>>> {
    if batch == 0 {
        return Err(Error::Config("batch must be at least 1".into()));
    }
    let mut remaining = items.to_vec();
    remaining.sort_unstable();
    let mut rounds = Vec::new();
    while !remaining.is_empty() && max_rounds.is_none_or(|m| rounds.len() < m) {
        let picks = isp_round(incidence, embedding, &remaining, batch, config, rounds.len() + 1)?;
        debug_assert!(!picks.is_empty());
        remaining.retain(|c| !picks.contains(c));
        rounds.push(picks);
    }
    Ok(rounds)
}

pub fn recursive_isp(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    batch: usize,
    config: &IspConfig,
) -> Result<ExplorationPlan> {
    embedding.ensure_aligned(&incidence.item_ids)?;
    let all: Vec<usize> = (0..incidence.n_cols()).collect();
    let rounds = plan_rounds(incidence, embedding, &all, batch, config, None)?
        .into_iter()
        .enumerate()
        .map(|(r, cols)| {
            let n = cols.len() as f64;
            let mut sel = Selection::from_columns(incidence, cols, n, false);
            sel.round = Some(r + 1);
            sel
        })
        .collect();
    let mut plan = ExplorationPlan {
        rounds,
        weights: BTreeMap::new(),
    };
    plan.weights = order_weights(&plan, WeightScheme::default());
    Ok(plan)
}

pub fn round_weight(round: usize, total_rounds: usize, scheme: WeightScheme) -> f64 {
    match scheme {
        WeightScheme::InverseRound => 1.0 / round as f64,
        WeightScheme::LinearDecay => (total_rounds - round + 1) as f64 / total_rounds as f64,
    }
}

pub fn order_weights(plan: &ExplorationPlan, scheme: WeightScheme) -> BTreeMap<String, f64> {
    let total = plan.rounds.len();
    let mut weights = BTreeMap::new();
    for (i, sel) in plan.rounds.iter().enumerate() {
        let round = sel.round.unwrap_or(i + 1);
        for id in &sel.item_ids {
            weights.insert(id.clone(), round_weight(round, total, scheme));
        }
    }
    weights
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmstartPicks {
    pub w: f64,
    pub item_ids: Vec<String>,
    /// Cold items newly brought within `w` of a warm item by each pick.
    pub gains: Vec<usize>,
}

/// Index-level greedy: `(pick, gain)` per step over embedding rows.
pub(crate) fn greedy_warmstart_indices(
    e: &EmbeddingMatrix,
    warm: &[usize],
    cold: &[usize],
    w: f64,
    batch: usize,
) -> Vec<(usize, usize)> {
    let mut cold = cold.to_vec();
    cold.sort_unstable();
    let n = cold.len();
    let (already, _) = match_cold(e, warm, &cold, w);
    let mut matched = vec![false; n];
    for (c, _, _) in already {
        matched[cold.binary_search(&c).expect("cold row")] = true;
    }
    let neighbours: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|a| (0..n).filter(|&b| b != a && e.distance(cold[a], cold[b]) <= w).collect())
        .collect();

    let mut picked = vec![false; n];
    let mut out = Vec::with_capacity(batch.min(n));
    for _ in 0..batch.min(n) {
        let mut best: Option<(usize, usize)> = None;
        for a in (0..n).filter(|&a| !picked[a]) {
            let gain = neighbours[a].iter().filter(|&&b| !picked[b] && !matched[b]).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((a, gain));
            }
        }
        let (a, gain) = best.expect("unpicked cold item");
        picked[a] = true;
        for &b in &neighbours[a] {
            matched[b] = true;
        }
        out.push((cold[a], gain));
    }
    out
}

/// Picks `batch` cold items, each time the one whose promotion warm-starts
/// the most still-unmatched cold items under the `q`-quantile threshold.
pub fn greedy_warmstart_policy(
    warm: &[String],
    cold: &[String],
    e: &EmbeddingMatrix,
    q: f64,
    batch: usize,
) -> Result<WarmstartPicks> {
    let w = resolve_threshold(e, q, DEFAULT_SAMPLE_CAP, THRESHOLD_SEED)?;
    let index: BTreeMap<&str, usize> = e.item_ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let lookup = |ids: &[String]| -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::UnknownItem(id.clone())))
            .collect()
    };
    let steps = greedy_warmstart_indices(e, &lookup(warm)?, &lookup(cold)?, w, batch);
    Ok(WarmstartPicks {
        w,
        item_ids: steps.iter().map(|&(i, _)| e.item_ids()[i].clone()).collect(),
        gains: steps.iter().map(|&(_, g)| g).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Uniform (or uncertainty-weighted) sample of cold items.
    Random,
    /// Day-0 selection over the whole item set, reused as-is.
    IspOneshot,
    /// First round of the recursive selection over the cold items.
    IspRecursive,
    /// Weighted sample using recursive-round order weights.
    IspOrderWeighted,
    /// Greedy maximization of warm-started cold items.
    GreedyWarmstart,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Random,
        Policy::IspOneshot,
        Policy::IspRecursive,
        Policy::IspOrderWeighted,
        Policy::GreedyWarmstart,
    ];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Random => "random",
            Policy::IspOneshot => "isp_oneshot",
            Policy::IspRecursive => "isp_recursive",
            Policy::IspOrderWeighted => "isp_order_weighted",
            Policy::GreedyWarmstart => "greedy_warmstart",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Items per repetition.
    #[serde(alias = "K")]
    pub total_items: usize,
    /// Initially warm items.
    #[serde(alias = "k")]
    pub warm_items: usize,
    #[serde(alias = "n")]
    pub repetitions: usize,
    /// Cold items explored in the single exploration period.
    pub batch: usize,
    #[serde(default = "all_policies")]
    pub policies: Vec<Policy>,
    pub q: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_scheme: WeightScheme,
    /// External per-item uncertainty multiplied into sampling weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<BTreeMap<String, f64>>,
    #[serde(default = "default_sample_cap")]
    pub sample_cap: usize,
    #[serde(default)]
    pub isp: IspConfig,
}

fn all_policies() -> Vec<Policy> {
    Policy::ALL.to_vec()
}

fn default_sample_cap() -> usize {
    DEFAULT_SAMPLE_CAP
}

impl SimulationConfig {
    pub fn validate(&self, catalog_size: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.total_items > catalog_size {
            return fail(format!(
                "total_items {} exceeds catalog size {catalog_size}",
                self.total_items
            ));
        }
        if self.warm_items >= self.total_items {
            return fail("warm_items must be below total_items".into());
        }
        if self.batch == 0 || self.batch > self.total_items - self.warm_items {
            return fail(format!(
                "batch must lie in 1..={}",
                self.total_items - self.warm_items
            ));
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if !(self.q.is_finite() && self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidQuantile(self.q));
        }
        if self.policies.is_empty() {
            return fail("no policies".into());
        }
        if self.sample_cap == 0 {
            return fail("sample_cap must be positive".into());
        }
        if let Some((id, u)) = self.uncertainty.as_ref().and_then(|m| m.iter().find(|(_, u)| !(**u > 0.0 && u.is_finite()))) {
            return fail(format!("uncertainty for `{id}` must be positive, got {u}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub policy: Policy,
    pub threshold: f64,
    pub warm_after: usize,
    pub warmstarted: usize,
    pub cold_subject: usize,
    pub success_ratio: f64,
    pub explored: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: Policy,
    pub mean_warm_after: f64,
    pub std_warm_after: f64,
    pub mean_warmstarted: f64,
    pub mean_success_ratio: f64,
    pub std_success_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub records: Vec<RepetitionRecord>,
    pub aggregates: Vec<PolicyAggregate>,
}

impl SimulationResult {
    pub fn aggregate(&self, policy: Policy) -> Option<&PolicyAggregate> {
        self.aggregates.iter().find(|a| a.policy == policy)
    }

    /// Aligned text table of policy vs. mean outcomes.
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<20} {:>16} {:>12} {:>14} {:>12}",
            "policy", "warm_after", "±sd", "success_ratio", "±sd"
        )
        .unwrap();
        for a in &self.aggregates {
            writeln!(
                out,
                "{:<20} {:>16.3} {:>12.3} {:>14.4} {:>12.4}",
                a.policy.to_string(),
                a.mean_warm_after,
                a.std_warm_after,
                a.mean_success_ratio,
                a.std_success_ratio
            )
            .unwrap();
        }
        out
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Weighted sample of `amount` items without replacement.
fn weighted_sample(rng: &mut ChaCha8Rng, items: &[usize], weights: &[f64], amount: usize) -> Result<Vec<usize>> {
    let pairs: Vec<(usize, f64)> = items.iter().copied().zip(weights.iter().copied()).collect();
    let mut out: Vec<usize> = pairs
        .choose_multiple_weighted(rng, amount, |p| p.1)
        .map_err(|e| Error::Config(format!("weighted sampling failed: {e}")))?
        .map(|p| p.0)
        .collect();
    out.sort_unstable();
    Ok(out)
}

struct Repetition<'a> {
    incidence: IncidenceMatrix,
    embedding: EmbeddingMatrix,
    warm: Vec<usize>,
    cold: Vec<usize>,
    threshold: f64,
    config: &'a SimulationConfig,
    isp: IspConfig,
}

impl Repetition<'_> {
    fn uncertainty(&self, items: &[usize]) -> Option<Vec<f64>> {
        let u = self.config.uncertainty.as_ref()?;
        Some(
            items
                .iter()
                .map(|&i| u.get(&self.incidence.item_ids[i]).copied().unwrap_or(1.0))
                .collect(),
        )
    }

    fn explore(&self, policy: Policy, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        let batch = self.config.batch;
        match policy {
            Policy::Random => match self.uncertainty(&self.cold) {
                Some(weights) => weighted_sample(rng, &self.cold, &weights, batch),
                None => {
                    let mut picks: Vec<usize> = index::sample(rng, self.cold.len(), batch)
                        .into_iter()
                        .map(|i| self.cold[i])
                        .collect();
                    picks.sort_unstable();
                    Ok(picks)
                }
            },
            Policy::IspOneshot => {
                let cfg = IspConfig {
                    t: Some(batch),
                    ..self.isp.clone()
                };
                let day0 = solve_isp(&self.incidence, &self.embedding, &cfg)?;
                let mut picks: Vec<usize> = day0
                    .final_selection
                    .columns
                    .into_iter()
                    .filter(|c| self.cold.binary_search(c).is_ok())
                    .collect();
                pad_by_coverage(&self.incidence, &self.cold, &mut picks, batch);
                Ok(picks)
            }
            Policy::IspRecursive => {
                let rounds = plan_rounds(&self.incidence, &self.embedding, &self.cold, batch, &self.isp, Some(1))?;
                Ok(rounds.into_iter().next().unwrap_or_default())
            }
            Policy::IspOrderWeighted => {
                let rounds = plan_rounds(&self.incidence, &self.embedding, &self.cold, batch, &self.isp, None)?;
                let total = rounds.len();
                let mut items = Vec::new();
                let mut weights = Vec::new();
                for (r, cols) in rounds.iter().enumerate() {
                    for &c in cols {
                        items.push(c);
                        weights.push(round_weight(r + 1, total, self.config.weight_scheme));
                    }
                }
                if let Some(u) = self.uncertainty(&items) {
                    weights.iter_mut().zip(u).for_each(|(w, u)| *w *= u);
                }
                weighted_sample(rng, &items, &weights, batch)
            }
            Policy::GreedyWarmstart => Ok(greedy_warmstart_indices(
                &self.embedding,
                &self.warm,
                &self.cold,
                self.threshold,
                batch,
            )
            .into_iter()
            .map(|(c, _)| c)
            .collect()),
        }
    }

    fn evaluate(&self, repetition: usize, policy: Policy, explored: Vec<usize>) -> RepetitionRecord {
        let mut warm = self.warm.clone();
        warm.extend(&explored);
        let cold: Vec<usize> = self.cold.iter().copied().filter(|c| !explored.contains(c)).collect();
        let (matched, _) = match_cold(&self.embedding, &warm, &cold, self.threshold);
        let warmstarted = matched.len();
        RepetitionRecord {
            repetition,
            policy,
            threshold: self.threshold,
            warm_after: warm.len() + warmstarted,
            warmstarted,
            cold_subject: cold.len(),
            success_ratio: if cold.is_empty() {
                1.0
            } else {
                warmstarted as f64 / cold.len() as f64
            },
            explored: explored.iter().map(|&c| self.incidence.item_ids[c].clone()).collect(),
        }
    }
}

fn run_repetition(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    config: &SimulationConfig,
    repetition: usize,
) -> Result<Vec<RepetitionRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(repetition as u64);

    let n = incidence.n_cols();
    let subset: Vec<usize> = if n > config.total_items {
        let mut s = index::sample(&mut rng, n, config.total_items).into_vec();
        s.sort_unstable();
        s
    } else {
        (0..n).collect()
    };
    let sub_inc = incidence.restrict(&subset);
    let sub_emb = embedding.subset(&subset);
    let mut warm = index::sample(&mut rng, subset.len(), config.warm_items).into_vec();
    warm.sort_unstable();
    let cold: Vec<usize> = (0..subset.len()).filter(|i| warm.binary_search(i).is_err()).collect();
    let threshold = quantile(&pair_distances(&sub_emb, config.sample_cap, rng.gen()), config.q);
    let policy_seed: u64 = rng.gen();

    let rep = Repetition {
        incidence: sub_inc,
        embedding: sub_emb,
        warm,
        cold,
        threshold,
        config,
        isp: IspConfig {
            seed: config.isp.seed.wrapping_add(repetition as u64),
            cost_multipliers: None,
            ..config.isp.clone()
        },
    };
    config
        .policies
        .iter()
        .map(|&policy| {
            let mut prng = ChaCha8Rng::seed_from_u64(policy_seed);
            let explored = rep.explore(policy, &mut prng)?;
            Ok(rep.evaluate(repetition, policy, explored))
        })
        .collect()
}

pub fn simulate(
    incidence: &IncidenceMatrix,
    embedding: &EmbeddingMatrix,
    config: &SimulationConfig,
) -> Result<SimulationResult> {
    embedding.ensure_aligned(&incidence.item_ids)?;
    config.validate(incidence.n_cols())?;
    let per_rep: Vec<Vec<RepetitionRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(incidence, embedding, config, r))
        .collect::<Result<_>>()?;
    let records: Vec<RepetitionRecord> = per_rep.into_iter().flatten().collect();

    let aggregates = config
        .policies
        .iter()
        .map(|&policy| {
            let rows = records.iter().filter(move |r| r.policy == policy);
            let (mean_warm_after, std_warm_after) = mean_std(rows.clone().map(|r| r.warm_after as f64));
            let (mean_success_ratio, std_success_ratio) = mean_std(rows.clone().map(|r| r.success_ratio));
            let (mean_warmstarted, _) = mean_std(rows.map(|r| r.warmstarted as f64));
            PolicyAggregate {
                policy,
                mean_warm_after,
                std_warm_after,
                mean_warmstarted,
                mean_success_ratio,
                std_success_ratio,
            }
        })
        .collect();
    Ok(SimulationResult { records, aggregates })
}
