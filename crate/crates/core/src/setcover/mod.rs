//! Covering formulations over an [`IncidenceMatrix`]: unicost set cover,
//! cost-weighted set cover, and bounded maximum coverage.
//!
//! Every formulation has a greedy backend and an exact branch-and-bound
//! backend. Ties are broken by lower column index throughout, so a fixed
//! instance always yields the same [`Selection`].

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::catalog::{IncidenceMatrix, Label};
use crate::error::{Error, Result};

mod exact;
mod greedy;

/// Instances with at most this many `rows × candidates` cells use the exact
/// backend under [`Backend::Auto`].
pub const AUTO_EXACT_MAX_CELLS: usize = 5_000;

pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Greedy,
    Exact,
    #[default]
    Auto,
}

impl Backend {
    fn resolve(self, cells: usize) -> Backend {
        match self {
            Backend::Auto if cells <= AUTO_EXACT_MAX_CELLS => Backend::Exact,
            Backend::Auto => Backend::Greedy,
            b => b,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Greedy => "greedy",
            Backend::Exact => "exact",
            Backend::Auto => "auto",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Backend::Greedy),
            "exact" => Ok(Backend::Exact),
            "auto" => Ok(Backend::Auto),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverInstance<'a> {
    pub incidence: &'a IncidenceMatrix,
    /// Per-column cost; `None` means unicost.
    pub costs: Option<Vec<f64>>,
    /// Restricts the usable columns; `None` means all columns.
    pub candidate_columns: Option<Vec<usize>>,
}

impl<'a> CoverInstance<'a> {
    pub fn unicost(incidence: &'a IncidenceMatrix) -> Self {
        CoverInstance {
            incidence,
            costs: None,
            candidate_columns: None,
        }
    }

    pub fn weighted(incidence: &'a IncidenceMatrix, costs: Vec<f64>) -> Self {
        CoverInstance {
            incidence,
            costs: Some(costs),
            candidate_columns: None,
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<usize>) -> Self {
        self.candidate_columns = Some(candidates);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.incidence.n_cols();
        if let Some(costs) = &self.costs {
            if costs.len() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    found: costs.len(),
                });
            }
            if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::Config(format!("column cost {c} is not a non-negative number")));
            }
        }
        if let Some(cands) = &self.candidate_columns {
            if cands.is_empty() {
                return Err(Error::Config("candidate column set is empty".into()));
            }
            if let Some(c) = cands.iter().find(|&&c| c >= n) {
                return Err(Error::Config(format!("candidate column {c} out of range")));
            }
        }
        Ok(())
    }
}

/// Column-restricted view the backends work on. Candidate position `p`
/// refers to global column `columns[p]`; positions ascend with column index.
pub(crate) struct Problem {
    pub n_rows: usize,
    pub columns: Vec<usize>,
    pub sets: Vec<BitSet>,
    pub costs: Vec<f64>,
}

impl Problem {
    fn new(instance: &CoverInstance<'_>) -> Result<Self> {
        instance.validate()?;
        let m = instance.incidence;
        let mut columns = match &instance.candidate_columns {
            Some(c) => c.clone(),
            None => (0..m.n_cols()).collect(),
        };
        columns.sort_unstable();
        columns.dedup();
        let sets = columns
            .iter()
            .map(|&c| BitSet::from_indices(m.n_rows(), m.columns[c].iter().copied()))
            .collect();
        let costs = columns
            .iter()
            .map(|&c| instance.costs.as_ref().map_or(1.0, |costs| costs[c]))
            .collect();
        Ok(Problem {
            n_rows: m.n_rows(),
            columns,
            sets,
            costs,
        })
    }

    fn cells(&self) -> usize {
        self.n_rows * self.columns.len()
    }

    fn union(&self, positions: &[usize]) -> BitSet {
        let mut u = BitSet::new(self.n_rows);
        for &p in positions {
            u.union_with(&self.sets[p]);
        }
        u
    }

    fn ensure_feasible(&self) -> Result<()> {
        let all: Vec<usize> = (0..self.columns.len()).collect();
        let missing = self.n_rows - self.union(&all).count();
        if missing > 0 {
            Err(Error::Infeasible(missing))
        } else {
            Ok(())
        }
    }

    fn cost_of(&self, positions: &[usize]) -> f64 {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|&p| self.costs[p]).sum()
    }

    fn position_of(&self, column: usize) -> Option<usize> {
        self.columns.binary_search(&column).ok()
    }
}

/// Wall-clock budget shared by a branch-and-bound run.
pub(crate) struct Deadline {
    start: Instant,
    budget: Duration,
    nodes: u64,
    expired: bool,
}

impl Deadline {
    pub fn new(budget: Duration) -> Self {
        Deadline {
            start: Instant::now(),
            budget,
            nodes: 0,
            expired: false,
        }
    }

    /// Counts a node; the clock is only read every 256 nodes.
    #[inline]
    pub fn tick(&mut self) -> bool {
        self.nodes += 1;
        if !self.expired && self.nodes.is_multiple_of(256) && self.start.elapsed() > self.budget {
            self.expired = true;
        }
        self.expired
    }

    pub fn expired(&self) -> bool {
        self.expired
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub item_ids: Vec<String>,
    /// Column indices into the incidence matrix the selection was solved on.
    pub columns: Vec<usize>,
    /// Item count, total cost, or covered rows depending on the formulation.
    pub objective: f64,
    pub covered_rows: usize,
    /// False when the exact backend hit its time budget or a greedy backend ran.
    pub optimal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_item_weight: Option<Vec<f64>>,
}

impl Selection {
    pub(crate) fn from_positions(
        problem: &Problem,
        incidence: &IncidenceMatrix,
        positions: &[usize],
        objective: f64,
        optimal: bool,
    ) -> Self {
        let columns: Vec<usize> = positions.iter().map(|&p| problem.columns[p]).collect();
        Selection::from_columns(incidence, columns, objective, optimal)
    }

    pub fn from_columns(incidence: &IncidenceMatrix, columns: Vec<usize>, objective: f64, optimal: bool) -> Self {
        Selection {
            item_ids: columns.iter().map(|&c| incidence.item_ids[c].clone()).collect(),
            covered_rows: incidence.union_count(columns.iter().copied()),
            columns,
            objective,
            optimal,
            round: None,
            per_item_weight: None,
        }
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }
}

/// Extra constraints for the weighted cover.
#[derive(Debug, Clone, Default)]
pub struct CoverOptions {
    /// Upper bound on the number of selected columns.
    pub max_items: Option<usize>,
    /// A known feasible cover (global column indices) used as the starting
    /// incumbent and as the fallback when the greedy result breaks `max_items`.
    pub incumbent: Option<Vec<usize>>,
}

pub fn solve_unicost(instance: &CoverInstance<'_>, backend: Backend, time_budget: Duration) -> Result<Selection> {
    if instance.costs.is_some() {
        return Err(Error::Config("unicost cover given explicit costs".into()));
    }
    let problem = Problem::new(instance)?;
    problem.ensure_feasible()?;
    let greedy = greedy::unicost(&problem);
    let (positions, optimal) = match backend.resolve(problem.cells()) {
        Backend::Exact => exact::min_cover(&problem, greedy, None, true, time_budget),
        _ => (greedy, false),
    };
    let objective = positions.len() as f64;
    Ok(Selection::from_positions(&problem, instance.incidence, &positions, objective, optimal))
}

pub fn solve_weighted(instance: &CoverInstance<'_>, backend: Backend, time_budget: Duration) -> Result<Selection> {
    solve_weighted_with(instance, backend, time_budget, &CoverOptions::default())
}

pub fn solve_weighted_with(
    instance: &CoverInstance<'_>,
    backend: Backend,
    time_budget: Duration,
    options: &CoverOptions,
) -> Result<Selection> {
    if instance.costs.is_none() {
        return Err(Error::Config("weighted cover needs costs".into()));
    }
    let problem = Problem::new(instance)?;
    problem.ensure_feasible()?;

    let incumbent = match &options.incumbent {
        Some(cols) => {
            let positions = cols
                .iter()
                .map(|&c| problem.position_of(c))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Config("incumbent uses a non-candidate column".into()))?;
            if problem.union(&positions).count() != problem.n_rows {
                return Err(Error::Config("incumbent is not a cover".into()));
            }
            Some(positions)
        }
        None => None,
    };

    let mut start = greedy::weighted(&problem);
    if let Some(max) = options.max_items {
        if start.len() > max {
            greedy::drop_redundant(&problem, &mut start);
        }
        if start.len() > max {
            let mut base = incumbent.clone().unwrap_or_else(|| greedy::unicost(&problem));
            greedy::improve_by_swaps(&problem, &mut base);
            start = base;
        }
    } else if let Some(inc) = &incumbent {
        if problem.cost_of(inc) < problem.cost_of(&start) {
            start = inc.clone();
        }
    }

    let (positions, optimal) = match backend.resolve(problem.cells()) {
        Backend::Exact => exact::min_cover(&problem, start, options.max_items, false, time_budget),
        _ => (start, false),
    };
    let objective = problem.cost_of(&positions);
    Ok(Selection::from_positions(&problem, instance.incidence, &positions, objective, optimal))
}

pub fn solve_max_cover(
    instance: &CoverInstance<'_>,
    t: usize,
    backend: Backend,
    time_budget: Duration,
) -> Result<Selection> {
    if t == 0 {
        return Err(Error::Config("max-cover bound t must be at least 1".into()));
    }
    let problem = Problem::new(instance)?;
    if t >= problem.columns.len() {
        let all: Vec<usize> = (0..problem.columns.len()).collect();
        let covered = problem.union(&all).count();
        return Ok(Selection::from_positions(&problem, instance.incidence, &all, covered as f64, true));
    }
    let greedy = greedy::max_cover(&problem, t);
    let (positions, optimal) = match backend.resolve(problem.cells()) {
        Backend::Exact => exact::max_cover(&problem, t, greedy, time_budget),
        _ => (greedy, false),
    };
    let covered = problem.union(&positions).count();
    Ok(Selection::from_positions(&problem, instance.incidence, &positions, covered as f64, optimal))
}

/// JSON debug dump of a cover instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub rows: Vec<Label>,
    pub columns: Vec<ColumnDump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDump {
    pub id: String,
    pub rows: Vec<usize>,
}

impl InstanceFile {
    pub fn from_instance(instance: &CoverInstance<'_>) -> Self {
        let m = instance.incidence;
        InstanceFile {
            rows: m.labels.clone(),
            columns: m
                .item_ids
                .iter()
                .zip(&m.columns)
                .map(|(id, rows)| ColumnDump {
                    id: id.clone(),
                    rows: rows.clone(),
                })
                .collect(),
            costs: instance.costs.clone(),
            candidates: instance.candidate_columns.clone(),
        }
    }

    pub fn incidence(&self) -> Result<IncidenceMatrix> {
        let mut rows: std::collections::BTreeMap<Label, Vec<usize>> =
            self.rows.iter().map(|l| (l.clone(), Vec::new())).collect();
        if rows.len() != self.rows.len() {
            return Err(Error::Config("duplicate row label in instance".into()));
        }
        for (c, col) in self.columns.iter().enumerate() {
            for &r in &col.rows {
                let label = self
                    .rows
                    .get(r)
                    .ok_or_else(|| Error::Config(format!("column `{}` names row {r} out of range", col.id)))?;
                rows.get_mut(label).expect("row").push(c);
            }
        }
        Ok(IncidenceMatrix::from_rows(
            rows,
            self.columns.iter().map(|c| c.id.clone()).collect(),
            Vec::new(),
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display(), e.line(), e.to_string()))
    }
}
