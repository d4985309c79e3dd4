//! Depth-first branch and bound.
//!
//! Covers branch on the uncovered row with the fewest usable columns; each
//! branch takes one of those columns and forbids the ones tried before it,
//! so no cover is visited twice. Max-cover branches include/exclude on
//! columns in index order.

use std::cmp::Ordering;
use std::time::Duration;

use crate::bitset::BitSet;

use super::{Deadline, Problem};

struct CoverSearch<'a> {
    problem: &'a Problem,
    max_items: Option<usize>,
    unicost: bool,
    best: Option<Vec<usize>>,
    best_cost: f64,
    forbidden: Vec<bool>,
    deadline: Deadline,
    min_ratio: Vec<f64>,
    degree: Vec<u32>,
    gains: Vec<usize>,
    slack: Vec<f64>,
}

/// Minimum-cost cover (unit costs when `unicost`), at most `max_items`
/// columns. Returns the best cover found and whether it is proven optimal.
pub(crate) fn min_cover(
    problem: &Problem,
    incumbent: Vec<usize>,
    max_items: Option<usize>,
    unicost: bool,
    budget: Duration,
) -> (Vec<usize>, bool) {
    let fits = max_items.is_none_or(|m| incumbent.len() <= m);
    let mut search = CoverSearch {
        problem,
        max_items,
        unicost,
        best_cost: if fits { problem.cost_of(&incumbent) } else { f64::INFINITY },
        best: fits.then(|| incumbent.clone()),
        forbidden: dominated(problem, unicost),
        deadline: Deadline::new(budget),
        min_ratio: vec![f64::INFINITY; problem.n_rows],
        degree: vec![0; problem.n_rows],
        gains: vec![0; problem.columns.len()],
        slack: vec![0.0; problem.columns.len()],
    };
    let mut chosen = Vec::new();
    search.node(&BitSet::new(problem.n_rows), &mut chosen, 0.0);
    let optimal = !search.deadline.expired();
    match search.best {
        Some(mut best) => {
            best.sort_unstable();
            (best, optimal)
        }
        None => (incumbent, false),
    }
}

/// Columns that some other column covers a superset of at no greater cost.
/// Of two identical columns the later one is dropped.
fn dominated(problem: &Problem, unicost: bool) -> Vec<bool> {
    let n = problem.columns.len();
    let cost = |c: usize| if unicost { 1.0 } else { problem.costs[c] };
    let mut out = vec![false; n];
    for a in 0..n {
        for b in 0..n {
            if a == b || out[b] || !problem.sets[b].is_superset(&problem.sets[a]) {
                continue;
            }
            let same = problem.sets[a].is_superset(&problem.sets[b]);
            if cost(b) < cost(a) || (cost(b) == cost(a) && (!same || b < a)) {
                out[a] = true;
                break;
            }
        }
    }
    out
}

impl CoverSearch<'_> {
    /// Order in which the dual ascent visits the uncovered rows. A greedy
    /// set of rows with pairwise disjoint usable columns goes first, picked
    /// by fewest conflicting rows; the rest follow by degree.
    fn dual_order(&self, covered: &BitSet) -> Vec<usize> {
        let p = self.problem;
        let rows: Vec<usize> = (0..p.n_rows).filter(|&r| !covered.contains(r)).collect();
        let mut cols_of: Vec<BitSet> = vec![BitSet::new(p.columns.len()); p.n_rows];
        for c in (0..p.columns.len()).filter(|&c| self.gains[c] > 0) {
            for r in p.sets[c].difference_iter(covered) {
                cols_of[r].insert(c);
            }
        }
        let conflicts = |r: usize| rows.iter().filter(|&&s| s != r && cols_of[r].intersects(&cols_of[s])).count();
        let mut by_conflict: Vec<(usize, u32, usize)> = rows.iter().map(|&r| (conflicts(r), self.degree[r], r)).collect();
        by_conflict.sort_unstable();

        let mut claimed = BitSet::new(p.columns.len());
        let mut first = Vec::new();
        let mut rest = Vec::new();
        for (_, _, r) in by_conflict {
            if cols_of[r].intersects(&claimed) {
                rest.push(r);
            } else {
                claimed.union_with(&cols_of[r]);
                first.push(r);
            }
        }
        rest.sort_by_key(|&r| (self.degree[r], r));
        first.extend(rest);
        first
    }

    /// Dual ascent on the covering LP: each row in `order` takes the least
    /// slack left among its usable columns. The dual objective bounds the
    /// remaining cost from below.
    fn dual_bound(&mut self, order: &[usize], unit: bool) -> f64 {
        let p = self.problem;
        let usable: Vec<usize> = (0..p.columns.len()).filter(|&c| self.gains[c] > 0).collect();
        for &c in &usable {
            self.slack[c] = if unit { 1.0 } else { p.costs[c] };
        }
        let mut total = 0.0;
        for &r in order {
            let cols = || usable.iter().copied().filter(|&c| p.sets[c].contains(r));
            let u = cols().map(|c| self.slack[c]).fold(f64::INFINITY, f64::min);
            if u <= 0.0 {
                continue;
            }
            total += u;
            for c in cols() {
                self.slack[c] -= u;
            }
        }
        total
    }

    fn eps(&self) -> f64 {
        if self.best_cost.is_finite() {
            1e-9 * self.best_cost.abs().max(1.0)
        } else {
            0.0
        }
    }

    fn node(&mut self, covered: &BitSet, chosen: &mut Vec<usize>, cost: f64) {
        if self.deadline.tick() {
            return;
        }
        let p = self.problem;
        let uncovered = p.n_rows - covered.count();
        if uncovered == 0 {
            if cost < self.best_cost - self.eps() {
                self.best_cost = cost;
                self.best = Some(chosen.clone());
            }
            return;
        }
        if self.max_items.is_some_and(|m| chosen.len() >= m) {
            return;
        }

        self.min_ratio.iter_mut().for_each(|v| *v = f64::INFINITY);
        self.degree.iter_mut().for_each(|v| *v = 0);
        let mut max_gain = 0;
        for c in 0..p.columns.len() {
            self.gains[c] = 0;
            if self.forbidden[c] {
                continue;
            }
            let gain = p.sets[c].difference_count(covered);
            self.gains[c] = gain;
            if gain == 0 {
                continue;
            }
            max_gain = max_gain.max(gain);
            let ratio = p.costs[c] / gain as f64;
            for r in p.sets[c].difference_iter(covered) {
                self.degree[r] += 1;
                if ratio < self.min_ratio[r] {
                    self.min_ratio[r] = ratio;
                }
            }
        }
        if max_gain == 0 {
            return;
        }

        let mut ratio_bound = 0.0;
        let mut branch_row = None;
        let mut branch_degree = u32::MAX;
        for r in 0..p.n_rows {
            if covered.contains(r) {
                continue;
            }
            if self.degree[r] == 0 {
                return;
            }
            ratio_bound += self.min_ratio[r];
            if self.degree[r] < branch_degree {
                branch_degree = self.degree[r];
                branch_row = Some(r);
            }
        }
        let order = self.dual_order(covered);
        let dual = self.dual_bound(&order, self.unicost);
        let mut card_bound = chosen.len() + uncovered.div_ceil(max_gain);
        if self.unicost || self.max_items.is_some() {
            let unit_dual = if self.unicost { dual } else { self.dual_bound(&order, true) };
            card_bound = card_bound.max(chosen.len() + (unit_dual - 1e-9).ceil() as usize);
        }
        if self.max_items.is_some_and(|m| card_bound > m) {
            return;
        }
        let lower = if self.unicost {
            ((cost + ratio_bound - 1e-9).ceil()).max(card_bound as f64)
        } else {
            cost + ratio_bound.max(dual)
        };
        if lower >= self.best_cost - self.eps() {
            return;
        }

        let row = branch_row.expect("an uncovered row");
        let mut branches: Vec<(usize, f64)> = (0..p.columns.len())
            .filter(|&c| !self.forbidden[c] && p.sets[c].contains(row))
            .map(|c| (c, p.costs[c] / self.gains[c] as f64))
            .collect();
        branches.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

        for &(c, _) in &branches {
            let mut next = covered.clone();
            next.union_with(&p.sets[c]);
            chosen.push(c);
            self.node(&next, chosen, cost + p.costs[c]);
            chosen.pop();
            self.forbidden[c] = true;
            if self.deadline.expired() {
                break;
            }
        }
        for &(c, _) in &branches {
            self.forbidden[c] = false;
        }
    }
}

struct MaxCoverSearch<'a> {
    problem: &'a Problem,
    t: usize,
    best: Vec<usize>,
    best_covered: usize,
    deadline: Deadline,
}

/// Maximum rows covered by at most `t` columns.
pub(crate) fn max_cover(problem: &Problem, t: usize, incumbent: Vec<usize>, budget: Duration) -> (Vec<usize>, bool) {
    let best_covered = problem.union(&incumbent).count();
    let mut search = MaxCoverSearch {
        problem,
        t,
        best: incumbent,
        best_covered,
        deadline: Deadline::new(budget),
    };
    let mut chosen = Vec::new();
    search.node(0, &mut chosen, &BitSet::new(problem.n_rows));
    (search.best, !search.deadline.expired())
}

impl MaxCoverSearch<'_> {
    fn node(&mut self, pos: usize, chosen: &mut Vec<usize>, covered: &BitSet) {
        if self.deadline.tick() {
            return;
        }
        let covered_count = covered.count();
        if covered_count > self.best_covered {
            self.best_covered = covered_count;
            self.best = chosen.clone();
        }
        let p = self.problem;
        if chosen.len() == self.t || pos == p.columns.len() || covered_count == p.n_rows {
            return;
        }
        let mut gains: Vec<usize> = p.sets[pos..].iter().map(|s| s.difference_count(covered)).collect();
        let slots = (self.t - chosen.len()).min(gains.len());
        if slots < gains.len() {
            gains.select_nth_unstable_by(slots - 1, |a, b| b.cmp(a));
        }
        let upper = covered_count + gains[..slots].iter().sum::<usize>();
        if upper <= self.best_covered {
            return;
        }
        if p.sets[pos].difference_count(covered) > 0 {
            let mut next = covered.clone();
            next.union_with(&p.sets[pos]);
            chosen.push(pos);
            self.node(pos + 1, chosen, &next);
            chosen.pop();
        }
        self.node(pos + 1, chosen, covered);
    }
}
