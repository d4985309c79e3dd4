use std::cmp::Ordering;

use crate::bitset::BitSet;

use super::Problem;

/// Chvátal's rule: repeatedly take the column covering the most uncovered rows.
pub(crate) fn unicost(problem: &Problem) -> Vec<usize> {
    let mut covered = BitSet::new(problem.n_rows);
    let mut picked = Vec::new();
    while covered.count() < problem.n_rows {
        let mut best: Option<(usize, usize)> = None;
        for (p, set) in problem.sets.iter().enumerate() {
            let gain = set.difference_count(&covered);
            if gain > best.map_or(0, |b| b.1) {
                best = Some((p, gain));
            }
        }
        let Some((p, _)) = best else { break };
        covered.union_with(&problem.sets[p]);
        picked.push(p);
    }
    picked
}

/// Cheapest cost per newly covered row; ties go to lower cost, then lower index.
pub(crate) fn weighted(problem: &Problem) -> Vec<usize> {
    let mut covered = BitSet::new(problem.n_rows);
    let mut picked = Vec::new();
    while covered.count() < problem.n_rows {
        let mut best: Option<(usize, usize)> = None;
        for (p, set) in problem.sets.iter().enumerate() {
            let gain = set.difference_count(&covered);
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((q, qgain)) => {
                    // cost_p / gain_p < cost_q / gain_q, cross-multiplied
                    let lhs = problem.costs[p] * qgain as f64;
                    let rhs = problem.costs[q] * gain as f64;
                    match lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal) {
                        Ordering::Less => true,
                        Ordering::Equal => problem.costs[p] < problem.costs[q],
                        Ordering::Greater => false,
                    }
                }
            };
            if better {
                best = Some((p, gain));
            }
        }
        let Some((p, _)) = best else { break };
        covered.union_with(&problem.sets[p]);
        picked.push(p);
    }
    picked
}

/// Removes columns whose rows are all covered by the rest, most expensive first.
pub(crate) fn drop_redundant(problem: &Problem, picked: &mut Vec<usize>) {
    let mut counts = row_counts(problem, picked);
    let mut order: Vec<usize> = picked.clone();
    order.sort_by(|&a, &b| {
        problem.costs[b]
            .partial_cmp(&problem.costs[a])
            .unwrap_or(Ordering::Equal)
            .then(b.cmp(&a))
    });
    for p in order {
        if problem.sets[p].iter().all(|r| counts[r] > 1) {
            for r in problem.sets[p].iter() {
                counts[r] -= 1;
            }
            picked.retain(|&q| q != p);
        }
    }
}

/// One-for-one swaps that keep the cover feasible and lower its cost.
/// The selection size never grows.
pub(crate) fn improve_by_swaps(problem: &Problem, picked: &mut Vec<usize>) {
    drop_redundant(problem, picked);
    let mut by_cost: Vec<usize> = (0..problem.columns.len()).collect();
    by_cost.sort_by(|&a, &b| {
        problem.costs[a]
            .partial_cmp(&problem.costs[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    loop {
        let counts = row_counts(problem, picked);
        let mut in_sel = vec![false; problem.columns.len()];
        for &p in picked.iter() {
            in_sel[p] = true;
        }
        let mut swapped = false;
        for slot in picked.iter_mut() {
            let out = *slot;
            let unique = BitSet::from_indices(problem.n_rows, problem.sets[out].iter().filter(|&r| counts[r] == 1));
            let replacement = by_cost
                .iter()
                .copied()
                .take_while(|&c| problem.costs[c] < problem.costs[out])
                .find(|&c| !in_sel[c] && problem.sets[c].is_superset(&unique));
            if let Some(c) = replacement {
                *slot = c;
                swapped = true;
                break;
            }
        }
        if !swapped {
            break;
        }
        drop_redundant(problem, picked);
    }
}

/// Marginal-gain greedy for coverage under a cardinality bound; stops early
/// once no column adds a row.
pub(crate) fn max_cover(problem: &Problem, t: usize) -> Vec<usize> {
    let mut covered = BitSet::new(problem.n_rows);
    let mut picked = Vec::new();
    while picked.len() < t {
        let mut best: Option<(usize, usize)> = None;
        for (p, set) in problem.sets.iter().enumerate() {
            let gain = set.difference_count(&covered);
            if gain > best.map_or(0, |b| b.1) {
                best = Some((p, gain));
            }
        }
        let Some((p, _)) = best else { break };
        covered.union_with(&problem.sets[p]);
        picked.push(p);
    }
    picked
}

fn row_counts(problem: &Problem, picked: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; problem.n_rows];
    for &p in picked {
        for r in problem.sets[p].iter() {
            counts[r] += 1;
        }
    }
    counts
}
