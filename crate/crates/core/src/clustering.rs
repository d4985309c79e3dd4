//! Seeded k-means and nearest-centroid diversity costs.
//!
//! Under the euclidean metric this is plain Lloyd on squared distances.
//! Under cosine the rows are unit-normalized and centroids re-normalized
//! after each update (spherical k-means), which minimizes the summed cosine
//! distance the same way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingMatrix, Metric};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub metric: Metric,
    pub centroids: Vec<Vec<f64>>,
    /// Item index → cluster index.
    pub assignments: Vec<usize>,
    /// Sum of squared euclidean distances, or of cosine distances.
    pub inertia: f64,
    /// Inertia after every update step, then after the final assignment.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

struct Points {
    rows: Vec<Vec<f64>>,
    spherical: bool,
}

impl Points {
    fn new(e: &EmbeddingMatrix) -> Self {
        let spherical = e.metric() == Metric::Cosine;
        let rows = (0..e.len())
            .map(|i| {
                let mut v = e.row(i).to_vec();
                if spherical {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                v
            })
            .collect();
        Points { rows, spherical }
    }

    /// Reported inertia: squared distance, or cosine distance on the sphere.
    fn inertia(&self, centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
        let total: f64 = self
            .rows
            .iter()
            .zip(assignments)
            .map(|(x, &a)| sq_dist(x, &centroids[a]))
            .sum();
        if self.spherical {
            total / 2.0
        } else {
            total
        }
    }

    fn assign(&self, centroids: &[Vec<f64>]) -> Vec<usize> {
        self.rows.par_iter().map(|x| nearest(x, centroids).0).collect()
    }
}

fn kmeans_plus_plus(points: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.rows.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points.rows[first].clone()];
    let mut d2: Vec<f64> = points.rows.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive weight"))
        } else {
            chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        let c = points.rows[pick].clone();
        for (x, d) in points.rows.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(points: &Points, centroids: &mut [Vec<f64>], assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    let mut repaired = false;
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, x) in points.rows.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = sq_dist(x, &centroids[a]);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let Some((i, _)) = far else { break };
        sizes[assignments[i]] -= 1;
        assignments[i] = j;
        sizes[j] = 1;
        centroids[j] = points.rows[i].clone();
        repaired = true;
    }
    repaired
}

fn update(points: &Points, centroids: &mut [Vec<f64>], assignments: &[usize]) {
    let dim = points.rows[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    // fixed item order keeps the floating-point reduction deterministic
    for (x, &a) in points.rows.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(x) {
            *s += v;
        }
    }
    for ((c, mut s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        if n == 0 {
            continue;
        }
        s.iter_mut().for_each(|v| *v /= n as f64);
        if points.spherical {
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            s.iter_mut().for_each(|v| *v /= norm);
        }
        *c = s;
    }
}

pub fn kmeans(e: &EmbeddingMatrix, k: usize, seed: u64, max_iters: usize) -> Result<ClusterModel> {
    let n = e.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be positive".into()));
    }
    let points = Points::new(e);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(&points, k, &mut rng);

    let mut assignments = points.assign(&centroids);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        repair_empty(&points, &mut centroids, &mut assignments);
        update(&points, &mut centroids, &assignments);
        trace.push(points.inertia(&centroids, &assignments));
        let next = points.assign(&centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    if repair_empty(&points, &mut centroids, &mut assignments) {
        assignments = points.assign(&centroids);
    }
    let inertia = points.inertia(&centroids, &assignments);
    trace.push(inertia);

    Ok(ClusterModel {
        k,
        metric: e.metric(),
        centroids,
        assignments,
        inertia,
        inertia_trace: trace,
        iterations,
        converged,
    })
}

/// Distance from each item to its nearest centroid, under the embedding's metric.
pub fn diversity_costs(e: &EmbeddingMatrix, model: &ClusterModel) -> Result<Vec<f64>> {
    if model.dim() != e.dim() {
        return Err(Error::DimMismatch {
            expected: e.dim(),
            found: model.dim(),
        });
    }
    let metric = e.metric();
    Ok((0..e.len())
        .into_par_iter()
        .map(|i| {
            model
                .centroids
                .iter()
                .map(|c| metric.distance(e.row(i), c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}
