//! Seeded k-means++ / Lloyd clustering.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansParams {
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub k: usize,
    pub d: usize,
    pub seed: u64,
    /// Sum of squared distances to the assigned centroid after the last step.
    pub inertia: f64,
    /// Inertia at every assignment step, in order.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub centroids: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn from_centroids(centroids: Vec<Vec<f64>>) -> Result<Self> {
        let d = centroids.first().map_or(0, Vec::len);
        if d == 0 || centroids.iter().any(|c| c.len() != d || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Format { what: "codebook", reason: "centroids must be non-empty, finite and of equal length".into() });
        }
        Ok(Self { k: centroids.len(), d, seed: 0, inertia: 0.0, inertia_history: Vec::new(), iterations: 0, centroids })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.centroids.len() != self.k || self.centroids.iter().any(|c| c.len() != self.d || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Format { what: "codebook", reason: format!("expected {} finite centroids of dimension {}", self.k, self.d) });
        }
        Ok(())
    }

    /// Nearest centroid and its squared distance; ties go to the lower index.
    pub fn nearest(&self, x: &[f32]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }
}

#[inline]
fn sq_dist(x: &[f32], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(&a, &b)| (a as f64 - b) * (a as f64 - b)).sum()
}

fn check_data(data: &[f32], d: usize) -> Result<usize> {
    if d == 0 || data.len() % d != 0 {
        return Err(Error::DimensionMismatch { left: (data.len(), 1), right: (d, 1) });
    }
    Ok(data.len() / d)
}

/// Nearest-centroid ids for the rows of `data` (row-major, `cb.d` columns).
pub fn assign_clusters(data: &[f32], d: usize, cb: &Codebook) -> Result<Vec<usize>> {
    if d != cb.d {
        return Err(Error::DimensionMismatch { left: (d, 1), right: (cb.d, 1) });
    }
    check_data(data, d)?;
    Ok(data.par_chunks_exact(d).map(|x| cb.nearest(x).0).collect())
}

fn plus_plus_init(data: &[f32], d: usize, n: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let row = |i: usize| &data[i * d..(i + 1) * d];
    let to_f64 = |i: usize| row(i).iter().map(|&v| v as f64).collect::<Vec<f64>>();
    let mut centroids = vec![to_f64(rng.gen_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total")
        } else {
            rng.gen_range(0..n)
        };
        let c = to_f64(pick);
        d2.par_iter_mut().enumerate().for_each(|(i, v)| *v = v.min(sq_dist(row(i), &c)));
        centroids.push(c);
    }
    centroids
}

/// k-means++ seeding followed by Lloyd iterations. Deterministic in
/// `(data, k, seed)`; the assignment step runs in parallel, centroid sums are
/// accumulated sequentially in row order.
pub fn kmeans_fit(data: &[f32], d: usize, k: usize, seed: u64, params: &KmeansParams) -> Result<Codebook> {
    let n = check_data(data, d)?;
    if k == 0 {
        return Err(Error::param("k must be >= 1"));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{n} points cannot form {k} clusters")));
    }
    let mut rng = seed::rng(seed);
    let mut cb = Codebook { k, d, seed, inertia: 0.0, inertia_history: Vec::new(), iterations: 0, centroids: plus_plus_init(data, d, n, k, &mut rng) };

    let assign = |cb: &Codebook| -> Vec<(usize, f64)> { data.par_chunks_exact(d).map(|x| cb.nearest(x)).collect() };
    let mut labels = assign(&cb);
    cb.inertia_history.push(labels.iter().map(|l| l.1).sum());

    for _ in 0..params.max_iter {
        cb.iterations += 1;
        let mut sums = vec![vec![0f64; d]; k];
        let mut counts = vec![0usize; k];
        for (x, &(j, _)) in data.chunks_exact(d).zip(&labels) {
            counts[j] += 1;
            for (s, &v) in sums[j].iter_mut().zip(x) {
                *s += v as f64;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&cb.centroids)
            .map(|((s, &c), old)| if c > 0 { s.into_iter().map(|v| v / c as f64).collect() } else { old.clone() })
            .collect();

        // an empty cluster takes over the point worst served by its own centroid
        let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        if !empty.is_empty() {
            let mut far: Vec<(f64, usize)> = data.chunks_exact(d).zip(&labels).enumerate().map(|(i, (x, &(j, _)))| (sq_dist(x, &next[j]), i)).collect();
            far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (&j, &(dist, i)) in empty.iter().zip(&far) {
                if dist > 0.0 {
                    next[j] = data[i * d..(i + 1) * d].iter().map(|&v| v as f64).collect();
                }
            }
        }

        let shift = cb.centroids.iter().zip(&next).map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()).fold(0.0, f64::max);
        cb.centroids = next;
        labels = assign(&cb);
        cb.inertia_history.push(labels.iter().map(|l| l.1).sum());
        if shift < params.tol {
            break;
        }
    }
    cb.inertia = *cb.inertia_history.last().expect("at least one assignment");
    Ok(cb)
}
