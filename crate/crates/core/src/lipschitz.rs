//! Neighborhood graphs and the empirical manifold-gradient-norm estimator.
//!
//! The gradient norm at a sample is estimated by the steepest finite
//! difference over its neighborhood,
//! `‖∇f(xᵢ)‖ ≈ max_{z ∈ N(xᵢ)} ‖f(xᵢ) − f(z)‖ / d(xᵢ, z)`,
//! and the estimated Lipschitz constant L̂ is the largest such value over all
//! samples. Neighborhoods come from either a metric ball of radius δ or a
//! k-nearest-neighbor rule; the ambient Euclidean distance stands in for the
//! manifold distance at neighborhood scale.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Neighborhood construction rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodRule {
    /// All points within distance δ.
    Epsilon {
        /// Ball radius δ > 0.
        delta: f64,
    },
    /// The k nearest points (not symmetrized).
    Knn {
        /// Neighbor count, clamped to n−1.
        k: usize,
    },
}

impl Default for NeighborhoodRule {
    fn default() -> Self {
        NeighborhoodRule::Knn { k: 8 }
    }
}

/// Distance metric for neighborhood construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Straight-line ambient distance.
    #[default]
    Euclidean,
}

/// Per-point neighbor lists with distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhoods {
    /// Per-point `(neighbor index, distance)` pairs.
    lists: Vec<Vec<(usize, f64)>>,
    /// The rule the lists were built under.
    pub rule: NeighborhoodRule,
    /// The metric distances were measured in.
    pub metric: Metric,
}

/// Per-point gradient-norm estimates with their maximizing neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct GradNormEstimate {
    /// Estimated `‖∇f(xᵢ)‖ ≥ 0` per point.
    pub values: Vec<f64>,
    /// Index of the neighbor attaining each maximum (ties: lowest index).
    pub argmax: Vec<usize>,
}

impl Neighborhoods {
    /// Number of points.
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    /// True when there are no points.
    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// `(neighbor, distance)` pairs of point `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.lists[i]
    }
}

/// Build neighbor lists over a point cloud (`n` points of dimension `dim`,
/// row-major).
///
/// Under the ε rule each list holds every other point within δ (symmetric by
/// construction) and an empty list is an error naming the isolated point.
/// Under the knn rule each list holds the `min(k, n−1)` nearest others,
/// ordered by distance (ties by index), without symmetrization. Exact
/// duplicate points (distance zero) are never neighbors — a finite-difference
/// ratio needs a positive baseline.
pub fn build_neighborhoods(
    points: &[f64],
    dim: usize,
    rule: NeighborhoodRule,
    metric: Metric,
) -> Result<Neighborhoods> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::invalid(format!(
            "point buffer length {} is not a multiple of dimension {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 points, got {n}")));
    }
    match rule {
        NeighborhoodRule::Epsilon { delta } if !(delta > 0.0) => {
            return Err(Error::invalid(format!("δ must be positive, got {delta}")))
        }
        NeighborhoodRule::Knn { k: 0 } => {
            return Err(Error::invalid("k must be at least 1"));
        }
        _ => {}
    }
    let dist = |i: usize, j: usize| -> f64 {
        let a = &points[i * dim..(i + 1) * dim];
        let b = &points[j * dim..(j + 1) * dim];
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut lists = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = Vec::new();
        match rule {
            NeighborhoodRule::Epsilon { delta } => {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let d = dist(i, j);
                    if d > 0.0 && d <= delta {
                        row.push((j, d));
                    }
                }
                if row.is_empty() {
                    return Err(Error::IsolatedPoint { index: i });
                }
            }
            NeighborhoodRule::Knn { k } => {
                let mut candidates: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, dist(i, j)))
                    .filter(|&(_, d)| d > 0.0)
                    .collect();
                candidates.sort_by(|a, b| {
                    a.1.partial_cmp(&b.1)
                        .expect("finite distances")
                        .then(a.0.cmp(&b.0))
                });
                candidates.truncate(k.min(n - 1));
                if candidates.is_empty() {
                    return Err(Error::IsolatedPoint { index: i });
                }
                row = candidates;
            }
        }
        lists.push(row);
    }
    Ok(Neighborhoods {
        lists,
        rule,
        metric,
    })
}

/// Estimate gradient norms for scalar per-point values.
pub fn grad_norm_estimates(f_values: &[f64], nbrs: &Neighborhoods) -> Result<GradNormEstimate> {
    grad_norm_estimates_multi(f_values, 1, nbrs)
}

/// Estimate gradient norms for vector-valued outputs (`d_out` per point,
/// row-major): `max_z ‖f(xᵢ) − f(z)‖₂ / d(xᵢ, z)`.
///
/// Ties in the maximum are broken toward the lowest neighbor index.
pub fn grad_norm_estimates_multi(
    f_values: &[f64],
    d_out: usize,
    nbrs: &Neighborhoods,
) -> Result<GradNormEstimate> {
    let n = nbrs.len();
    if d_out == 0 || f_values.len() != n * d_out {
        return Err(Error::invalid(format!(
            "got {} output values for {n} points with {d_out} outputs each",
            f_values.len()
        )));
    }
    let mut values = vec![0.0; n];
    let mut argmax = vec![0usize; n];
    for i in 0..n {
        let fi = &f_values[i * d_out..(i + 1) * d_out];
        let mut best = -1.0;
        let mut best_j = usize::MAX;
        for &(j, d) in nbrs.neighbors(i) {
            let fj = &f_values[j * d_out..(j + 1) * d_out];
            let diff: f64 = fi
                .iter()
                .zip(fj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let ratio = diff / d;
            if ratio > best || (ratio == best && j < best_j) {
                best = ratio;
                best_j = j;
            }
        }
        values[i] = best.max(0.0);
        argmax[i] = best_j;
    }
    Ok(GradNormEstimate { values, argmax })
}

/// Collapse per-point estimates to `(ρ̂, L̂)`: ρ̂ is the largest squared
/// estimate, L̂ = √ρ̂ the estimated Lipschitz constant.
pub fn max_grad_norm(est: &GradNormEstimate) -> Result<(f64, f64)> {
    if est.values.is_empty() {
        return Err(Error::invalid("cannot take the maximum of an empty estimate"));
    }
    let l_hat = est.values.iter().cloned().fold(0.0, f64::max);
    Ok((l_hat * l_hat, l_hat))
}
