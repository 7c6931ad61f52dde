//! Lloyd's algorithm with k-means++ seeding.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media_io::DescriptorSet;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// `k * dim` row-major centroids.
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

impl KmeansResult {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
#[inline]
pub fn nearest(centroids: &[f64], dim: usize, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(c, x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn count_distinct(points: &DescriptorSet, limit: usize) -> usize {
    let mut seen: Vec<&[f64]> = Vec::new();
    for row in points.rows() {
        if !seen.iter().any(|s| *s == row) {
            seen.push(row);
            if seen.len() >= limit {
                break;
            }
        }
    }
    seen.len()
}

/// k-means++ seeding: the first center uniformly, each next one with
/// probability proportional to the squared distance to the nearest chosen.
fn seed_centroids(points: &DescriptorSet, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let (n, dim) = (points.len(), points.dim());
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = points
        .rows()
        .map(|r| squared_distance(r, &centroids[..dim]))
        .collect();
    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let i = pick.expect("distinct points were counted beforehand");
        let c = points.row(i).to_vec();
        for (j, r) in points.rows().enumerate() {
            d2[j] = d2[j].min(squared_distance(r, &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Clusters `points` into `k` groups.
///
/// Stops after `max_iter` assignment steps or once an assignment step
/// changes nothing. A cluster left empty by an update takes over the point
/// farthest from its current centroid.
pub fn kmeans(points: &DescriptorSet, k: usize, max_iter: usize, rng: &mut impl Rng) -> Result<KmeansResult> {
    let (n, dim) = (points.len(), points.dim());
    if k == 0 {
        return Err(Error::Contract("k-means needs k >= 1".into()));
    }
    if n < k {
        return Err(Error::Contract(format!("k-means with k = {k} needs at least {k} points, got {n}")));
    }
    if count_distinct(points, k) < k {
        return Err(Error::Contract(format!(
            "k-means with k = {k} needs at least {k} distinct points"
        )));
    }
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignments = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut costs = vec![0.0; n];
    while iterations < max_iter.max(1) {
        iterations += 1;
        let step: Vec<(usize, f64)> = points
            .as_flat()
            .par_chunks_exact(dim)
            .map(|x| nearest(&centroids, dim, x))
            .collect();
        let mut changed = false;
        for (i, &(j, d)) in step.iter().enumerate() {
            changed |= assignments[i] != j;
            assignments[i] = j;
            costs[i] = d;
        }
        history.push(costs.iter().sum());
        if !changed {
            break;
        }

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (row, &j) in points.rows().zip(&assignments) {
            counts[j] += 1;
            for (s, x) in sums[j * dim..(j + 1) * dim].iter_mut().zip(row) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                for (dst, s) in centroids[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..]) {
                    *dst = s / c;
                }
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            // farthest point from its own (updated) centroid, lowest index on ties
            let mut far = (usize::MAX, -1.0);
            for (i, row) in points.rows().enumerate() {
                let a = assignments[i];
                if counts[a] <= 1 {
                    continue;
                }
                let d = squared_distance(row, &centroids[a * dim..(a + 1) * dim]);
                if d > far.1 {
                    far = (i, d);
                }
            }
            if far.0 == usize::MAX {
                break;
            }
            counts[assignments[far.0]] -= 1;
            counts[j] = 1;
            assignments[far.0] = j;
            centroids[j * dim..(j + 1) * dim].copy_from_slice(points.row(far.0));
        }
    }
    Ok(KmeansResult {
        centroids,
        assignments,
        objective_history: history,
        iterations,
    })
}
