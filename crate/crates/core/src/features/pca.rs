//! Principal-component projection of SIFT descriptors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::media_io::artifact::{tag, Artifact, PayloadReader, PayloadWriter};
use crate::media_io::DescriptorSet;

pub const PCA_SIFT_DIM: usize = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// `target_dim` unit rows of length `mean.len()`, by descending variance.
    pub components: Vec<Vec<f64>>,
    /// Variance of the training set along each component.
    pub variances: Vec<f64>,
    /// Set when the training set spans fewer than `target_dim` directions, in
    /// which case the trailing components are an arbitrary orthonormal
    /// completion.
    pub rank_deficient: bool,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        assert_eq!(d.len(), self.input_dim(), "descriptor dimension");
        self.components
            .iter()
            .map(|c| c.iter().zip(d).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }

    pub fn apply_set(&self, set: &DescriptorSet) -> DescriptorSet {
        let mut out = DescriptorSet::new(self.output_dim());
        for row in set.rows() {
            out.push(&self.apply(row));
        }
        out
    }

    /// Maps projected coordinates back into descriptor space.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, &w) in self.components.iter().zip(y) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += w * ci;
            }
        }
        x
    }
}

/// Fits the top `target_dim` principal components of `training`.
pub fn project_pca_sift(training: &DescriptorSet, target_dim: usize) -> Result<PcaProjection> {
    let (n, dim) = (training.len(), training.dim());
    if target_dim == 0 || target_dim > dim {
        return Err(Error::Contract(format!(
            "cannot project {dim}-d descriptors onto {target_dim} components"
        )));
    }
    if n < target_dim {
        return Err(Error::Contract(format!(
            "PCA needs at least {target_dim} training descriptors, got {n}"
        )));
    }
    let mut mean = vec![0.0; dim];
    for row in training.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for row in training.rows() {
        for ((c, x), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = x - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..dim {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let tol = top * dim as f64 * f64::EPSILON * 16.0;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count();
    let rank_deficient = rank < target_dim;
    if rank_deficient {
        log::warn!("PCA training set has rank {rank} < {target_dim}; padding with an orthonormal completion");
    }

    let mut components = Vec::with_capacity(target_dim);
    let mut variances = Vec::with_capacity(target_dim);
    for &i in order.iter().take(target_dim) {
        let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        // sign convention: largest-magnitude entry positive
        let pivot = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
        variances.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaProjection {
        mean,
        components,
        variances,
        rank_deficient,
    })
}

pub fn apply_pca(proj: &PcaProjection, d: &[f64]) -> Vec<f64> {
    proj.apply(d)
}

/// Payload: input dim, output dim, mean, components row-major, variances,
/// rank-deficiency flag (u8).
impl Artifact for PcaProjection {
    const TAG: u32 = tag::PCA_PROJECTION;
    const NAME: &'static str = "PCA projection";

    fn encode(&self, w: &mut PayloadWriter) {
        w.dim(self.input_dim());
        w.dim(self.output_dim());
        w.f64s(&self.mean);
        for c in &self.components {
            w.f64s(c);
        }
        w.f64s(&self.variances);
        w.u8(self.rank_deficient as u8);
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let dim = r.dim()?;
        let out = r.dim()?;
        let mean = r.f64s(dim)?;
        let components = (0..out).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
        let variances = r.f64s(out)?;
        let rank_deficient = r.u8()? != 0;
        Ok(PcaProjection {
            mean,
            components,
            variances,
            rank_deficient,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media_io::artifact::{from_bytes, to_bytes};
    use rand::Rng;

    /// Cyclic Jacobi rotations on a dense symmetric matrix; returns eigenvalues.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    fn random_set(n: usize, dim: usize, seed: u64) -> DescriptorSet {
        let mut rng = crate::seed::rng(seed);
        let data = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        DescriptorSet::from_rows(dim, data).unwrap()
    }

    #[test]
    fn variances_match_jacobi_oracle() {
        let set = random_set(200, 128, 3);
        let proj = project_pca_sift(&set, PCA_SIFT_DIM).unwrap();
        assert!(!proj.rank_deficient);
        let n = set.len() as f64;
        let mut mean = vec![0.0; 128];
        for r in set.rows() {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut cov = vec![vec![0.0; 128]; 128];
        for r in set.rows() {
            for i in 0..128 {
                for j in 0..128 {
                    cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / n;
                }
            }
        }
        let oracle = jacobi_eigenvalues(cov);
        for (got, want) in proj.variances.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        // variance of the projected coordinates equals the eigenvalue
        let projected = proj.apply_set(&set);
        for k in 0..PCA_SIFT_DIM {
            let var: f64 = projected.rows().map(|r| r[k] * r[k]).sum::<f64>() / n;
            assert!((var - proj.variances[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_set_is_captured_by_two_components() {
        let mut rng = crate::seed::rng(5);
        let dim = 128;
        let offset: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let u: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let v: Vec<f64> = (0..dim).map(|i| if i % 3 == 0 { 0.5 } else { -0.2 }).collect();
        let mut set = DescriptorSet::new(dim);
        for _ in 0..60 {
            let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let row: Vec<f64> = (0..dim).map(|i| offset[i] + a * u[i] + b * v[i]).collect();
            set.push(&row);
        }
        let proj = project_pca_sift(&set, PCA_SIFT_DIM).unwrap();
        assert!(proj.rank_deficient);
        let total: f64 = proj.variances.iter().sum();
        let first_two = proj.variances[0] + proj.variances[1];
        assert!((first_two / total - 1.0).abs() < 1e-9);
        for row in set.rows() {
            let back = proj.reconstruct(&proj.apply(row));
            for (a, b) in back.iter().zip(row) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // components stay orthonormal after completion
        for i in 0..PCA_SIFT_DIM {
            for j in 0..PCA_SIFT_DIM {
                let dot: f64 = proj.components[i].iter().zip(&proj.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_projects_to_zero_and_distances_shrink() {
        let set = random_set(80, 40, 9);
        let proj = project_pca_sift(&set, 10).unwrap();
        assert!(proj.apply(&proj.mean.clone()).iter().all(|v| v.abs() < 1e-12));
        for i in 0..20 {
            for j in i + 1..20 {
                let (a, b) = (set.row(i), set.row(j));
                let d0: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let (pa, pb) = (proj.apply(a), proj.apply(b));
                let d1: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                assert!(d1 <= d0 + 1e-9);
            }
        }
    }

    #[test]
    fn too_few_descriptors_is_rejected() {
        assert!(project_pca_sift(&random_set(10, 128, 1), PCA_SIFT_DIM).is_err());
    }

    #[test]
    fn artifact_round_trip() {
        let proj = project_pca_sift(&random_set(50, 20, 2), 5).unwrap();
        let back: PcaProjection = from_bytes(&to_bytes(&proj)).unwrap();
        assert_eq!(back, proj);
    }
}
