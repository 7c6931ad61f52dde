//! Visual vocabularies and bag-of-visual-features encoding.

mod kmeans;

use rand::seq::IteratorRandom;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, nearest, squared_distance, KmeansResult};

use crate::error::{Error, Result};
use crate::media_io::artifact::{tag, Artifact, PayloadReader, PayloadWriter};
use crate::media_io::DescriptorSet;

pub const DEFAULT_MAX_ITER: usize = 100;
/// Default descriptor sampling budget per codebook word.
pub const BUDGET_PER_WORD: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub channel_id: String,
    k: usize,
    dim: usize,
    centroids: Vec<f64>,
    pub seed: u64,
}

impl Codebook {
    /// Validates k >= 2, finite and pairwise distinct centroids.
    pub fn new(channel_id: impl Into<String>, dim: usize, centroids: Vec<f64>, seed: u64) -> Result<Codebook> {
        if dim == 0 || centroids.len() % dim != 0 {
            return Err(Error::Validation(format!(
                "{} centroid values do not form rows of dimension {dim}",
                centroids.len()
            )));
        }
        let k = centroids.len() / dim;
        if k < 2 {
            return Err(Error::Validation(format!("codebook needs k >= 2, got {k}")));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("codebook centroid is not finite".into()));
        }
        let rows: Vec<&[f64]> = centroids.chunks_exact(dim).collect();
        for i in 0..k {
            for j in i + 1..k {
                if rows[i] == rows[j] {
                    return Err(Error::Validation(format!("codebook centroids {i} and {j} coincide")));
                }
            }
        }
        Ok(Codebook {
            channel_id: channel_id.into(),
            k,
            dim,
            centroids,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }
}

/// A codebook histogram. `descriptor_count == 0` marks an element with no
/// local descriptors, which carries no evidence and casts no vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bovf {
    pub values: Vec<f64>,
    pub descriptor_count: usize,
}

impl Bovf {
    pub fn is_empty(&self) -> bool {
        self.descriptor_count == 0
    }
}

/// Uniform sample of at most `budget` descriptors from the concatenation of
/// `sets`, deterministic under `seed`.
pub fn sample_descriptors<'a>(
    channel_id: &str,
    dim: usize,
    sets: impl IntoIterator<Item = &'a DescriptorSet>,
    budget: usize,
    seed: u64,
) -> Result<DescriptorSet> {
    let mut rng = crate::seed::rng(seed);
    let rows = sets.into_iter().flat_map(|s| {
        assert_eq!(s.dim(), dim, "descriptor dimension of channel {channel_id}");
        s.rows()
    });
    let picked = rows.choose_multiple(&mut rng, budget);
    if picked.is_empty() {
        return Err(Error::Validation(format!(
            "channel `{channel_id}` has no descriptors in the training split"
        )));
    }
    let mut out = DescriptorSet::new(dim);
    for r in picked {
        out.push(r);
    }
    Ok(out)
}

/// Learns a `k`-word vocabulary over `sample`.
pub fn train_codebook(
    channel_id: &str,
    sample: &DescriptorSet,
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<Codebook> {
    Ok(train_codebook_traced(channel_id, sample, k, max_iter, seed)?.0)
}

/// Like [`train_codebook`], also returning the clustering trace.
pub fn train_codebook_traced(
    channel_id: &str,
    sample: &DescriptorSet,
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<(Codebook, KmeansResult)> {
    if sample.len() < k {
        return Err(Error::Validation(format!(
            "channel `{channel_id}`: {} sampled descriptors cannot train a {k}-word codebook",
            sample.len()
        )));
    }
    let result = kmeans(sample, k, max_iter, &mut crate::seed::rng(seed)).map_err(|e| match e {
        Error::Contract(m) => Error::Validation(format!("channel `{channel_id}`: {m}")),
        other => other,
    })?;
    let cb = Codebook::new(channel_id, sample.dim(), result.centroids.clone(), seed)?;
    Ok((cb, result))
}

pub fn assign_word(cb: &Codebook, d: &[f64]) -> Result<usize> {
    if d.len() != cb.dim {
        return Err(Error::Contract(format!(
            "descriptor of length {} against a {}-d codebook",
            d.len(),
            cb.dim
        )));
    }
    Ok(nearest(&cb.centroids, cb.dim, d).0)
}

pub fn encode_bovf(cb: &Codebook, ds: &DescriptorSet) -> Result<Bovf> {
    let mut values = vec![0.0; cb.k];
    if ds.is_empty() {
        return Ok(Bovf {
            values,
            descriptor_count: 0,
        });
    }
    for row in ds.rows() {
        values[assign_word(cb, row)?] += 1.0;
    }
    let n = ds.len();
    values.iter_mut().for_each(|v| *v /= n as f64);
    Ok(Bovf {
        values,
        descriptor_count: n,
    })
}

/// Payload: channel id, k, dim, centroids row-major, seed.
impl Artifact for Codebook {
    const TAG: u32 = tag::CODEBOOK;
    const NAME: &'static str = "codebook";

    fn encode(&self, w: &mut PayloadWriter) {
        w.str(&self.channel_id);
        w.dim(self.k);
        w.dim(self.dim);
        w.f64s(&self.centroids);
        w.u64(self.seed);
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let channel_id = r.str()?;
        let k = r.dim()?;
        let dim = r.dim()?;
        let n = k
            .checked_mul(dim)
            .ok_or_else(|| Error::Corruption("codebook size overflows".into()))?;
        let centroids = r.f64s(n)?;
        let seed = r.u64()?;
        Codebook::new(channel_id, dim, centroids, seed)
    }
}
