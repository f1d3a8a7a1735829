//! Gaussian-blob generator with attached, partially corrupted categories.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MixedDataset;
use crate::{Error, Result};

/// How a corrupted categorical value is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionMode {
    /// Uniform over the `K - 1` categories not attached to the cluster, so
    /// `p` is exactly the probability of an off-cluster category.
    #[default]
    OtherCategories,
    /// Uniform over all `K` categories, including the attached one.
    AllCategories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub sigma: f64,
    pub p: f64,
    pub seed: u64,
    #[serde(default)]
    pub corruption: CorruptionMode,
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "K must be at least 2, got {}",
                self.k
            )));
        }
        if self.n < self.k {
            return Err(Error::TooFewRows {
                requested: self.k,
                available: self.n,
            });
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Size of cluster `c`: `⌊n/K⌋`, plus one for the first `n mod K` clusters.
    pub fn cluster_size(&self, c: usize) -> usize {
        self.n / self.k + usize::from(c < self.n % self.k)
    }
}

/// Samples `K` Gaussian blobs centred on the canonical basis of `ℝ^K` with
/// isotropic standard deviation `σ`, plus `Q` categorical variables with `K`
/// levels each. A point of cluster `k` takes category `k` with probability
/// `1 - p`; otherwise the value is corrupted per [`CorruptionMode`].
///
/// Points are emitted cluster by cluster. The output is a pure function of
/// `params` (seeded ChaCha8).
pub fn generate_synthetic(params: &SyntheticParams) -> Result<(MixedDataset, Vec<usize>)> {
    params.validate()?;
    let SyntheticParams {
        n, k, q, sigma, p, ..
    } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut numeric = Array2::zeros((n, k));
    let mut categorical = Array2::zeros((n, q));
    let mut labels = Vec::with_capacity(n);

    let mut row = 0;
    for cluster in 0..k {
        for _ in 0..params.cluster_size(cluster) {
            for d in 0..k {
                let z: f64 = rng.sample(StandardNormal);
                numeric[[row, d]] = f64::from(u8::from(d == cluster)) + sigma * z;
            }
            for var in 0..q {
                let corrupt = rng.random::<f64>() < p;
                categorical[[row, var]] = if corrupt {
                    match params.corruption {
                        CorruptionMode::OtherCategories => {
                            let j = rng.random_range(0..k - 1);
                            if j >= cluster {
                                j + 1
                            } else {
                                j
                            }
                        }
                        CorruptionMode::AllCategories => rng.random_range(0..k),
                    }
                } else {
                    cluster
                };
            }
            labels.push(cluster);
            row += 1;
        }
    }

    let ds = MixedDataset::new(numeric, categorical, vec![k; q])?;
    Ok((ds, labels))
}
