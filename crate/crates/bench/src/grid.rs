//! Declarative experiment grids over the synthetic generator.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use specmix::dataset::{CorruptionMode, SyntheticParams};
use specmix::pipelines::Method;

use crate::format::sig9;

fn default_lambda() -> Vec<f64> {
    vec![50.0]
}

fn default_repetitions() -> usize {
    1
}

fn default_restarts() -> usize {
    10
}

/// Every combination of the axes is one cell; every cell runs each method
/// `repetitions` times on freshly generated data.
///
/// ```toml
/// n = [1000]
/// k = [2, 4]
/// q = [3]
/// sigma = [0, 1, 2]
/// p = [0.1, 0.25]
/// lambda = [0, 50]
/// methods = ["specmix", "onlycat"]
/// repetitions = 50
/// base_seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub q: Vec<usize>,
    pub sigma: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    pub methods: Vec<Method>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub corruption: CorruptionMode,
    /// K-means restarts (spectral methods) or baseline restarts.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl ExperimentGrid {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let grid: Self = toml::from_str(text).context("invalid grid config")?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read grid config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let axes = [
            ("n", self.n.len()),
            ("k", self.k.len()),
            ("q", self.q.len()),
            ("sigma", self.sigma.len()),
            ("p", self.p.len()),
            ("lambda", self.lambda.len()),
            ("methods", self.methods.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, len)| *len == 0) {
            bail!("grid axis '{name}' is empty");
        }
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if self.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if let Some(l) = self.lambda.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            bail!("lambda values must be finite and nonnegative, got {l}");
        }
        for cell in self.data_cells() {
            cell.params(0, self.corruption).validate()?;
        }
        Ok(())
    }

    /// Data coordinates in grid order.
    pub fn data_cells(&self) -> Vec<DataCell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &k in &self.k {
                for &q in &self.q {
                    for &sigma in &self.sigma {
                        for &p in &self.p {
                            cells.push(DataCell { n, k, q, sigma, p });
                        }
                    }
                }
            }
        }
        cells
    }

    /// Every run of the grid, in output order.
    pub fn runs(&self) -> Vec<RunKey> {
        let mut runs = Vec::new();
        for data in self.data_cells() {
            for &lambda in &self.lambda {
                for &method in &self.methods {
                    for rep in 0..self.repetitions {
                        runs.push(RunKey {
                            data,
                            lambda,
                            method,
                            rep,
                        });
                    }
                }
            }
        }
        runs
    }

    pub fn expected_rows(&self) -> usize {
        self.n.len()
            * self.k.len()
            * self.q.len()
            * self.sigma.len()
            * self.p.len()
            * self.lambda.len()
            * self.methods.len()
            * self.repetitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataCell {
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub sigma: f64,
    pub p: f64,
}

impl DataCell {
    pub fn params(&self, seed: u64, corruption: CorruptionMode) -> SyntheticParams {
        SyntheticParams {
            n: self.n,
            k: self.k,
            q: self.q,
            sigma: self.sigma,
            p: self.p,
            seed,
            corruption,
        }
    }

    /// Seed of repetition `rep`: a hash of the base seed, the data
    /// coordinates and `rep`. Independent of λ and method, so every method
    /// and λ of a repetition sees the same dataset.
    pub fn seed(&self, base_seed: u64, rep: usize) -> u64 {
        [
            self.n as u64,
            self.k as u64,
            self.q as u64,
            self.sigma.to_bits(),
            self.p.to_bits(),
            rep as u64,
        ]
        .into_iter()
        .fold(mix(base_seed), |h, v| mix(h ^ v))
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunKey {
    pub data: DataCell,
    pub lambda: f64,
    pub method: Method,
    pub rep: usize,
}

impl RunKey {
    /// The identifying CSV fields, formatted as written.
    pub fn fields(&self) -> [String; 8] {
        [
            self.data.n.to_string(),
            self.data.k.to_string(),
            self.data.q.to_string(),
            sig9(self.data.sigma),
            sig9(self.data.p),
            sig9(self.lambda),
            self.method.to_string(),
            self.rep.to_string(),
        ]
    }

    /// Only SpecMix depends on λ. OnlyCat always runs with λ = 1 since a
    /// common λ does not change its result.
    pub fn effective_lambda(&self) -> Option<f64> {
        (self.method == Method::SpecMix).then_some(self.lambda)
    }
}
