//! Dispatch from a method name to the clusterer behind it.

use std::time::Instant;

use specmix::baselines::{kmodes, kprototypes, BaselineConfig, BaselineResult};
use specmix::dataset::MixedDataset;
use specmix::pipelines::{
    numeric_spectral, onlycat, specmix, ClusteringResult, Lambdas, Method, SpecMixConfig,
    StageTimings, RESULT_FORMAT_VERSION,
};

/// Settings shared by every method; each method reads what applies to it.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub k: usize,
    pub lambdas: Lambdas,
    pub seed: u64,
    /// K-means restarts for the spectral methods, restarts for the baselines.
    pub restarts: usize,
    /// Hamming weight for K-prototypes; `None` picks the default.
    pub gamma: Option<f64>,
}

impl RunSettings {
    pub fn new(k: usize, lambdas: Lambdas, seed: u64) -> Self {
        Self {
            k,
            lambdas,
            seed,
            restarts: 10,
            gamma: None,
        }
    }

    pub fn spectral_config(&self) -> SpecMixConfig {
        let mut cfg = SpecMixConfig::new(self.k, self.lambdas.clone(), self.seed);
        cfg.kmeans.restarts = self.restarts;
        cfg
    }
}

fn baseline_result(
    method: Method,
    cfg: SpecMixConfig,
    out: BaselineResult,
    seconds: f64,
) -> ClusteringResult {
    let rows = out.labels.len();
    ClusteringResult {
        version: RESULT_FORMAT_VERSION,
        method,
        labels: out.labels,
        eigenvalues: Vec::new(),
        max_residual: 0.0,
        solver: None,
        embedding_rows_used: rows,
        inertia: out.cost,
        timings: StageTimings {
            kmeans: seconds,
            ..StageTimings::default()
        },
        seed: cfg.seed,
        config: cfg,
    }
}

pub fn run_method(
    method: Method,
    ds: &MixedDataset,
    settings: &RunSettings,
) -> specmix::Result<ClusteringResult> {
    let cfg = settings.spectral_config();
    match method {
        Method::SpecMix => specmix(ds, &cfg),
        Method::OnlyCat => onlycat(ds, &cfg),
        Method::NumericSpectral => numeric_spectral(ds, &cfg),
        Method::KModes | Method::KPrototypes => {
            let base = BaselineConfig {
                restarts: settings.restarts,
                seed: settings.seed,
                ..BaselineConfig::default()
            };
            let start = Instant::now();
            let out = if method == Method::KModes {
                kmodes(ds, settings.k, &base)?
            } else {
                kprototypes(ds, settings.k, settings.gamma, &base)?
            };
            Ok(baseline_result(
                method,
                cfg,
                out,
                start.elapsed().as_secs_f64(),
            ))
        }
    }
}
