//! End-to-end clusterers: spectral clustering on the category-augmented
//! graph (SpecMix), on the numeric graph alone, and the bipartite reduction
//! for purely categorical data (OnlyCat).

use std::time::Instant;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{MixedDataset, OneHotMatrix};
use crate::eigen::{generalized_smallest_eigs, EigenOptions, EigenPairs, SolverKind};
use crate::graph::{assemble_augmented, base_similarity, DenseGraph, WeightedGraph};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::{Error, Result};

/// Version tag of the serialized [`ClusteringResult`].
pub const RESULT_FORMAT_VERSION: u32 = 1;

/// Largest `γ_K` the Transfer-Cut lift accepts.
pub const MAX_BIPARTITE_EIGENVALUE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "specmix")]
    SpecMix,
    #[serde(rename = "onlycat")]
    OnlyCat,
    #[serde(rename = "numeric-spectral")]
    NumericSpectral,
    #[serde(rename = "kmodes")]
    KModes,
    #[serde(rename = "kprototypes")]
    KPrototypes,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SpecMix,
        Method::OnlyCat,
        Method::NumericSpectral,
        Method::KModes,
        Method::KPrototypes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SpecMix => "specmix",
            Method::OnlyCat => "onlycat",
            Method::NumericSpectral => "numeric-spectral",
            Method::KModes => "kmodes",
            Method::KPrototypes => "kprototypes",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Category-node weights: one value for every variable, or one per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambdas {
    Common(f64),
    PerVariable(Vec<f64>),
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas::Common(1.0)
    }
}

impl Lambdas {
    pub fn resolve(&self, q: usize) -> Result<Vec<f64>> {
        let values = match self {
            Lambdas::Common(l) => vec![*l; q],
            Lambdas::PerVariable(v) if v.len() == q => v.clone(),
            Lambdas::PerVariable(v) => {
                return Err(Error::DimensionMismatch(format!(
                    "{} lambdas for {q} categorical variables",
                    v.len()
                )))
            }
        };
        if let Some(bad) = values.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecMixConfig {
    pub k: usize,
    #[serde(default)]
    pub lambdas: Lambdas,
    /// Drives the eigensolver start vectors and K-means; the seeds inside
    /// `kmeans` and `eigen` are ignored.
    pub seed: u64,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub eigen: EigenOptions,
}

impl SpecMixConfig {
    pub fn new(k: usize, lambdas: Lambdas, seed: u64) -> Self {
        Self {
            k,
            lambdas,
            seed,
            kmeans: KMeansConfig::default(),
            eigen: EigenOptions::default(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!(
                "K must be at least 2, got {}",
                self.k
            )));
        }
        if self.k > n {
            return Err(Error::TooFewRows {
                requested: self.k,
                available: n,
            });
        }
        self.kmeans.validate()
    }

    fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            seed: self.seed,
            ..self.kmeans.clone()
        }
    }

    fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            seed: self.seed,
            ..self.eigen.clone()
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub graph: f64,
    pub eigen: f64,
    pub kmeans: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.graph + self.eigen + self.kmeans
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub version: u32,
    pub method: Method,
    pub labels: Vec<usize>,
    /// Generalized eigenvalues, clamped to `[0, 2]`.
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
    pub solver: Option<SolverKind>,
    /// Rows handed to K-means (`n + t` for SpecMix, `n` otherwise).
    pub embedding_rows_used: usize,
    pub inertia: f64,
    pub timings: StageTimings,
    pub seed: u64,
    pub config: SpecMixConfig,
}

impl ClusteringResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

fn clamp_values(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v.clamp(0.0, 2.0)).collect()
}

fn spectral_on<G: WeightedGraph + ?Sized>(
    graph: &G,
    n: usize,
    cfg: &SpecMixConfig,
    method: Method,
    mut timings: StageTimings,
) -> Result<ClusteringResult> {
    let start = Instant::now();
    let pairs = generalized_smallest_eigs(graph, cfg.k, &cfg.eigen_options())?;
    timings.eigen = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let clusters = kmeans(pairs.vectors.view(), cfg.k, &cfg.kmeans_config())?;
    timings.kmeans = start.elapsed().as_secs_f64();

    Ok(ClusteringResult {
        version: RESULT_FORMAT_VERSION,
        method,
        labels: clusters.labels[..n].to_vec(),
        eigenvalues: clamp_values(&pairs.values),
        max_residual: pairs.max_residual(),
        solver: Some(pairs.solver),
        embedding_rows_used: pairs.vectors.nrows(),
        inertia: clusters.inertia,
        timings,
        seed: cfg.seed,
        config: cfg.clone(),
    })
}

fn numeric_spectral_as(
    ds: &MixedDataset,
    cfg: &SpecMixConfig,
    method: Method,
) -> Result<ClusteringResult> {
    cfg.validate(ds.len())?;
    let start = Instant::now();
    let base = base_similarity(ds)?;
    let timings = StageTimings {
        graph: start.elapsed().as_secs_f64(),
        ..StageTimings::default()
    };
    spectral_on(&base, ds.len(), cfg, method, timings)
}

/// Normalized spectral clustering on the Gaussian similarity of the numeric
/// features; categorical columns and `cfg.lambdas` are ignored.
pub fn numeric_spectral(ds: &MixedDataset, cfg: &SpecMixConfig) -> Result<ClusteringResult> {
    numeric_spectral_as(ds, cfg, Method::NumericSpectral)
}

/// Spectral clustering of the graph with one extra node per category.
///
/// K-means runs on all `n + t` eigenvector rows; only the datapoint labels
/// are returned. Variables with `λ_ℓ = 0` are left out, and with every
/// `λ_ℓ = 0` this is exactly [`numeric_spectral`].
pub fn specmix(ds: &MixedDataset, cfg: &SpecMixConfig) -> Result<ClusteringResult> {
    if ds.num_numeric() == 0 {
        return Err(Error::NumericFeaturesRequired);
    }
    let lambdas = cfg.lambdas.resolve(ds.num_categorical())?;
    if lambdas.iter().all(|&l| l == 0.0) {
        return numeric_spectral_as(ds, cfg, Method::SpecMix);
    }
    cfg.validate(ds.len())?;

    let start = Instant::now();
    let ds = ds.prune_unused_categories();
    let (encoders, kept): (Vec<OneHotMatrix>, Vec<f64>) = ds
        .encoders()
        .into_iter()
        .zip(lambdas)
        .filter(|(_, l)| *l > 0.0)
        .unzip();
    let graph = assemble_augmented(base_similarity(&ds)?, encoders, kept)?;
    let timings = StageTimings {
        graph: start.elapsed().as_secs_f64(),
        ..StageTimings::default()
    };
    spectral_on(&graph, ds.len(), cfg, Method::SpecMix, timings)
}

/// `H = [λ_1 H_1 … λ_Q H_Q]`, kept in one-hot form.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedEncoder {
    encoders: Vec<OneHotMatrix>,
    lambdas: Vec<f64>,
    offsets: Vec<usize>,
    column_sums: Vec<f64>,
    row_sum: f64,
}

impl StackedEncoder {
    pub fn new(encoders: Vec<OneHotMatrix>, lambdas: Vec<f64>) -> Result<Self> {
        if encoders.is_empty() {
            return Err(Error::CategoricalFeaturesRequired);
        }
        if encoders.len() != lambdas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} encoders but {} lambdas",
                encoders.len(),
                lambdas.len()
            )));
        }
        let n = encoders[0].rows();
        if encoders.iter().any(|h| h.rows() != n) {
            return Err(Error::DimensionMismatch(
                "encoders differ in row count".into(),
            ));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {bad}"
            )));
        }
        let mut offsets = Vec::with_capacity(encoders.len());
        let mut column_sums = Vec::new();
        for (h, &lam) in encoders.iter().zip(&lambdas) {
            offsets.push(column_sums.len());
            column_sums.extend(h.column_sums().iter().map(|&c| lam * c as f64));
        }
        let row_sum = lambdas.iter().sum();
        Ok(Self {
            encoders,
            lambdas,
            offsets,
            column_sums,
            row_sum,
        })
    }

    pub fn from_dataset(ds: &MixedDataset, lambdas: Vec<f64>) -> Result<Self> {
        Self::new(ds.encoders(), lambdas)
    }

    pub fn rows(&self) -> usize {
        self.encoders[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.column_sums.len()
    }

    /// `λ = Σ_ℓ λ_ℓ`, the sum of every row.
    pub fn row_sum(&self) -> f64 {
        self.row_sum
    }

    pub fn column_sums(&self) -> &[f64] {
        &self.column_sums
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut h = Array2::zeros((self.rows(), self.cols()));
        for ((enc, &lam), &off) in self.encoders.iter().zip(&self.lambdas).zip(&self.offsets) {
            for (i, &c) in enc.categories().iter().enumerate() {
                h[[i, off + c]] = lam;
            }
        }
        h
    }

    /// `out = H u`.
    pub fn matvec(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for ((enc, &lam), &off) in self.encoders.iter().zip(&self.lambdas).zip(&self.offsets) {
            for (o, &c) in out.iter_mut().zip(enc.categories()) {
                *o += lam * u[off + c];
            }
        }
    }

    /// `out = Hᵀ x`.
    pub fn transpose_matvec(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for ((enc, &lam), &off) in self.encoders.iter().zip(&self.lambdas).zip(&self.offsets) {
            for (&xi, &c) in x.iter().zip(enc.categories()) {
                out[off + c] += lam * xi;
            }
        }
    }

    /// The bipartite graph with weights `[[0, H], [Hᵀ, 0]]` over `n + t`
    /// nodes, datapoints first. It has no self-loops.
    pub fn bipartite(&self) -> BipartiteGraph<'_> {
        let mut degree = vec![self.row_sum; self.rows()];
        degree.extend_from_slice(&self.column_sums);
        BipartiteGraph {
            encoder: self,
            degree,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph<'a> {
    encoder: &'a StackedEncoder,
    degree: Vec<f64>,
}

impl WeightedGraph for BipartiteGraph<'_> {
    fn node_count(&self) -> usize {
        self.degree.len()
    }

    fn degrees(&self) -> &[f64] {
        &self.degree
    }

    fn weight_matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.encoder.rows();
        let (x_data, x_cat) = x.split_at(n);
        let (out_data, out_cat) = out.split_at_mut(n);
        self.encoder.matvec(x_cat, out_data);
        self.encoder.transpose_matvec(x_data, out_cat);
    }

    fn dense_weights(&self) -> Array2<f64> {
        let n = self.encoder.rows();
        let m = self.node_count();
        let h = self.encoder.to_dense();
        let mut w = Array2::zeros((m, m));
        w.slice_mut(s![..n, n..]).assign(&h);
        w.slice_mut(s![n.., ..n]).assign(&h.t());
        w
    }
}

/// The reduced `t`-node problem of the bipartite graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteReduction {
    /// `W_Q = Hᵀ D_H⁻¹ H`.
    pub w_q: Array2<f64>,
    /// Row sums of `W_Q`, equal to the column sums of `H`.
    pub d_q: Vec<f64>,
    /// Row sums of `H`; every entry is `λ`.
    pub d_h: Vec<f64>,
}

/// Builds `W_Q = Hᵀ D_H⁻¹ H` in `O(n Q²)` from the one-hot codes.
pub fn build_bipartite_reduction(h: &StackedEncoder) -> Result<BipartiteReduction> {
    for (var, enc) in h.encoders.iter().enumerate() {
        if let Some(category) = enc.column_sums().iter().position(|&c| c == 0) {
            return Err(Error::EmptyCategory {
                variable: var,
                category,
            });
        }
    }
    let t = h.cols();
    let lam = h.row_sum;
    let mut w_q = Array2::zeros((t, t));
    for i in 0..h.rows() {
        for ((ea, &la), &oa) in h.encoders.iter().zip(&h.lambdas).zip(&h.offsets) {
            let a = oa + ea.category(i);
            for ((eb, &lb), &ob) in h.encoders.iter().zip(&h.lambdas).zip(&h.offsets) {
                w_q[[a, ob + eb.category(i)]] += la * lb / lam;
            }
        }
    }
    let d_q = w_q.rows().into_iter().map(|r| r.sum()).collect();
    Ok(BipartiteReduction {
        w_q,
        d_q,
        d_h: vec![lam; h.rows()],
    })
}

/// Eigenpairs of the bipartite graph recovered from its reduced problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCut {
    /// Eigenpairs of `L_Q u = γ D_Q u`.
    pub reduced: EigenPairs,
    /// Lifted pairs `(μ_i, v_i)` of the `(n + t)`-node bipartite graph;
    /// vectors are `D`-orthonormal and residuals are measured on that graph.
    pub lifted: EigenPairs,
    /// First `n` rows of the lifted vectors.
    pub embedding: Array2<f64>,
}

/// `μ = 1 - √(1 - γ)`, the bipartite eigenvalue belonging to a reduced one.
pub fn lift_eigenvalue(gamma: f64) -> f64 {
    1.0 - (1.0 - gamma.clamp(0.0, 1.0)).sqrt()
}

/// Transfer Cut: solve the `t × t` problem and lift.
///
/// Each reduced pair `(γ, u)` lifts to `μ = 1 - √(1 - γ)` (so `γ = μ(2 - μ)`)
/// and `v = [f; u] / √2` with `f = D_H⁻¹ H u / (1 - μ)`. Total work is
/// `O(n Q (Q + K) + t³)`, linear in `n`.
pub fn transfer_cut(h: &StackedEncoder, k: usize, opts: &EigenOptions) -> Result<TransferCut> {
    let n = h.rows();
    let t = h.cols();
    if k > t {
        return Err(Error::TooFewRows {
            requested: k,
            available: t,
        });
    }
    let reduction = build_bipartite_reduction(h)?;
    let small = DenseGraph::new(reduction.w_q)?;
    let reduced = generalized_smallest_eigs(&small, k, opts)?;
    if let Some(&gamma_k) = reduced.values.last() {
        if gamma_k >= MAX_BIPARTITE_EIGENVALUE {
            return Err(Error::InsufficientSpectralGap(gamma_k));
        }
    }

    let values: Vec<f64> = reduced.values.iter().map(|&g| lift_eigenvalue(g)).collect();
    let mut vectors = Array2::zeros((n + t, k));
    let mut f = vec![0.0; n];
    for (j, (&mu, u)) in values.iter().zip(reduced.vectors.columns()).enumerate() {
        let u = u.to_vec();
        h.matvec(&u, &mut f);
        let scale = 1.0 / (h.row_sum * (1.0 - mu) * std::f64::consts::SQRT_2);
        let mut col = vectors.column_mut(j);
        for (dst, &fi) in col.iter_mut().zip(&f) {
            *dst = fi * scale;
        }
        for (dst, &ui) in col.iter_mut().skip(n).zip(&u) {
            *dst = ui / std::f64::consts::SQRT_2;
        }
    }

    let graph = h.bipartite();
    let mut lv = vec![0.0; n + t];
    let residuals = vectors
        .columns()
        .into_iter()
        .zip(&values)
        .map(|(v, &mu)| {
            let v = v.to_vec();
            graph.laplacian_matvec(&v, &mut lv);
            lv.iter()
                .zip(&v)
                .zip(graph.degrees())
                .map(|((l, x), d)| (l - mu * d * x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let embedding = vectors.slice(s![..n, ..]).to_owned();
    let lifted = EigenPairs {
        values,
        vectors,
        residuals,
        solver: reduced.solver,
    };
    Ok(TransferCut {
        reduced,
        lifted,
        embedding,
    })
}

/// Spectral clustering of the categorical part through Transfer Cut; numeric
/// columns are ignored. Every `λ_ℓ` must be positive.
pub fn onlycat(ds: &MixedDataset, cfg: &SpecMixConfig) -> Result<ClusteringResult> {
    let ds = ds.categorical_part()?.prune_unused_categories();
    cfg.validate(ds.len())?;
    let lambdas = cfg.lambdas.resolve(ds.num_categorical())?;

    let start = Instant::now();
    let h = StackedEncoder::from_dataset(&ds, lambdas)?;
    let mut timings = StageTimings {
        graph: start.elapsed().as_secs_f64(),
        ..StageTimings::default()
    };

    let start = Instant::now();
    let cut = transfer_cut(&h, cfg.k, &cfg.eigen_options())?;
    timings.eigen = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let clusters = kmeans(cut.embedding.view(), cfg.k, &cfg.kmeans_config())?;
    timings.kmeans = start.elapsed().as_secs_f64();

    Ok(ClusteringResult {
        version: RESULT_FORMAT_VERSION,
        method: Method::OnlyCat,
        labels: clusters.labels,
        eigenvalues: clamp_values(&cut.lifted.values),
        max_residual: cut.lifted.max_residual(),
        solver: Some(cut.lifted.solver),
        embedding_rows_used: cut.embedding.nrows(),
        inertia: clusters.inertia,
        timings,
        seed: cfg.seed,
        config: cfg.clone(),
    })
}
