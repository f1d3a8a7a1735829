//! Similarity graphs, the category-augmented graph, and cut energies.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::dataset::{MixedDataset, OneHotMatrix};
use crate::{Error, Result};

/// Largest graph the dense debug dump will write.
pub const MAX_DUMP_NODES: usize = 5000;

const PAR_MATVEC_MIN_ROWS: usize = 512;

/// An undirected weighted graph given in operator form.
pub trait WeightedGraph: Sync {
    fn node_count(&self) -> usize;

    /// Weighted degrees `D(i, i) = Σ_j W(i, j)`, self-loops included.
    fn degrees(&self) -> &[f64];

    /// `out = W x`.
    fn weight_matvec(&self, x: &[f64], out: &mut [f64]);

    fn dense_weights(&self) -> Array2<f64>;

    /// `out = L x = D x - W x`.
    fn laplacian_matvec(&self, x: &[f64], out: &mut [f64]) {
        self.weight_matvec(x, out);
        for ((o, &d), &xi) in out.iter_mut().zip(self.degrees()).zip(x) {
            *o = d * xi - *o;
        }
    }
}

/// Symmetric nonnegative weights held as a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGraph {
    weights: Array2<f64>,
    degrees: Vec<f64>,
}

impl DenseGraph {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix is {}x{}",
                n,
                weights.ncols()
            )));
        }
        let scale = weights.iter().fold(1.0f64, |m, w| m.max(w.abs()));
        for i in 0..n {
            for j in 0..i {
                let asym = (weights[[i, j]] - weights[[j, i]]).abs();
                if asym > 1e-12 * scale {
                    return Err(Error::NotSymmetric(asym));
                }
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let weights = weights.as_standard_layout().into_owned();
        let degrees = weights.rows().into_iter().map(|r| r.sum()).collect();
        Ok(Self { weights, degrees })
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }
}

impl WeightedGraph for DenseGraph {
    fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    fn weight_matvec(&self, x: &[f64], out: &mut [f64]) {
        dense_matvec(&self.weights, x, out);
    }

    fn dense_weights(&self) -> Array2<f64> {
        self.weights.clone()
    }
}

fn dense_matvec(a: &Array2<f64>, x: &[f64], out: &mut [f64]) {
    let n = a.ncols();
    let data = a
        .as_slice()
        .expect("dense weights are kept in standard layout");
    let row_dot = |(o, row): (&mut f64, &[f64])| {
        *o = row.iter().zip(x).map(|(w, v)| w * v).sum();
    };
    if a.nrows() >= PAR_MATVEC_MIN_ROWS {
        out.par_iter_mut()
            .zip(data.par_chunks_exact(n))
            .for_each(row_dot);
    } else {
        out.iter_mut().zip(data.chunks_exact(n)).for_each(row_dot);
    }
}

/// The numeric similarity graph `W_R(i, j) = exp(-‖r_i - r_j‖²)`.
///
/// Fully connected; the diagonal is `exp(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseWeights(DenseGraph);

impl BaseWeights {
    pub fn n(&self) -> usize {
        self.0.node_count()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.weights[[i, j]]
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.0.weights()
    }

    pub fn as_dense_graph(&self) -> &DenseGraph {
        &self.0
    }
}

impl WeightedGraph for BaseWeights {
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    fn degrees(&self) -> &[f64] {
        self.0.degrees()
    }

    fn weight_matvec(&self, x: &[f64], out: &mut [f64]) {
        self.0.weight_matvec(x, out);
    }

    fn dense_weights(&self) -> Array2<f64> {
        self.0.dense_weights()
    }
}

/// Gaussian similarity over the numeric features.
pub fn base_similarity(ds: &MixedDataset) -> Result<BaseWeights> {
    if ds.num_numeric() == 0 {
        return Err(Error::NumericFeaturesRequired);
    }
    let n = ds.len();
    let x = ds.numeric();
    let mut w = Array2::<f64>::zeros((n, n));
    w.as_slice_mut()
        .expect("fresh array is contiguous")
        .par_chunks_exact_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, wij) in row.iter_mut().enumerate() {
                let d2: f64 = xi
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                *wij = (-d2).exp();
            }
        });
    let degrees = w.rows().into_iter().map(|r| r.sum()).collect();
    Ok(BaseWeights(DenseGraph {
        weights: w,
        degrees,
    }))
}

/// `G_all`: the base graph plus one extra node per category.
///
/// Node order is the `n` datapoints followed by the categories of variable 1,
/// then variable 2, and so on. The dense realization is
///
/// ```text
/// [ W_R        λ_1 H_1  …  λ_Q H_Q ]
/// [ λ_1 H_1ᵀ   I        …  0       ]
/// [ …                   ⋱          ]
/// [ λ_Q H_Qᵀ   0        …  I       ]
/// ```
///
/// but only `W_R` is stored densely; the category blocks are applied through
/// the one-hot encoders, so a product with `W_all` costs `O(n² + nQ)`.
#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    base: BaseWeights,
    encoders: Vec<OneHotMatrix>,
    lambdas: Vec<f64>,
    offsets: Vec<usize>,
    degree: Vec<f64>,
}

pub fn assemble_augmented(
    base: BaseWeights,
    encoders: Vec<OneHotMatrix>,
    lambdas: Vec<f64>,
) -> Result<AugmentedGraph> {
    let n = base.n();
    if encoders.len() != lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} encoders but {} lambdas",
            encoders.len(),
            lambdas.len()
        )));
    }
    if let Some(h) = encoders.iter().find(|h| h.rows() != n) {
        return Err(Error::DimensionMismatch(format!(
            "encoder has {} rows, base graph has {n} nodes",
            h.rows()
        )));
    }
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {bad}"
        )));
    }

    let mut offsets = Vec::with_capacity(encoders.len());
    let mut t = 0;
    for h in &encoders {
        offsets.push(t);
        t += h.cardinality();
    }

    let lambda_total: f64 = lambdas.iter().sum();
    let mut degree = Vec::with_capacity(n + t);
    degree.extend(base.degrees().iter().map(|d| d + lambda_total));
    for (h, &lam) in encoders.iter().zip(&lambdas) {
        degree.extend(h.column_sums().iter().map(|&c| lam * c as f64 + 1.0));
    }

    Ok(AugmentedGraph {
        base,
        encoders,
        lambdas,
        offsets,
        degree,
    })
}

impl AugmentedGraph {
    pub fn base(&self) -> &BaseWeights {
        &self.base
    }

    pub fn encoders(&self) -> &[OneHotMatrix] {
        &self.encoders
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn num_data_nodes(&self) -> usize {
        self.base.n()
    }

    pub fn num_extra_nodes(&self) -> usize {
        self.degree.len() - self.base.n()
    }

    /// Node index of category `category` of variable `var`.
    pub fn extra_node(&self, var: usize, category: usize) -> usize {
        self.base.n() + self.offsets[var] + category
    }

    /// Row range of variable `var`'s extra nodes.
    pub fn extra_range(&self, var: usize) -> std::ops::Range<usize> {
        let start = self.extra_node(var, 0);
        start..start + self.encoders[var].cardinality()
    }

    /// Writes the dense weight matrix with a leading degree column as CSV.
    /// Refuses graphs above [`MAX_DUMP_NODES`] nodes.
    pub fn dump_dense_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.node_count();
        if m > MAX_DUMP_NODES {
            return Err(Error::InvalidParameter(format!(
                "refusing to dump a dense {m}x{m} graph (limit {MAX_DUMP_NODES} nodes)"
            )));
        }
        let io = |source| Error::Io {
            path: "<graph dump>".into(),
            source,
        };
        let w = self.dense_weights();
        let header: Vec<String> = (0..m).map(|j| format!("w{j}")).collect();
        writeln!(out, "node,degree,{}", header.join(",")).map_err(io)?;
        for (i, row) in w.rows().into_iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{i},{},{}", self.degree[i], cells.join(",")).map_err(io)?;
        }
        Ok(())
    }
}

impl WeightedGraph for AugmentedGraph {
    fn node_count(&self) -> usize {
        self.degree.len()
    }

    fn degrees(&self) -> &[f64] {
        &self.degree
    }

    fn weight_matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.base.n();
        let (x_data, x_extra) = x.split_at(n);
        let (out_data, out_extra) = out.split_at_mut(n);
        self.base.weight_matvec(x_data, out_data);
        // identity self-loops on the extra nodes
        out_extra.copy_from_slice(x_extra);
        for ((h, &lam), &off) in self.encoders.iter().zip(&self.lambdas).zip(&self.offsets) {
            for (i, &c) in h.categories().iter().enumerate() {
                out_data[i] += lam * x_extra[off + c];
                out_extra[off + c] += lam * x_data[i];
            }
        }
    }

    fn dense_weights(&self) -> Array2<f64> {
        let n = self.base.n();
        let m = self.node_count();
        let mut w = Array2::zeros((m, m));
        w.slice_mut(ndarray::s![..n, ..n])
            .assign(&self.base.weights());
        for j in n..m {
            w[[j, j]] = 1.0;
        }
        for ((h, &lam), &off) in self.encoders.iter().zip(&self.lambdas).zip(&self.offsets) {
            for (i, &c) in h.categories().iter().enumerate() {
                w[[i, n + off + c]] = lam;
                w[[n + off + c, i]] = lam;
            }
        }
        w
    }
}

/// Volume-normalized indicator matrix: `Z(i, k) = 1/√vol(A_k)` when node `i`
/// is in cluster `k`, else 0. Satisfies `Zᵀ D Z = I_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    entries: Array2<f64>,
    labels: Vec<usize>,
    volumes: Vec<f64>,
}

impl AssignmentMatrix {
    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `vol(A_k)` with respect to the degrees the matrix was built from.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    /// Rows `range` of `Z` (e.g. the data block `X` or a category block `Y_ℓ`).
    pub fn block(&self, range: std::ops::Range<usize>) -> ArrayView2<'_, f64> {
        self.entries.slice(ndarray::s![range, ..])
    }
}

pub fn assignment_matrix(labels: &[usize], degrees: &[f64], k: usize) -> Result<AssignmentMatrix> {
    if labels.len() != degrees.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            degrees.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside 0..{k}"
        )));
    }
    let mut volumes = vec![0.0; k];
    for (&l, &d) in labels.iter().zip(degrees) {
        volumes[l] += d;
    }
    if let Some(empty) = volumes.iter().position(|&v| v <= 0.0) {
        return Err(Error::EmptyCluster(empty));
    }
    let scale: Vec<f64> = volumes.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut entries = Array2::zeros((labels.len(), k));
    for (i, &l) in labels.iter().enumerate() {
        entries[[i, l]] = scale[l];
    }
    Ok(AssignmentMatrix {
        entries,
        labels: labels.to_vec(),
        volumes,
    })
}

/// `tr(Zᵀ L Z)` for an arbitrary `rows × K` matrix, using operator products.
pub fn laplacian_trace<G: WeightedGraph + ?Sized>(
    z: ArrayView2<'_, f64>,
    graph: &G,
) -> Result<f64> {
    let m = graph.node_count();
    if z.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, graph has {m} nodes",
            z.nrows()
        )));
    }
    let mut lz = vec![0.0; m];
    let mut total = 0.0;
    for col in z.columns() {
        let col = col.to_vec();
        graph.laplacian_matvec(&col, &mut lz);
        total += col.iter().zip(&lz).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total)
}

/// The assignment energy `tr(Zᵀ L Z)`; equals the normalized cut of the
/// partition `Z` was built from.
pub fn assignment_energy<G: WeightedGraph + ?Sized>(
    z: &AssignmentMatrix,
    graph: &G,
) -> Result<f64> {
    laplacian_trace(z.entries(), graph)
}

/// `δ_ℓ(A_k, A_l)`: number of datapoints in cluster `k` whose category node
/// for variable `ℓ` sits in cluster `l`.
pub fn delta_counts(
    data_labels: &[usize],
    extra_labels: &[usize],
    encoder: &OneHotMatrix,
    k: usize,
) -> Result<Array2<usize>> {
    if data_labels.len() != encoder.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} data labels for an encoder with {} rows",
            data_labels.len(),
            encoder.rows()
        )));
    }
    if extra_labels.len() != encoder.cardinality() {
        return Err(Error::DimensionMismatch(format!(
            "{} extra-node labels for {} categories",
            extra_labels.len(),
            encoder.cardinality()
        )));
    }
    if let Some(&bad) = data_labels.iter().chain(extra_labels).find(|&&l| l >= k) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside 0..{k}"
        )));
    }
    let mut delta = Array2::zeros((k, k));
    for (&a, &c) in data_labels.iter().zip(encoder.categories()) {
        delta[[a, extra_labels[c]]] += 1;
    }
    Ok(delta)
}
