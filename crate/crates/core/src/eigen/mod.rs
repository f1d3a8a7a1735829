//! Smallest eigenpairs of symmetric matrices and of the normalized graph
//! problem `L v = μ D v`.
//!
//! Problems up to [`EigenOptions::dense_limit`] rows are tridiagonalized and
//! solved densely; larger ones go through Lanczos with full
//! reorthogonalization, touching the matrix only through products.

mod dense;
mod lanczos;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;
use crate::{Error, Result};

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.rows()) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Dense up to the dense limit, Lanczos above it.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub solver: SolverKind,
    pub dense_limit: usize,
    /// Relative residual target for Lanczos convergence.
    pub tol: f64,
    /// Krylov basis cap; `None` means `10 · dim` (effectively the dimension).
    pub max_lanczos_steps: Option<usize>,
    /// Seeds the random start vectors.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Auto,
            dense_limit: 2048,
            tol: 1e-8,
            max_lanczos_steps: None,
            seed: 0x5eed,
        }
    }
}

impl EigenOptions {
    fn resolve(&self, dim: usize) -> SolverKind {
        match self.solver {
            SolverKind::Auto if dim <= self.dense_limit => SolverKind::Dense,
            SolverKind::Auto => SolverKind::Lanczos,
            other => other,
        }
    }

    fn lanczos_steps(&self, dim: usize) -> usize {
        self.max_lanczos_steps.unwrap_or(10 * dim)
    }
}

/// Eigenvalues in ascending order with eigenvectors as columns.
///
/// Each vector is sign-normalized so that its largest-magnitude entry is
/// positive. `residuals[i]` is the measured residual of pair `i` under the
/// problem that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
    pub residuals: Vec<f64>,
    pub solver: SolverKind,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    fn from_columns(
        values: Vec<f64>,
        columns: Vec<Vec<f64>>,
        dim: usize,
        solver: SolverKind,
    ) -> Self {
        let mut vectors = Array2::zeros((dim, columns.len()));
        for (j, mut col) in columns.into_iter().enumerate() {
            fix_sign(&mut col);
            vectors
                .column_mut(j)
                .assign(&ndarray::ArrayView1::from(&col));
        }
        let residuals = vec![0.0; values.len()];
        Self {
            values,
            vectors,
            residuals,
            solver,
        }
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_count(k: usize, dim: usize) -> Result<()> {
    if k > dim {
        return Err(Error::TooFewRows {
            requested: k,
            available: dim,
        });
    }
    Ok(())
}

fn residual_norm(op: &dyn SymmetricOperator, value: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    av.iter()
        .zip(v)
        .map(|(a, x)| (a - value * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn solve_symmetric(
    dense: Option<&[f64]>,
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let dim = op.dim();
    if k == 0 {
        return Ok(EigenPairs::from_columns(
            vec![],
            vec![],
            dim,
            SolverKind::Dense,
        ));
    }
    let (values, columns, solver) = match (opts.resolve(dim), dense) {
        (SolverKind::Dense, Some(a)) => {
            let (values, columns) = dense::dense_smallest(a, dim, k, opts.seed)?;
            (values, columns, SolverKind::Dense)
        }
        _ => {
            let out =
                lanczos::lanczos_smallest(op, k, opts.tol, opts.lanczos_steps(dim), opts.seed)?;
            (out.values, out.vectors, SolverKind::Lanczos)
        }
    };
    let mut pairs = EigenPairs::from_columns(values, columns, dim, solver);
    pairs.residuals = pairs
        .vectors
        .columns()
        .into_iter()
        .zip(&pairs.values)
        .map(|(col, &value)| residual_norm(op, value, &col.to_vec()))
        .collect();
    Ok(pairs)
}

/// The `k` algebraically smallest eigenpairs of a dense symmetric matrix.
pub fn symmetric_smallest_eigs(
    a: ArrayView2<'_, f64>,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}",
            n,
            a.ncols()
        )));
    }
    check_count(k, n)?;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let owned = a.as_standard_layout().into_owned();
    let flat = owned.as_slice().expect("standard layout");
    solve_symmetric(Some(flat), &owned, k, opts)
}

/// The `k` smallest eigenpairs of a symmetric operator, always by Lanczos.
pub fn operator_smallest_eigs(
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    check_count(k, op.dim())?;
    let opts = EigenOptions {
        solver: SolverKind::Lanczos,
        ..opts.clone()
    };
    solve_symmetric(None, op, k, &opts)
}

/// `x ↦ x - D^{-1/2} W D^{-1/2} x`.
struct NormalizedLaplacian<'a, G: ?Sized> {
    graph: &'a G,
    inv_sqrt_degree: Vec<f64>,
}

impl<G: WeightedGraph + ?Sized> SymmetricOperator for NormalizedLaplacian<'_, G> {
    fn dim(&self) -> usize {
        self.inv_sqrt_degree.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let scaled: Vec<f64> = x
            .iter()
            .zip(&self.inv_sqrt_degree)
            .map(|(a, s)| a * s)
            .collect();
        self.graph.weight_matvec(&scaled, y);
        for ((yi, xi), s) in y.iter_mut().zip(x).zip(&self.inv_sqrt_degree) {
            *yi = xi - s * *yi;
        }
    }
}

/// The `k` smallest pairs of `L v = μ D v` with `L = D - W`.
///
/// Solved through `L_sym = D^{-1/2} L D^{-1/2}` and mapped back with
/// `v = D^{-1/2} u`, so the vectors are `D`-orthonormal. Eigenvalues lie in
/// `[0, 2]`; residuals are `‖L v - μ D v‖₂`.
pub fn generalized_smallest_eigs<G: WeightedGraph + ?Sized>(
    graph: &G,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let dim = graph.node_count();
    check_count(k, dim)?;
    let degrees = graph.degrees();
    if let Some(i) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegree(i));
    }
    let inv_sqrt_degree: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let op = NormalizedLaplacian {
        graph,
        inv_sqrt_degree,
    };

    let mut pairs = if opts.resolve(dim) == SolverKind::Dense {
        let mut l_sym = graph.dense_weights();
        for ((i, j), w) in l_sym.indexed_iter_mut() {
            let scaled = *w * op.inv_sqrt_degree[i] * op.inv_sqrt_degree[j];
            *w = if i == j { 1.0 - scaled } else { -scaled };
        }
        let flat = l_sym.as_slice().expect("standard layout");
        solve_symmetric(Some(flat), &op, k, opts)?
    } else {
        solve_symmetric(None, &op, k, opts)?
    };

    for mut col in pairs.vectors.columns_mut() {
        for (x, s) in col.iter_mut().zip(&op.inv_sqrt_degree) {
            *x *= s;
        }
    }
    let mut lv = vec![0.0; dim];
    pairs.residuals = pairs
        .vectors
        .columns()
        .into_iter()
        .zip(&pairs.values)
        .map(|(col, &mu)| {
            let v = col.to_vec();
            graph.laplacian_matvec(&v, &mut lv);
            lv.iter()
                .zip(&v)
                .zip(degrees)
                .map(|((l, x), d)| (l - mu * d * x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DenseGraph;
    use ndarray::array;

    #[test]
    fn identity_spectrum() {
        let a = Array2::<f64>::eye(4);
        let pairs = symmetric_smallest_eigs(a.view(), 2, &EigenOptions::default()).unwrap();
        assert_eq!(pairs.values, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum() {
        let a = array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let pairs = symmetric_smallest_eigs(a.view(), 2, &EigenOptions::default()).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-14);
        assert!((pairs.values[1] - 2.0).abs() < 1e-14);
        assert!((pairs.vectors[[1, 0]] - 1.0).abs() < 1e-14);
        assert!((pairs.vectors[[2, 1]] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_requests() {
        let a = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            symmetric_smallest_eigs(a.view(), 1, &EigenOptions::default()),
            Err(Error::NotSymmetric(_))
        ));
        let a = Array2::<f64>::eye(2);
        assert!(matches!(
            symmetric_smallest_eigs(a.view(), 3, &EigenOptions::default()),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn triangle_generalized_spectrum() {
        let g = DenseGraph::new(array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]).unwrap();
        let pairs = generalized_smallest_eigs(&g, 3, &EigenOptions::default()).unwrap();
        for (got, want) in pairs.values.iter().zip([0.0, 1.5, 1.5]) {
            assert!((got - want).abs() < 1e-12, "{got}");
        }
        let v0 = pairs.vectors.column(0);
        assert!((v0[0] - v0[1]).abs() < 1e-12 && (v0[1] - v0[2]).abs() < 1e-12);
    }

    #[test]
    fn zero_degree_rejected() {
        let g = DenseGraph::new(array![[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            generalized_smallest_eigs(&g, 1, &EigenOptions::default()),
            Err(Error::ZeroDegree(0))
        ));
    }

    #[test]
    fn lanczos_reports_non_convergence() {
        let n = 60;
        let a = Array2::from_shape_fn((n, n), |(i, j)| if i == j { i as f64 } else { 0.01 });
        let opts = EigenOptions {
            max_lanczos_steps: Some(4),
            ..EigenOptions::default()
        };
        assert!(matches!(
            operator_smallest_eigs(&a, 3, &opts),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn lanczos_handles_repeated_eigenvalues() {
        let a = Array2::<f64>::eye(6) * 2.0;
        let pairs = operator_smallest_eigs(&a, 3, &EigenOptions::default()).unwrap();
        assert_eq!(pairs.values.len(), 3);
        let gram = pairs.vectors.t().dot(&pairs.vectors);
        assert!((&gram - &Array2::<f64>::eye(3))
            .iter()
            .all(|x| x.abs() < 1e-12));
    }
}
