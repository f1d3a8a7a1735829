//! Mixed-type datasets and their categorical encoders.

mod load;
mod synthetic;

pub use load::{load_mixed_csv, ColumnRole, ColumnSchema, LoadOptions, LoadedDataset};
pub use synthetic::{generate_synthetic, CorruptionMode, SyntheticParams};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

/// `n` datapoints with `R` numeric and `Q` categorical features.
///
/// Categorical entries are dense indices: entry `(i, ℓ)` lies in
/// `0..cardinalities[ℓ]`. Construction does not require every level to be
/// used; [`MixedDataset::prune_unused_categories`] drops unused levels, and
/// the clustering pipelines call it before building graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    numeric: Array2<f64>,
    categorical: Array2<usize>,
    cardinalities: Vec<usize>,
}

impl MixedDataset {
    pub fn new(
        numeric: Array2<f64>,
        categorical: Array2<usize>,
        cardinalities: Vec<usize>,
    ) -> Result<Self> {
        let n = numeric.nrows();
        if categorical.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "numeric part has {n} rows, categorical part has {}",
                categorical.nrows()
            )));
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if numeric.ncols() + categorical.ncols() == 0 {
            return Err(Error::InvalidDataset("dataset has no features".into()));
        }
        if cardinalities.len() != categorical.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} cardinalities for {} categorical columns",
                cardinalities.len(),
                categorical.ncols()
            )));
        }
        for (l, (col, &t)) in categorical
            .columns()
            .into_iter()
            .zip(&cardinalities)
            .enumerate()
        {
            if t == 0 {
                return Err(Error::InvalidDataset(format!(
                    "categorical variable {l} has zero categories"
                )));
            }
            if let Some(&bad) = col.iter().find(|&&c| c >= t) {
                return Err(Error::InvalidDataset(format!(
                    "categorical variable {l} has entry {bad} outside 0..{t}"
                )));
            }
        }
        if numeric.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset(
                "numeric part contains non-finite values".into(),
            ));
        }
        Ok(Self {
            numeric,
            categorical,
            cardinalities,
        })
    }

    pub fn numeric_only(numeric: Array2<f64>) -> Result<Self> {
        let n = numeric.nrows();
        Self::new(numeric, Array2::zeros((n, 0)), Vec::new())
    }

    pub fn categorical_only(categorical: Array2<usize>, cardinalities: Vec<usize>) -> Result<Self> {
        let n = categorical.nrows();
        Self::new(Array2::zeros((n, 0)), categorical, cardinalities)
    }

    /// Number of datapoints `n`.
    pub fn len(&self) -> usize {
        self.numeric.nrows()
    }

    /// Always false; a dataset holds at least one row.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of numeric features `R`.
    pub fn num_numeric(&self) -> usize {
        self.numeric.ncols()
    }

    /// Number of categorical features `Q`.
    pub fn num_categorical(&self) -> usize {
        self.categorical.ncols()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// Total number of categories `t = Σ t_ℓ`.
    pub fn total_categories(&self) -> usize {
        self.cardinalities.iter().sum()
    }

    pub fn numeric(&self) -> ArrayView2<'_, f64> {
        self.numeric.view()
    }

    pub fn categorical(&self) -> ArrayView2<'_, usize> {
        self.categorical.view()
    }

    pub fn categorical_column(&self, var: usize) -> ArrayView1<'_, usize> {
        self.categorical.column(var)
    }

    /// Per-category datapoint counts of variable `var`.
    pub fn category_counts(&self, var: usize) -> Vec<usize> {
        let mut counts = vec![0; self.cardinalities[var]];
        for &c in self.categorical.column(var) {
            counts[c] += 1;
        }
        counts
    }

    /// The same datapoints with the numeric part dropped.
    pub fn categorical_part(&self) -> Result<Self> {
        if self.num_categorical() == 0 {
            return Err(Error::CategoricalFeaturesRequired);
        }
        Self::categorical_only(self.categorical.clone(), self.cardinalities.clone())
    }

    /// Drops category levels that no datapoint uses, re-indexing the
    /// surviving levels in their original order.
    pub fn prune_unused_categories(&self) -> Self {
        let mut categorical = self.categorical.clone();
        let mut cardinalities = Vec::with_capacity(self.cardinalities.len());
        for (var, mut col) in categorical.columns_mut().into_iter().enumerate() {
            let counts = self.category_counts(var);
            let mut remap = vec![usize::MAX; counts.len()];
            let mut next = 0;
            for (level, &count) in counts.iter().enumerate() {
                if count > 0 {
                    remap[level] = next;
                    next += 1;
                }
            }
            col.mapv_inplace(|c| remap[c]);
            cardinalities.push(next);
        }
        Self {
            numeric: self.numeric.clone(),
            categorical,
            cardinalities,
        }
    }

    /// One-hot encoder of categorical variable `var` (zero-based).
    pub fn one_hot(&self, var: usize) -> Result<OneHotMatrix> {
        if var >= self.num_categorical() {
            return Err(Error::InvalidParameter(format!(
                "categorical variable index {var} out of range (Q = {})",
                self.num_categorical()
            )));
        }
        Ok(OneHotMatrix::new(
            self.categorical.column(var).to_vec(),
            self.cardinalities[var],
        ))
    }

    /// Encoders for all `Q` categorical variables.
    pub fn encoders(&self) -> Vec<OneHotMatrix> {
        (0..self.num_categorical())
            .map(|var| {
                OneHotMatrix::new(
                    self.categorical.column(var).to_vec(),
                    self.cardinalities[var],
                )
            })
            .collect()
    }
}

/// Standardizes every numeric column to mean 0 and population standard
/// deviation 1. Constant columns become all zeros; the categorical part is
/// untouched.
pub fn standardize_numeric(ds: &MixedDataset) -> MixedDataset {
    let mut out = ds.clone();
    let n = ds.len() as f64;
    for mut col in out.numeric.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|x| (x - mean) / std);
        }
    }
    out
}

/// Binary `n × t_ℓ` indicator matrix of one categorical variable, stored as
/// the category index of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMatrix {
    categories: Vec<usize>,
    column_sums: Vec<usize>,
}

impl OneHotMatrix {
    /// # Panics
    /// If any category index is `>= cardinality`.
    pub fn new(categories: Vec<usize>, cardinality: usize) -> Self {
        let mut column_sums = vec![0; cardinality];
        for &c in &categories {
            column_sums[c] += 1;
        }
        Self {
            categories,
            column_sums,
        }
    }

    pub fn rows(&self) -> usize {
        self.categories.len()
    }

    pub fn cardinality(&self) -> usize {
        self.column_sums.len()
    }

    /// Category of row `i`, i.e. the column holding its single 1.
    pub fn category(&self, i: usize) -> usize {
        self.categories[i]
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    /// Number of datapoints in each category (the diagonal of `Hᵀ H`).
    pub fn column_sums(&self) -> &[usize] {
        &self.column_sums
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.categories[i] == j)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut h = Array2::zeros((self.rows(), self.cardinality()));
        for (i, &c) in self.categories.iter().enumerate() {
            h[[i, c]] = 1.0;
        }
        h
    }
}
