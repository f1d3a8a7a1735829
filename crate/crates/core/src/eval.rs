//! Clustering quality metrics.

use ndarray::Array2;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest label count for which `label_agreement` matches clusters exactly.
pub const EXACT_MATCHING_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurityMode {
    /// `(1/n) Σ_k max_j count(k, j)`.
    #[default]
    Weighted,
    /// Mean over nonempty predicted clusters of the majority fraction.
    Macro,
}

/// Counts of (predicted, true) label pairs. Labels are used as indices, so
/// the table is `(max pred + 1) × (max truth + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Array2<usize>,
    n: usize,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predicted labels vs {} true labels",
                pred.len(),
                truth.len()
            )));
        }
        let rows = pred.iter().max().map_or(0, |m| m + 1);
        let cols = truth.iter().max().map_or(0, |m| m + 1);
        let mut counts = Array2::zeros((rows, cols));
        for (&p, &t) in pred.iter().zip(truth) {
            counts[[p, t]] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len(),
        })
    }

    pub fn counts(&self) -> &Array2<usize> {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn nonempty_rows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.rows().into_iter().filter_map(|row| {
            let size: usize = row.sum();
            (size > 0).then(|| (row.iter().copied().max().unwrap_or(0), size))
        })
    }
}

pub fn purity(pred: &[usize], truth: &[usize], mode: PurityMode) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(match mode {
        PurityMode::Weighted => {
            table
                .nonempty_rows()
                .map(|(majority, _)| majority)
                .sum::<usize>() as f64
                / table.n as f64
        }
        PurityMode::Macro => {
            // Summed in sorted order so relabeling clusters cannot change
            // the rounding.
            let mut fractions: Vec<f64> = table
                .nonempty_rows()
                .map(|(majority, size)| majority as f64 / size as f64)
                .collect();
            fractions.sort_by(f64::total_cmp);
            fractions.iter().sum::<f64>() / fractions.len() as f64
        }
    })
}

/// Smallest class size over largest class size.
pub fn imbalance_ratio(truth: &[usize]) -> Result<f64> {
    let mut sizes = vec![0usize; truth.iter().max().map_or(0, |m| m + 1)];
    for &t in truth {
        sizes[t] += 1;
    }
    let present: Vec<usize> = sizes.into_iter().filter(|&s| s > 0).collect();
    let (Some(&min), Some(&max)) = (present.iter().min(), present.iter().max()) else {
        return Err(Error::EmptyDataset);
    };
    Ok(min as f64 / max as f64)
}

/// Fraction of positions on which `a` agrees with the best relabeling of `b`.
///
/// Clusters are matched one-to-one by maximum-weight assignment on the
/// contingency table when both labelings use at most
/// [`EXACT_MATCHING_LIMIT`] ids, and greedily by largest overlap otherwise.
pub fn label_agreement(a: &[usize], b: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    if table.n == 0 {
        return Ok(1.0);
    }
    let counts = &table.counts;
    let size = counts.nrows().max(counts.ncols());
    let matched = if size <= EXACT_MATCHING_LIMIT {
        let weights = Matrix::from_fn(size, size, |(i, j)| {
            counts.get((i, j)).map_or(0, |&c| c as i64)
        });
        kuhn_munkres(&weights).0 as usize
    } else {
        let mut cells: Vec<(usize, usize, usize)> = counts
            .indexed_iter()
            .map(|((i, j), &c)| (c, i, j))
            .filter(|c| c.0 > 0)
            .collect();
        cells.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut row_used = vec![false; counts.nrows()];
        let mut col_used = vec![false; counts.ncols()];
        let mut total = 0;
        for (c, i, j) in cells {
            if !row_used[i] && !col_used[j] {
                row_used[i] = true;
                col_used[j] = true;
                total += c;
            }
        }
        total
    };
    Ok(matched as f64 / table.n as f64)
}
