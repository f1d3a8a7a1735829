#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use specmix::dataset::MixedDataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let g = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
    (&g + &g.t()) * 0.5
}

/// Symmetric nonnegative weights; a ring of positive edges keeps it
/// connected.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Array2<f64> {
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            if rng.random::<f64>() < density {
                let x = rng.random::<f64>();
                w[[i, j]] = x;
                w[[j, i]] = x;
            }
        }
    }
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j {
            let x = 0.1 + rng.random::<f64>();
            w[[i, j]] = x;
            w[[j, i]] = x;
        }
    }
    w
}

/// Random mixed dataset with every category used at least once.
pub fn random_mixed(
    rng: &mut ChaCha8Rng,
    n: usize,
    r: usize,
    q: usize,
    max_card: usize,
) -> MixedDataset {
    let numeric = Array2::from_shape_fn((n, r), |_| rng.sample::<f64, _>(StandardNormal));
    let cards: Vec<usize> = (0..q)
        .map(|_| rng.random_range(1..=max_card.min(n)))
        .collect();
    let mut categorical = Array2::zeros((n, q));
    for (var, &card) in cards.iter().enumerate() {
        for i in 0..n {
            categorical[[i, var]] = if i < card {
                i
            } else {
                rng.random_range(0..card)
            };
        }
    }
    MixedDataset::new(numeric, categorical, cards).unwrap()
}

/// All eigenpairs ascending, eigenvectors as columns.
pub fn dense_eigs(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let eig = nalgebra::SymmetricEigen::new(to_na(a));
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Array2::from_shape_fn((a.nrows(), a.nrows()), |(r, c)| {
        eig.eigenvectors[(r, idx[c])]
    });
    (values, vectors)
}

/// All pairs of `L v = μ D v` for dense weights `w`, vectors `D`-orthonormal.
pub fn generalized_oracle(w: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = w.nrows();
    let d: Vec<f64> = w.rows().into_iter().map(|r| r.sum()).collect();
    let l_sym = Array2::from_shape_fn((n, n), |(i, j)| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - w[[i, j]] / (d[i] * d[j]).sqrt()
    });
    let (values, mut vectors) = dense_eigs(&l_sym);
    for (mut row, &di) in vectors.rows_mut().into_iter().zip(&d) {
        row /= di.sqrt();
    }
    (values, vectors)
}

/// Sine of the largest principal angle between the column spaces of two
/// matrices with orthonormal columns.
pub fn sin_theta(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let proj = a.dot(&a.t().dot(b));
    let resid = to_na(&(b - &proj));
    resid.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Orthonormal basis of the columns of `a` (thin QR).
pub fn orthonormalize(a: &Array2<f64>) -> Array2<f64> {
    from_na(&to_na(a).qr().q())
}

/// `D^{1/2} V`, turning `D`-orthonormal columns into orthonormal ones.
pub fn scale_by_sqrt(v: &Array2<f64>, d: &[f64]) -> Array2<f64> {
    let mut out = v.clone();
    for (mut row, &di) in out.rows_mut().into_iter().zip(d) {
        row *= di.sqrt();
    }
    out
}

pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
