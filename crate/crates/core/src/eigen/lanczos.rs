//! Lanczos iteration with full reorthogonalization for the smallest
//! eigenpairs of a symmetric operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{dot, tql};
use super::SymmetricOperator;
use crate::{Error, Result};

pub(crate) struct LanczosOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn random_unit_orthogonal(rng: &mut ChaCha8Rng, n: usize, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, basis);
        orthogonalize(&mut v, basis);
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            return Some(v);
        }
    }
    None
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(q, w);
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= c * qi;
        }
    }
}

/// Ritz values (ascending) and their eigenvectors (row-major, one per row) of
/// the `m × m` tridiagonal with diagonal `alpha` and off-diagonal `beta`.
fn ritz(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = alpha.len();
    let mut z = vec![0.0; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }
    let values = tql(alpha, &beta[..m - 1], Some(&mut z))?;
    Ok((values, z))
}

/// The `k` algebraically smallest eigenpairs of `op`.
///
/// Converged when every wanted Ritz pair has estimated residual
/// `|β_m s_m| <= tol·max(1, ‖A‖)`. The Krylov basis is capped at
/// `min(dim, max_steps)` vectors; reaching the cap unconverged is an error.
/// An invariant subspace restarts the iteration from a fresh random vector
/// orthogonal to the current basis.
pub(crate) fn lanczos_smallest(
    op: &dyn SymmetricOperator,
    k: usize,
    tol: f64,
    max_steps: usize,
    seed: u64,
) -> Result<LanczosOutput> {
    let n = op.dim();
    let limit = max_steps.min(n).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut anorm = 0.0f64;
    let mut last_check = 0;

    let mut v = random_unit_orthogonal(&mut rng, n, &basis).expect("n >= 1");
    let mut w = vec![0.0; n];
    loop {
        op.apply(&v, &mut w);
        let a = dot(&w, &v);
        let j = alpha.len();
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= a * vi;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, pi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * pi;
            }
        }
        basis.push(v.clone());
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, &basis);
        let mut b = dot(&w, &w).sqrt();
        anorm = anorm.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));

        let m = basis.len();
        let breakdown = b <= 1e-10 * anorm.max(1.0);
        let at_limit = m >= limit;
        let due = m >= k && (m - last_check >= (m / 10).max(5) || breakdown || at_limit);

        if due {
            last_check = m;
            let (values, z) = ritz(&alpha, &beta)?;
            let anorm_ritz = values.iter().fold(anorm, |acc, x| acc.max(x.abs()));
            let threshold = tol * anorm_ritz.max(1.0);
            // After a breakdown below full dimension, repeated eigenvalues may
            // still be missing from the basis, so keep going from a new vector.
            let converged = if breakdown {
                m == n
            } else {
                (0..k).all(|i| (b * z[i * m + m - 1]).abs() <= threshold)
            };
            if converged {
                let vectors = (0..k)
                    .map(|i| {
                        let mut x = vec![0.0; n];
                        for (s, q) in z[i * m..(i + 1) * m].iter().zip(&basis) {
                            for (xi, qi) in x.iter_mut().zip(q) {
                                *xi += s * qi;
                            }
                        }
                        let norm = dot(&x, &x).sqrt();
                        x.iter_mut().for_each(|xi| *xi /= norm);
                        x
                    })
                    .collect();
                return Ok(LanczosOutput {
                    values: values[..k].to_vec(),
                    vectors,
                });
            }
        }
        if at_limit {
            return Err(Error::NoConvergence { iterations: m });
        }

        if breakdown {
            match random_unit_orthogonal(&mut rng, n, &basis) {
                Some(fresh) => {
                    v = fresh;
                    b = 0.0;
                }
                None => return Err(Error::NoConvergence { iterations: m }),
            }
        } else {
            v = w.iter().map(|x| x / b).collect();
        }
        beta.push(b);
    }
}
