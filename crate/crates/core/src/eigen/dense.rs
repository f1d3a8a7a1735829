//! Dense symmetric eigensolver: Householder tridiagonalization, implicit QL
//! for the spectrum, inverse iteration for the wanted eigenvectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

const PAR_MIN_DIM: usize = 256;

/// `Qᵀ A Q = T` with `Q = H_0 H_1 … H_{n-3}`.
pub(crate) struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i] = T(i, i+1)`, length `n - 1`.
    pub off: Vec<f64>,
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    /// Maps an eigenvector of `T` to one of `A`.
    pub fn back_transform(&self, y: &mut [f64]) {
        for (k, (tau, v)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let tail = &mut y[k + 1..];
            let s = tau * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }
}

/// Reduces the row-major symmetric `n × n` matrix `a` (overwritten).
pub(crate) fn tridiagonalize(mut a: Vec<f64>, n: usize) -> Tridiagonal {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        diag[k] = a[k * n + k];
        let alpha = a[(k + 1) * n + k];
        let xnorm = (k + 2..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            off[k] = alpha;
            reflectors.push((0.0, Vec::new()));
            continue;
        }
        let beta = -alpha.hypot(xnorm).copysign(alpha);
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        let mut v = Vec::with_capacity(m);
        v.push(1.0);
        v.extend((k + 2..n).map(|i| a[i * n + k] * scale));
        off[k] = beta;

        // p = τ A22 v, w = p - (τ/2)(pᵀv) v, A22 -= v wᵀ + w vᵀ
        let lo = k + 1;
        let rows = &mut a[lo * n..];
        let mut p = vec![0.0; m];
        let row_p = |(pi, row): (&mut f64, &[f64])| *pi = tau * dot(&row[lo..], &v);
        if m >= PAR_MIN_DIM {
            p.par_iter_mut().zip(rows.par_chunks(n)).for_each(row_p);
        } else {
            p.iter_mut().zip(rows.chunks(n)).for_each(row_p);
        }
        let half = -0.5 * tau * dot(&p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi + half * vi).collect();
        let update = |(i, row): (usize, &mut [f64])| {
            let (vi, wi) = (v[i], w[i]);
            for ((x, vj), wj) in row[lo..].iter_mut().zip(&v).zip(&w) {
                *x -= vi * wj + wi * vj;
            }
        };
        if m >= PAR_MIN_DIM {
            rows.par_chunks_mut(n).enumerate().for_each(update);
        } else {
            rows.chunks_mut(n).enumerate().for_each(update);
        }
        reflectors.push((tau, v));
    }
    match n {
        0 => {}
        1 => diag[0] = a[0],
        _ => {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            diag[n - 1] = a[(n - 1) * n + n - 1];
            off[n - 2] = a[(n - 1) * n + n - 2];
        }
    }
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Implicit QL on a symmetric tridiagonal matrix. Returns eigenvalues in
/// ascending order; when `vectors` is given (row-major `n × n`, initialised
/// by the caller, usually to the identity) row `i` receives the eigenvector
/// of the `i`-th returned eigenvalue.
pub(crate) fn tql(diag: &[f64], off: &[f64], mut vectors: Option<&mut [f64]>) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence { iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = vectors.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zi1 = &mut tail[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    if let Some(z) = vectors {
        let old = z.to_vec();
        for (dst, &src) in order.iter().enumerate() {
            z[dst * n..(dst + 1) * n].copy_from_slice(&old[src * n..(src + 1) * n]);
        }
    }
    Ok(order.into_iter().map(|i| d[i]).collect())
}

fn tridiagonal_norm(diag: &[f64], off: &[f64]) -> f64 {
    (0..diag.len())
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = off.get(i).map_or(0.0, |x| x.abs());
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

/// LU factorization of `T - shift·I` with partial pivoting.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
        let mut u1: Vec<f64> = off.to_vec();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            let sub = off[i];
            let next_diag = diag[i + 1] - shift;
            let next_off = off.get(i + 1).copied().unwrap_or(0.0);
            if u0[i].abs() >= sub.abs() {
                if u0[i] == 0.0 {
                    u0[i] = tiny;
                }
                let m = sub / u0[i];
                mult[i] = m;
                u0[i + 1] = next_diag - m * u1[i];
                u1[i + 1] = next_off - m * u2[i];
            } else {
                let m = u0[i] / sub;
                mult[i] = m;
                swapped[i] = true;
                let (old1, old2) = (u1[i], u2[i]);
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_off;
                u0[i + 1] = old1 - m * next_diag;
                u1[i + 1] = old2 - m * next_off;
            }
        }
        for p in &mut u0 {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * b[i + 2];
            }
            b[i] = s / self.u0[i];
        }
    }
}

/// Eigenvectors of `T` for the given ascending eigenvalues by inverse
/// iteration, orthogonalizing within clusters of close eigenvalues.
/// Returns `None` when a vector fails its residual check.
fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    values: &[f64],
    seed: u64,
) -> Option<Vec<Vec<f64>>> {
    let n = diag.len();
    let tnorm = tridiagonal_norm(diag, off);
    if tnorm == 0.0 {
        return Some(
            (0..values.len())
                .map(|j| {
                    let mut v = vec![0.0; n];
                    v[j] = 1.0;
                    v
                })
                .collect(),
        );
    }
    let eps = f64::EPSILON;
    let tiny = eps * tnorm;
    let separation = 10.0 * eps * tnorm;
    let cluster_gap = 1e-3 * tnorm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    for (j, &value) in values.iter().enumerate() {
        if j > 0 && value - values[j - 1] > cluster_gap {
            cluster_start = j;
        }
        let mut shift = value;
        if shift - prev_shift < separation {
            shift = prev_shift + separation;
        }
        prev_shift = shift;

        let lu = ShiftedLu::new(diag, off, shift, tiny);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..4 {
            lu.solve(&mut x);
            for q in &vectors[cluster_start..j] {
                let c = dot(q, &x);
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= c * qi;
                }
            }
            let norm = dot(&x, &x).sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|xi| *xi /= norm);
        }
        if tridiagonal_residual(diag, off, value, &x) > 1e-10 * tnorm.max(1.0) {
            return None;
        }
        vectors.push(x);
    }
    Some(vectors)
}

fn tridiagonal_residual(diag: &[f64], off: &[f64], value: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = (diag[i] - value) * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r += off[i] * x[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// The `k` smallest eigenpairs of the row-major symmetric matrix `a`.
/// Vectors are returned as separate unit-norm columns.
pub(crate) fn dense_smallest(
    a: &[f64],
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let tri = tridiagonalize(a.to_vec(), n);
    let spectrum = tql(&tri.diag, &tri.off, None)?;
    let values = spectrum[..k].to_vec();

    let mut vectors = if 4 * k <= n {
        inverse_iteration(&tri.diag, &tri.off, &values, seed)
    } else {
        None
    };
    if vectors.is_none() {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        tql(&tri.diag, &tri.off, Some(&mut z))?;
        vectors = Some(z.chunks_exact(n).take(k).map(<[f64]>::to_vec).collect());
    }
    let mut vectors = vectors.expect("set above");
    for v in &mut vectors {
        tri.back_transform(v);
    }
    Ok((values, vectors))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    fn residual(a: &[f64], n: usize, value: f64, v: &[f64]) -> f64 {
        (0..n)
            .map(|i| (dot(&a[i * n..(i + 1) * n], v) - value * v[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn tridiagonal_preserves_spectrum_trace() {
        let n = 9;
        let a = random_symmetric(n, 3);
        let tri = tridiagonalize(a.clone(), n);
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        assert!((tri.diag.iter().sum::<f64>() - trace).abs() < 1e-12);
    }

    #[test]
    fn inverse_iteration_and_full_ql_agree() {
        for &(n, k) in &[(40, 3), (40, 20), (7, 7), (2, 1), (1, 1)] {
            let a = random_symmetric(n, n as u64);
            let (values, vectors) = dense_smallest(&a, n, k, 1).unwrap();
            for (value, v) in values.iter().zip(&vectors) {
                assert!((dot(v, v) - 1.0).abs() < 1e-12);
                assert!(residual(&a, n, *value, v) < 1e-11, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = if i % 3 == 0 { 2.0 } else { 5.0 };
        }
        let (values, vectors) = dense_smallest(&a, n, 3, 0).unwrap();
        assert_eq!(values, vec![2.0, 2.0, 2.0]);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&vectors[i], &vectors[j]) - expect).abs() < 1e-12);
            }
            assert!(residual(&a, n, 2.0, &vectors[i]) < 1e-12);
        }
    }
}
