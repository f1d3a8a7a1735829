//! Lloyd's K-means with k-means++ seeding and parallel restarts.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once an iteration improves inertia by less than `tol` relative.
    pub tol: f64,
    pub seed: u64,
    /// Scale every row to unit length before clustering.
    #[serde(default)]
    pub normalize_rows: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
            normalize_rows: false,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "restarts and max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each completed iteration.
    pub inertia_trace: Vec<f64>,
    /// Number of empty clusters reseeded during the run.
    pub repairs: usize,
    /// Index of the winning restart.
    pub restart: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Nearest center (lowest index on ties) and its squared distance.
fn nearest(x: ArrayView1<'_, f64>, centers: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.rows().into_iter().enumerate() {
        let d = sq_dist(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia_of(points: ArrayView2<'_, f64>, labels: &[usize], centers: &Array2<f64>) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(x, &l)| sq_dist(x, centers.row(l)))
        .sum()
}

fn means(points: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut centers = Array2::zeros((k, points.ncols()));
    let mut sizes = vec![0usize; k];
    for (x, &l) in points.rows().into_iter().zip(labels) {
        centers.row_mut(l).scaled_add(1.0, &x);
        sizes[l] += 1;
    }
    for (mut row, &s) in centers.rows_mut().into_iter().zip(&sizes) {
        if s > 0 {
            row /= s as f64;
        }
    }
    centers
}

/// k-means++: first center uniform, the rest drawn proportionally to the
/// squared distance to the nearest chosen center.
fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|x| sq_dist(x, points.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // Rounding can run past the last positive weight.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for (d, x) in d2.iter_mut().zip(points.rows()) {
            *d = d.min(sq_dist(x, points.row(pick)));
        }
    }
    centers
}

/// Lloyd iterations from the given centers.
///
/// Each iteration assigns points to their nearest center, reseeds any empty
/// cluster at the point farthest from its own center (taken from a cluster
/// with at least two members), then recomputes the means. Iteration stops
/// when the labels are stable, the relative inertia improvement drops below
/// `tol`, or after `max_iters` iterations.
pub fn lloyd(
    points: ArrayView2<'_, f64>,
    initial_centers: Array2<f64>,
    max_iters: usize,
    tol: f64,
) -> KMeansResult {
    let n = points.nrows();
    let k = initial_centers.nrows();
    let mut centers = initial_centers;
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut repairs = 0;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = points
            .rows()
            .into_iter()
            .map(|x| nearest(x, &centers))
            .collect();
        let mut next: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let mut dist: Vec<f64> = assigned.iter().map(|a| a.1).collect();

        let mut sizes = vec![0usize; k];
        for &l in &next {
            sizes[l] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let donor =
                (0..n)
                    .filter(|&i| sizes[next[i]] >= 2)
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dist[b] >= dist[i] => Some(b),
                        _ => Some(i),
                    });
            if let Some(i) = donor {
                sizes[next[i]] -= 1;
                sizes[empty] += 1;
                next[i] = empty;
                dist[i] = 0.0;
                centers.row_mut(empty).assign(&points.row(i));
                repairs += 1;
            }
        }

        let stable = next == labels;
        labels = next;
        centers = means(points, &labels, k);
        let inertia = inertia_of(points, &labels, &centers);
        let improved_little = trace
            .last()
            .is_some_and(|&prev: &f64| prev - inertia <= tol * prev);
        trace.push(inertia);
        if stable || improved_little || inertia == 0.0 {
            break;
        }
    }

    let inertia = *trace.last().unwrap_or(&0.0);
    KMeansResult {
        labels,
        centers,
        inertia,
        iterations,
        inertia_trace: trace,
        repairs,
        restart: 0,
    }
}

/// Row-normalized copy; zero rows stay zero.
pub fn normalize_rows(points: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = points.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Best of `cfg.restarts` k-means++ initialized Lloyd runs.
///
/// Restart `r` draws from the ChaCha8 stream `r` of `cfg.seed`, so results do
/// not depend on scheduling. Lowest inertia wins, ties going to the lowest
/// restart index.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    cfg.validate()?;
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if n < k {
        return Err(Error::TooFewRows {
            requested: k,
            available: n,
        });
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDataset(
            "non-finite value in K-means input".into(),
        ));
    }
    let normalized;
    let points = if cfg.normalize_rows {
        normalized = normalize_rows(points);
        normalized.view()
    } else {
        points
    };

    let runs: Vec<KMeansResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let init = plus_plus(points, k, &mut rng);
            let mut run = lloyd(points, init, cfg.max_iters, cfg.tol);
            run.restart = r;
            run
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| {
            if run.inertia < best.inertia {
                run
            } else {
                best
            }
        })
        .expect("restarts >= 1"))
}
