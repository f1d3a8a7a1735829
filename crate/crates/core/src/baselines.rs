//! K-modes and K-prototypes, the partitional reference clusterers.
//!
//! Both alternate between nearest-prototype assignment and prototype
//! updates. A point only leaves its current cluster for a strictly cheaper
//! one, and first assignments go to the lowest-index cheapest prototype.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MixedDataset;
use crate::{Error, Result};

/// Numeric means and categorical modes of each cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    /// `K × R`.
    pub numeric: Array2<f64>,
    /// `K × Q` category indices.
    pub modes: Array2<usize>,
    /// Weight of the Hamming term.
    pub gamma: f64,
}

impl PrototypeSet {
    pub fn k(&self) -> usize {
        self.modes.nrows().max(self.numeric.nrows())
    }

    /// Prototypes copied from the given rows of `ds`.
    pub fn from_rows(ds: &MixedDataset, rows: &[usize], gamma: f64) -> Self {
        let numeric = ds.numeric().select(ndarray::Axis(0), rows);
        let modes = ds.categorical().select(ndarray::Axis(0), rows);
        Self {
            numeric,
            modes,
            gamma,
        }
    }

    fn cost(&self, ds: &MixedDataset, i: usize, k: usize) -> f64 {
        let numeric = ds.numeric();
        let euclid: f64 = numeric
            .row(i)
            .iter()
            .zip(self.numeric.row(k))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let hamming = mismatches(ds.categorical().row(i), self.modes.row(k));
        if self.gamma == 0.0 {
            euclid
        } else {
            euclid + self.gamma * hamming as f64
        }
    }
}

fn mismatches(a: ArrayView1<'_, usize>, b: ArrayView1<'_, usize>) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub labels: Vec<usize>,
    pub prototypes: PrototypeSet,
    pub cost: f64,
    /// Passes that changed at least one label.
    pub iterations: usize,
    /// Total cost after each pass.
    pub cost_trace: Vec<f64>,
    /// Empty clusters reseeded during the run.
    pub repairs: usize,
    pub restart: usize,
}

/// `0.5 ·` mean population variance of the numeric columns.
pub fn default_gamma(ds: &MixedDataset) -> f64 {
    let numeric = ds.numeric();
    if numeric.ncols() == 0 {
        return 0.0;
    }
    let mean_var = numeric
        .columns()
        .into_iter()
        .map(|c| c.var(0.0))
        .sum::<f64>()
        / numeric.ncols() as f64;
    0.5 * mean_var
}

fn update(ds: &MixedDataset, labels: &[usize], protos: &mut PrototypeSet) {
    let k = protos.k();
    let numeric = ds.numeric();
    let categorical = ds.categorical();
    let mut sums = Array2::<f64>::zeros((k, numeric.ncols()));
    let mut sizes = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sums.row_mut(l).scaled_add(1.0, &numeric.row(i));
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] == 0 {
            continue;
        }
        let mut row = sums.row(c).to_owned();
        row /= sizes[c] as f64;
        protos.numeric.row_mut(c).assign(&row);
    }
    for (var, &card) in ds.cardinalities().iter().enumerate() {
        let mut counts = Array2::<usize>::zeros((k, card));
        for (i, &l) in labels.iter().enumerate() {
            counts[[l, categorical[[i, var]]]] += 1;
        }
        for c in 0..k {
            if sizes[c] == 0 {
                continue;
            }
            let row = counts.row(c);
            // Most frequent category, lowest index on ties.
            let mode = row
                .iter()
                .enumerate()
                .fold(
                    (0, 0),
                    |best, (j, &n)| if n > best.1 { (j, n) } else { best },
                )
                .0;
            protos.modes[[c, var]] = mode;
        }
    }
}

/// Alternating minimization from fixed initial prototypes.
pub fn refine(ds: &MixedDataset, initial: PrototypeSet, max_iters: usize) -> BaselineResult {
    let n = ds.len();
    let k = initial.k();
    let mut protos = initial;
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut repairs = 0;
    let mut iterations = 0;

    for _ in 0..max_iters {
        let mut next = Vec::with_capacity(n);
        let mut cost = Vec::with_capacity(n);
        for i in 0..n {
            let costs: Vec<f64> = (0..k).map(|c| protos.cost(ds, i, c)).collect();
            let best = (0..k).fold(0, |b, c| if costs[c] < costs[b] { c } else { b });
            let label = match labels.get(i) {
                Some(&cur) if costs[best] >= costs[cur] => cur,
                _ => best,
            };
            next.push(label);
            cost.push(costs[label]);
        }

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
                        Some(b) if cost[b] >= cost[i] => Some(b),
                        _ => Some(i),
                    });
            if let Some(i) = donor {
                sizes[next[i]] -= 1;
                sizes[empty] += 1;
                next[i] = empty;
                cost[i] = 0.0;
                protos.numeric.row_mut(empty).assign(&ds.numeric().row(i));
                protos.modes.row_mut(empty).assign(&ds.categorical().row(i));
                repairs += 1;
            }
        }

        let stable = next == labels;
        labels = next;
        update(ds, &labels, &mut protos);
        trace.push((0..n).map(|i| protos.cost(ds, i, labels[i])).sum());
        if stable {
            break;
        }
        iterations += 1;
    }

    BaselineResult {
        cost: *trace.last().unwrap_or(&0.0),
        labels,
        prototypes: protos,
        iterations,
        cost_trace: trace,
        repairs,
        restart: 0,
    }
}

fn best_of_restarts(
    ds: &MixedDataset,
    k: usize,
    gamma: f64,
    cfg: &BaselineConfig,
) -> Result<BaselineResult> {
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "restarts and max_iters must be at least 1".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if ds.len() < k {
        return Err(Error::TooFewRows {
            requested: k,
            available: ds.len(),
        });
    }
    let runs: Vec<BaselineResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let rows = sample(&mut rng, ds.len(), k).into_vec();
            let mut run = refine(ds, PrototypeSet::from_rows(ds, &rows, gamma), cfg.max_iters);
            run.restart = r;
            run
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.cost < best.cost { run } else { best })
        .expect("restarts >= 1"))
}

/// K-modes on the categorical columns of `ds` (numeric columns are ignored).
pub fn kmodes(ds: &MixedDataset, k: usize, cfg: &BaselineConfig) -> Result<BaselineResult> {
    let cat = ds.categorical_part()?;
    best_of_restarts(&cat, k, 1.0, cfg)
}

/// K-prototypes with cost `‖x - c‖² + γ · hamming(q, m)`. `gamma = None`
/// uses [`default_gamma`].
pub fn kprototypes(
    ds: &MixedDataset,
    k: usize,
    gamma: Option<f64>,
    cfg: &BaselineConfig,
) -> Result<BaselineResult> {
    if ds.num_numeric() == 0 {
        return Err(Error::NumericFeaturesRequired);
    }
    if ds.num_categorical() == 0 {
        return Err(Error::CategoricalFeaturesRequired);
    }
    let gamma = gamma.unwrap_or_else(|| default_gamma(ds));
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    best_of_restarts(ds, k, gamma, cfg)
}
