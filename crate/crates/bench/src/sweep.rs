//! Resumable sweeps: one long-format row per run, then aggregation.
//!
//! The long CSV is the source of truth. Runs already present in it are
//! skipped, new rows are appended as they finish, and the file is finally
//! rewritten in grid order. The aggregated CSV is computed from the long
//! CSV alone and holds no timings, so it is byte-identical across runs; the
//! timing summary goes to a separate file.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context};
use rayon::prelude::*;
use specmix::dataset::generate_synthetic;
use specmix::eval::{purity, PurityMode};
use specmix::pipelines::{Lambdas, StageTimings};

use crate::format::sig9;
use crate::grid::{ExperimentGrid, RunKey};
use crate::run::{run_method, RunSettings};

pub const LONG_HEADER: [&str; 16] = [
    "n",
    "k",
    "q",
    "sigma",
    "p",
    "lambda",
    "method",
    "rep",
    "seed",
    "purity_weighted",
    "purity_macro",
    "time_graph",
    "time_eigen",
    "time_kmeans",
    "time_total",
    "error",
];

pub const AGGREGATE_HEADER: [&str; 12] = [
    "n",
    "k",
    "q",
    "sigma",
    "p",
    "lambda",
    "method",
    "reps",
    "errors",
    "purity_weighted_mean",
    "purity_weighted_std",
    "purity_macro_mean",
];

pub const TIMING_HEADER: [&str; 13] = [
    "n",
    "k",
    "q",
    "sigma",
    "p",
    "lambda",
    "method",
    "reps",
    "time_graph_median",
    "time_eigen_median",
    "time_kmeans_median",
    "time_total_median",
    "time_total_mean",
];

const KEY_FIELDS: usize = 8;
const CELL_FIELDS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPaths {
    pub long: PathBuf,
    pub aggregated: PathBuf,
    pub timing: PathBuf,
}

impl SweepPaths {
    /// `out.csv` plus `out_agg.csv` and `out_timing.csv` beside it.
    pub fn for_output(out: &Path) -> Self {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        let sibling = |suffix: &str| out.with_file_name(format!("{stem}_{suffix}.csv"));
        Self {
            long: out.to_path_buf(),
            aggregated: sibling("agg"),
            timing: sibling("timing"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepReport {
    pub rows: usize,
    pub computed: usize,
    pub reused: usize,
    pub failed: usize,
}

type Record = Vec<String>;

fn read_long(path: &Path) -> anyhow::Result<Vec<Record>> {
    if !path.exists() || fs::metadata(path)?.len() == 0 {
        return Ok(Vec::new());
    }
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != LONG_HEADER {
        bail!("{} is not a sweep results file", path.display());
    }
    reader
        .records()
        .map(|r| Ok(r?.iter().map(str::to_owned).collect()))
        .collect()
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: &[Record],
) -> anyhow::Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)
            .with_context(|| format!("cannot write {}", tmp.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

fn long_row(key: &RunKey, seed: u64, outcome: &Result<(f64, f64, StageTimings), String>) -> Record {
    let mut row: Record = key.fields().into();
    row.push(seed.to_string());
    match outcome {
        Ok((weighted, macro_, t)) => {
            row.extend([
                sig9(*weighted),
                sig9(*macro_),
                sig9(t.graph),
                sig9(t.eigen),
                sig9(t.kmeans),
                sig9(t.total()),
                String::new(),
            ]);
        }
        Err(msg) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(msg.clone());
        }
    }
    row
}

/// Runs every missing run of `grid` and rewrites all three outputs.
pub fn run_sweep(grid: &ExperimentGrid, paths: &SweepPaths) -> anyhow::Result<SweepReport> {
    grid.validate()?;
    let runs = grid.runs();
    let order: HashMap<Record, usize> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| (r.fields().to_vec(), i))
        .collect();

    let existing = read_long(&paths.long)?;
    let mut done = HashSet::new();
    for row in &existing {
        let key = row[..KEY_FIELDS].to_vec();
        if !order.contains_key(&key) {
            bail!(
                "{} holds a run outside this grid ({}); use a fresh output path",
                paths.long.display(),
                key.join(",")
            );
        }
        done.insert(key);
    }

    // Runs that differ only in an ignored λ share one computation.
    let mut tasks: Vec<(RunKey, Vec<RunKey>)> = Vec::new();
    let mut task_index: HashMap<(usize, usize, String, Option<u64>), usize> = HashMap::new();
    let cells = grid.data_cells();
    for run in runs.iter().filter(|r| !done.contains(r.fields().as_slice())) {
        let cell = cells
            .iter()
            .position(|c| *c == run.data)
            .expect("run comes from grid");
        let id = (
            cell,
            run.rep,
            run.method.to_string(),
            run.effective_lambda().map(f64::to_bits),
        );
        match task_index.get(&id) {
            Some(&t) => tasks[t].1.push(*run),
            None => {
                task_index.insert(id, tasks.len());
                tasks.push((*run, vec![*run]));
            }
        }
    }

    let fresh = !paths.long.exists() || fs::metadata(&paths.long)?.len() == 0;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&paths.long)
        .with_context(|| format!("cannot open {}", paths.long.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    if fresh {
        writer.write_record(LONG_HEADER)?;
        writer.flush()?;
    }
    let writer: Mutex<csv::Writer<File>> = Mutex::new(writer);

    let computed: anyhow::Result<Vec<usize>> = tasks
        .par_iter()
        .map(|(task, members)| {
            let seed = task.data.seed(grid.base_seed, task.rep);
            let outcome = generate_synthetic(&task.data.params(seed, grid.corruption))
                .and_then(|(ds, truth)| {
                    let lambda = task.effective_lambda().unwrap_or(1.0);
                    let mut settings = RunSettings::new(task.data.k, Lambdas::Common(lambda), seed);
                    settings.restarts = grid.restarts;
                    let res = run_method(task.method, &ds, &settings)?;
                    Ok((
                        purity(&res.labels, &truth, PurityMode::Weighted)?,
                        purity(&res.labels, &truth, PurityMode::Macro)?,
                        res.timings,
                    ))
                })
                .map_err(|e| format!("{}: {e}", e.category()));
            let failed = usize::from(outcome.is_err());
            let mut w = writer.lock().expect("writer lock");
            for member in members {
                w.write_record(long_row(member, seed, &outcome))?;
            }
            w.flush()?;
            Ok(failed * members.len())
        })
        .collect();
    let computed = computed?;
    drop(writer);

    let mut rows = read_long(&paths.long)?;
    rows.sort_by_key(|r| order[&r[..KEY_FIELDS].to_vec()]);
    rows.dedup_by(|a, b| a[..KEY_FIELDS] == b[..KEY_FIELDS]);
    write_csv(&paths.long, LONG_HEADER, &rows)?;
    aggregate(&rows, paths)?;

    Ok(SweepReport {
        rows: rows.len(),
        computed: tasks.iter().map(|t| t.1.len()).sum(),
        reused: existing.len(),
        failed: computed.iter().sum(),
    })
}

fn parse(field: &str) -> Option<f64> {
    field.parse().ok()
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-cell summaries of grid-ordered long rows.
pub fn aggregate(rows: &[Record], paths: &SweepPaths) -> anyhow::Result<()> {
    let mut aggregated = Vec::new();
    let mut timing = Vec::new();
    for group in rows.chunk_by(|a, b| a[..CELL_FIELDS] == b[..CELL_FIELDS]) {
        let ok: Vec<&Record> = group.iter().filter(|r| r[15].is_empty()).collect();
        let column = |i: usize| -> Vec<f64> { ok.iter().filter_map(|r| parse(&r[i])).collect() };

        let weighted = column(9);
        let weighted_mean = mean(&weighted);
        let weighted_std = weighted_mean.map(|m| {
            (weighted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / weighted.len() as f64).sqrt()
        });
        let mut row: Record = group[0][..CELL_FIELDS].to_vec();
        row.extend([
            group.len().to_string(),
            (group.len() - ok.len()).to_string(),
            opt(weighted_mean),
            opt(weighted_std),
            opt(mean(&column(10))),
        ]);
        aggregated.push(row);

        let mut row: Record = group[0][..CELL_FIELDS].to_vec();
        row.push(ok.len().to_string());
        for i in 11..15 {
            row.push(opt(median(&mut column(i))));
        }
        row.push(opt(mean(&column(14))));
        timing.push(row);
    }
    write_csv(&paths.aggregated, AGGREGATE_HEADER, &aggregated)?;
    write_csv(&paths.timing, TIMING_HEADER, &timing)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        let p = SweepPaths::for_output(Path::new("/tmp/x/results.csv"));
        assert_eq!(p.aggregated, Path::new("/tmp/x/results_agg.csv"));
        assert_eq!(p.timing, Path::new("/tmp/x/results_timing.csv"));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
