//! The `specmix` command line.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use specmix::dataset::{
    generate_synthetic, load_mixed_csv, standardize_numeric, ColumnSchema, CorruptionMode,
    LoadOptions, SyntheticParams,
};
use specmix::eval::{imbalance_ratio, label_agreement, purity, PurityMode};
use specmix::graph::{assemble_augmented, base_similarity};
use specmix::pipelines::{ClusteringResult, Lambdas, Method};

use crate::format::sig9;
use crate::grid::ExperimentGrid;
use crate::run::{run_method, RunSettings};
use crate::sweep::{run_sweep, SweepPaths};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "SPECMIX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "specmix",
    version,
    about = "Spectral clustering of mixed-type data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a CSV dataset and write the result as JSON.
    Cluster(ClusterArgs),
    /// Run an experiment grid over synthetic data.
    Sweep(SweepArgs),
    /// Write a synthetic dataset with a trailing label column.
    Synth(SynthArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("schema_source").required(true))]
pub struct ClusterArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column roles, e.g. "num,num,cat,label".
    #[arg(long, group = "schema_source")]
    pub schema: Option<String>,
    /// File holding the column roles.
    #[arg(long, group = "schema_source")]
    pub schema_file: Option<PathBuf>,
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub k: usize,
    /// One value for every categorical variable, or one per variable.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tokens treated as missing, besides empty fields.
    #[arg(long, value_delimiter = ',', default_value = "?")]
    pub missing: Vec<String>,
    /// Skip standardizing the numeric columns.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Hamming weight for kprototypes.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Write the dense augmented graph and degrees here (specmix only).
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Grid config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Long-format results CSV; `_agg` and `_timing` files go beside it.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_corruption(s: &str) -> Result<CorruptionMode, String> {
    match s {
        "other" | "other-categories" => Ok(CorruptionMode::OtherCategories),
        "all" | "all-categories" => Ok(CorruptionMode::AllCategories),
        _ => Err(format!("expected 'other' or 'all', got '{s}'")),
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub q: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where corrupted categories are drawn from: 'other' or 'all'.
    #[arg(long, default_value = "other", value_parser = parse_corruption)]
    pub corruption: CorruptionMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels: a result JSON or a CSV.
    #[arg(long)]
    pub pred: PathBuf,
    /// CSV column of the predictions (default: last column).
    #[arg(long)]
    pub pred_column: Option<String>,
    /// Ground truth: a result JSON or a CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// CSV column of the ground truth (default: last column).
    #[arg(long)]
    pub truth_column: Option<String>,
}

#[derive(Debug, Serialize)]
struct ClusterReport<'a> {
    #[serde(flatten)]
    result: &'a ClusteringResult,
    n: usize,
    rows_dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    purity_weighted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    purity_macro: Option<f64>,
}

fn lambdas_from(values: &[f64]) -> Lambdas {
    match values {
        [one] => Lambdas::Common(*one),
        many => Lambdas::PerVariable(many.to_vec()),
    }
}

fn cmd_cluster(args: &ClusterArgs) -> anyhow::Result<()> {
    let schema: ColumnSchema = match (&args.schema, &args.schema_file) {
        (Some(s), _) => s.parse()?,
        (None, Some(path)) => fs::read_to_string(path)
            .with_context(|| format!("cannot read schema {}", path.display()))?
            .trim()
            .parse()?,
        (None, None) => bail!("a schema is required"),
    };
    let opts = LoadOptions {
        missing: args.missing.clone(),
        ..LoadOptions::default()
    };
    let loaded = load_mixed_csv(&args.data, &schema, &opts)?;
    let ds = if args.no_standardize || loaded.dataset.num_numeric() == 0 {
        loaded.dataset.clone()
    } else {
        standardize_numeric(&loaded.dataset)
    };

    let mut settings = RunSettings::new(args.k, lambdas_from(&args.lambda), args.seed);
    settings.restarts = args.restarts;
    settings.gamma = args.gamma;

    if let Some(path) = &args.dump_graph {
        if args.method != Method::SpecMix {
            bail!("--dump-graph only applies to specmix");
        }
        let lambdas = settings.lambdas.resolve(ds.num_categorical())?;
        let graph = assemble_augmented(base_similarity(&ds)?, ds.encoders(), lambdas)?;
        let file =
            fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        graph.dump_dense_csv(std::io::BufWriter::new(file))?;
    }

    let result = run_method(args.method, &ds, &settings)?;
    let scores = match &loaded.labels {
        Some(truth) => Some((
            purity(&result.labels, truth, PurityMode::Weighted)?,
            purity(&result.labels, truth, PurityMode::Macro)?,
        )),
        None => None,
    };
    let report = ClusterReport {
        result: &result,
        n: ds.len(),
        rows_dropped: loaded.rows_dropped,
        purity_weighted: scores.map(|s| s.0),
        purity_macro: scores.map(|s| s.1),
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => {
            fs::write(path, json + "\n")
                .with_context(|| format!("cannot write {}", path.display()))?;
            if let Some((w, m)) = scores {
                println!("purity_weighted={} purity_macro={}", sig9(w), sig9(m));
            }
        }
        None => {
            println!("{json}");
            if let Some((w, m)) = scores {
                eprintln!("purity_weighted={} purity_macro={}", sig9(w), sig9(m));
            }
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<()> {
    let grid = ExperimentGrid::load(&args.config)?;
    let paths = SweepPaths::for_output(&args.out);
    let report = run_sweep(&grid, &paths)?;
    println!(
        "rows={} computed={} reused={} failed={}",
        report.rows, report.computed, report.reused, report.failed
    );
    println!("long={}", paths.long.display());
    println!("aggregated={}", paths.aggregated.display());
    println!("timing={}", paths.timing.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let params = SyntheticParams {
        n: args.n,
        k: args.k,
        q: args.q,
        sigma: args.sigma,
        p: args.p,
        seed: args.seed,
        corruption: args.corruption,
    };
    let (ds, labels) = generate_synthetic(&params)?;
    let mut w = csv::Writer::from_path(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    let mut header: Vec<String> = (0..args.k).map(|d| format!("x{d}")).collect();
    header.extend((0..args.q).map(|v| format!("c{v}")));
    header.push("label".into());
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row: Vec<String> = ds.numeric().row(i).iter().map(|&x| sig9(x)).collect();
        row.extend(ds.categorical().row(i).iter().map(usize::to_string));
        row.push(label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Labels from a result JSON, or a CSV column encoded in first-appearance
/// order.
fn read_labels(path: &Path, column: Option<&str>) -> anyhow::Result<Vec<usize>> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        #[derive(serde::Deserialize)]
        struct Labels {
            labels: Vec<usize>,
        }
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        return Ok(serde_json::from_str::<Labels>(&text)?.labels);
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column '{name}' in {}", path.display()))?,
        None => headers.len().checked_sub(1).context("CSV has no columns")?,
    };
    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let token = record.get(idx).context("short CSV row")?.to_owned();
        let next = codes.len();
        labels.push(*codes.entry(token).or_insert(next));
    }
    Ok(labels)
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let pred = read_labels(&args.pred, args.pred_column.as_deref())?;
    let truth = read_labels(&args.truth, args.truth_column.as_deref())?;
    let report = serde_json::json!({
        "n": pred.len(),
        "purity_weighted": purity(&pred, &truth, PurityMode::Weighted)?,
        "purity_macro": purity(&pred, &truth, PurityMode::Macro)?,
        "label_agreement": label_agreement(&pred, &truth)?,
        "imbalance_ratio": imbalance_ratio(&truth)?,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Stable error category for the machine-readable failure line.
pub fn error_category(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<specmix::Error>() {
        return e.category();
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<csv::Error>().is_some()
    {
        return "io";
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return "parse";
    }
    "config"
}

/// Exit status per error category; 2 is reserved for usage errors.
pub fn exit_code(category: &str) -> u8 {
    match category {
        "io" => 3,
        "parse" => 4,
        "schema" => 5,
        "data" => 6,
        "parameter" => 7,
        "routing" => 8,
        "numerical" => 9,
        _ => 10,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize = value
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{value}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let category = error_category(&err);
            let line = serde_json::json!({
                "error": { "category": category, "message": format!("{err:#}") }
            });
            let _ = writeln!(std::io::stderr(), "{line}");
            ExitCode::from(exit_code(category))
        }
    }
}
