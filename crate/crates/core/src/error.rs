use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema lists {schema} columns but the file has {found}")]
    SchemaWidth { schema: usize, found: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("row {row}, column '{column}': '{token}' is not a number")]
    ParseNumber {
        row: usize,
        column: String,
        token: String,
    },
    #[error("dataset is empty after dropping rows with missing values")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numeric features required; use onlycat")]
    NumericFeaturesRequired,
    #[error("categorical features required")]
    CategoricalFeaturesRequired,
    #[error("cluster {0} is empty (zero volume)")]
    EmptyCluster(usize),
    #[error("node {0} has zero degree")]
    ZeroDegree(usize),
    #[error("category {category} of categorical variable {variable} has no datapoints")]
    EmptyCategory { variable: usize, category: usize },
    #[error("requested {requested} clusters/eigenpairs but only {available} rows are available")]
    TooFewRows { requested: usize, available: usize },
    #[error("matrix is not symmetric (max |A - A^T| = {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("insufficient bipartite spectral gap: gamma_K = {0}")]
    InsufficientSpectralGap(f64),
}

impl Error {
    /// Stable machine-readable category, used by the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) | Error::ParseNumber { .. } => "parse",
            Error::SchemaWidth { .. } | Error::InvalidSchema(_) => "schema",
            Error::EmptyDataset | Error::InvalidDataset(_) | Error::EmptyCategory { .. } => "data",
            Error::DimensionMismatch(_) | Error::InvalidParameter(_) | Error::TooFewRows { .. } => {
                "parameter"
            }
            Error::NumericFeaturesRequired | Error::CategoricalFeaturesRequired => "routing",
            Error::EmptyCluster(_)
            | Error::ZeroDegree(_)
            | Error::NotSymmetric(_)
            | Error::NoConvergence { .. }
            | Error::InsufficientSpectralGap(_) => "numerical",
        }
    }
}
