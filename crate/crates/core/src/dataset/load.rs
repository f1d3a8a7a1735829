//! CSV ingestion with per-column role tags.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::MixedDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Numeric,
    Categorical,
    /// Ordinal variables are clustered as plain categories.
    Ordinal,
    Label,
    Ignore,
}

impl FromStr for ColumnRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "num" | "numeric" => Ok(Self::Numeric),
            "cat" | "categorical" => Ok(Self::Categorical),
            "ord" | "ordinal" => Ok(Self::Ordinal),
            "label" | "class" => Ok(Self::Label),
            "ignore" | "skip" => Ok(Self::Ignore),
            other => Err(Error::InvalidSchema(format!(
                "unknown column role '{other}'"
            ))),
        }
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Numeric => "num",
            Self::Categorical => "cat",
            Self::Ordinal => "ord",
            Self::Label => "label",
            Self::Ignore => "ignore",
        })
    }
}

/// One role per CSV column, at most one of them a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    roles: Vec<ColumnRole>,
}

impl ColumnSchema {
    pub fn new(roles: Vec<ColumnRole>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::InvalidSchema("schema is empty".into()));
        }
        let labels = roles.iter().filter(|r| **r == ColumnRole::Label).count();
        if labels > 1 {
            return Err(Error::InvalidSchema(format!(
                "schema has {labels} label columns, at most one is allowed"
            )));
        }
        Ok(Self { roles })
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }
}

/// Parses comma-separated role tags such as `"num,num,cat,label"`.
impl FromStr for ColumnSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let roles = s
            .split(',')
            .filter(|tok| !tok.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(roles)
    }
}

impl fmt::Display for ColumnSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<String> = self.roles.iter().map(ToString::to_string).collect();
        f.write_str(&tags.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Field values treated as missing. Empty fields are always missing.
    pub missing: Vec<String>,
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            missing: vec!["?".to_string()],
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: MixedDataset,
    /// Dictionary-encoded ground truth when the schema has a label column.
    pub labels: Option<Vec<usize>>,
    /// Original label strings, indexed by encoded label.
    pub label_names: Vec<String>,
    /// Category strings per categorical column, indexed by encoded level.
    pub category_names: Vec<Vec<String>>,
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// First-appearance dictionary encoder.
#[derive(Default)]
struct Dictionary {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl Dictionary {
    fn encode(&mut self, value: &str) -> usize {
        if let Some(&code) = self.index.get(value) {
            return code;
        }
        let code = self.names.len();
        self.index.insert(value.to_string(), code);
        self.names.push(value.to_string());
        code
    }
}

/// Reads a headed CSV file, dropping every row with a missing value in a
/// used column. Categorical, ordinal and label columns are encoded to dense
/// indices in order of first appearance among the kept rows.
pub fn load_mixed_csv(
    path: impl AsRef<Path>,
    schema: &ColumnSchema,
    opts: &LoadOptions,
) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers()?.clone();
    if header.len() != schema.len() {
        return Err(Error::SchemaWidth {
            schema: schema.len(),
            found: header.len(),
        });
    }
    let roles = schema.roles();
    let is_missing = |field: &str| field.is_empty() || opts.missing.iter().any(|m| m == field);

    let numeric_idx: Vec<usize> = role_columns(roles, |r| r == ColumnRole::Numeric);
    let categorical_idx: Vec<usize> = role_columns(roles, |r| {
        matches!(r, ColumnRole::Categorical | ColumnRole::Ordinal)
    });
    let label_idx = roles.iter().position(|&r| r == ColumnRole::Label);

    let mut numeric = Vec::new();
    let mut dictionaries: Vec<Dictionary> = categorical_idx
        .iter()
        .map(|_| Dictionary::default())
        .collect();
    let mut categorical = Vec::new();
    let mut label_dict = Dictionary::default();
    let mut labels = Vec::new();
    let mut rows_read = 0;
    let mut kept = 0;

    for record in reader.records() {
        let record = record?;
        rows_read += 1;
        if record.len() != schema.len() {
            return Err(Error::SchemaWidth {
                schema: schema.len(),
                found: record.len(),
            });
        }
        let used = roles
            .iter()
            .zip(record.iter())
            .filter(|(r, _)| **r != ColumnRole::Ignore);
        if used.clone().any(|(_, field)| is_missing(field)) {
            continue;
        }
        for &col in &numeric_idx {
            let token = &record[col];
            let value: f64 = token.parse().map_err(|_| Error::ParseNumber {
                // 1-based line number in the file, counting the header
                row: rows_read + 1,
                column: header[col].to_string(),
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::ParseNumber {
                    row: rows_read + 1,
                    column: header[col].to_string(),
                    token: token.to_string(),
                });
            }
            numeric.push(value);
        }
        for (dict, &col) in dictionaries.iter_mut().zip(&categorical_idx) {
            categorical.push(dict.encode(&record[col]));
        }
        if let Some(col) = label_idx {
            labels.push(label_dict.encode(&record[col]));
        }
        kept += 1;
    }

    if kept == 0 {
        return Err(Error::EmptyDataset);
    }
    let numeric = Array2::from_shape_vec((kept, numeric_idx.len()), numeric)
        .expect("row-major numeric buffer has kept * R entries");
    let categorical = Array2::from_shape_vec((kept, categorical_idx.len()), categorical)
        .expect("row-major categorical buffer has kept * Q entries");
    let cardinalities = dictionaries.iter().map(|d| d.names.len()).collect();
    let dataset = MixedDataset::new(numeric, categorical, cardinalities)?;

    Ok(LoadedDataset {
        dataset,
        labels: label_idx.map(|_| labels),
        label_names: label_dict.names,
        category_names: dictionaries.into_iter().map(|d| d.names).collect(),
        numeric_columns: numeric_idx.iter().map(|&c| header[c].to_string()).collect(),
        categorical_columns: categorical_idx
            .iter()
            .map(|&c| header[c].to_string())
            .collect(),
        rows_read,
        rows_dropped: rows_read - kept,
    })
}

fn role_columns(roles: &[ColumnRole], pred: impl Fn(ColumnRole) -> bool) -> Vec<usize> {
    roles
        .iter()
        .enumerate()
        .filter(|(_, &r)| pred(r))
        .map(|(i, _)| i)
        .collect()
}
