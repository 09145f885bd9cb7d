//! Observation ingestion from CSV, category binnings, and vote weighting.

use std::collections::BTreeMap;
use std::path::Path;

use crate::density::Observation;
use crate::error::{Error, Result};

/// Column mapping for an input CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    pub value_column: String,
    pub paper_id_column: Option<String>,
    /// dimension name → column name
    pub label_columns: BTreeMap<String, String>,
    pub positive_only_column: Option<String>,
    /// Applied when `positive_only_column` is absent. Defaults to true:
    /// most estimates come from impact functions that exclude benefits.
    pub default_positive_only: bool,
}

impl DatasetSchema {
    pub fn new(value_column: impl Into<String>) -> Self {
        Self {
            value_column: value_column.into(),
            paper_id_column: None,
            label_columns: BTreeMap::new(),
            positive_only_column: None,
            default_positive_only: true,
        }
    }
}

/// A row that failed to parse, reported with its 1-based line number.
#[derive(Debug, Clone)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

/// Load observations from a CSV file with a header row.
///
/// Malformed rows are collected into the issue list; under `strict` the
/// first bad row aborts the load instead.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    strict: bool,
) -> Result<(Vec<Observation>, Vec<RowIssue>)> {
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, schema, strict)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    schema: &DatasetSchema,
    strict: bool,
) -> Result<(Vec<Observation>, Vec<RowIssue>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
    };
    let value_idx = col(&schema.value_column)?;
    let paper_idx = schema.paper_id_column.as_deref().map(col).transpose()?;
    let positive_idx = schema.positive_only_column.as_deref().map(col).transpose()?;
    let label_idx: Vec<(String, usize)> = schema
        .label_columns
        .iter()
        .map(|(dim, column)| Ok((dim.clone(), col(column)?)))
        .collect::<Result<_>>()?;

    let mut observations = Vec::new();
    let mut issues = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, value_idx, paper_idx, positive_idx, &label_idx, schema) {
            Ok(obs) => observations.push(obs),
            Err(message) => {
                if strict {
                    return Err(Error::Row { line, message });
                }
                issues.push(RowIssue { line, message });
            }
        }
    }
    Ok((observations, issues))
}

fn parse_row(
    record: &csv::StringRecord,
    value_idx: usize,
    paper_idx: Option<usize>,
    positive_idx: Option<usize>,
    label_idx: &[(String, usize)],
    schema: &DatasetSchema,
) -> std::result::Result<Observation, String> {
    let raw = record.get(value_idx).ok_or("missing value cell")?;
    let value: f64 = raw.parse().map_err(|_| format!("value '{raw}' is not a number"))?;
    if !value.is_finite() {
        return Err(format!("value '{raw}' is not finite"));
    }
    let paper_id = paper_idx
        .and_then(|i| record.get(i))
        .unwrap_or("")
        .to_string();
    let positive_only = match positive_idx.and_then(|i| record.get(i)) {
        Some(cell) => parse_bool(cell).ok_or_else(|| format!("positive-only flag '{cell}' is not a boolean"))?,
        None => schema.default_positive_only,
    };
    let mut labels = BTreeMap::new();
    for (dim, idx) in label_idx {
        let cell = record.get(*idx).ok_or_else(|| format!("missing cell for dimension '{dim}'"))?;
        labels.insert(dim.clone(), cell.to_string());
    }
    Ok(Observation { value, paper_id, labels, positive_only })
}

fn parse_bool(cell: &str) -> Option<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// How a raw label value maps to a category.
#[derive(Debug, Clone, PartialEq)]
pub enum BinRule {
    /// Explicit value → category map with an overflow category.
    Explicit { map: BTreeMap<String, String>, overflow: Option<String> },
    /// Match against a list of exact numeric values after decimal
    /// normalization ("3", "3.0" and "3.00" coincide).
    NumericValues { values: Vec<f64>, overflow: Option<String> },
    /// Inclusive year ranges labeled "start-end".
    YearRanges { ranges: Vec<(i64, i64)>, overflow: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBinning {
    pub dimension: String,
    pub rule: BinRule,
}

impl CategoryBinning {
    /// Pure rate of time preference bins from the discount-rate grouping.
    pub fn discount(dimension: impl Into<String>) -> Self {
        Self {
            dimension: dimension.into(),
            rule: BinRule::NumericValues {
                values: vec![3.0, 2.0, 1.5, 1.0, 0.1, 0.0],
                overflow: Some("other".into()),
            },
        }
    }

    /// Prolific-author grouping: named authors with five or more papers,
    /// everyone else pooled.
    pub fn author(dimension: impl Into<String>) -> Self {
        let map: BTreeMap<String, String> = ["Hope", "Nordhaus", "Ploeg", "Tol"]
            .into_iter()
            .map(|a| (a.to_string(), a.to_string()))
            .collect();
        Self {
            dimension: dimension.into(),
            rule: BinRule::Explicit { map, overflow: Some("Other".into()) },
        }
    }

    /// Publication-period grouping keyed to assessment-report milestones.
    pub fn period(dimension: impl Into<String>) -> Self {
        Self {
            dimension: dimension.into(),
            rule: BinRule::YearRanges {
                ranges: vec![(1982, 1995), (1996, 2001), (2002, 2006), (2007, 2013), (2014, 2020)],
                overflow: None,
            },
        }
    }

    fn categorize(&self, raw: &str) -> Result<String> {
        match &self.rule {
            BinRule::Explicit { map, overflow } => {
                if let Some(category) = map.get(raw) {
                    Ok(category.clone())
                } else {
                    overflow.clone().ok_or_else(|| {
                        Error::Binning(format!(
                            "value '{raw}' matches no category of '{}' and no overflow is defined",
                            self.dimension
                        ))
                    })
                }
            }
            BinRule::NumericValues { values, overflow } => {
                let parsed: f64 = raw.parse().map_err(|_| {
                    Error::Binning(format!("value '{raw}' of '{}' is not numeric", self.dimension))
                })?;
                for v in values {
                    if parsed == *v {
                        return Ok(trim_decimal(*v));
                    }
                }
                overflow.clone().ok_or_else(|| {
                    Error::Binning(format!(
                        "value '{raw}' matches no bin of '{}' and no overflow is defined",
                        self.dimension
                    ))
                })
            }
            BinRule::YearRanges { ranges, overflow } => {
                let year: i64 = raw.parse().map_err(|_| {
                    Error::Binning(format!("value '{raw}' of '{}' is not a year", self.dimension))
                })?;
                for (start, end) in ranges {
                    if year >= *start && year <= *end {
                        return Ok(format!("{start}-{end}"));
                    }
                }
                overflow.clone().ok_or_else(|| {
                    Error::Binning(format!(
                        "year {year} falls in no range of '{}' and no overflow is defined",
                        self.dimension
                    ))
                })
            }
        }
    }
}

/// Canonical display for a bin value: "3" stays "3.0", "1.5" stays "1.5".
fn trim_decimal(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Rewrite each observation's label for the binning's dimension into its
/// category. Returns the per-category counts.
pub fn bin_categories(
    observations: &mut [Observation],
    binning: &CategoryBinning,
) -> Result<BTreeMap<String, usize>> {
    let mut counts = BTreeMap::new();
    for (i, obs) in observations.iter_mut().enumerate() {
        let raw = obs.labels.get(&binning.dimension).cloned().ok_or_else(|| {
            Error::Validation(format!(
                "observation {i} (paper {}) has no label for dimension '{}'",
                obs.paper_id, binning.dimension
            ))
        })?;
        let category = binning.categorize(&raw)?;
        *counts.entry(category.clone()).or_insert(0) += 1;
        obs.labels.insert(binning.dimension.clone(), category);
    }
    Ok(counts)
}

/// Vote weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// Every estimate carries equal weight 1/n.
    PerEstimate,
    /// One paper, one vote: each paper's estimates share 1/(paper count).
    PerPaper,
}

/// Per-observation weights summing to one.
pub fn vote_weights(observations: &[Observation], scheme: WeightScheme) -> Result<Vec<f64>> {
    let n = observations.len();
    if n == 0 {
        return Err(Error::Validation("cannot weight zero observations".into()));
    }
    match scheme {
        WeightScheme::PerEstimate => Ok(vec![1.0 / n as f64; n]),
        WeightScheme::PerPaper => {
            let mut per_paper: BTreeMap<&str, usize> = BTreeMap::new();
            for (i, obs) in observations.iter().enumerate() {
                if obs.paper_id.is_empty() {
                    return Err(Error::Validation(format!(
                        "observation {i} has no paper id; per-paper weighting needs one"
                    )));
                }
                *per_paper.entry(obs.paper_id.as_str()).or_insert(0) += 1;
            }
            let papers = per_paper.len() as f64;
            Ok(observations
                .iter()
                .map(|obs| 1.0 / (papers * per_paper[obs.paper_id.as_str()] as f64))
                .collect())
        }
    }
}
