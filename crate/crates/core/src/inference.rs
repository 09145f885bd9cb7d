//! Quantile share matrices and the Pearson equality-of-proportions test.
//!
//! The composite density is cut at its p-quantiles; each component's
//! probability mass inside each quantile interval (scaled by the component
//! weight) forms an m×p share matrix. Under the null the components are
//! proportional to the composite and every cell equals w_j/p.

use std::io::{Read, Write};

use crate::density::{reaggregate, Decomposition};
use crate::error::{Error, Result};
use crate::numerics::chi_square_survival;

/// Row-sum slack for matrices built by quadrature-free CDF differencing.
const CONSTRUCTED_TOL: f64 = 1e-9;
/// Row-sum slack for matrices loaded from published, rounded tables.
const LOADED_TOL: f64 = 0.02;

/// m×p matrix of component probability masses per quantile interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareMatrix {
    component_names: Vec<String>,
    quantile_count: usize,
    /// shares[j][k]: mass of weighted component j in quantile interval k.
    shares: Vec<Vec<f64>>,
    /// Component weights w_j (the "Null" row times p).
    null_weights: Vec<f64>,
    effective_n: f64,
}

/// Chi-square test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

impl ShareMatrix {
    pub fn new(
        component_names: Vec<String>,
        shares: Vec<Vec<f64>>,
        null_weights: Vec<f64>,
        effective_n: f64,
    ) -> Result<Self> {
        Self::build(component_names, shares, null_weights, effective_n, CONSTRUCTED_TOL)
    }

    fn build(
        component_names: Vec<String>,
        shares: Vec<Vec<f64>>,
        null_weights: Vec<f64>,
        effective_n: f64,
        row_sum_tol: f64,
    ) -> Result<Self> {
        let m = component_names.len();
        if m < 2 {
            return Err(Error::TestPreconditions(format!(
                "need at least two components to compare, got {m}"
            )));
        }
        if shares.len() != m || null_weights.len() != m {
            return Err(Error::Validation("share matrix row/name/weight counts disagree".into()));
        }
        let p = shares[0].len();
        if p < 2 {
            return Err(Error::TestPreconditions(format!(
                "need at least two quantile intervals, got {p}"
            )));
        }
        if !(effective_n > 0.0) || !effective_n.is_finite() {
            return Err(Error::Validation(format!("effective_n must be positive, got {effective_n}")));
        }
        let wsum: f64 = null_weights.iter().sum();
        if (wsum - 1.0).abs() > row_sum_tol.max(1e-9) {
            return Err(Error::Validation(format!("component weights must sum to 1, got {wsum}")));
        }
        for (j, row) in shares.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Validation(format!("row {j} has {} cells, expected {p}", row.len())));
            }
            if let Some(s) = row.iter().find(|s| **s < 0.0 || !s.is_finite()) {
                return Err(Error::Validation(format!("invalid share {s} in row {j}")));
            }
            let row_sum: f64 = row.iter().sum();
            if (row_sum - null_weights[j]).abs() > row_sum_tol {
                return Err(Error::Validation(format!(
                    "row '{}' sums to {row_sum} but its weight is {}",
                    component_names[j], null_weights[j]
                )));
            }
        }
        Ok(Self { component_names, quantile_count: p, shares, null_weights, effective_n })
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }

    pub fn quantile_count(&self) -> usize {
        self.quantile_count
    }

    pub fn shares(&self) -> &[Vec<f64>] {
        &self.shares
    }

    pub fn null_weights(&self) -> &[f64] {
        &self.null_weights
    }

    pub fn effective_n(&self) -> f64 {
        self.effective_n
    }

    pub fn with_effective_n(mut self, effective_n: f64) -> Result<Self> {
        if !(effective_n > 0.0) || !effective_n.is_finite() {
            return Err(Error::Validation(format!("effective_n must be positive, got {effective_n}")));
        }
        self.effective_n = effective_n;
        Ok(self)
    }

    /// Build the share matrix of a decomposition cut at the p-quantiles of
    /// its reaggregated composite.
    pub fn from_decomposition(d: &Decomposition, p: usize, effective_n: f64) -> Result<Self> {
        let m = d.components().len();
        if m < 2 {
            return Err(Error::TestPreconditions(format!(
                "the test only works with two components or more, got {m}"
            )));
        }
        if p < 2 {
            return Err(Error::TestPreconditions(format!(
                "the composite must be split into two quantiles or more, got {p}"
            )));
        }
        let composite = reaggregate(d)?;
        let mut cuts = Vec::with_capacity(p - 1);
        for k in 1..p {
            cuts.push(composite.quantile(k as f64 / p as f64)?);
        }
        let mut shares = Vec::with_capacity(m);
        for component in d.components() {
            let f = &component.density;
            let mut row = Vec::with_capacity(p);
            let mut prev = 0.0;
            for k in 0..p {
                let upper = if k == p - 1 { 1.0 } else { f.cdf(cuts[k]) };
                row.push(component.weight * (upper - prev).max(0.0));
                prev = upper;
            }
            shares.push(row);
        }
        Self::build(
            d.names().iter().map(|s| s.to_string()).collect(),
            shares,
            d.weights(),
            effective_n,
            CONSTRUCTED_TOL,
        )
    }

    /// Write the matrix in the published-table layout: one column per
    /// component, rows Q1..Qp, and a trailing "Null" row of w_j/p.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.component_names.iter().cloned());
        w.write_record(&header)?;
        for k in 0..self.quantile_count {
            let mut row = vec![format!("Q{}", k + 1)];
            row.extend(self.shares.iter().map(|r| format!("{:.6}", r[k])));
            w.write_record(&row)?;
        }
        let p = self.quantile_count as f64;
        let mut null_row = vec!["Null".to_string()];
        null_row.extend(self.null_weights.iter().map(|wj| format!("{:.6}", wj / p)));
        w.write_record(&null_row)?;
        w.flush()?;
        Ok(())
    }

    /// Parse either orientation. The "Null" marker decides: a "Null" row
    /// label means components are columns (the published layout); a "Null"
    /// header column means components are rows.
    pub fn from_csv<R: Read>(reader: R, effective_n: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut rows: Vec<Vec<String>> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.iter().all(|c| c.is_empty()) {
                continue;
            }
            rows.push(record.iter().map(|c| c.to_string()).collect());
        }
        if rows.len() < 3 {
            return Err(Error::Validation("share matrix CSV needs a header and at least two data rows".into()));
        }
        let header = rows[0].clone();
        let is_null = |s: &str| s.eq_ignore_ascii_case("null");

        let (names, shares_by_component, null_cells) = if rows[1..]
            .iter()
            .any(|r| r.first().is_some_and(|c| is_null(c)))
        {
            // Published layout: columns are components, rows are quantiles
            // then Null.
            let names: Vec<String> = header.iter().skip(1).cloned().collect();
            let m = names.len();
            let mut quantile_rows: Vec<Vec<f64>> = Vec::new();
            let mut null_cells: Option<Vec<f64>> = None;
            for row in &rows[1..] {
                let cells = parse_cells(&row[1..], m, &row[0])?;
                if is_null(&row[0]) {
                    null_cells = Some(cells);
                } else {
                    quantile_rows.push(cells);
                }
            }
            let p = quantile_rows.len();
            let shares: Vec<Vec<f64>> =
                (0..m).map(|j| (0..p).map(|k| quantile_rows[k][j]).collect()).collect();
            (names, shares, null_cells)
        } else if header.last().is_some_and(|c| is_null(c)) {
            // Transposed layout: rows are components, columns Q1..Qp then
            // Null.
            let p = header.len().saturating_sub(2);
            let mut names = Vec::new();
            let mut shares = Vec::new();
            let mut null_cells = Vec::new();
            for row in &rows[1..] {
                if row.len() != p + 2 {
                    return Err(Error::Validation(format!(
                        "row '{}' has {} cells, expected {}",
                        row.first().map(String::as_str).unwrap_or(""),
                        row.len(),
                        p + 2
                    )));
                }
                names.push(row[0].clone());
                shares.push(parse_cells(&row[1..=p], p, &row[0])?);
                null_cells.push(parse_cells(&row[p + 1..], 1, &row[0])?[0]);
            }
            (names, shares, Some(null_cells))
        } else {
            return Err(Error::Validation(
                "could not locate the 'Null' marker row or column in the share matrix".into(),
            ));
        };

        let null_cells = null_cells
            .ok_or_else(|| Error::Validation("share matrix is missing its Null row".into()))?;
        let p = shares_by_component
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Validation("share matrix has no components".into()))?;
        let null_weights: Vec<f64> = null_cells.iter().map(|c| c * p as f64).collect();
        Self::build(names, shares_by_component, null_weights, effective_n, LOADED_TOL)
    }
}

fn parse_cells(cells: &[String], expected: usize, label: &str) -> Result<Vec<f64>> {
    if cells.len() != expected {
        return Err(Error::Validation(format!(
            "row '{label}' has {} numeric cells, expected {expected}",
            cells.len()
        )));
    }
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .map_err(|_| Error::Validation(format!("row '{label}': cell '{c}' is not a number")))
        })
        .collect()
}

/// Pearson's equality-of-proportions statistic on the quantile shares:
/// effective_n · Σ_jk (s_jk − w_j/p)² / (w_j/p), with (m−1)(p−1) degrees
/// of freedom.
pub fn pearson_test(s: &ShareMatrix) -> Result<TestResult> {
    let m = s.component_names.len();
    let p = s.quantile_count;
    if let Some(j) = s.null_weights.iter().position(|w| *w <= 0.0) {
        return Err(Error::DegenerateCategory(format!(
            "component '{}' has zero weight; its null cell mass vanishes",
            s.component_names[j]
        )));
    }
    let pf = p as f64;
    let mut sum = 0.0;
    for j in 0..m {
        let null_cell = s.null_weights[j] / pf;
        for k in 0..p {
            let d = s.shares[j][k] - null_cell;
            sum += d * d / null_cell;
        }
    }
    let statistic = s.effective_n * sum;
    let dof = ((m - 1) * (p - 1)) as u32;
    let p_value = chi_square_survival(statistic, dof)?;
    Ok(TestResult { statistic, dof, p_value })
}

/// Share matrix construction followed by the Pearson test.
pub fn test_decomposition(d: &Decomposition, p: usize, effective_n: f64) -> Result<TestResult> {
    let s = ShareMatrix::from_decomposition(d, p, effective_n)?;
    pearson_test(&s)
}
