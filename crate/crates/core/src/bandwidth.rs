//! Bandwidth selection rules, applied globally or per component.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// 1.06 · sample std · n^(−1/5)
    Silverman,
    /// Sample standard deviation (n−1 denominator).
    SampleStd,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn validate(&self) -> Result<()> {
        if let BandwidthRule::Fixed(v) = self {
            if !(*v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("fixed bandwidth must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Bandwidth from a rule and a set of observation values.
pub fn bandwidth(rule: BandwidthRule, values: &[f64]) -> Result<f64> {
    rule.validate()?;
    match rule {
        BandwidthRule::Fixed(v) => Ok(v),
        BandwidthRule::SampleStd => sample_std(values),
        BandwidthRule::Silverman => {
            let s = sample_std(values)?;
            let n = values.len() as f64;
            Ok(1.06 * s * n.powf(-0.2))
        }
    }
}

/// Weighted variant for vote-count weights (frequency-weight semantics:
/// the weighted mean and spread use the weights, the n^(−1/5) factor and
/// the n−1 correction use the observation count).
pub fn weighted_bandwidth(rule: BandwidthRule, values: &[f64], weights: &[f64]) -> Result<f64> {
    rule.validate()?;
    if let BandwidthRule::Fixed(v) = rule {
        return Ok(v);
    }
    if values.len() != weights.len() {
        return Err(Error::Validation(format!(
            "values/weights length mismatch: {} vs {}",
            values.len(),
            weights.len()
        )));
    }
    let s = weighted_std(values, weights)?;
    match rule {
        BandwidthRule::SampleStd => Ok(s),
        BandwidthRule::Silverman => Ok(1.06 * s * (values.len() as f64).powf(-0.2)),
        BandwidthRule::Fixed(_) => unreachable!(),
    }
}

fn sample_std(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "data-driven bandwidth rules need at least 2 values, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let var = ss / (n as f64 - 1.0);
    if var <= 0.0 {
        return Err(Error::DegenerateData("zero variance: all values identical".into()));
    }
    Ok(var.sqrt())
}

fn weighted_std(values: &[f64], weights: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "data-driven bandwidth rules need at least 2 values, got {n}"
        )));
    }
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::Validation("weights must have positive sum".into()));
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let ss: f64 = values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum();
    // frequency-weight correction with the observation count as n
    let var = ss / wsum * n as f64 / (n as f64 - 1.0);
    if var <= 0.0 {
        return Err(Error::DegenerateData("zero variance: all values identical".into()));
    }
    Ok(var.sqrt())
}
