//! Composite kernel densities, exact decomposition by categorical labels,
//! and reaggregation back into a single mixture.
//!
//! A composite density is a weighted sum of per-observation kernels. When a
//! decomposition shares one kernel family assignment and one bandwidth
//! across components, reaggregating its components reproduces the pooled
//! fit pointwise; with per-component bandwidths it is a general mixture and
//! that identity no longer holds.

use std::collections::BTreeMap;

use crate::bandwidth::{self, BandwidthRule};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::numerics::{self, Tolerance};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One estimate: value, source paper, category labels, and whether the
/// quantity is constrained to be positive (selects the Weibull kernel under
/// the default scheme).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub value: f64,
    pub paper_id: String,
    pub labels: BTreeMap<String, String>,
    pub positive_only: bool,
}

impl Observation {
    pub fn new(value: f64, paper_id: impl Into<String>) -> Self {
        Self { value, paper_id: paper_id.into(), labels: BTreeMap::new(), positive_only: false }
    }

    pub fn with_label(mut self, dimension: impl Into<String>, category: impl Into<String>) -> Self {
        self.labels.insert(dimension.into(), category.into());
        self
    }

    pub fn positive_only(mut self, flag: bool) -> Self {
        self.positive_only = flag;
        self
    }
}

/// Rule assigning a kernel family to each observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelScheme {
    /// Same family for every observation.
    Single(KernelFamily),
    /// Weibull for positive-only observations, Gumbel otherwise (the
    /// default scheme).
    WeibullGumbel,
}

impl KernelScheme {
    pub fn family_for(&self, obs: &Observation) -> KernelFamily {
        match self {
            KernelScheme::Single(f) => *f,
            KernelScheme::WeibullGumbel => {
                if obs.positive_only {
                    KernelFamily::Weibull
                } else {
                    KernelFamily::Gumbel
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedKernel {
    pub spec: KernelSpec,
    pub weight: f64,
}

/// Weighted mixture of kernels with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeDensity {
    kernels: Vec<WeightedKernel>,
}

impl CompositeDensity {
    pub fn from_kernels(kernels: Vec<WeightedKernel>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Validation("a composite density needs at least one kernel".into()));
        }
        let sum: f64 = kernels.iter().map(|k| k.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!("kernel weights must sum to 1, got {sum}")));
        }
        if let Some(k) = kernels.iter().find(|k| k.weight < 0.0) {
            return Err(Error::Validation(format!("negative kernel weight {}", k.weight)));
        }
        Ok(Self { kernels })
    }

    /// Fit a composite density: one kernel per observation, centered at the
    /// observation value.
    pub fn fit(
        observations: &[Observation],
        scheme: KernelScheme,
        bandwidth: f64,
        weights: &[f64],
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Validation("cannot fit a density to zero observations".into()));
        }
        if observations.len() != weights.len() {
            return Err(Error::Validation(format!(
                "observation/weight count mismatch: {} vs {}",
                observations.len(),
                weights.len()
            )));
        }
        let wsum: f64 = weights.iter().sum();
        if (wsum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!("observation weights must sum to 1, got {wsum}")));
        }
        let mut kernels = Vec::with_capacity(observations.len());
        for (i, (obs, &w)) in observations.iter().zip(weights).enumerate() {
            if !obs.value.is_finite() {
                return Err(Error::Validation(format!(
                    "observation {i} (paper {}): non-finite value {}",
                    obs.paper_id, obs.value
                )));
            }
            let family = scheme.family_for(obs);
            if family.positive_support() && obs.value <= 0.0 {
                return Err(Error::Validation(format!(
                    "observation {i} (paper {}): nonpositive value {} under the positive-support {family} kernel",
                    obs.paper_id, obs.value
                )));
            }
            let spec = KernelSpec::new(family, obs.value, bandwidth).map_err(|e| {
                Error::Validation(format!(
                    "observation {i} (paper {}, value {}): {e}",
                    obs.paper_id, obs.value
                ))
            })?;
            kernels.push(WeightedKernel { spec, weight: w });
        }
        Self::from_kernels(kernels)
    }

    /// Equal-weight convenience fit.
    pub fn fit_equal(observations: &[Observation], scheme: KernelScheme, bandwidth: f64) -> Result<Self> {
        let n = observations.len();
        if n == 0 {
            return Err(Error::Validation("cannot fit a density to zero observations".into()));
        }
        let weights = vec![1.0 / n as f64; n];
        Self::fit(observations, scheme, bandwidth, &weights)
    }

    pub fn kernels(&self) -> &[WeightedKernel] {
        &self.kernels
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.kernels.iter().map(|k| k.weight * k.spec.pdf(x)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.kernels.iter().map(|k| k.weight * k.spec.cdf(x)).sum()
    }

    /// Invert the CDF by bracketed root finding. The initial bracket spans
    /// the kernel centers plus a 50-bandwidth margin, doubled up to four
    /// times for heavy tails.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile requires q in (0, 1), got {q}")));
        }
        let min_center = self.kernels.iter().map(|k| k.spec.center()).fold(f64::INFINITY, f64::min);
        let max_center =
            self.kernels.iter().map(|k| k.spec.center()).fold(f64::NEG_INFINITY, f64::max);
        let max_bw = self.kernels.iter().map(|k| k.spec.bandwidth()).fold(0.0, f64::max);
        let support_lo = self.kernels.iter().map(|k| k.spec.support_lo()).fold(f64::INFINITY, f64::min);

        let mut margin = 50.0 * max_bw;
        for _ in 0..=4 {
            let lo = (min_center - margin).max(support_lo);
            let hi = max_center + margin;
            if self.cdf(lo) <= q && self.cdf(hi) >= q {
                let tol = Tolerance::new(1e-12, 1e-13, 500)?;
                return numerics::find_root(|x| self.cdf(x) - q, lo, hi, &tol);
            }
            margin *= 2.0;
        }
        Err(Error::Convergence(format!("could not bracket quantile {q} after 4 expansions")))
    }
}

/// One labeled component of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub density: CompositeDensity,
    pub weight: f64,
}

/// Ordered components with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    components: Vec<Component>,
}

/// Whether the bandwidth rule is applied to the pooled values (preserving
/// the exact reaggregation identity) or to each component separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentBandwidth {
    Global(BandwidthRule),
    PerComponent(BandwidthRule),
}

impl Decomposition {
    pub fn from_components(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("a decomposition needs at least one component".into()));
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!("component weights must sum to 1, got {sum}")));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Split observations by a label dimension and fit one component density
/// per category. Component order follows first appearance in the input.
pub fn decompose(
    observations: &[Observation],
    dimension: &str,
    scheme: KernelScheme,
    bandwidths: ComponentBandwidth,
    weights: &[f64],
) -> Result<Decomposition> {
    if observations.is_empty() {
        return Err(Error::Validation("cannot decompose zero observations".into()));
    }
    if observations.len() != weights.len() {
        return Err(Error::Validation(format!(
            "observation/weight count mismatch: {} vs {}",
            observations.len(),
            weights.len()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, obs) in observations.iter().enumerate() {
        let category = obs.labels.get(dimension).ok_or_else(|| {
            Error::Validation(format!(
                "observation {i} (paper {}) has no label for dimension '{dimension}'",
                obs.paper_id
            ))
        })?;
        if !groups.contains_key(category) {
            order.push(category.clone());
        }
        groups.entry(category.clone()).or_default().push(i);
    }

    let global_bandwidth = match bandwidths {
        ComponentBandwidth::Global(rule) => {
            let values: Vec<f64> = observations.iter().map(|o| o.value).collect();
            Some(bandwidth::weighted_bandwidth(rule, &values, weights)?)
        }
        ComponentBandwidth::PerComponent(_) => None,
    };

    let mut components = Vec::with_capacity(order.len());
    for name in order {
        let idx = &groups[&name];
        let member_obs: Vec<Observation> =
            idx.iter().map(|&i| observations[i].clone()).collect();
        let member_weights: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
        let total: f64 = member_weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateCategory(format!(
                "category '{name}' of dimension '{dimension}' has zero total weight"
            )));
        }
        let internal: Vec<f64> = member_weights.iter().map(|w| w / total).collect();
        let h = match (global_bandwidth, bandwidths) {
            (Some(h), _) => h,
            (None, ComponentBandwidth::PerComponent(rule)) => {
                let values: Vec<f64> = member_obs.iter().map(|o| o.value).collect();
                bandwidth::weighted_bandwidth(rule, &values, &internal).map_err(|e| {
                    Error::Validation(format!("bandwidth for category '{name}': {e}"))
                })?
            }
            (None, ComponentBandwidth::Global(_)) => unreachable!(),
        };
        let density = CompositeDensity::fit(&member_obs, scheme, h, &internal)?;
        components.push(Component { name, density, weight: total });
    }
    Decomposition::from_components(components)
}

/// Collapse a decomposition back into a single mixture with
/// pdf(x) = Σ_j weight_j · component_pdf_j(x).
pub fn reaggregate(decomposition: &Decomposition) -> Result<CompositeDensity> {
    let mut kernels = Vec::new();
    for component in decomposition.components() {
        for k in component.density.kernels() {
            kernels.push(WeightedKernel { spec: k.spec, weight: component.weight * k.weight });
        }
    }
    CompositeDensity::from_kernels(kernels)
}
