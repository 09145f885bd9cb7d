//! Kernel families parameterized by a center (the mode of the realized
//! density) and a bandwidth (its spread).
//!
//! Normal and Gumbel kernels live on the whole real line; the knotted Normal
//! and Weibull kernels live on the positive half line. All four are
//! parameterized so that the mode of the realized density sits exactly at
//! the observation value.

use crate::error::{Error, Result};
use crate::numerics::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Normal,
    /// Normal truncated at zero and renormalized; zero mass on negatives.
    KnottedNormal,
    Gumbel,
    Weibull,
}

impl KernelFamily {
    /// True when the family assigns zero mass to negative values.
    pub fn positive_support(self) -> bool {
        matches!(self, KernelFamily::KnottedNormal | KernelFamily::Weibull)
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            KernelFamily::Normal => "normal",
            KernelFamily::KnottedNormal => "knotted",
            KernelFamily::Gumbel => "gumbel",
            KernelFamily::Weibull => "weibull",
        };
        f.write_str(name)
    }
}

/// Natural parameters realized from (family, center, bandwidth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealizedParams {
    Normal { mean: f64, std: f64 },
    /// Underlying Normal before truncation at zero; `mass` is the retained
    /// probability 1 − Φ(−mean/std).
    KnottedNormal { mean: f64, std: f64, mass: f64 },
    Gumbel { location: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
}

/// A single kernel: family, mode, and spread, with its realized parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    center: f64,
    bandwidth: f64,
    params: RealizedParams,
}

/// Scale factor turning a Gumbel standard deviation into its scale
/// parameter: std = βπ/√6.
const GUMBEL_STD_PER_SCALE: f64 = std::f64::consts::PI / 2.449_489_742_783_178; // π/√6

/// Solve a family's natural parameters so the mode equals `center` and the
/// spread convention holds (std = bandwidth for Gumbel and Weibull;
/// pre-truncation std = bandwidth for the knotted Normal).
pub fn realize_parameters(
    family: KernelFamily,
    center: f64,
    bandwidth: f64,
) -> Result<RealizedParams> {
    if !center.is_finite() {
        return Err(Error::Validation(format!("kernel center must be finite, got {center}")));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Validation(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if family.positive_support() && !(center > 0.0) {
        return Err(Error::Validation(format!(
            "{family} kernel requires a positive center, got {center}"
        )));
    }
    match family {
        KernelFamily::Normal => Ok(RealizedParams::Normal { mean: center, std: bandwidth }),
        KernelFamily::KnottedNormal => {
            let mass = 1.0 - numerics::std_normal_cdf(-center / bandwidth)?;
            Ok(RealizedParams::KnottedNormal { mean: center, std: bandwidth, mass })
        }
        KernelFamily::Gumbel => Ok(RealizedParams::Gumbel {
            location: center,
            scale: bandwidth / GUMBEL_STD_PER_SCALE,
        }),
        KernelFamily::Weibull => solve_weibull(center, bandwidth),
    }
}

// Weibull with shape k > 1 has mode λ((k−1)/k)^{1/k} and
// std λ√(Γ(1+2/k) − Γ(1+1/k)²). Fix the mode at `center`, then solve the
// shape so the std equals `bandwidth`. The std is monotone decreasing in k
// along that constraint, so a sign change brackets the root.
fn solve_weibull(center: f64, bandwidth: f64) -> Result<RealizedParams> {
    const K_LO: f64 = 1.000_001;
    const K_HI: f64 = 500.0;
    let scale_for = |k: f64| center / ((k - 1.0) / k).powf(1.0 / k);
    let std_for = |k: f64| {
        let g1 = numerics::gamma(1.0 + 1.0 / k);
        let g2 = numerics::gamma(1.0 + 2.0 / k);
        scale_for(k) * (g2 - g1 * g1).max(0.0).sqrt()
    };
    let f = |k: f64| std_for(k) - bandwidth;
    let tol = Tolerance::new(1e-12 * bandwidth.max(1e-30), 1e-13, 500)?;
    let shape = numerics::find_root(f, K_LO, K_HI, &tol).map_err(|e| {
        Error::Parameterization(format!(
            "no Weibull shape in ({K_LO}, {K_HI}] gives mode {center} with std {bandwidth} \
             (center may be too small relative to the bandwidth): {e}"
        ))
    })?;
    Ok(RealizedParams::Weibull { shape, scale: scale_for(shape) })
}

impl KernelSpec {
    pub fn new(family: KernelFamily, center: f64, bandwidth: f64) -> Result<Self> {
        let params = realize_parameters(family, center, bandwidth)?;
        Ok(Self { family, center, bandwidth, params })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Mode of the realized density.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn params(&self) -> RealizedParams {
        self.params
    }

    /// Lower edge of the support (0 for positive families, −∞ otherwise).
    pub fn support_lo(&self) -> f64 {
        if self.family.positive_support() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.params {
            RealizedParams::Normal { mean, std } => {
                numerics::std_normal_pdf((x - mean) / std) / std
            }
            RealizedParams::KnottedNormal { mean, std, mass } => {
                if x < 0.0 {
                    0.0
                } else {
                    numerics::std_normal_pdf((x - mean) / std) / (std * mass)
                }
            }
            RealizedParams::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                ((-z - (-z).exp()).exp()) / scale
            }
            RealizedParams::Weibull { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    // shape > 1 always holds here, so the density vanishes at 0
                    0.0
                } else {
                    let z = x / scale;
                    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.params {
            RealizedParams::Normal { mean, std } => {
                numerics::std_normal_cdf((x - mean) / std).unwrap_or(if x < mean { 0.0 } else { 1.0 })
            }
            RealizedParams::KnottedNormal { mean, std, mass } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let base = numerics::std_normal_cdf((x - mean) / std).unwrap_or(1.0);
                    let lower = 1.0 - mass;
                    ((base - lower) / mass).clamp(0.0, 1.0)
                }
            }
            RealizedParams::Gumbel { location, scale } => {
                let z = (x - location) / scale;
                (-(-z).exp()).exp()
            }
            RealizedParams::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-(x / scale).powf(shape)).exp()
                }
            }
        }
    }
}
