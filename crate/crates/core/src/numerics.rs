//! Special functions, bracketed root finding, and adaptive quadrature.
//!
//! Everything here is a pure function of its inputs and safe to call
//! concurrently.

use crate::error::{Error, Result};

/// Stopping criteria for iterative routines.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1 {
            return Err(Error::Validation(format!(
                "tolerance requires abs_tol > 0, rel_tol > 0, max_iter >= 1; got ({abs_tol}, {rel_tol}, {max_iter})"
            )));
        }
        Ok(Self { abs_tol, rel_tol, max_iter })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_iter: 200 }
    }
}

// Lanczos approximation, g = 7, 9 terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Regularized lower incomplete gamma P(a, x).
///
/// Series expansion for x < a + 1, continued fraction otherwise.
/// The chi-square CDF with k degrees of freedom is `P(k/2, x/2)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("regularized_lower_gamma requires a > 0, got {a}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("regularized_lower_gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(lower_gamma_series(a, x))
    } else {
        Ok(1.0 - upper_gamma_cf(a, x))
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x), computed
/// directly in the tail so survival probabilities keep full precision.
pub fn regularized_upper_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("regularized_upper_gamma requires a > 0, got {a}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("regularized_upper_gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - lower_gamma_series(a, x))
    } else {
        Ok(upper_gamma_cf(a, x))
    }
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom, i.e. the p-value of a chi-square statistic.
pub fn chi_square_survival(statistic: f64, dof: u32) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Domain("chi-square requires dof >= 1".into()));
    }
    if !(statistic >= 0.0) || !statistic.is_finite() {
        return Err(Error::Domain(format!("chi-square statistic must be finite and >= 0, got {statistic}")));
    }
    regularized_upper_gamma(f64::from(dof) / 2.0, statistic / 2.0)
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    while term.abs() > sum.abs() * 1e-17 {
        term *= x / (a + n);
        sum += term;
        n += 1.0;
        if n > 10_000.0 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz continued fraction for Q(a, x), x >= a + 1.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Standard normal CDF Φ(x), accurate to better than 1e-12.
///
/// Computed through the regularized incomplete gamma:
/// Φ(x) = (1 ± P(1/2, x²/2)) / 2, with the tail branch using Q directly.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("std_normal_cdf requires finite x, got {x}")));
    }
    let p = x * x / 2.0;
    if x >= 0.0 {
        Ok(0.5 + 0.5 * regularized_lower_gamma(0.5, p)?)
    } else {
        Ok(0.5 * regularized_upper_gamma(0.5, p)?)
    }
}

/// Standard normal density φ(x).
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Bracketed root finder: bisection with secant acceleration.
///
/// Requires f(lo) and f(hi) to have opposite signs (or one to be zero).
/// Returns x with |f(x)| <= abs_tol or bracket width <= rel_tol·|x| + abs_tol.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket { lo, hi, flo, fhi });
    }
    // Illinois-damped false position: halving the retained endpoint's
    // function value prevents the one-sided stagnation of plain regula
    // falsi while keeping the bracket guarantee.
    let mut last_side = 0i8;
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        let denom = fhi - flo;
        let mut x = if denom != 0.0 { (lo * fhi - hi * flo) / denom } else { mid };
        if !x.is_finite() || x <= lo || x >= hi {
            x = mid;
        }
        let fx = f(x);
        if fx == 0.0 || fx.abs() <= tol.abs_tol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if last_side == -1 {
                fhi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            fhi = fx;
            if last_side == 1 {
                flo *= 0.5;
            }
            last_side = 1;
        }
        if hi - lo <= tol.rel_tol * x.abs() + tol.abs_tol {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Convergence(format!(
        "root finder exhausted {} iterations on bracket [{lo}, {hi}]",
        tol.max_iter
    )))
}

const MAX_QUAD_DEPTH: u32 = 60;

/// Adaptive Simpson quadrature of `f` over `[lo, hi]`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(Error::Domain(format!("integrate requires lo <= hi, got [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(0.0);
    }
    // Pre-split into uniform panels so a bulk that sits between the first
    // coarse sample points cannot be missed, then refine adaptively. The
    // width floor stops refinement against integrable endpoint
    // singularities once a subinterval's contribution is below resolution.
    const PANELS: usize = 16;
    let span = hi - lo;
    let min_width = span * 1e-15;
    let panel_eps = tol.abs_tol / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let a = lo + span * i as f64 / PANELS as f64;
        let b = lo + span * (i + 1) as f64 / PANELS as f64;
        let mid = 0.5 * (a + b);
        let fa = f(a);
        let fmid = f(mid);
        let fb = f(b);
        let whole = simpson(a, b, fa, fmid, fb);
        total += adaptive(&f, a, b, fa, fmid, fb, whole, panel_eps, min_width, 0)?;
    }
    Ok(total)
}

fn simpson(lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64) -> f64 {
    (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    eps: f64,
    min_width: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flmid = f(lmid);
    let frmid = f(rmid);
    let left = simpson(lo, mid, flo, flmid, fmid);
    let right = simpson(mid, hi, fmid, frmid, fhi);
    let delta = left + right - whole;
    if (delta.abs() <= 15.0 * eps && depth >= 2) || hi - lo <= min_width {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_QUAD_DEPTH {
        return Err(Error::Convergence(format!(
            "quadrature exceeded max subdivision depth {MAX_QUAD_DEPTH} on [{lo}, {hi}]"
        )));
    }
    let half_eps = 0.5 * eps;
    let l = adaptive(f, lo, mid, flo, flmid, fmid, left, half_eps, min_width, depth + 1)?;
    let r = adaptive(f, mid, hi, fmid, frmid, fhi, right, half_eps, min_width, depth + 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tolerance_rejects_bad_fields() {
        assert!(Tolerance::new(0.0, 1e-10, 10).is_err());
        assert!(Tolerance::new(1e-10, -1.0, 10).is_err());
        assert!(Tolerance::new(1e-10, 1e-10, 0).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(gamma(1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma(5.0), 24.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn normal_cdf_saturates_in_the_tail() {
        assert!((std_normal_cdf(8.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(std_normal_cdf(-8.0).unwrap() < 1e-12);
    }

    #[test]
    fn normal_cdf_at_one_matches_quadrature_oracle() {
        // Oracle: adaptive quadrature of the standard normal pdf from -40 to 1.
        let tol = Tolerance::new(1e-13, 1e-13, 200).unwrap();
        let oracle = integrate(std_normal_pdf, -40.0, 1.0, &tol).unwrap();
        assert_abs_diff_eq!(oracle, 0.841344746, epsilon = 1e-9);
        assert_abs_diff_eq!(std_normal_cdf(1.0).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn lower_gamma_exponential_special_case() {
        // P(1, x) = 1 - exp(-x)
        let p = regularized_lower_gamma(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p, 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn lower_gamma_at_zero_is_zero() {
        for a in [0.1, 0.5, 1.0, 3.0, 12.0] {
            assert_eq!(regularized_lower_gamma(a, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn lower_gamma_rejects_nonpositive_shape() {
        assert!(regularized_lower_gamma(0.0, 1.0).is_err());
        assert!(regularized_lower_gamma(-2.0, 1.0).is_err());
    }

    #[test]
    fn chi_square_survival_matches_reported_p_values() {
        let p = chi_square_survival(19.2, 16).unwrap();
        assert!((p - 0.260).abs() < 0.005, "got {p}");
        let p = chi_square_survival(10.6, 24).unwrap();
        assert!((p - 0.992).abs() < 0.005, "got {p}");
    }

    #[test]
    fn gamma_monotone_in_x() {
        let mut prev = 0.0;
        for i in 0..200 {
            let x = i as f64 * 0.1;
            let p = regularized_lower_gamma(2.5, x).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn find_root_linear() {
        let tol = Tolerance::default();
        let r = find_root(|x| x - 2.0, 0.0, 5.0, &tol).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn find_root_normal_median() {
        let tol = Tolerance::default();
        let r = find_root(|x| std_normal_cdf(x).unwrap() - 0.5, -3.0, 3.0, &tol).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn find_root_cubic_matches_bisection_oracle() {
        // Oracle: plain bisection driven to 1e-12.
        let f = |x: f64| x * x * x - x - 2.0;
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert_abs_diff_eq!(oracle, 1.52137970, epsilon = 1e-8);
        let tol = Tolerance::new(1e-13, 1e-13, 200).unwrap();
        let r = find_root(f, 1.0, 2.0, &tol).unwrap();
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-10);
    }

    #[test]
    fn find_root_requires_sign_change() {
        let tol = Tolerance::default();
        match find_root(|x| x * x + 1.0, -1.0, 1.0, &tol) {
            Err(Error::Bracket { .. }) => {}
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn integrate_constant() {
        let tol = Tolerance::default();
        assert_abs_diff_eq!(integrate(|_| 1.0, 0.0, 1.0, &tol).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrate_normal_pdf_normalizes() {
        let tol = Tolerance::new(1e-11, 1e-11, 200).unwrap();
        let total = integrate(std_normal_pdf, -10.0, 10.0, &tol).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn integrate_gumbel_pdf_normalizes() {
        // Standard Gumbel pdf, location 0, scale 1.
        let pdf = |x: f64| {
            let z = -x;
            (z - z.exp()).exp()
        };
        let tol = Tolerance::new(1e-11, 1e-11, 200).unwrap();
        let total = integrate(pdf, -20.0, 50.0, &tol).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn integrate_rejects_reversed_interval() {
        let tol = Tolerance::default();
        assert!(integrate(|_| 1.0, 1.0, 0.0, &tol).is_err());
    }
}
