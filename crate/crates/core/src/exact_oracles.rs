//! Exact confidence distributions with closed-form answers.
//!
//! These do not depend on the two-arm model, so applying the generic grid
//! machinery ([`PValueFunction::quantile`], [`confidence_density`], ...) to them
//! and comparing with closed forms checks that machinery independently.
//!
//! [`confidence_density`]: crate::pvfn::confidence_density

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::pvfn::{ConfidenceCurve, PValueFunction, Tail};

/// Bisection on a monotone function to (absolute) machine resolution.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // Sign convention: f(lo) < 0 <= f(hi).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper p-value function for the mean `θ` of an exponential sample.
///
/// `X̄ ~ Gamma(n, scale θ/n)`, so observing a mean at least as large as `x̄` has
/// probability `Q(n, n·x̄/θ)`, which increases in `θ`. Its density in `θ` is the
/// Inverse-Gamma`(n, n·x̄)` density.
pub fn exponential_cd(xbar: f64, n: u32, grid: &ParamGrid) -> Result<PValueFunction> {
    if !(xbar.is_finite() && xbar > 0.0) {
        return Err(Error::Domain(format!("sample mean must be > 0, got {xbar}")));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be >= 1"));
    }
    if !(grid.lo() > 0.0) {
        return Err(Error::Domain(format!(
            "grid for an exponential mean must lie in (0, ∞), got {grid}"
        )));
    }
    let a = n as f64;
    let values = grid.points().into_iter().map(|t| gamma_ur(a, a * xbar / t)).collect();
    PValueFunction::new(*grid, values, Tail::Upper, format!("exponential xbar={xbar} n={n}"))
}

/// Inverse-Gamma density with the given shape and scale.
pub fn inverse_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x).exp()
}

/// Median of Gamma(shape, 1), by bisection on the regularized upper gamma.
pub fn gamma_median(shape: f64) -> f64 {
    bisect(0.0, shape + 10.0 * shape.sqrt() + 10.0, |x| 0.5 - gamma_ur(shape, x))
}

fn check_counts(x: u64, n: u64) -> Result<()> {
    if n == 0 || x > n {
        return Err(Error::invalid(format!("need 0 <= x <= n and n >= 1, got x={x}, n={n}")));
    }
    Ok(())
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn pmf(n: u64, k: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
}

/// `P(X ≥ x | p)` for `X ~ Binomial(n, p)`, by direct summation.
pub fn binomial_upper_tail(x: u64, n: u64, p: f64) -> f64 {
    (x..=n).map(|k| pmf(n, k, p)).sum::<f64>().min(1.0)
}

/// `P(X ≤ x | p)` for `X ~ Binomial(n, p)`, by direct summation.
pub fn binomial_lower_tail(x: u64, n: u64, p: f64) -> f64 {
    (0..=x).map(|k| pmf(n, k, p)).sum::<f64>().min(1.0)
}

/// Both one-sided exact p-value functions for a single proportion and the
/// confidence curve built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialExactCurve {
    /// `P(X ≥ x | θ)`, nondecreasing in `θ`.
    pub upper: Vec<f64>,
    /// `P(X ≤ x | θ)`, nonincreasing in `θ`.
    pub lower: Vec<f64>,
    /// `min(upper, lower)` at each grid point.
    pub curve: ConfidenceCurve,
}

/// Exact confidence curve for a proportion after `x` successes in `n` trials.
pub fn binomial_exact_curve(x: u64, n: u64, grid: &ParamGrid) -> Result<BinomialExactCurve> {
    check_counts(x, n)?;
    if grid.lo() < 0.0 || grid.last() > 1.0 {
        return Err(Error::Domain(format!(
            "grid for a proportion must lie in [0, 1], got {grid}"
        )));
    }
    let pts = grid.points();
    let upper: Vec<f64> = pts.iter().map(|&p| binomial_upper_tail(x, n, p)).collect();
    let lower: Vec<f64> = pts.iter().map(|&p| binomial_lower_tail(x, n, p)).collect();
    let values = upper.iter().zip(&lower).map(|(u, l)| u.min(*l)).collect();
    Ok(BinomialExactCurve {
        curve: ConfidenceCurve::new(*grid, values)?,
        upper,
        lower,
    })
}

/// Two-sided exact interval: the lower limit solves `P(X ≥ x | θ) = (1−level)/2`
/// and the upper limit solves `P(X ≤ x | θ) = (1−level)/2`. Solved by root
/// finding on the tail sums, not on the grid.
pub fn binomial_exact_interval(x: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    check_counts(x, n)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let a = (1.0 - level) / 2.0;
    let lo = if x == 0 {
        0.0
    } else {
        bisect(0.0, 1.0, |p| binomial_upper_tail(x, n, p) - a)
    };
    let hi = if x == n {
        1.0
    } else {
        bisect(0.0, 1.0, |p| a - binomial_lower_tail(x, n, p))
    };
    Ok((lo, hi))
}

/// Quantile of Beta(a, b) by bisection on the regularized incomplete beta.
pub fn beta_quantile(a: f64, b: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    bisect(0.0, 1.0, |p| beta_reg(a, b, p) - q)
}

/// Clopper–Pearson interval from Beta quantiles.
pub fn clopper_pearson(x: u64, n: u64, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let (x, n) = (x as f64, n as f64);
    let lo = if x == 0.0 {
        0.0
    } else {
        beta_quantile(x, n - x + 1.0, a)
    };
    let hi = if x == n {
        1.0
    } else {
        beta_quantile(x + 1.0, n - x, 1.0 - a)
    };
    (lo, hi)
}

/// Equal-tailed credible interval under a Beta(`prior_a`, `prior_b`) prior.
pub fn beta_credible_interval(x: u64, n: u64, prior_a: f64, prior_b: f64, level: f64) -> (f64, f64) {
    let a = x as f64 + prior_a;
    let b = (n - x) as f64 + prior_b;
    let t = (1.0 - level) / 2.0;
    (beta_quantile(a, b, t), beta_quantile(a, b, 1.0 - t))
}
