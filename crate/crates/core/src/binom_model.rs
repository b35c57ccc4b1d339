//! Two-arm binomial model for a difference in proportions.
//!
//! The parameterisation is `(p_ctrl, theta)` with `p_active = p_ctrl + theta`.
//! Counts are real-valued so that design-stage "expected" data (`x = p * n`)
//! can be pushed through the same likelihood machinery as observed data.
//! All likelihood arithmetic is carried out in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping tolerance on successive fixed-point iterates.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Iteration cap for the fixed-point update.
pub const FIXED_POINT_MAX_ITER: usize = 500;
/// Maximum accepted |score| at a restricted estimate.
pub const SCORE_TOL: f64 = 1e-8;
/// Slack below zero tolerated on the LRT statistic before clamping.
pub const LRT_NEGATIVE_SLACK: f64 = 1e-10;

/// Event counts and sample sizes of a control and an active arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoArmCounts {
    x_ctrl: f64,
    n_ctrl: f64,
    x_active: f64,
    n_active: f64,
}

impl TwoArmCounts {
    /// Counts may be fractional. A zero sample size marks an arm that carries no
    /// information; operations that need an estimate from that arm will refuse it.
    pub fn new(x_ctrl: f64, n_ctrl: f64, x_active: f64, n_active: f64) -> Result<Self> {
        for (name, v) in [
            ("x_ctrl", x_ctrl),
            ("n_ctrl", n_ctrl),
            ("x_active", x_active),
            ("n_active", n_active),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if n_ctrl == 0.0 {
            return Err(Error::invalid("n_ctrl must be > 0"));
        }
        if x_ctrl > n_ctrl {
            return Err(Error::invalid(format!("x_ctrl={x_ctrl} exceeds n_ctrl={n_ctrl}")));
        }
        if x_active > n_active {
            return Err(Error::invalid(format!(
                "x_active={x_active} exceeds n_active={n_active}"
            )));
        }
        Ok(Self {
            x_ctrl,
            n_ctrl,
            x_active,
            n_active,
        })
    }

    /// Design-stage counts `x = p * n` for the given arm rates.
    pub fn expected(p_ctrl: f64, n_ctrl: f64, p_active: f64, n_active: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_ctrl) || !(0.0..=1.0).contains(&p_active) {
            return Err(Error::domain(format!(
                "arm rates must lie in [0, 1], got p_ctrl={p_ctrl}, p_active={p_active}"
            )));
        }
        Self::new(p_ctrl * n_ctrl, n_ctrl, p_active * n_active, n_active)
    }

    pub fn x_ctrl(&self) -> f64 {
        self.x_ctrl
    }
    pub fn n_ctrl(&self) -> f64 {
        self.n_ctrl
    }
    pub fn x_active(&self) -> f64 {
        self.x_active
    }
    pub fn n_active(&self) -> f64 {
        self.n_active
    }

    /// Observed control rate, without any boundary check.
    pub fn ctrl_rate(&self) -> f64 {
        self.x_ctrl / self.n_ctrl
    }

    pub fn active_rate(&self) -> f64 {
        self.x_active / self.n_active
    }

    /// Clamps both observed rates into `[eps, 1 - eps]`, returning the adjusted
    /// counts and whether anything moved.
    pub fn clamped(&self, eps: f64) -> (Self, bool) {
        let clamp = |x: f64, n: f64| {
            if n == 0.0 {
                return x;
            }
            let r = x / n;
            if r < eps {
                eps * n
            } else if r > 1.0 - eps {
                (1.0 - eps) * n
            } else {
                x
            }
        };
        let xc = clamp(self.x_ctrl, self.n_ctrl);
        let xa = clamp(self.x_active, self.n_active);
        let moved = xc != self.x_ctrl || xa != self.x_active;
        (
            Self {
                x_ctrl: xc,
                x_active: xa,
                ..*self
            },
            moved,
        )
    }
}

/// A point in the `(p_ctrl, theta)` parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    p_ctrl: f64,
    theta: f64,
}

impl RateParams {
    pub fn new(p_ctrl: f64, theta: f64) -> Result<Self> {
        let p_active = p_ctrl + theta;
        if !(p_ctrl > 0.0 && p_ctrl < 1.0) || !(p_active > 0.0 && p_active < 1.0) {
            return Err(Error::domain(format!(
                "rates must lie in (0, 1): p_ctrl={p_ctrl}, p_active={p_active}"
            )));
        }
        Ok(Self { p_ctrl, theta })
    }

    pub fn p_ctrl(&self) -> f64 {
        self.p_ctrl
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn p_active(&self) -> f64 {
        self.p_ctrl + self.theta
    }
}

/// `coef * ln(arg)` with the convention `0 * ln(0) = 0`.
fn xlogy(coef: f64, arg: f64) -> Result<f64> {
    if coef == 0.0 {
        return Ok(0.0);
    }
    if arg <= 0.0 {
        return Err(Error::domain(format!(
            "log argument {arg} <= 0 with nonzero coefficient {coef}"
        )));
    }
    Ok(coef * arg.ln())
}

/// Log-likelihood (up to the binomial coefficients) at `(p_ctrl, theta)`.
pub fn log_likelihood(counts: &TwoArmCounts, params: &RateParams) -> Result<f64> {
    log_likelihood_at(counts, params.p_ctrl, params.theta)
}

fn log_likelihood_at(c: &TwoArmCounts, p: f64, theta: f64) -> Result<f64> {
    Ok(xlogy(c.x_ctrl, p)?
        + xlogy(c.n_ctrl - c.x_ctrl, 1.0 - p)?
        + xlogy(c.x_active, p + theta)?
        + xlogy(c.n_active - c.x_active, 1.0 - p - theta)?)
}

/// Unrestricted MLE `(x_ctrl / n_ctrl, x_active / n_active - x_ctrl / n_ctrl)`.
pub fn mle(counts: &TwoArmCounts) -> Result<RateParams> {
    if counts.n_active == 0.0 {
        return Err(Error::Boundary("active arm has no subjects".into()));
    }
    let pc = counts.ctrl_rate();
    let pa = counts.active_rate();
    if !(pc > 0.0 && pc < 1.0) || !(pa > 0.0 && pa < 1.0) {
        return Err(Error::Boundary(format!(
            "rate estimates must be interior, got p_ctrl={pc}, p_active={pa}"
        )));
    }
    Ok(RateParams {
        p_ctrl: pc,
        theta: pa - pc,
    })
}

/// Partial derivative of the log-likelihood with respect to `p_ctrl` at `theta`.
pub fn score_p_ctrl(c: &TwoArmCounts, p: f64, theta: f64) -> f64 {
    let term = |coef: f64, denom: f64| if coef == 0.0 { 0.0 } else { coef / denom };
    term(c.x_ctrl, p) - term(c.n_ctrl - c.x_ctrl, 1.0 - p) + term(c.x_active, p + theta)
        - term(c.n_active - c.x_active, 1.0 - p - theta)
}

fn score_derivative(c: &TwoArmCounts, p: f64, theta: f64) -> f64 {
    let term = |coef: f64, denom: f64| if coef == 0.0 { 0.0 } else { coef / (denom * denom) };
    -(term(c.x_ctrl, p)
        + term(c.n_ctrl - c.x_ctrl, 1.0 - p)
        + term(c.x_active, p + theta)
        + term(c.n_active - c.x_active, 1.0 - p - theta))
}

/// Open interval of control rates compatible with `theta0`.
pub fn feasible_ctrl_range(theta0: f64) -> Result<(f64, f64)> {
    let lo = f64::max(0.0, -theta0);
    let hi = f64::min(1.0, 1.0 - theta0);
    if !theta0.is_finite() || lo >= hi {
        return Err(Error::domain(format!(
            "theta0={theta0} admits no feasible control rate"
        )));
    }
    Ok((lo, hi))
}

/// The profiling update for the control rate on the null slice `theta = theta0`.
fn fixed_point_update(c: &TwoArmCounts, p: f64, theta0: f64) -> f64 {
    let to_active = c.x_active * p * (1.0 - p) / (p + theta0);
    let ratio = (1.0 - p) / (1.0 - p - theta0);
    (c.x_ctrl + to_active + c.x_active * ratio * p) / (c.n_ctrl + c.n_active * ratio)
}

/// Restricted MLE of the control rate under `theta = theta0`, starting from the
/// unrestricted control estimate.
pub fn restricted_ctrl_mle(counts: &TwoArmCounts, theta0: f64) -> Result<f64> {
    restricted_ctrl_mle_from(counts, theta0, counts.ctrl_rate())
}

/// As [`restricted_ctrl_mle`], from a caller-supplied starting value. Grid
/// sweeps pass the neighbouring solution, which cuts the iteration count.
pub fn restricted_ctrl_mle_from(counts: &TwoArmCounts, theta0: f64, start: f64) -> Result<f64> {
    let (lo, hi) = feasible_ctrl_range(theta0)?;
    let interior = |p: f64| p > lo && p < hi;

    if counts.n_active == 0.0 {
        let p = counts.ctrl_rate();
        return if interior(p) {
            Ok(p)
        } else {
            Err(Error::domain(format!(
                "control estimate {p} lies outside the feasible range ({lo}, {hi}) at theta0={theta0}"
            )))
        };
    }

    let mut p = if interior(start) { start } else { 0.5 * (lo + hi) };
    for _ in 0..FIXED_POINT_MAX_ITER {
        let mut next = fixed_point_update(counts, p, theta0);
        if !interior(next) || !next.is_finite() {
            // Step back halfway toward the violated bound.
            next = if next <= lo || next.is_nan() {
                0.5 * (p + lo)
            } else {
                0.5 * (p + hi)
            };
        }
        let delta = (next - p).abs();
        p = next;
        if delta < FIXED_POINT_TOL {
            break;
        }
    }

    // The fixed point stops on |dp| but contracts slowly far from the MLE; the
    // contract is on |score|. The null-slice log-likelihood is concave in p, so
    // the score is decreasing and a bracketed Newton iteration finishes the job.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let s = score_p_ctrl(counts, p, theta0);
        if s.abs() < 1e-3 * SCORE_TOL {
            break;
        }
        if s > 0.0 {
            a = p;
        } else {
            b = p;
        }
        let newton = p - s / score_derivative(counts, p, theta0);
        let next = if newton > a && newton < b && newton.is_finite() {
            newton
        } else {
            0.5 * (a + b)
        };
        if next == p || b - a <= f64::EPSILON * p.abs() {
            break;
        }
        p = next;
    }

    let residual = score_p_ctrl(counts, p, theta0);
    if !(residual.abs() < SCORE_TOL) {
        return Err(Error::Convergence {
            theta0,
            last: p,
            residual,
        });
    }
    Ok(p)
}

/// `-2 log lambda` for `H0: theta = theta0` given the restricted control estimate.
fn lrt_from_restricted(c: &TwoArmCounts, hat: &RateParams, theta0: f64, p0: f64) -> Result<f64> {
    // Sum of log ratios, term by term, to avoid cancelling two large log-likelihoods.
    let pc = hat.p_ctrl;
    let pa = hat.p_active();
    let pa0 = p0 + theta0;
    let ratio = |coef: f64, num: f64, den: f64| -> Result<f64> {
        if coef == 0.0 {
            return Ok(0.0);
        }
        if num <= 0.0 || den <= 0.0 {
            return Err(Error::domain(format!("log ratio {num}/{den} undefined")));
        }
        Ok(coef * ((num - den) / den).ln_1p())
    };
    let log_lambda = ratio(c.x_ctrl, p0, pc)?
        + ratio(c.n_ctrl - c.x_ctrl, 1.0 - p0, 1.0 - pc)?
        + ratio(c.x_active, pa0, pa)?
        + ratio(c.n_active - c.x_active, 1.0 - pa0, 1.0 - pa)?;
    let stat = -2.0 * log_lambda;
    if stat < 0.0 {
        if stat < -LRT_NEGATIVE_SLACK {
            return Err(Error::domain(format!(
                "negative LRT statistic {stat:e} at theta0={theta0}"
            )));
        }
        return Ok(0.0);
    }
    Ok(stat)
}

/// Likelihood ratio statistic `-2 log lambda(x, theta0)` for the difference in proportions.
pub fn lrt_statistic(counts: &TwoArmCounts, theta0: f64) -> Result<f64> {
    let hat = mle(counts)?;
    if theta0 == hat.theta {
        return Ok(0.0);
    }
    let p0 = restricted_ctrl_mle(counts, theta0)?;
    lrt_from_restricted(counts, &hat, theta0, p0)
}

/// LRT statistic with the restricted fit warm-started at `start`; also returns
/// the restricted control estimate so callers can chain warm starts.
pub fn lrt_statistic_from(counts: &TwoArmCounts, theta0: f64, start: f64) -> Result<(f64, f64)> {
    let hat = mle(counts)?;
    if theta0 == hat.theta {
        return Ok((0.0, hat.p_ctrl));
    }
    let p0 = restricted_ctrl_mle_from(counts, theta0, start)?;
    Ok((lrt_from_restricted(counts, &hat, theta0, p0)?, p0))
}

/// LRT statistics over a sorted sequence of null values, warm-starting each
/// restricted fit from its neighbour. Sweeps outward from the MLE in both directions.
pub fn lrt_statistic_sweep(counts: &TwoArmCounts, thetas: &[f64]) -> Result<Vec<f64>> {
    let hat = mle(counts)?;
    let mut out = vec![0.0; thetas.len()];
    let split = thetas.partition_point(|&t| t < hat.theta);

    let mut p = hat.p_ctrl;
    for i in split..thetas.len() {
        let t = thetas[i];
        if t == hat.theta {
            continue;
        }
        p = restricted_ctrl_mle_from(counts, t, p)?;
        out[i] = lrt_from_restricted(counts, &hat, t, p)?;
    }
    let mut p = hat.p_ctrl;
    for i in (0..split).rev() {
        let t = thetas[i];
        p = restricted_ctrl_mle_from(counts, t, p)?;
        out[i] = lrt_from_restricted(counts, &hat, t, p)?;
    }
    Ok(out)
}

/// Wald z statistic `(theta_hat - theta0) / se` with per-arm binomial variances.
pub fn wald_z(counts: &TwoArmCounts, theta0: f64) -> Result<f64> {
    let hat = mle(counts)?;
    let se = wald_se(counts)?;
    Ok((hat.theta - theta0) / se)
}

/// Standard error of the estimated difference in proportions.
pub fn wald_se(counts: &TwoArmCounts) -> Result<f64> {
    let hat = mle(counts)?;
    let pc = hat.p_ctrl;
    let pa = hat.p_active();
    let var = pc * (1.0 - pc) / counts.n_ctrl + pa * (1.0 - pa) / counts.n_active;
    if !(var > 0.0) {
        return Err(Error::Boundary("Wald standard error is zero".into()));
    }
    Ok(var.sqrt())
}
