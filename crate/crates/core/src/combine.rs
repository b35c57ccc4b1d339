//! Combining p-value functions from independent sources.
//!
//! * [`convolve`] pools two sources as one larger study by an
//!   inverse-standard-error weighted sum of their normal scores.
//! * [`multiply`] is the "and" combination `H₁·H₂`: the probability of seeing
//!   results as or more extreme than both observations.
//! * [`or_combine`] is the matching "or" combination of lower-tail functions.

use crate::dist;
use crate::error::{Error, Result};
use crate::pvfn::{PValueFunction, Tail};

/// Values are clamped into `[CLAMP, 1 − CLAMP]` before taking normal scores.
pub const CLAMP: f64 = 1e-12;

/// A p-value function paired with the standard error that sets its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPvfn {
    h: PValueFunction,
    se: f64,
}

impl WeightedPvfn {
    pub fn new(h: PValueFunction, se: f64) -> Result<Self> {
        if !(se.is_finite() && se > 0.0) {
            return Err(Error::invalid(format!(
                "standard error must be finite and > 0, got {se}"
            )));
        }
        Ok(Self { h, se })
    }

    pub fn pvfn(&self) -> &PValueFunction {
        &self.h
    }
    pub fn se(&self) -> f64 {
        self.se
    }
}

/// Standard error of a difference in proportions from per-arm binomial variances.
pub fn binomial_diff_se(p_ctrl: f64, n_ctrl: f64, p_active: f64, n_active: f64) -> Result<f64> {
    for p in [p_ctrl, p_active] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("rate {p} must lie in (0, 1)")));
        }
    }
    if !(n_ctrl > 0.0 && n_active > 0.0) {
        return Err(Error::invalid("sample sizes must be > 0"));
    }
    Ok((p_ctrl * (1.0 - p_ctrl) / n_ctrl + p_active * (1.0 - p_active) / n_active).sqrt())
}

fn check_grids(a: &PValueFunction, b: &PValueFunction) -> Result<()> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch(format!(
            "grids differ: {} vs {}",
            a.grid(),
            b.grid()
        )));
    }
    Ok(())
}

fn check_tail(h: &PValueFunction, tail: Tail, what: &str) -> Result<()> {
    if h.tail() != tail {
        return Err(Error::invalid(format!(
            "{what} requires {}-tail inputs, got {}",
            tail.as_str(),
            h.tail().as_str()
        )));
    }
    Ok(())
}

/// Result of [`convolve`] with the number of cells that had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub pvfn: PValueFunction,
    pub clamped_cells: usize,
}

/// `Φ([Φ⁻¹(H₁)/se₁ + Φ⁻¹(H₂)/se₂] / √(1/se₁² + 1/se₂²))` pointwise.
pub fn convolve(a: &WeightedPvfn, b: &WeightedPvfn) -> Result<Convolution> {
    check_grids(&a.h, &b.h)?;
    check_tail(&a.h, Tail::Upper, "convolution")?;
    check_tail(&b.h, Tail::Upper, "convolution")?;
    let (wa, wb) = (1.0 / a.se, 1.0 / b.se);
    let norm = (wa * wa + wb * wb).sqrt();
    let mut clamped = 0;
    let mut score = |v: f64| {
        let c = v.clamp(CLAMP, 1.0 - CLAMP);
        if c != v {
            clamped += 1;
        }
        dist::normal_quantile(c)
    };
    let values: Vec<f64> =
        a.h.values()
            .iter()
            .zip(b.h.values())
            .map(|(&x, &y)| {
                let z = (score(x) * wa + score(y) * wb) / norm;
                dist::normal_cdf(z)
            })
            .collect();
    let source = format!(
        "convolve[se={:e}; se={:e}; clamped={}]({} | {})",
        a.se,
        b.se,
        clamped,
        a.h.source(),
        b.h.source()
    );
    Ok(Convolution {
        pvfn: PValueFunction::new(*a.h.grid(), values, Tail::Upper, source)?,
        clamped_cells: clamped,
    })
}

/// The "and" combination `H₁·H₂` of two upper functions.
pub fn multiply(a: &PValueFunction, b: &PValueFunction) -> Result<PValueFunction> {
    check_grids(a, b)?;
    check_tail(a, Tail::Upper, "multiplication")?;
    check_tail(b, Tail::Upper, "multiplication")?;
    let values = a.values().iter().zip(b.values()).map(|(x, y)| x * y).collect();
    PValueFunction::new(
        *a.grid(),
        values,
        Tail::Upper,
        format!("multiply({} | {})", a.source(), b.source()),
    )
}

/// The "or" combination `a + b − a·b` of two lower functions.
pub fn or_combine(a: &PValueFunction, b: &PValueFunction) -> Result<PValueFunction> {
    check_grids(a, b)?;
    check_tail(a, Tail::Lower, "or-combination")?;
    check_tail(b, Tail::Lower, "or-combination")?;
    let values = a.values().iter().zip(b.values()).map(|(x, y)| x + y - x * y).collect();
    PValueFunction::new(
        *a.grid(),
        values,
        Tail::Lower,
        format!("or({} | {})", a.source(), b.source()),
    )
}
