//! Probability-of-success estimators.
//!
//! Probability of success (assurance) averages a power curve against the
//! confidence distribution of the effect: `∫β(θ) dH(θ)`. On a grid this is the
//! Riemann sum `Σ β(θᵢ)·ΔHᵢ / Σ ΔHᵢ` with backward lags `ΔHᵢ = Hᵢ − Hᵢ₋₁`,
//! normalised by the mass the grid actually captures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::PowerCurve;
use crate::pvfn::{confidence_density, ConfidenceDensity, PValueFunction};

/// Captured mass below which a result carries a truncation warning.
pub const TRUNCATION_WARN_MASS: f64 = 0.99;

/// Probability of success with the diagnostics of its Riemann sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosReport {
    pub pos: f64,
    /// `Σ ΔH` — the confidence mass captured by the grid.
    pub mass: f64,
    /// True when the grid truncates more than 1% of the mass.
    pub truncated: bool,
}

fn check_grid(h: &PValueFunction, pc: &PowerCurve) -> Result<()> {
    if !h.grid().same_as(pc.grid()) {
        return Err(Error::GridMismatch(format!("{} vs {}", h.grid(), pc.grid())));
    }
    Ok(())
}

fn weighted_mean(h: &PValueFunction, weight: impl Fn(usize) -> f64) -> Result<PosReport> {
    let up = h.as_upper();
    let v = up.values();
    let mut num = 0.0;
    let mut mass = 0.0;
    for i in 1..v.len() {
        let dh = v[i] - v[i - 1];
        num += weight(i) * dh;
        mass += dh;
    }
    if !(mass > 0.0) {
        return Err(Error::DegenerateMass(
            "the p-value function places no mass on the grid".into(),
        ));
    }
    Ok(PosReport {
        pos: num / mass,
        mass,
        truncated: mass < TRUNCATION_WARN_MASS,
    })
}

/// Probability of success `Σ β·ΔH / Σ ΔH` with diagnostics.
pub fn pos_report(h: &PValueFunction, pc: &PowerCurve) -> Result<PosReport> {
    check_grid(h, pc)?;
    let b = pc.values();
    weighted_mean(h, |i| b[i])
}

/// Probability of success `Σ β·ΔH / Σ ΔH`.
pub fn pos(h: &PValueFunction, pc: &PowerCurve) -> Result<f64> {
    pos_report(h, pc).map(|r| r.pos)
}

/// Probability of succeeding in two consecutive studies, `Σ β₂β₃·ΔH / Σ ΔH`.
pub fn joint_pos(h: &PValueFunction, pc2: &PowerCurve, pc3: &PowerCurve) -> Result<f64> {
    check_grid(h, pc2)?;
    check_grid(h, pc3)?;
    let (b2, b3) = (pc2.values(), pc3.values());
    weighted_mean(h, |i| b2[i] * b3[i]).map(|r| r.pos)
}

/// The pre-posterior density `β₂·h / ∫β₂·h`: the confidence density of `h`
/// reweighted by the probability of passing the earlier study.
pub fn conditional_density(h: &PValueFunction, pc2: &PowerCurve) -> Result<ConfidenceDensity> {
    check_grid(h, pc2)?;
    let d = confidence_density(h);
    let values: Vec<f64> = d.values().iter().zip(pc2.values()).map(|(x, b)| x * b).collect();
    let weighted = ConfidenceDensity::new(*h.grid(), values)?;
    if !(weighted.mass() > 0.0) {
        return Err(Error::DegenerateMass(
            "conditioning on the earlier study leaves no mass".into(),
        ));
    }
    weighted.normalized()
}

/// `Σ β₃·h_cond·step` for a conditional density of unit mass.
pub fn conditional_pos(h_cond: &ConfidenceDensity, pc3: &PowerCurve) -> Result<f64> {
    if !h_cond.grid().same_as(pc3.grid()) {
        return Err(Error::GridMismatch(format!("{} vs {}", h_cond.grid(), pc3.grid())));
    }
    let mass = h_cond.mass();
    if !(mass > 0.0) {
        return Err(Error::DegenerateMass("conditional density has zero mass".into()));
    }
    let s: f64 = h_cond.values().iter().zip(pc3.values()).map(|(h, b)| h * b).sum();
    Ok(s * h_cond.grid().step() / mass)
}

/// The scalar estimates of power that accompany a p-value function, ready for
/// JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    /// Power at the median of the effect's confidence distribution.
    pub mle: f64,
    pub pos: f64,
    /// Captured confidence mass behind `pos`.
    pub mass: f64,
    pub truncated: bool,
    /// Probability of success under the pre-posterior, when a conditioning curve is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_pos: Option<f64>,
    /// Probability of success after multiplying `H` by the conditioning curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplied_pos: Option<f64>,
}

/// Point estimate and probability of success of `pc` given `h`, optionally with
/// the two conditional variants given an earlier study's power curve.
pub fn summarize(h: &PValueFunction, pc: &PowerCurve, given: Option<&PowerCurve>) -> Result<PowerSummary> {
    let report = pos_report(h, pc)?;
    let mle = pc.at(h.as_upper().median()?)?;
    let (conditional_pos, multiplied_pos) = match given {
        None => (None, None),
        Some(pc2) => {
            let cond = conditional_pos(&conditional_density(h, pc2)?, pc)?;
            let product = crate::combine::multiply(&h.as_upper(), &pc2.as_pvfn()?)?;
            (Some(cond), Some(pos(&product, pc)?))
        }
    };
    Ok(PowerSummary {
        mle,
        pos: report.pos,
        mass: report.mass,
        truncated: report.truncated,
        conditional_pos,
        multiplied_pos,
    })
}
