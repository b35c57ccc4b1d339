//! Design-stage helpers: the effective active-arm sample size implied by an
//! elicited distribution, and extrapolation of a power curve across a shift
//! between control groups (or endpoints) with a confidence band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::{power_pvfn, PowerCurve, PowerPValueFunction};
use crate::pvfn::PValueFunction;

/// Summary moments of an elicited sampling distribution for the difference in
/// proportions, plus the control-arm information it was built on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElicitationSummary {
    pub mean_diff: f64,
    pub var_diff: f64,
    pub ctrl_rate: f64,
    pub n_ctrl: f64,
}

impl ElicitationSummary {
    pub fn new(mean_diff: f64, var_diff: f64, ctrl_rate: f64, n_ctrl: f64) -> Result<Self> {
        if !(var_diff.is_finite() && var_diff > 0.0) {
            return Err(Error::invalid(format!("elicited variance must be > 0, got {var_diff}")));
        }
        if !(ctrl_rate > 0.0 && ctrl_rate < 1.0) {
            return Err(Error::Domain(format!("control rate {ctrl_rate} must lie in (0, 1)")));
        }
        let pa = ctrl_rate + mean_diff;
        if !(pa > 0.0 && pa < 1.0) {
            return Err(Error::Domain(format!("implied active rate {pa} must lie in (0, 1)")));
        }
        if !(n_ctrl > 0.0) {
            return Err(Error::invalid(format!("n_ctrl must be > 0, got {n_ctrl}")));
        }
        Ok(Self {
            mean_diff,
            var_diff,
            ctrl_rate,
            n_ctrl,
        })
    }

    /// The variance an elicitation equivalent to `n_active` subjects would report.
    pub fn from_active_size(mean_diff: f64, ctrl_rate: f64, n_ctrl: f64, n_active: f64) -> Result<Self> {
        let pa = ctrl_rate + mean_diff;
        let var = pa * (1.0 - pa) / n_active + ctrl_rate * (1.0 - ctrl_rate) / n_ctrl;
        Self::new(mean_diff, var, ctrl_rate, n_ctrl)
    }

    pub fn active_rate(&self) -> f64 {
        self.ctrl_rate + self.mean_diff
    }
}

/// Active-arm sample size whose binomial variance, added to the control arm's,
/// reproduces the elicited variance.
pub fn effective_n_active(e: &ElicitationSummary) -> Result<f64> {
    let pc = e.ctrl_rate;
    let pa = e.active_rate();
    let denominator = e.var_diff - pc * (1.0 - pc) / e.n_ctrl;
    if !(denominator > 0.0) {
        return Err(Error::ElicitationTooPrecise { denominator });
    }
    Ok(pa * (1.0 - pa) / denominator)
}

/// Point estimate and confidence limits of a shift `Δ` between phases, where the
/// later effect is `θ₃ = θ₂ − Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate {
    pub delta_hat: f64,
    pub delta_lo: f64,
    pub delta_hi: f64,
}

impl ShiftEstimate {
    pub fn new(delta_hat: f64, delta_lo: f64, delta_hi: f64) -> Result<Self> {
        if !(delta_lo <= delta_hat && delta_hat <= delta_hi) {
            return Err(Error::invalid(format!(
                "shift limits must satisfy lo <= hat <= hi, got {delta_lo}, {delta_hat}, {delta_hi}"
            )));
        }
        Ok(Self {
            delta_hat,
            delta_lo,
            delta_hi,
        })
    }

    pub fn zero() -> Self {
        Self {
            delta_hat: 0.0,
            delta_lo: 0.0,
            delta_hi: 0.0,
        }
    }
}

/// A power curve re-indexed by the earlier-phase effect under each shift value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedPowerCurve {
    /// Curve at `Δ̂`.
    pub center: PowerCurve,
    /// Curve at the lower shift limit `Δ_lo`.
    pub at_delta_lo: PowerCurve,
    /// Curve at the upper shift limit `Δ_hi`.
    pub at_delta_hi: PowerCurve,
    /// Grid cells whose shifted argument fell outside the source curve and were
    /// clipped to its end values, per band member (center, lo, hi).
    pub clipped: [usize; 3],
}

impl BandedPowerCurve {
    /// Lower edge of the band. For a nondecreasing source curve a larger shift
    /// gives lower power, so this is the curve at `Δ_hi`.
    pub fn lower(&self) -> &PowerCurve {
        &self.at_delta_hi
    }

    /// Upper edge of the band (the curve at `Δ_lo`).
    pub fn upper(&self) -> &PowerCurve {
        &self.at_delta_lo
    }

    /// Checks `lower ≤ center ≤ upper` pointwise.
    pub fn is_ordered(&self) -> bool {
        let (l, c, u) = (self.lower().values(), self.center.values(), self.upper().values());
        (0..c.len()).all(|i| l[i] <= c[i] && c[i] <= u[i])
    }
}

fn shifted(pc3: &PowerCurve, delta: f64) -> Result<(PowerCurve, usize)> {
    let g = *pc3.grid();
    let (lo, hi) = (g.lo(), g.last());
    let v = pc3.values();
    let mut clipped = 0;
    let mut inside = 0;
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.len() {
        let x = g.point(i) - delta;
        if x < lo {
            clipped += 1;
            values.push(v[0]);
        } else if x > hi {
            clipped += 1;
            values.push(v[v.len() - 1]);
        } else {
            inside += 1;
            values.push(pc3.at(x)?);
        }
    }
    if inside == 0 {
        return Err(Error::Domain(format!(
            "shift {delta} moves every grid point outside the curve's span [{lo}, {hi}]"
        )));
    }
    Ok((PowerCurve::from_values(g, values)?, clipped))
}

/// `θ₂ ↦ β₃(θ₂ − δ)` for `δ ∈ {Δ̂, Δ_lo, Δ_hi}`.
pub fn extrapolated_power_curve(pc3: &PowerCurve, shift: &ShiftEstimate) -> Result<BandedPowerCurve> {
    let (center, c0) = shifted(pc3, shift.delta_hat)?;
    let (at_lo, c1) = shifted(pc3, shift.delta_lo)?;
    let (at_hi, c2) = shifted(pc3, shift.delta_hi)?;
    Ok(BandedPowerCurve {
        center,
        at_delta_lo: at_lo,
        at_delta_hi: at_hi,
        clipped: [c0, c1, c2],
    })
}

/// Power-axis p-value functions for each member of an extrapolated band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedPowerPvfn {
    pub center: PowerPValueFunction,
    pub at_delta_lo: PowerPValueFunction,
    pub at_delta_hi: PowerPValueFunction,
}

/// Pushes `h2` through each shifted curve: the value `H(θ₂)` is assigned to
/// the power `β₃(θ₂ − δ)`.
pub fn extrapolated_power_pvfn(
    h2: &PValueFunction,
    pc3: &PowerCurve,
    shift: &ShiftEstimate,
) -> Result<BandedPowerPvfn> {
    let band = extrapolated_power_curve(pc3, shift)?;
    Ok(BandedPowerPvfn {
        center: power_pvfn(h2, &band.center)?,
        at_delta_lo: power_pvfn(h2, &band.at_delta_lo)?,
        at_delta_hi: power_pvfn(h2, &band.at_delta_hi)?,
    })
}
