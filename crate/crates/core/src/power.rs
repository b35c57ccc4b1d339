//! Power curves approximated by p-value functions, and inference on power.
//!
//! For a design testing `H₀: θ ≤ θ₀` at level `α`, the upper LRT p-value
//! function built from the ex-ante result "control rate as assumed, observed
//! effect equal to the minimum detectable effect" approximates the power curve
//! `β(θ)`: it equals `α` at `θ₀` by construction.
//!
//! Because `β` is increasing in `θ`, any p-value function `H(θ)` for the effect
//! can be pushed forward onto the power axis by pairing `(β(θᵢ), H(θᵢ))`
//! ([`power_pvfn`]). A delta-method Wald alternative on the probit scale is
//! provided by [`delta_wald_power`].

use serde::{Deserialize, Serialize};

use crate::binom_model::{self, TwoArmCounts};
use crate::dist;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::pvfn::{self, PValueFunction, Tail};

/// Central-difference step used for the delta-method gradients.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Estimated power is clamped into `[BETA_CLAMP, 1 − BETA_CLAMP]` before the probit.
pub const BETA_CLAMP: f64 = 1e-6;

/// A two-arm design testing `H₀: θ ≤ theta0` with an upper-tailed test at `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialDesign {
    pub n_ctrl: f64,
    pub n_active: f64,
    pub theta0: f64,
    pub alpha: f64,
}

impl TrialDesign {
    pub fn new(n_ctrl: f64, n_active: f64, theta0: f64, alpha: f64) -> Result<Self> {
        let d = Self {
            n_ctrl,
            n_active,
            theta0,
            alpha,
        };
        d.validate()?;
        Ok(d)
    }

    /// Equal allocation with `n` per arm.
    pub fn per_arm(n: f64, theta0: f64, alpha: f64) -> Result<Self> {
        Self::new(n, n, theta0, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_ctrl.is_finite() && self.n_ctrl > 0.0 && self.n_active.is_finite() && self.n_active > 0.0) {
            return Err(Error::invalid(format!(
                "per-arm sample sizes must be > 0, got n_ctrl={}, n_active={}",
                self.n_ctrl, self.n_active
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 0.5], got {}",
                self.alpha
            )));
        }
        if !(self.theta0 > -1.0 && self.theta0 < 1.0) {
            return Err(Error::Domain(format!(
                "null margin {} lies outside (-1, 1)",
                self.theta0
            )));
        }
        Ok(())
    }

    /// Expected counts for an ex-ante result with the given rates.
    pub fn expected_counts(&self, ctrl_rate: f64, active_rate: f64) -> Result<TwoArmCounts> {
        TwoArmCounts::expected(ctrl_rate, self.n_ctrl, active_rate, self.n_active)
    }
}

fn check_ctrl_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("control rate {p} must lie in (0, 1)")));
    }
    Ok(())
}

/// LRT statistic at the design margin for an ex-ante observed effect `theta_hat`.
fn margin_statistic(design: &TrialDesign, ctrl_rate: f64, theta_hat: f64, start: f64) -> Result<(f64, f64)> {
    let counts = design.expected_counts(ctrl_rate, ctrl_rate + theta_hat)?;
    binom_model::lrt_statistic_from(&counts, design.theta0, start)
}

/// Minimum detectable effect: the observed effect whose upper p-value at the
/// margin equals `alpha`, solved by bisection to machine precision.
pub fn mde(design: &TrialDesign, ctrl_rate: f64) -> Result<f64> {
    design.validate()?;
    check_ctrl_rate(ctrl_rate)?;
    if design.alpha == 0.5 {
        return Ok(design.theta0);
    }
    // Upper p-value at the margin is Φ(−√stat) when the effect exceeds the margin.
    let z = dist::normal_quantile(design.alpha);
    let target = z * z;

    let eps = 1e-9;
    let mut lo = design.theta0.max(-ctrl_rate + eps);
    let mut hi = 1.0 - ctrl_rate - eps;
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "no feasible observed effect above the margin {} at control rate {ctrl_rate}",
            design.theta0
        )));
    }
    let mut start = ctrl_rate;
    let (s_hi, _) = margin_statistic(design, ctrl_rate, hi, start)?;
    if s_hi < target {
        return Err(Error::Domain(format!(
            "minimum detectable effect not bracketed: even an observed effect of {hi} does not reach alpha={}",
            design.alpha
        )));
    }
    if lo > design.theta0 {
        let (s_lo, _) = margin_statistic(design, ctrl_rate, lo, start)?;
        if s_lo > target {
            return Err(Error::Domain(
                "minimum detectable effect not bracketed from below".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (s, p0) = margin_statistic(design, ctrl_rate, mid, start)?;
        start = p0;
        if s < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tabulated power curve `θ ↦ β(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    grid: ParamGrid,
    values: Vec<f64>,
    design: Option<TrialDesign>,
    ctrl_rate: Option<f64>,
    mde: Option<f64>,
}

impl PowerCurve {
    /// A curve from arbitrary values in `[0, 1]` (e.g. for what-if analyses).
    pub fn from_values(grid: ParamGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::Domain(format!("power value {v} outside [0, 1]")));
        }
        Ok(Self {
            grid,
            values,
            design: None,
            ctrl_rate: None,
            mde: None,
        })
    }

    /// A constant curve, handy as the neutral element of products of curves.
    pub fn constant(grid: ParamGrid, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn design(&self) -> Option<&TrialDesign> {
        self.design.as_ref()
    }
    pub fn ctrl_rate(&self) -> Option<f64> {
        self.ctrl_rate
    }
    pub fn mde(&self) -> Option<f64> {
        self.mde
    }

    pub fn at(&self, theta: f64) -> Result<f64> {
        pvfn::interpolate(&self.grid, &self.values, theta)
    }

    /// First index where the curve decreases, if any.
    pub fn first_decrease(&self) -> Option<(usize, f64)> {
        self.values
            .windows(2)
            .enumerate()
            .find(|(_, w)| w[1] < w[0])
            .map(|(i, w)| (i + 1, w[0] - w[1]))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.first_decrease().is_none()
    }

    /// Pointwise product of two curves on the same grid (success in both phases).
    pub fn product(&self, other: &PowerCurve) -> Result<PowerCurve> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        Self::from_values(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// Pointwise minimum of two curves on the same grid.
    pub fn pointwise_min(&self, other: &PowerCurve) -> Result<PowerCurve> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        Self::from_values(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a.min(*b)).collect(),
        )
    }

    /// The curve read as an upper p-value function (the minimum-success function).
    pub fn as_pvfn(&self) -> Result<PValueFunction> {
        let source = match (self.design, self.ctrl_rate, self.mde) {
            (Some(d), Some(p), Some(m)) => format!(
                "power-curve n_ctrl={} n_active={} theta0={} alpha={} ctrl_rate={p} mde={m:e}",
                d.n_ctrl, d.n_active, d.theta0, d.alpha
            ),
            _ => "power-curve".to_string(),
        };
        PValueFunction::new(self.grid, self.values.clone(), Tail::Upper, source)
    }
}

/// Approximate power curve of `design` at the assumed control rate.
pub fn power_curve(design: &TrialDesign, ctrl_rate: f64, grid: &ParamGrid) -> Result<PowerCurve> {
    let m = mde(design, ctrl_rate)?;
    power_curve_with_mde(design, ctrl_rate, m, grid)
}

/// As [`power_curve`] with a precomputed minimum detectable effect.
pub fn power_curve_with_mde(design: &TrialDesign, ctrl_rate: f64, mde: f64, grid: &ParamGrid) -> Result<PowerCurve> {
    let counts = design.expected_counts(ctrl_rate, ctrl_rate + mde)?;
    let h = pvfn::upper_pvfn_lrt(&counts, grid)?;
    Ok(PowerCurve {
        grid: *grid,
        values: h.values().to_vec(),
        design: Some(*design),
        ctrl_rate: Some(ctrl_rate),
        mde: Some(mde),
    })
}

/// Approximate power at a single `θ`, with the MDE recomputed for `ctrl_rate`.
pub fn power_at(design: &TrialDesign, ctrl_rate: f64, theta: f64) -> Result<f64> {
    Ok(dist::normal_cdf(power_probit(design, ctrl_rate, theta)?))
}

/// `Φ⁻¹(β(θ, p_ctrl))`, evaluated as the signed root of the LRT statistic.
pub fn power_probit(design: &TrialDesign, ctrl_rate: f64, theta: f64) -> Result<f64> {
    let m = mde(design, ctrl_rate)?;
    let counts = design.expected_counts(ctrl_rate, ctrl_rate + m)?;
    let stat = binom_model::lrt_statistic(&counts, theta)?;
    Ok(pvfn::probit_from_lrt(stat, theta, m))
}

/// Linear interpolation of the power curve at an effect estimate.
pub fn power_point_estimate(pc: &PowerCurve, theta_hat: f64) -> Result<f64> {
    pc.at(theta_hat)
}

/// A p-value function on the power axis: pairs `(β, H)` sorted by `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPValueFunction {
    power: Vec<f64>,
    values: Vec<f64>,
    source: String,
}

/// Where a power query fell relative to the attained power range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Saturation {
    None,
    Low,
    High,
}

impl PowerPValueFunction {
    /// Builds from pairs; `power` must be nondecreasing, `values` nondecreasing.
    pub fn from_pairs(power: Vec<f64>, values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if power.len() != values.len() || power.len() < 2 {
            return Err(Error::invalid("power-axis function needs at least two aligned pairs"));
        }
        for w in power.windows(2).enumerate() {
            if w.1[1] < w.1[0] {
                return Err(Error::NotMonotone {
                    index: w.0 + 1,
                    violation: w.1[0] - w.1[1],
                });
            }
        }
        for w in values.windows(2).enumerate() {
            if w.1[1] < w.1[0] {
                return Err(Error::NotMonotone {
                    index: w.0 + 1,
                    violation: w.1[0] - w.1[1],
                });
            }
        }
        Ok(Self {
            power,
            values,
            source: source.into(),
        })
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Attained power range `[β_min, β_max]`.
    pub fn power_range(&self) -> (f64, f64) {
        (self.power[0], *self.power.last().expect("non-empty"))
    }

    /// Value at `beta0`, with queries outside the attained range clipped to the
    /// nearest end and flagged.
    pub fn at_flagged(&self, beta0: f64) -> Result<(f64, Saturation)> {
        if !(0.0..=1.0).contains(&beta0) {
            return Err(Error::Domain(format!("power {beta0} outside [0, 1]")));
        }
        let (lo, hi) = self.power_range();
        if beta0 < lo {
            return Ok((self.values[0], Saturation::Low));
        }
        if beta0 > hi {
            return Ok((*self.values.last().expect("non-empty"), Saturation::High));
        }
        let j = self.power.partition_point(|&b| b < beta0);
        if self.power[j] == beta0 || j == 0 {
            return Ok((self.values[j], Saturation::None));
        }
        let (b0, b1) = (self.power[j - 1], self.power[j]);
        let frac = (beta0 - b0) / (b1 - b0);
        Ok((
            self.values[j - 1] + frac * (self.values[j] - self.values[j - 1]),
            Saturation::None,
        ))
    }

    /// P-value testing `H₀: β ≤ beta0`.
    pub fn at(&self, beta0: f64) -> Result<f64> {
        self.at_flagged(beta0).map(|(v, _)| v)
    }

    /// The power at which the p-value function crosses `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let (min, max) = (self.values[0], *self.values.last().expect("non-empty"));
        if !(p >= min && p <= max) {
            return Err(Error::OutOfRange { value: p, min, max });
        }
        let j = self.values.partition_point(|&v| v < p);
        if j == 0 || self.values[j] == p {
            return Ok(self.power[j]);
        }
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        let frac = (p - v0) / (v1 - v0);
        Ok(self.power[j - 1] + frac * (self.power[j] - self.power[j - 1]))
    }

    /// Two-sided equal-tailed interval for power.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level must lie in (0, 1), got {level}"
            )));
        }
        let a = 1.0 - level;
        Ok((self.quantile(a / 2.0)?, self.quantile(1.0 - a / 2.0)?))
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Probability of success as `∫β dH(β)` on the power axis.
    pub fn pos(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..self.power.len() {
            let dh = self.values[j] - self.values[j - 1];
            num += self.power[j] * dh;
            den += dh;
        }
        if !(den > 0.0) {
            return Err(Error::DegenerateMass("no p-value mass on the power axis".into()));
        }
        Ok(num / den)
    }
}

/// Pushes `h` (a p-value function for the effect) onto the power axis through
/// the nondecreasing curve `pc`: the value at `β(θᵢ)` is exactly `H(θᵢ)`.
pub fn power_pvfn(h: &PValueFunction, pc: &PowerCurve) -> Result<PowerPValueFunction> {
    if !h.grid().same_as(pc.grid()) {
        return Err(Error::GridMismatch(format!("{} vs {}", h.grid(), pc.grid())));
    }
    if let Some((index, violation)) = pc.first_decrease() {
        return Err(Error::NotMonotone { index, violation });
    }
    let h = h.as_upper();
    // A nondecreasing curve keeps grid order; the stable sort only matters for
    // ties and documents the contract.
    let mut idx: Vec<usize> = (0..pc.values.len()).collect();
    idx.sort_by(|&a, &b| pc.values[a].total_cmp(&pc.values[b]));
    let power = idx.iter().map(|&i| pc.values[i]).collect();
    let values = idx.iter().map(|&i| h.values()[i]).collect();
    PowerPValueFunction::from_pairs(power, values, format!("pushforward({})", h.source()))
}

/// Variance-stabilising transform for the delta method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerTransform {
    #[default]
    Probit,
}

/// Delta-method Wald inference on `g(β)` with `g = Φ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPowerInference {
    /// Estimated power `β(θ̂, p̂_ctrl)` (after clamping).
    pub beta_hat: f64,
    /// `g(β̂)`.
    pub g_hat: f64,
    /// Standard error of `g(β̂)`.
    pub se: f64,
    pub grad_theta: f64,
    pub grad_ctrl: f64,
    /// True when `β̂` had to be clamped away from 0 or 1.
    pub clamped: bool,
}

impl DeltaPowerInference {
    /// P-value testing `H₀: β ≤ beta0`: `1 − Φ((g(β̂) − g(β₀))/ŝe)`.
    pub fn pvalue(&self, beta0: f64) -> Result<f64> {
        if !(beta0 > 0.0 && beta0 < 1.0) {
            return Err(Error::Domain(format!("power {beta0} must lie in (0, 1)")));
        }
        Ok(dist::normal_cdf((dist::normal_quantile(beta0) - self.g_hat) / self.se))
    }

    /// Two-sided interval `g⁻¹(g(β̂) ± z·ŝe)`.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level must lie in (0, 1), got {level}"
            )));
        }
        let z = dist::normal_quantile(0.5 + level / 2.0);
        Ok((
            dist::normal_cdf(self.g_hat - z * self.se),
            dist::normal_cdf(self.g_hat + z * self.se),
        ))
    }

    /// The p-value function tabulated at `n` evenly spaced interior powers.
    pub fn tabulate(&self, n: usize) -> Result<PowerPValueFunction> {
        if n < 2 {
            return Err(Error::invalid("need at least two power points"));
        }
        let power: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let values = power.iter().map(|&b| self.pvalue(b)).collect::<Result<Vec<_>>>()?;
        PowerPValueFunction::from_pairs(power, values, "delta-probit")
    }
}

/// `Φ⁻¹β` at `(θ, p_ctrl)` and its central-difference gradient with step `h`.
pub fn probit_power_gradient(design: &TrialDesign, theta: f64, ctrl_rate: f64, h: f64) -> Result<(f64, f64)> {
    let g = |t: f64, p: f64| power_probit(design, p, t);
    let d_theta = (g(theta + h, ctrl_rate)? - g(theta - h, ctrl_rate)?) / (2.0 * h);
    let d_ctrl = (g(theta, ctrl_rate + h)? - g(theta, ctrl_rate - h)?) / (2.0 * h);
    Ok((d_theta, d_ctrl))
}

/// Delta-method inference on the power of `design` from external two-arm data.
pub fn delta_wald_power(
    external: &TwoArmCounts,
    design: &TrialDesign,
    transform: PowerTransform,
) -> Result<DeltaPowerInference> {
    let PowerTransform::Probit = transform;
    let hat = binom_model::mle(external)?;
    let (pc, pa) = (hat.p_ctrl(), hat.p_active());
    let g_raw = power_probit(design, pc, hat.theta())?;
    let (g_lo, g_hi) = (
        dist::normal_quantile(BETA_CLAMP),
        dist::normal_quantile(1.0 - BETA_CLAMP),
    );
    let g_hat = g_raw.clamp(g_lo, g_hi);
    let clamped = g_hat != g_raw;
    let (d_theta, d_ctrl) = probit_power_gradient(design, hat.theta(), pc, GRADIENT_STEP)?;
    let var_ctrl = pc * (1.0 - pc) / external.n_ctrl();
    let var_theta = pa * (1.0 - pa) / external.n_active() + var_ctrl;
    let cov = -var_ctrl;
    let var = d_theta * d_theta * var_theta + d_ctrl * d_ctrl * var_ctrl + 2.0 * d_theta * d_ctrl * cov;
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Boundary(format!("delta-method variance {var} is not positive")));
    }
    Ok(DeltaPowerInference {
        beta_hat: dist::normal_cdf(g_hat),
        g_hat,
        se: var.sqrt(),
        grad_theta: d_theta,
        grad_ctrl: d_ctrl,
        clamped,
    })
}

/// One row of a sample-size sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_per_arm: f64,
    pub mde: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Point estimate `β(θ̂)` and two-sided pushforward limits of power across
/// per-arm sample sizes, for a fixed p-value function of the effect.
pub fn sample_size_sweep(
    h: &PValueFunction,
    theta0: f64,
    alpha: f64,
    ctrl_rate: f64,
    sizes: &[f64],
    level: f64,
) -> Result<Vec<SweepRow>> {
    let theta_hat = h.median()?;
    sizes
        .iter()
        .map(|&n| {
            let design = TrialDesign::per_arm(n, theta0, alpha)?;
            let pc = power_curve(&design, ctrl_rate, h.grid())?;
            let pp = power_pvfn(h, &pc)?;
            let (lower, upper) = pp.interval(level)?;
            Ok(SweepRow {
                n_per_arm: n,
                mde: pc.mde().expect("designed curve"),
                estimate: pc.at(theta_hat)?,
                lower,
                upper,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase3() -> TrialDesign {
        TrialDesign::per_arm(365.0, -0.12, 0.025).unwrap()
    }
    fn phase2() -> TrialDesign {
        TrialDesign::per_arm(90.0, -0.05, 0.2).unwrap()
    }

    #[test]
    fn mde_worked_designs() {
        let m3 = mde(&phase3(), 0.43).unwrap();
        assert!((m3 + 0.049).abs() < 0.002, "{m3}");
        let m2 = mde(&phase2(), 0.43).unwrap();
        assert!((m2 - 0.014).abs() < 0.002, "{m2}");
        let half = TrialDesign::per_arm(100.0, -0.1, 0.5).unwrap();
        assert_eq!(mde(&half, 0.43).unwrap(), -0.1);
    }

    #[test]
    fn mde_hits_alpha() {
        for d in [phase2(), phase3()] {
            let m = mde(&d, 0.43).unwrap();
            let c = d.expected_counts(0.43, 0.43 + m).unwrap();
            let p = pvfn::lrt_upper_pvalue(&c, d.theta0).unwrap();
            assert!((p - d.alpha).abs() < 1e-10, "{p}");
        }
    }

    #[test]
    fn curve_anchors() {
        let g = ParamGrid::default_theta();
        let pc3 = power_curve(&phase3(), 0.43, &g).unwrap();
        assert!((pc3.at(-0.12).unwrap() - 0.025).abs() < 0.002);
        assert!((pc3.at(-0.05).unwrap() - 0.50).abs() < 0.02);
        assert!((pc3.at(0.0).unwrap() - 0.91).abs() < 0.01);
        let pc2 = power_curve(&phase2(), 0.43, &g).unwrap();
        assert!((pc2.at(0.0).unwrap() - 0.428).abs() < 0.015);
        assert!((pc2.at(-0.12).unwrap() - 0.034).abs() < 0.005);
        assert!(pc3.is_nondecreasing() && pc2.is_nondecreasing());
    }

    #[test]
    fn pushforward_is_exact_on_grid() {
        let g = ParamGrid::default_theta();
        let pc3 = power_curve(&phase3(), 0.43, &g).unwrap();
        let h = power_curve(&phase2(), 0.43, &g).unwrap().as_pvfn().unwrap();
        let pp = power_pvfn(&h, &pc3).unwrap();
        for i in 1..g.len() {
            if pc3.values()[i] > pc3.values()[i - 1] {
                assert_eq!(pp.at(pc3.values()[i]).unwrap(), h.values()[i]);
            }
        }
        assert!((pp.at(0.5).unwrap() - 0.20).abs() < 0.005);
        let est = power_point_estimate(&pc3, 0.014).unwrap();
        assert!((est - 0.959).abs() < 0.005, "{est}");
    }

    #[test]
    fn flat_h_gives_flat_power_function() {
        let g = ParamGrid::default_theta();
        let pc3 = power_curve(&phase3(), 0.43, &g).unwrap();
        let flat = PValueFunction::new(g, vec![0.5; g.len()], Tail::Upper, "flat").unwrap();
        let pp = power_pvfn(&flat, &pc3).unwrap();
        assert!(pp.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn decreasing_curve_is_rejected() {
        let g = ParamGrid::new(0.0, 1.0, 0.1).unwrap();
        let pc = PowerCurve::from_values(g, (0..11).map(|i| 1.0 - i as f64 / 10.0).collect()).unwrap();
        let h = PValueFunction::new(g, (0..11).map(|i| i as f64 / 10.0).collect(), Tail::Upper, "t").unwrap();
        assert!(matches!(power_pvfn(&h, &pc), Err(Error::NotMonotone { .. })));
    }

    #[test]
    fn delta_gradient_richardson_stable() {
        let c = TwoArmCounts::new(39.0, 90.0, 40.0, 90.0).unwrap();
        let hat = binom_model::mle(&c).unwrap();
        let coarse = probit_power_gradient(&phase3(), hat.theta(), hat.p_ctrl(), 1e-5).unwrap();
        let fine = probit_power_gradient(&phase3(), hat.theta(), hat.p_ctrl(), 1e-6).unwrap();
        assert!(((coarse.0 - fine.0) / fine.0).abs() < 1e-4, "{coarse:?} {fine:?}");
        assert!(((coarse.1 - fine.1) / fine.1).abs() < 1e-4, "{coarse:?} {fine:?}");
    }

    #[test]
    fn delta_interval_collapses_with_huge_external_study() {
        let n = 1e6;
        let c = TwoArmCounts::new(0.43 * n, n, 0.41 * n, n).unwrap();
        let inf = delta_wald_power(&c, &phase3(), PowerTransform::Probit).unwrap();
        let (lo, hi) = inf.interval(0.6).unwrap();
        assert!(hi - lo < 0.01);
        assert!(lo <= inf.beta_hat && inf.beta_hat <= hi);
        assert!((inf.pvalue(inf.beta_hat).unwrap() - 0.5).abs() < 1e-9);
    }
}
