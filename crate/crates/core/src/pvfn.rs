//! P-value functions tabulated on a parameter grid, together with the
//! confidence curves and confidence densities derived from them.
//!
//! An *upper* p-value function `H(θ₀)` is the one-sided p-value for
//! `H₀: θ ≤ θ₀` viewed as a function of `θ₀`; it increases from 0 to 1 and,
//! for continuous models, is a confidence distribution whose median is the
//! point estimate. The *lower* function is its complement.

use serde::{Deserialize, Serialize};

use crate::binom_model::{self, TwoArmCounts};
use crate::dist;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;

/// Largest monotonicity violation silently repaired at construction.
pub const MONOTONE_REPAIR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Upper,
    Lower,
}

impl Tail {
    pub fn flip(self) -> Self {
        match self {
            Tail::Upper => Tail::Lower,
            Tail::Lower => Tail::Upper,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tail::Upper => "upper",
            Tail::Lower => "lower",
        }
    }
}

impl std::str::FromStr for Tail {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Tail::Upper),
            "lower" => Ok(Tail::Lower),
            other => Err(Error::invalid(format!("unknown tail '{other}'"))),
        }
    }
}

/// A p-value function on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueFunction {
    grid: ParamGrid,
    values: Vec<f64>,
    tail: Tail,
    source: String,
    /// Number of grid cells nudged by the monotone repair.
    repaired: usize,
}

impl PValueFunction {
    /// Validates range and monotonicity. Violations below
    /// [`MONOTONE_REPAIR_TOL`] are floating-point noise and are repaired with a
    /// running extremum; anything larger is an error.
    pub fn new(grid: ParamGrid, values: Vec<f64>, tail: Tail, source: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -MONOTONE_REPAIR_TOL || *v > 1.0 + MONOTONE_REPAIR_TOL {
                return Err(Error::Domain(format!(
                    "p-value {v} at theta={} is outside [0, 1]",
                    grid.point(i)
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        let mut repaired = 0;
        for i in 1..values.len() {
            let (prev, cur) = (values[i - 1], values[i]);
            let violation = match tail {
                Tail::Upper => prev - cur,
                Tail::Lower => cur - prev,
            };
            if violation > 0.0 {
                if violation > MONOTONE_REPAIR_TOL {
                    return Err(Error::NotMonotone { index: i, violation });
                }
                values[i] = prev;
                repaired += 1;
            }
        }
        Ok(Self {
            grid,
            values,
            tail,
            source: source.into(),
            repaired,
        })
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn tail(&self) -> Tail {
        self.tail
    }
    pub fn source(&self) -> &str {
        &self.source
    }
    pub fn repaired(&self) -> usize {
        self.repaired
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// Piecewise-linear interpolation at `theta`.
    pub fn at(&self, theta: f64) -> Result<f64> {
        interpolate(&self.grid, &self.values, theta)
    }

    /// The `θ` at which the function crosses `p`, by linear interpolation.
    /// For an upper function this is the `θ₀` whose upper p-value equals `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let (min, max) = self.range();
        if !(p >= min && p <= max) {
            return Err(Error::OutOfRange { value: p, min, max });
        }
        let v = &self.values;
        let crosses = |x: f64| match self.tail {
            Tail::Upper => x >= p,
            Tail::Lower => x <= p,
        };
        let i = v.iter().position(|&x| crosses(x)).expect("p lies within the range");
        if i == 0 || v[i] == p {
            return Ok(self.grid.point(i));
        }
        let (a, b) = (v[i - 1], v[i]);
        let frac = (p - a) / (b - a);
        Ok(self.grid.point(i - 1) + frac * self.grid.step())
    }

    /// Equal-tailed interval `(q(α/2), q(1−α/2))` with `α = 1 − level`,
    /// returned in increasing order.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level must lie in (0, 1), got {level}"
            )));
        }
        let alpha = 1.0 - level;
        let a = self.quantile(alpha / 2.0)?;
        let b = self.quantile(1.0 - alpha / 2.0)?;
        Ok((a.min(b), a.max(b)))
    }

    /// Median of the confidence distribution (value 0.5 crossing).
    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    pub fn range(&self) -> (f64, f64) {
        let first = self.values[0];
        let last = *self.values.last().expect("grid is non-empty");
        (first.min(last), first.max(last))
    }

    /// The upper-tail view of this function (itself, or its complement).
    pub fn as_upper(&self) -> PValueFunction {
        match self.tail {
            Tail::Upper => self.clone(),
            Tail::Lower => lower_pvfn(self),
        }
    }
}

pub(crate) fn interpolate(grid: &ParamGrid, values: &[f64], x: f64) -> Result<f64> {
    let (i, frac) = grid
        .locate(x)
        .ok_or_else(|| Error::Domain(format!("{x} lies outside the grid [{}, {}]", grid.lo(), grid.last())))?;
    if frac == 0.0 {
        return Ok(values[i]);
    }
    Ok(values[i] + frac * (values[i + 1] - values[i]))
}

/// Upper p-value from the LRT statistic: `[1 ∓ F(stat)]/2` on either side of `θ̂`.
pub fn upper_pvalue_from_lrt(stat: f64, theta0: f64, theta_hat: f64) -> f64 {
    let half_tail = 0.5 * dist::chi2_1_sf(stat);
    if theta0 <= theta_hat {
        half_tail
    } else {
        1.0 - half_tail
    }
}

/// Probit of the LRT upper p-value, `Φ⁻¹(H)`, computed as the signed root of the
/// statistic so that it stays exact far into the tails.
pub fn probit_from_lrt(stat: f64, theta0: f64, theta_hat: f64) -> f64 {
    let r = stat.sqrt();
    if theta0 <= theta_hat {
        -r
    } else {
        r
    }
}

/// Upper LRT p-value at a single null value.
pub fn lrt_upper_pvalue(counts: &TwoArmCounts, theta0: f64) -> Result<f64> {
    let hat = binom_model::mle(counts)?;
    let stat = binom_model::lrt_statistic(counts, theta0)?;
    Ok(upper_pvalue_from_lrt(stat, theta0, hat.theta()))
}

fn check_theta_grid(grid: &ParamGrid) -> Result<()> {
    if grid.lo() <= -1.0 || grid.last() >= 1.0 {
        return Err(Error::Domain(format!(
            "grid [{}, {}] leaves the feasible range (-1, 1) of a difference in proportions",
            grid.lo(),
            grid.last()
        )));
    }
    Ok(())
}

fn counts_label(c: &TwoArmCounts) -> String {
    format!(
        "x_ctrl={} n_ctrl={} x_active={} n_active={}",
        c.x_ctrl(),
        c.n_ctrl(),
        c.x_active(),
        c.n_active()
    )
}

/// Upper p-value function from inverting the likelihood ratio test.
pub fn upper_pvfn_lrt(counts: &TwoArmCounts, grid: &ParamGrid) -> Result<PValueFunction> {
    check_theta_grid(grid)?;
    let hat = binom_model::mle(counts)?;
    let thetas = grid.points();
    let stats = binom_model::lrt_statistic_sweep(counts, &thetas)?;
    let values = thetas
        .iter()
        .zip(&stats)
        .map(|(&t, &s)| upper_pvalue_from_lrt(s, t, hat.theta()))
        .collect();
    PValueFunction::new(*grid, values, Tail::Upper, format!("lrt {}", counts_label(counts)))
}

/// Link function for the Wald construction. Only the identity link is shipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaldLink {
    #[default]
    Identity,
}

/// Upper p-value function `1 − Φ((θ̂ − θ₀)/ŝe)` from inverting a Wald test.
pub fn upper_pvfn_wald(counts: &TwoArmCounts, grid: &ParamGrid, link: WaldLink) -> Result<PValueFunction> {
    let WaldLink::Identity = link;
    check_theta_grid(grid)?;
    let hat = binom_model::mle(counts)?;
    let se = binom_model::wald_se(counts)?;
    let values = grid
        .points()
        .into_iter()
        .map(|t| dist::normal_cdf((t - hat.theta()) / se))
        .collect();
    PValueFunction::new(*grid, values, Tail::Upper, format!("wald {}", counts_label(counts)))
}

/// Pointwise complement with the tail flipped (continuous sample space).
pub fn lower_pvfn(h: &PValueFunction) -> PValueFunction {
    PValueFunction {
        grid: h.grid,
        values: h.values.iter().map(|v| 1.0 - v).collect(),
        tail: h.tail.flip(),
        source: h.source.clone(),
        repaired: h.repaired,
    }
}

/// Confidence curve: the smaller one-sided p-value at each `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCurve {
    grid: ParamGrid,
    values: Vec<f64>,
    point_estimate: f64,
}

impl ConfidenceCurve {
    /// Builds a curve from tabulated values; the point estimate is the grid argmax.
    pub fn new(grid: ParamGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let imax = argmax(&values);
        Ok(Self {
            grid,
            point_estimate: grid.point(imax),
            values,
        })
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn point_estimate(&self) -> f64 {
        self.point_estimate
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn at(&self, theta: f64) -> Result<f64> {
        interpolate(&self.grid, &self.values, theta)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `C(θ) = H(θ)` below the median and `1 − H(θ)` above it.
pub fn confidence_curve(h: &PValueFunction) -> ConfidenceCurve {
    let up = h.as_upper();
    let values = up.values.iter().map(|&v| v.min(1.0 - v)).collect();
    ConfidenceCurve::new(up.grid, values).expect("lengths match")
}

/// Confidence density `h = dH/dθ` by backward differences on the grid; the
/// value at index `i` is `(H_i − H_{i−1})/step` and the first cell is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceDensity {
    grid: ParamGrid,
    values: Vec<f64>,
    normalization: f64,
}

impl ConfidenceDensity {
    /// Wraps nonnegative cell values; `normalization` is their Riemann mass.
    pub fn new(grid: ParamGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!(
                "density value {} at theta={} is negative or not finite",
                values[i],
                grid.point(i)
            )));
        }
        let normalization = values.iter().sum::<f64>() * grid.step();
        Ok(Self {
            grid,
            values,
            normalization,
        })
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// Riemann mass `Σ h_i · step`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }
    pub fn mass(&self) -> f64 {
        self.normalization
    }

    /// Cell midpoints `θ_i − step/2`, where the backward difference is centred.
    fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let g = self.grid;
        (0..g.len()).map(move |i| g.point(i) - 0.5 * g.step())
    }

    /// Mean of the normalised density.
    pub fn mean(&self) -> Result<f64> {
        self.require_mass()?;
        let s: f64 = self.midpoints().zip(&self.values).map(|(t, v)| t * v).sum();
        Ok(s * self.grid.step() / self.normalization)
    }

    /// Variance of the normalised density.
    pub fn variance(&self) -> Result<f64> {
        let m = self.mean()?;
        let s: f64 = self
            .midpoints()
            .zip(&self.values)
            .map(|(t, v)| (t - m) * (t - m) * v)
            .sum();
        Ok(s * self.grid.step() / self.normalization)
    }

    /// Grid point of the largest density cell.
    pub fn argmax(&self) -> f64 {
        self.grid.point(argmax(&self.values))
    }

    /// The same density rescaled to unit Riemann mass.
    pub fn normalized(&self) -> Result<Self> {
        self.require_mass()?;
        let k = 1.0 / self.normalization;
        Self::new(self.grid, self.values.iter().map(|v| v * k).collect())
    }

    fn require_mass(&self) -> Result<()> {
        if !(self.normalization > 0.0) {
            return Err(Error::DegenerateMass("density has zero total mass".into()));
        }
        Ok(())
    }
}

/// Backward-difference density of the upper view of `h`.
pub fn confidence_density(h: &PValueFunction) -> ConfidenceDensity {
    let up = h.as_upper();
    let step = up.grid.step();
    let mut values = Vec::with_capacity(up.values.len());
    values.push(0.0);
    for w in up.values.windows(2) {
        values.push((w[1] - w[0]) / step);
    }
    ConfidenceDensity::new(up.grid, values).expect("monotone input gives nonnegative cells")
}
