//! The worked configuration used throughout the examples and the command-line
//! presets: a phase-2 study of 90 per arm tested against a margin of −0.05 at
//! α = 0.2, followed by a phase-3 non-inferiority study of 365 per arm against
//! −0.12 at α = 0.025, with a control response rate of 0.43.

use serde::Serialize;

use crate::binom_model::TwoArmCounts;
use crate::combine::{self, WeightedPvfn};
use crate::error::Result;
use crate::grid::ParamGrid;
use crate::power::{self, PowerCurve, TrialDesign};
use crate::pvfn::{self, PValueFunction};
use crate::simlab::{DecisionRule, NuisancePlugin, SimConfig};

pub const CTRL_RATE: f64 = 0.43;

pub const PHASE2_N: f64 = 90.0;
pub const PHASE2_MARGIN: f64 = -0.05;
pub const PHASE2_ALPHA: f64 = 0.2;

pub const PHASE3_N: f64 = 365.0;
pub const PHASE3_MARGIN: f64 = -0.12;
pub const PHASE3_ALPHA: f64 = 0.025;

/// Elicited mean difference and the arm sizes it is equivalent to.
pub const ELICITED_MEAN: f64 = -0.02;
pub const ELICITED_N_ACTIVE: f64 = 350.0;
pub const ELICITED_N_CTRL: f64 = 1200.0;

/// True effects of the three simulation scenarios (phase-3 power ≈ 0.025, 0.50, 0.91).
pub const SCENARIO_THETAS: [f64; 3] = [-0.12, -0.05, 0.0];

pub fn phase2_design() -> TrialDesign {
    TrialDesign::per_arm(PHASE2_N, PHASE2_MARGIN, PHASE2_ALPHA).expect("valid design")
}

pub fn phase3_design() -> TrialDesign {
    TrialDesign::per_arm(PHASE3_N, PHASE3_MARGIN, PHASE3_ALPHA).expect("valid design")
}

/// Observed effects of the worked minimal-success results: the rounded
/// critical values of the two designs, which sit just above the exact
/// minimum detectable effects, so their p-values fall just under α.
pub const PHASE2_SUCCESS_EFFECT: f64 = 0.014;
pub const PHASE3_SUCCESS_EFFECT: f64 = -0.049;

/// Expected counts at the control rate with the given observed effect.
pub fn success_counts(design: &TrialDesign, effect: f64) -> Result<TwoArmCounts> {
    design.expected_counts(CTRL_RATE, CTRL_RATE + effect)
}

/// Counts whose observed effect equals the design's minimum detectable effect
/// at the control rate — the smallest result that is still a success.
pub fn minimum_success_counts(design: &TrialDesign, ctrl_rate: f64) -> Result<TwoArmCounts> {
    let m = power::mde(design, ctrl_rate)?;
    design.expected_counts(ctrl_rate, ctrl_rate + m)
}

/// Elicited information expressed as fractional two-arm counts.
pub fn elicited_counts() -> TwoArmCounts {
    TwoArmCounts::new(
        CTRL_RATE * ELICITED_N_CTRL,
        ELICITED_N_CTRL,
        (CTRL_RATE + ELICITED_MEAN) * ELICITED_N_ACTIVE,
        ELICITED_N_ACTIVE,
    )
    .expect("valid counts")
}

/// A wider grid for simulation, so that replicate p-value functions far from
/// the truth still reach their 20% and 80% quantiles and keep their mass.
pub fn simulation_grid() -> ParamGrid {
    ParamGrid::new(-0.6, 0.6, 5e-4).expect("valid grid")
}

/// Decision rules compared in the simulation study.
pub fn table1_rules() -> Vec<DecisionRule> {
    vec![
        DecisionRule::PosThreshold { threshold: 0.60 },
        DecisionRule::PosThreshold { threshold: 0.75 },
        DecisionRule::PosThreshold { threshold: 0.80 },
        DecisionRule::MleThreshold { threshold: 0.80 },
        DecisionRule::ConfidenceTest { beta0: 0.5, level: 0.8 },
    ]
}

/// The three scenario configurations.
pub fn table1_configs(reps: usize, seed: u64) -> Vec<SimConfig> {
    SCENARIO_THETAS
        .iter()
        .map(|&theta| SimConfig {
            name: format!("theta={theta}"),
            true_theta: theta,
            true_ctrl_rate: CTRL_RATE,
            phase2: phase2_design(),
            phase3: phase3_design(),
            reps,
            seed,
            grid: simulation_grid(),
            coverage_level: 0.6,
            nuisance: NuisancePlugin::True,
        })
        .collect()
}

/// The curves compared when conditioning on phase-2 success.
#[derive(Debug, Clone, Serialize)]
pub struct ConditioningCurves {
    /// (i) the elicited p-value function.
    pub elicited: PValueFunction,
    /// (ii) the phase-2 power curve viewed as a p-value function.
    pub phase2_power: PValueFunction,
    /// (iii) elicited × phase-2 power.
    pub multiplied: PValueFunction,
    /// (iv) convolution of the elicited and minimum-success phase-2 functions.
    pub convolved: PValueFunction,
    pub convolution_clamped: usize,
    /// (v) the phase-3 power curve.
    pub phase3_power: PowerCurve,
}

pub fn conditioning_curves(grid: &ParamGrid) -> Result<ConditioningCurves> {
    let elicited = pvfn::upper_pvfn_lrt(&elicited_counts(), grid)?;
    let d2 = phase2_design();
    let mde2 = power::mde(&d2, CTRL_RATE)?;
    let pc2 = power::power_curve_with_mde(&d2, CTRL_RATE, mde2, grid)?;
    let phase2_power = pc2.as_pvfn()?;
    let multiplied = combine::multiply(&elicited, &phase2_power)?;
    let elicited_se =
        combine::binomial_diff_se(CTRL_RATE, ELICITED_N_CTRL, CTRL_RATE + ELICITED_MEAN, ELICITED_N_ACTIVE)?;
    let phase2_se = combine::binomial_diff_se(CTRL_RATE, PHASE2_N, CTRL_RATE + mde2, PHASE2_N)?;
    let conv = combine::convolve(
        &WeightedPvfn::new(elicited.clone(), elicited_se)?,
        &WeightedPvfn::new(phase2_power.clone(), phase2_se)?,
    )?;
    let phase3_power = power::power_curve(&phase3_design(), CTRL_RATE, grid)?;
    Ok(ConditioningCurves {
        elicited,
        phase2_power,
        multiplied,
        convolved: conv.pvfn,
        convolution_clamped: conv.clamped_cells,
        phase3_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_success_is_at_alpha() {
        for d in [phase2_design(), phase3_design()] {
            let c = minimum_success_counts(&d, CTRL_RATE).unwrap();
            let p = pvfn::lrt_upper_pvalue(&c, d.theta0).unwrap();
            assert!((p - d.alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn worked_results_are_just_significant() {
        for (d, e) in [
            (phase2_design(), PHASE2_SUCCESS_EFFECT),
            (phase3_design(), PHASE3_SUCCESS_EFFECT),
        ] {
            let p = pvfn::lrt_upper_pvalue(&success_counts(&d, e).unwrap(), d.theta0).unwrap();
            assert!(p < d.alpha && p > 0.95 * d.alpha, "{p}");
        }
    }

    #[test]
    fn elicited_counts_match_rates() {
        let c = elicited_counts();
        assert!((c.x_ctrl() - 516.0).abs() < 1e-9);
        assert!((c.x_active() - 143.5).abs() < 1e-9);
    }
}
