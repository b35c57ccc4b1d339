//! Monte Carlo operating characteristics of Go/No-Go rules applied to a
//! simulated phase-2 study, judged against the phase-3 power at the truth.
//!
//! Replicate `i` draws its data from a ChaCha8 stream selected by `i`, so every
//! replicate is reproducible on its own and the report does not depend on the
//! number of worker threads or the order in which replicates finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binom_model::TwoArmCounts;
use crate::dist;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::io::{report_environment, Environment};
use crate::pos;
use crate::power::{self, PowerTransform, TrialDesign, BETA_CLAMP};
use crate::pvfn;

/// Name and version of the random stream construction.
pub const GENERATOR_ID: &str =
    "rand_chacha-0.9 ChaCha8Rng::seed_from_u64(seed) with stream = replicate index; rand_distr-0.5 Binomial";

/// Observed rates are kept this far from 0 and 1.
pub const BOUNDARY_EPS: f64 = 1e-6;

/// Fraction of flagged replicates above which a report carries a warning.
pub const FLAGGED_WARN_FRACTION: f64 = 0.01;

/// A Go/No-Go rule evaluated on one simulated phase-2 study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionRule {
    /// Go when the probability of success is at least `threshold`.
    PosThreshold { threshold: f64 },
    /// Go when the maximum likelihood estimate of power is at least `threshold`.
    MleThreshold { threshold: f64 },
    /// Go when `H₀: β ≤ beta0` is rejected at `1 − level` by the pushed-forward
    /// p-value function.
    ConfidenceTest { beta0: f64, level: f64 },
}

impl DecisionRule {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        let fine = match *self {
            DecisionRule::PosThreshold { threshold } | DecisionRule::MleThreshold { threshold } => ok(threshold),
            DecisionRule::ConfidenceTest { beta0, level } => ok(beta0) && ok(level),
        };
        if fine {
            Ok(())
        } else {
            Err(Error::invalid(format!("rule parameters must lie in (0, 1): {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DecisionRule::PosThreshold { threshold } => format!("PoS>={threshold:.2}"),
            DecisionRule::MleThreshold { threshold } => format!("MLE>={threshold:.2}"),
            DecisionRule::ConfidenceTest { beta0, level } => {
                format!("{:.0}% Conf. beta3>{beta0:.2}", level * 100.0)
            }
        }
    }

    pub fn go(&self, r: &ReplicateRecord) -> bool {
        if r.flagged {
            return false;
        }
        match *self {
            DecisionRule::PosThreshold { threshold } => r.pos >= threshold,
            DecisionRule::MleThreshold { threshold } => r.mle >= threshold,
            DecisionRule::ConfidenceTest { beta0, level } => {
                // The pushforward value at beta0 is stored for the configured test;
                // other values of beta0 are not tabulated per replicate.
                r.conf_beta0 == beta0 && r.conf_pvalue <= 1.0 - level
            }
        }
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub name: String,
    pub true_theta: f64,
    pub true_ctrl_rate: f64,
    pub phase2: TrialDesign,
    pub phase3: TrialDesign,
    pub reps: usize,
    pub seed: u64,
    pub grid: ParamGrid,
    /// Level of the two-sided power intervals whose coverage is reported.
    #[serde(default = "default_coverage_level")]
    pub coverage_level: f64,
    /// Control rate used for each replicate's phase-3 power curve.
    #[serde(default)]
    pub nuisance: NuisancePlugin,
}

/// Which control rate the phase-3 power curve of a replicate is built at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisancePlugin {
    /// The replicate's own control estimate.
    Estimated,
    /// The true control rate of the scenario, so each replicate's phase-3
    /// curve is the true power curve.
    #[default]
    True,
}

fn default_coverage_level() -> f64 {
    0.6
}

fn whole(n: f64) -> Option<u64> {
    (n.fract() == 0.0 && (0.0..1e15).contains(&n)).then_some(n as u64)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be >= 1"));
        }
        let pa = self.true_ctrl_rate + self.true_theta;
        if !(self.true_ctrl_rate > 0.0 && self.true_ctrl_rate < 1.0 && pa > 0.0 && pa < 1.0) {
            return Err(Error::Domain(format!(
                "true rates ({}, {pa}) must lie in (0, 1)",
                self.true_ctrl_rate
            )));
        }
        self.phase2.validate()?;
        self.phase3.validate()?;
        if whole(self.phase2.n_ctrl).is_none() || whole(self.phase2.n_active).is_none() || self.phase2.n_active == 0.0 {
            return Err(Error::invalid("phase-2 arm sizes must be positive whole numbers"));
        }
        if !(self.coverage_level > 0.0 && self.coverage_level < 1.0) {
            return Err(Error::invalid("coverage level must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Phase-3 power at the true parameters.
    pub fn true_power(&self) -> Result<f64> {
        power::power_at(&self.phase3, self.true_ctrl_rate, self.true_theta)
    }
}

/// Draws the phase-2 data of replicate `index`.
pub fn simulate_phase2(cfg: &SimConfig, index: u64) -> Result<TwoArmCounts> {
    let n_c = whole(cfg.phase2.n_ctrl).ok_or_else(|| Error::invalid("n_ctrl must be whole"))?;
    let n_a = whole(cfg.phase2.n_active).ok_or_else(|| Error::invalid("n_active must be whole"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let p_a = cfg.true_ctrl_rate + cfg.true_theta;
    let bc = Binomial::new(n_c, cfg.true_ctrl_rate).map_err(|e| Error::Domain(e.to_string()))?;
    let ba = Binomial::new(n_a, p_a).map_err(|e| Error::Domain(e.to_string()))?;
    let x_c = bc.sample(&mut rng);
    let x_a = ba.sample(&mut rng);
    TwoArmCounts::new(x_c as f64, n_c as f64, x_a as f64, n_a as f64)
}

/// Everything computed from one simulated phase-2 study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: u64,
    pub x_ctrl: f64,
    pub x_active: f64,
    pub theta_hat: f64,
    /// `β₃(θ̂)` from the replicate's phase-3 power curve.
    pub mle: f64,
    pub pos: f64,
    /// `Φ⁻¹(mle)` with `mle` clamped to `[1e−6, 1 − 1e−6]`.
    pub probit_mle: f64,
    pub conf_beta0: f64,
    /// Pushforward p-value testing `H₀: β₃ ≤ conf_beta0`.
    pub conf_pvalue: f64,
    pub pushforward_interval: (f64, f64),
    pub delta_interval: (f64, f64),
    /// Boundary rates were clamped, or some step failed.
    pub flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

fn conf_beta0(rules: &[DecisionRule]) -> f64 {
    rules
        .iter()
        .find_map(|r| match *r {
            DecisionRule::ConfidenceTest { beta0, .. } => Some(beta0),
            _ => None,
        })
        .unwrap_or(0.5)
}

/// Evaluates every estimator on one replicate. Failures are recorded on the
/// record (which is then flagged) rather than aborting the study.
pub fn evaluate_replicate(index: u64, counts: &TwoArmCounts, cfg: &SimConfig, beta0: f64) -> ReplicateRecord {
    let (clamped, moved) = counts.clamped(BOUNDARY_EPS);
    let mut rec = ReplicateRecord {
        index,
        x_ctrl: counts.x_ctrl(),
        x_active: counts.x_active(),
        theta_hat: counts.active_rate() - counts.ctrl_rate(),
        mle: f64::NAN,
        pos: f64::NAN,
        probit_mle: f64::NAN,
        conf_beta0: beta0,
        conf_pvalue: f64::NAN,
        pushforward_interval: (f64::NAN, f64::NAN),
        delta_interval: (f64::NAN, f64::NAN),
        flagged: moved,
        failure: None,
    };
    if let Err(e) = fill(&mut rec, &clamped, cfg, beta0) {
        rec.flagged = true;
        rec.failure = Some(e.to_string());
    }
    rec
}

fn fill(rec: &mut ReplicateRecord, counts: &TwoArmCounts, cfg: &SimConfig, beta0: f64) -> Result<()> {
    let theta_hat = counts.active_rate() - counts.ctrl_rate();
    let h = pvfn::upper_pvfn_lrt(counts, &cfg.grid)?;
    let ctrl = match cfg.nuisance {
        NuisancePlugin::Estimated => counts.ctrl_rate(),
        NuisancePlugin::True => cfg.true_ctrl_rate,
    };
    let pc3 = power::power_curve(&cfg.phase3, ctrl, &cfg.grid)?;
    rec.mle = pc3.at(theta_hat)?;
    rec.probit_mle = dist::normal_quantile(rec.mle.clamp(BETA_CLAMP, 1.0 - BETA_CLAMP));
    rec.pos = pos::pos(&h, &pc3)?;
    let hp = power::power_pvfn(&h, &pc3)?;
    rec.conf_pvalue = hp.at(beta0)?;
    rec.pushforward_interval = hp.interval(cfg.coverage_level)?;
    let delta = power::delta_wald_power(counts, &cfg.phase3, PowerTransform::Probit)?;
    rec.delta_interval = delta.interval(cfg.coverage_level)?;
    Ok(())
}

/// Runs the replicates of `cfg` on `workers` threads (0 = all available cores).
pub fn run_replicates(cfg: &SimConfig, rules: &[DecisionRule], workers: usize) -> Result<Vec<ReplicateRecord>> {
    cfg.validate()?;
    for r in rules {
        r.validate()?;
    }
    let beta0 = conf_beta0(rules);
    let job = || {
        (0..cfg.reps as u64)
            .into_par_iter()
            .map(|i| {
                let counts = simulate_phase2(cfg, i)?;
                Ok(evaluate_replicate(i, &counts, cfg, beta0))
            })
            .collect::<Result<Vec<_>>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("could not start worker pool: {e}")))?;
    pool.install(job)
}

/// Two-sided interval coverage of the true phase-3 power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub level: f64,
    pub pushforward: f64,
    pub delta: f64,
    pub mc_se_pushforward: f64,
    pub mc_se_delta: f64,
}

/// Histogram over equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

/// Moments, median and histogram of one estimator's sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub skewness: f64,
    pub histogram: Histogram,
}

pub const HISTOGRAM_BINS: usize = 20;

impl SampleSummary {
    /// Summarises the finite values of `samples` over `bins` bins on `[lo, hi]`
    /// (the sample range when not given).
    pub fn from_samples(samples: &[f64], range: Option<(f64, f64)>, bins: usize) -> Self {
        let mut v: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                median: f64::NAN,
                sd: f64::NAN,
                skewness: f64::NAN,
                histogram: Histogram {
                    lo: f64::NAN,
                    hi: f64::NAN,
                    counts: vec![0; bins],
                },
            };
        }
        let nf = n as f64;
        let mean = v.iter().sum::<f64>() / nf;
        let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let (lo, hi) = range.unwrap_or((v[0], v[n - 1]));
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for &x in &v {
            if x < lo || x > hi {
                continue;
            }
            let b = if width > 0.0 {
                (((x - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Self {
            n,
            mean,
            median,
            sd: (m2 * nf / (nf - 1.0).max(1.0)).sqrt(),
            skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
            histogram: Histogram { lo, hi, counts },
        }
    }
}

/// Sampling distributions of the power estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSampling {
    pub mle: SampleSummary,
    pub pos: SampleSummary,
    pub probit_mle: SampleSummary,
}

/// Scenario description echoed in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub true_theta: f64,
    pub true_ctrl_rate: f64,
    pub true_power: f64,
    pub phase2: TrialDesign,
    pub phase3: TrialDesign,
    pub grid: ParamGrid,
    pub reps: usize,
}

/// Aggregated results of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: Scenario,
    pub rules: Vec<String>,
    pub go_rate: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub coverage: Coverage,
    pub estimators: EstimatorSampling,
    pub n_flagged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub seed: u64,
    pub generator_id: String,
    pub environment: Environment,
}

impl SimReport {
    pub fn has_warning(&self) -> bool {
        self.warning.is_some()
    }
}

fn rate_se(rate: f64, n: usize) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

fn contains((lo, hi): (f64, f64), x: f64) -> bool {
    lo <= x && x <= hi
}

/// Aggregates replicate records in index order. Flagged replicates count as
/// No-Go and as not covering.
pub fn aggregate(cfg: &SimConfig, rules: &[DecisionRule], records: &[ReplicateRecord]) -> Result<SimReport> {
    let n = records.len();
    if n == 0 {
        return Err(Error::invalid("no replicates to aggregate"));
    }
    let truth = cfg.true_power()?;
    let go_rate: Vec<f64> = rules
        .iter()
        .map(|rule| records.iter().filter(|r| rule.go(r)).count() as f64 / n as f64)
        .collect();
    let mc_se = go_rate.iter().map(|&r| rate_se(r, n)).collect();
    let covered = |f: fn(&ReplicateRecord) -> (f64, f64)| {
        records.iter().filter(|r| !r.flagged && contains(f(r), truth)).count() as f64 / n as f64
    };
    let pushforward = covered(|r| r.pushforward_interval);
    let delta = covered(|r| r.delta_interval);
    let collect =
        |f: fn(&ReplicateRecord) -> f64| -> Vec<f64> { records.iter().filter(|r| !r.flagged).map(f).collect() };
    let estimators = EstimatorSampling {
        mle: SampleSummary::from_samples(&collect(|r| r.mle), Some((0.0, 1.0)), HISTOGRAM_BINS),
        pos: SampleSummary::from_samples(&collect(|r| r.pos), Some((0.0, 1.0)), HISTOGRAM_BINS),
        probit_mle: SampleSummary::from_samples(&collect(|r| r.probit_mle), None, HISTOGRAM_BINS),
    };
    let n_flagged = records.iter().filter(|r| r.flagged).count();
    let warning = (n_flagged as f64 > FLAGGED_WARN_FRACTION * n as f64)
        .then(|| format!("{n_flagged} of {n} replicates were flagged (boundary rates or failed steps)"));
    Ok(SimReport {
        scenario: Scenario {
            name: cfg.name.clone(),
            true_theta: cfg.true_theta,
            true_ctrl_rate: cfg.true_ctrl_rate,
            true_power: truth,
            phase2: cfg.phase2,
            phase3: cfg.phase3,
            grid: cfg.grid,
            reps: cfg.reps,
        },
        rules: rules.iter().map(DecisionRule::label).collect(),
        go_rate,
        mc_se,
        coverage: Coverage {
            level: cfg.coverage_level,
            pushforward,
            delta,
            mc_se_pushforward: rate_se(pushforward, n),
            mc_se_delta: rate_se(delta, n),
        },
        estimators,
        n_flagged,
        warning,
        seed: cfg.seed,
        generator_id: GENERATOR_ID.to_string(),
        environment: report_environment(),
    })
}

/// A report together with the replicate records behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub report: SimReport,
    pub records: Vec<ReplicateRecord>,
}

pub fn run(cfg: &SimConfig, rules: &[DecisionRule], workers: usize) -> Result<SimRun> {
    let records = run_replicates(cfg, rules, workers)?;
    let report = aggregate(cfg, rules, &records)?;
    Ok(SimRun { report, records })
}

/// Go rates of `rules` with Monte Carlo standard errors, on all cores.
pub fn operating_characteristics(cfg: &SimConfig, rules: &[DecisionRule]) -> Result<SimReport> {
    run(cfg, rules, 0).map(|r| r.report)
}

/// Coverage of the two-sided power intervals at `cfg.coverage_level`.
pub fn coverage_study(cfg: &SimConfig) -> Result<Coverage> {
    run(cfg, &[], 0).map(|r| r.report.coverage)
}

/// Sampling distributions of the maximum likelihood, probability-of-success
/// and probit-transformed estimators.
pub fn estimator_sampling(cfg: &SimConfig) -> Result<EstimatorSampling> {
    run(cfg, &[], 0).map(|r| r.report.estimators)
}

/// `index,x_ctrl,x_active,theta_hat,mle,pos,probit_mle,flagged` rows.
pub fn write_samples<W: std::io::Write>(w: W, cfg: &SimConfig, records: &[ReplicateRecord]) -> Result<()> {
    crate::io::write_table(
        w,
        &[
            ("kind", "replicate_samples".into()),
            ("seed", cfg.seed.to_string()),
            ("source", cfg.name.clone()),
        ],
        &[
            "index",
            "x_ctrl",
            "x_active",
            "theta_hat",
            "mle",
            "pos",
            "probit_mle",
            "flagged",
        ],
        records.iter().map(|r| {
            vec![
                r.index as f64,
                r.x_ctrl,
                r.x_active,
                r.theta_hat,
                r.mle,
                r.pos,
                r.probit_mle,
                if r.flagged { 1.0 } else { 0.0 },
            ]
        }),
    )
}
