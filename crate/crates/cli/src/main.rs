//! `powercd` — confidence distributions, power and probability of success for
//! two-arm binary-endpoint trials.
//!
//! Every command writes plain data files (CSV with a `#` provenance line, or
//! JSON) into `--out`, and prints a short JSON summary to stdout.
//!
//! Exit codes: 0 success, 2 invalid input, 3 simulation finished with more than
//! 1% of replicates flagged.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use powercd::binom_model::TwoArmCounts;
use powercd::combine::{self, WeightedPvfn};
use powercd::design_aux::{self, ShiftEstimate};
use powercd::discrete_cd::{self, OperatingMatrix};
use powercd::exact_oracles;
use powercd::grid::ParamGrid;
use powercd::io;
use powercd::pos;
use powercd::power::{self, PowerTransform, TrialDesign};
use powercd::presets;
use powercd::pvfn::{self, PValueFunction, WaldLink};
use powercd::simlab::{self, NuisancePlugin, SimConfig};
use powercd::Error;

const WORKERS_ENV: &str = "POWERCD_WORKERS";

#[derive(Parser)]
#[command(
    name = "powercd",
    version,
    about = "Confidence distributions for power and probability of success"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// P-value function, confidence curve and confidence density of a difference in proportions.
    Cdist(CdistArgs),
    /// Power curve of a planned study and inference on its power.
    Power(PowerArgs),
    /// Combine two p-value functions.
    Combine(CombineArgs),
    /// Monte Carlo operating characteristics of Go/No-Go rules.
    Simulate(SimulateArgs),
    /// Inference on a discrete ordered parameter from an operating matrix.
    Screen(ScreenArgs),
    /// Exact confidence distributions with closed-form answers.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct CountArgs {
    #[arg(long)]
    x_ctrl: f64,
    #[arg(long)]
    n_ctrl: f64,
    #[arg(long)]
    x_active: f64,
    #[arg(long)]
    n_active: f64,
}

impl CountArgs {
    fn counts(&self) -> powercd::Result<TwoArmCounts> {
        TwoArmCounts::new(self.x_ctrl, self.n_ctrl, self.x_active, self.n_active)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    Lrt,
    Wald,
}

#[derive(Args)]
struct CdistArgs {
    #[command(flatten)]
    counts: CountArgs,
    #[arg(long, value_enum, default_value = "lrt")]
    test: TestKind,
    /// Grid as lo:hi:step.
    #[arg(long, default_value = "-0.21:0.247:0.0005", allow_hyphen_values = true)]
    grid: ParamGrid,
    /// Also compute the other test and write the sup-norm difference.
    #[arg(long)]
    compare: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// Per-arm sample size of the planned study.
    #[arg(long, default_value_t = presets::PHASE3_N)]
    n_per_arm: f64,
    /// Null margin of the planned study's one-sided test.
    #[arg(long, default_value_t = presets::PHASE3_MARGIN, allow_hyphen_values = true)]
    theta0: f64,
    #[arg(long, default_value_t = presets::PHASE3_ALPHA)]
    alpha: f64,
    /// Assumed control rate for the power curve.
    #[arg(long, default_value_t = presets::CTRL_RATE)]
    ctrl_rate: f64,
    #[arg(long, default_value = "-0.21:0.247:0.0005", allow_hyphen_values = true)]
    grid: ParamGrid,
    /// External evidence: a p-value function file.
    #[arg(long, conflicts_with_all = ["ext_x_ctrl", "given_phase2_success", "elicited"])]
    pvfn: Option<PathBuf>,
    /// External evidence: two-arm counts (also enables the delta-method route).
    #[arg(long, requires_all = ["ext_n_ctrl", "ext_x_active", "ext_n_active"])]
    ext_x_ctrl: Option<f64>,
    #[arg(long)]
    ext_n_ctrl: Option<f64>,
    #[arg(long)]
    ext_x_active: Option<f64>,
    #[arg(long)]
    ext_n_active: Option<f64>,
    /// External evidence: a minimal successful phase-2 result.
    #[arg(long, conflicts_with = "elicited")]
    given_phase2_success: bool,
    /// Observed effect of that phase-2 result (defaults to the preset design's
    /// rounded critical value).
    #[arg(long, default_value_t = presets::PHASE2_SUCCESS_EFFECT, allow_hyphen_values = true)]
    phase2_success_effect: f64,
    /// Use the exact minimum detectable effect of the phase-2 design instead.
    #[arg(long)]
    exact_mde: bool,
    /// External evidence: the elicited distribution.
    #[arg(long)]
    elicited: bool,
    /// Also report probability of success conditional on phase-2 success.
    #[arg(long)]
    condition_on_phase2: bool,
    #[arg(long, default_value_t = presets::PHASE2_N)]
    phase2_n: f64,
    #[arg(long, default_value_t = presets::PHASE2_MARGIN, allow_hyphen_values = true)]
    phase2_theta0: f64,
    #[arg(long, default_value_t = presets::PHASE2_ALPHA)]
    phase2_alpha: f64,
    /// Per-arm sample sizes n_lo:n_hi:step for a sample-size sweep.
    #[arg(long)]
    sweep: Option<String>,
    /// Two-sided level of reported intervals.
    #[arg(long, default_value_t = 0.8)]
    level: f64,
    /// Shift between phases as hat:lo:hi; the later effect is θ − shift.
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineMethod {
    Convolve,
    Multiply,
    Or,
}

#[derive(Args)]
struct CombineArgs {
    /// Regenerate the elicitation/phase-2 comparison curves from the presets.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    conditioning: bool,
    #[arg(long, required_unless_present = "conditioning")]
    a: Option<PathBuf>,
    #[arg(long, required_unless_present = "conditioning")]
    b: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "convolve")]
    method: CombineMethod,
    /// Standard errors weighting the inputs of a convolution.
    #[arg(long)]
    se_a: Option<f64>,
    #[arg(long)]
    se_b: Option<f64>,
    /// Grid for --conditioning.
    #[arg(long, default_value = "-0.21:0.247:0.0005", allow_hyphen_values = true)]
    grid: ParamGrid,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run the three preset scenarios.
    #[arg(long, conflicts_with = "config")]
    table1: bool,
    /// Scenario configuration (JSON with SimConfig fields).
    #[arg(long, required_unless_present = "table1")]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    /// Control rate for each replicate's phase-3 curve.
    #[arg(long, value_enum)]
    nuisance: Option<Nuisance>,
    /// Also write the per-replicate estimates.
    #[arg(long)]
    samples: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Nuisance {
    Estimated,
    True,
}

#[derive(Args)]
struct ScreenArgs {
    /// Operating matrix CSV (header: label, statuses...; rows: result, probabilities...).
    /// Defaults to the built-in screening example.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Prior weights as w1:w2:...
    #[arg(long, default_value = "4:2:1")]
    prior: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(subcommand)]
    which: OracleKind,
}

#[derive(Subcommand)]
enum OracleKind {
    /// Exponential-mean confidence distribution against its Inverse-Gamma density.
    Exponential {
        #[arg(long, default_value_t = 1.5)]
        xbar: f64,
        #[arg(long, default_value_t = 5)]
        n: u32,
        #[arg(long, default_value = "0.2:10:0.001", allow_hyphen_values = true)]
        grid: ParamGrid,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Exact binomial confidence curve against Beta quantiles.
    Binomial {
        #[arg(long, default_value_t = 19)]
        x: u64,
        #[arg(long, default_value_t = 20)]
        n: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value = "0:1:0.001", allow_hyphen_values = true)]
        grid: ParamGrid,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cdist(a) => cdist(a),
        Command::Power(a) => power_cmd(a),
        Command::Combine(a) => combine_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Screen(a) => screen(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_summary(out: &Path, name: &str, v: &Value) -> Result<(), Failure> {
    io::write_json(io::create(&out.join(name))?, v)?;
    print_json(v);
    Ok(())
}

fn build_pvfn(counts: &TwoArmCounts, test: TestKind, grid: &ParamGrid) -> powercd::Result<PValueFunction> {
    match test {
        TestKind::Lrt => pvfn::upper_pvfn_lrt(counts, grid),
        TestKind::Wald => pvfn::upper_pvfn_wald(counts, grid, WaldLink::Identity),
    }
}

fn write_views(out: &Path, prefix: &str, h: &PValueFunction) -> powercd::Result<()> {
    io::save_pvfn(&out.join(format!("{prefix}pvfn.csv")), h)?;
    io::write_confidence_curve(
        io::create(&out.join(format!("{prefix}curve.csv")))?,
        &pvfn::confidence_curve(h),
        h.source(),
    )?;
    io::write_density(
        io::create(&out.join(format!("{prefix}density.csv")))?,
        &pvfn::confidence_density(h),
        h.source(),
    )
}

fn pvfn_summary(h: &PValueFunction) -> Value {
    let up = h.as_upper();
    json!({
        "source": h.source(),
        "median": up.median().ok(),
        "interval_95": up.interval(0.95).ok(),
        "interval_80": up.interval(0.8).ok(),
    })
}

fn cdist(a: CdistArgs) -> CmdResult {
    let counts = a.counts.counts()?;
    let h = build_pvfn(&counts, a.test, &a.grid)?;
    write_views(&a.out, "", &h)?;
    let mut summary = pvfn_summary(&h);
    summary["version"] = json!(powercd::VERSION);
    if a.compare {
        let other_kind = match a.test {
            TestKind::Lrt => TestKind::Wald,
            TestKind::Wald => TestKind::Lrt,
        };
        let other = build_pvfn(&counts, other_kind, &a.grid)?;
        let sup = h
            .values()
            .iter()
            .zip(other.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        write_views(&a.out, "compare_", &other)?;
        summary["sup_diff"] = json!(sup);
    }
    write_summary(&a.out, "summary.json", &summary)?;
    Ok(0)
}

fn parse_triple(s: &str, what: &str) -> Result<(f64, f64, f64), Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--{what} must be a:b:c, got '{s}'")));
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--{what}: '{t}' is not a number")))
    };
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

fn power_cmd(a: PowerArgs) -> CmdResult {
    let design = TrialDesign::per_arm(a.n_per_arm, a.theta0, a.alpha)?;
    let phase2 = TrialDesign::per_arm(a.phase2_n, a.phase2_theta0, a.phase2_alpha)?;
    let mde = power::mde(&design, a.ctrl_rate)?;
    let pc = power::power_curve_with_mde(&design, a.ctrl_rate, mde, &a.grid)?;
    io::write_power_curve(io::create(&a.out.join("power_curve.csv"))?, &pc, "planned study")?;

    let mut summary = json!({
        "version": powercd::VERSION,
        "design": design,
        "ctrl_rate": a.ctrl_rate,
        "mde": mde,
        "power_at_theta0": pc.at(a.theta0).ok(),
    });

    let ext_counts = match (a.ext_x_ctrl, a.ext_n_ctrl, a.ext_x_active, a.ext_n_active) {
        (Some(xc), Some(nc), Some(xa), Some(na)) => Some(TwoArmCounts::new(xc, nc, xa, na)?),
        _ => None,
    };
    let h = if let Some(path) = &a.pvfn {
        Some(io::load_pvfn(path)?)
    } else if let Some(c) = &ext_counts {
        Some(pvfn::upper_pvfn_lrt(c, &a.grid)?)
    } else if a.given_phase2_success {
        let c = if a.exact_mde {
            presets::minimum_success_counts(&phase2, a.ctrl_rate)?
        } else {
            phase2.expected_counts(a.ctrl_rate, a.ctrl_rate + a.phase2_success_effect)?
        };
        Some(pvfn::upper_pvfn_lrt(&c, &a.grid)?)
    } else if a.elicited {
        Some(pvfn::upper_pvfn_lrt(&presets::elicited_counts(), &a.grid)?)
    } else {
        None
    };

    if let Some(h) = &h {
        if !h.grid().same_as(&a.grid) {
            return Err(usage(format!(
                "p-value function grid {} differs from --grid {}",
                h.grid(),
                a.grid
            )));
        }
        let pc2 = if a.condition_on_phase2 {
            Some(power::power_curve(&phase2, a.ctrl_rate, &a.grid)?)
        } else {
            None
        };
        let s = pos::summarize(h, &pc, pc2.as_ref())?;
        let hp = power::power_pvfn(h, &pc)?;
        io::write_power_pvfn(io::create(&a.out.join("power_pvfn.csv"))?, &hp)?;
        summary["evidence"] = pvfn_summary(h);
        summary["mle"] = json!(s.mle);
        summary["pos"] = json!(s.pos);
        summary["pos_mass"] = json!(s.mass);
        summary["pos_truncated"] = json!(s.truncated);
        summary["pvalue_power_le_0.5"] = json!(hp.at(0.5)?);
        summary["power_interval"] = json!(hp.interval(a.level).ok());
        if let Some(pc2) = &pc2 {
            summary["conditional_pos"] = json!(s.conditional_pos);
            summary["multiplied_pos"] = json!(s.multiplied_pos);
            summary["joint_pos"] = json!(pos::joint_pos(h, pc2, &pc)?);
            io::write_density(
                io::create(&a.out.join("conditional_density.csv"))?,
                &pos::conditional_density(h, pc2)?,
                "conditional on phase-2 success",
            )?;
        }
        if let Some(c) = &ext_counts {
            let d = power::delta_wald_power(c, &design, PowerTransform::Probit)?;
            summary["delta"] = json!({
                "beta_hat": d.beta_hat,
                "se_probit": d.se,
                "interval": d.interval(a.level)?,
                "clamped": d.clamped,
            });
        }
        if let Some(spec) = &a.shift {
            let (hat, lo, hi) = parse_triple(spec, "shift")?;
            let shift = ShiftEstimate::new(hat, lo, hi)?;
            let band = design_aux::extrapolated_power_curve(&pc, &shift)?;
            io::write_band(io::create(&a.out.join("power_band.csv"))?, &band, "shifted power curve")?;
            let bp = design_aux::extrapolated_power_pvfn(h, &pc, &shift)?;
            summary["shift"] = json!({
                "clipped": band.clipped,
                "pos_center": bp.center.pos()?,
                "pos_at_shift_lo": bp.at_delta_lo.pos()?,
                "pos_at_shift_hi": bp.at_delta_hi.pos()?,
            });
        }
        if let Some(spec) = &a.sweep {
            let (lo, hi, step) = parse_triple(spec, "sweep")?;
            if !(step > 0.0 && lo > 0.0 && hi >= lo) {
                return Err(usage("--sweep needs 0 < n_lo <= n_hi and step > 0"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            let sizes: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
            let rows = power::sample_size_sweep(h, a.theta0, a.alpha, a.ctrl_rate, &sizes, a.level)?;
            io::write_table(
                io::create(&a.out.join("sweep.csv"))?,
                &[
                    ("kind", "sample_size_sweep".into()),
                    ("level", a.level.to_string()),
                    ("source", h.source().into()),
                ],
                &["n_per_arm", "mde", "estimate", "lower", "upper"],
                rows.iter()
                    .map(|r| vec![r.n_per_arm, r.mde, r.estimate, r.lower, r.upper]),
            )?;
            summary["sweep_rows"] = json!(rows.len());
        }
    } else if a.sweep.is_some() || a.shift.is_some() || a.condition_on_phase2 {
        return Err(usage(
            "--sweep, --shift and --condition-on-phase2 need evidence: --pvfn, --ext-*, --given-phase2-success or --elicited",
        ));
    }
    write_summary(&a.out, "summary.json", &summary)?;
    Ok(0)
}

fn combine_cmd(a: CombineArgs) -> CmdResult {
    if a.conditioning {
        let f = presets::conditioning_curves(&a.grid)?;
        io::save_pvfn(&a.out.join("cond_elicited.csv"), &f.elicited)?;
        io::save_pvfn(&a.out.join("cond_phase2_power.csv"), &f.phase2_power)?;
        io::save_pvfn(&a.out.join("cond_multiplied.csv"), &f.multiplied)?;
        io::save_pvfn(&a.out.join("cond_convolved.csv"), &f.convolved)?;
        io::write_power_curve(
            io::create(&a.out.join("cond_phase3_power.csv"))?,
            &f.phase3_power,
            "phase 3",
        )?;
        for (name, h) in [
            ("elicited", &f.elicited),
            ("multiplied", &f.multiplied),
            ("convolved", &f.convolved),
        ] {
            io::write_confidence_curve(
                io::create(&a.out.join(format!("cond_{name}_curve.csv")))?,
                &pvfn::confidence_curve(h),
                h.source(),
            )?;
        }
        let summary = json!({
            "version": powercd::VERSION,
            "median_elicited": f.elicited.median().ok(),
            "median_phase2": f.phase2_power.median().ok(),
            "median_multiplied": f.multiplied.median().ok(),
            "median_convolved": f.convolved.median().ok(),
            "convolution_clamped_cells": f.convolution_clamped,
            "pos_multiplied": pos::pos(&f.multiplied, &f.phase3_power)?,
            "pos_convolved": pos::pos(&f.convolved, &f.phase3_power)?,
        });
        write_summary(&a.out, "summary.json", &summary)?;
        return Ok(0);
    }
    let ha = io::load_pvfn(a.a.as_deref().expect("required by clap"))?;
    let hb = io::load_pvfn(a.b.as_deref().expect("required by clap"))?;
    let (combined, clamped) = match a.method {
        CombineMethod::Convolve => {
            let (Some(sa), Some(sb)) = (a.se_a, a.se_b) else {
                return Err(usage("convolution needs --se-a and --se-b"));
            };
            let c = combine::convolve(
                &WeightedPvfn::new(ha.as_upper(), sa)?,
                &WeightedPvfn::new(hb.as_upper(), sb)?,
            )?;
            (c.pvfn, c.clamped_cells)
        }
        CombineMethod::Multiply => (combine::multiply(&ha.as_upper(), &hb.as_upper())?, 0),
        CombineMethod::Or => (
            combine::or_combine(&pvfn::lower_pvfn(&ha.as_upper()), &pvfn::lower_pvfn(&hb.as_upper()))?,
            0,
        ),
    };
    write_views(&a.out, "combined_", &combined)?;
    let mut summary = pvfn_summary(&combined);
    summary["version"] = json!(powercd::VERSION);
    summary["clamped_cells"] = json!(clamped);
    write_summary(&a.out, "summary.json", &summary)?;
    Ok(0)
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let mut configs = if a.table1 {
        presets::table1_configs(a.reps.unwrap_or(10_000), a.seed)
    } else {
        let path = a.config.as_deref().expect("required by clap");
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        let cfg: SimConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        vec![cfg]
    };
    for c in &mut configs {
        c.seed = a.seed;
        if let Some(r) = a.reps {
            c.reps = r;
        }
        if let Some(n) = a.nuisance {
            c.nuisance = match n {
                Nuisance::Estimated => NuisancePlugin::Estimated,
                Nuisance::True => NuisancePlugin::True,
            };
        }
    }
    let rules = presets::table1_rules();
    let mut reports = Vec::with_capacity(configs.len());
    for (k, cfg) in configs.iter().enumerate() {
        let run = simlab::run(cfg, &rules, a.workers)?;
        if a.samples {
            simlab::write_samples(io::create(&a.out.join(format!("samples_{k}.csv")))?, cfg, &run.records)?;
        }
        reports.push(run.report);
    }
    let warned = reports.iter().any(|r| r.has_warning());
    let value = if a.table1 {
        serde_json::to_value(&reports).map_err(Error::from)?
    } else {
        serde_json::to_value(&reports[0]).map_err(Error::from)?
    };
    let name = if a.table1 { "table1.json" } else { "report.json" };
    io::write_json(io::create(&a.out.join(name))?, &value)?;
    for r in &reports {
        let cells: Vec<String> = r
            .rules
            .iter()
            .zip(&r.go_rate)
            .map(|(l, g)| format!("{l}={g:.3}"))
            .collect();
        println!(
            "{}: true power {:.3}; {}; coverage {:.3}/{:.3}; flagged {}",
            r.scenario.name,
            r.scenario.true_power,
            cells.join(", "),
            r.coverage.pushforward,
            r.coverage.delta,
            r.n_flagged
        );
        if let Some(w) = &r.warning {
            eprintln!("warning: {}: {w}", r.scenario.name);
        }
    }
    Ok(if warned { 3 } else { 0 })
}

fn write_block(out: &Path, name: &str, m: &OperatingMatrix, label: &str, rows: &[Vec<String>]) -> powercd::Result<()> {
    use std::io::Write;
    let mut w = io::create(&out.join(name))?;
    writeln!(w, "# powercd version={} kind={label}", powercd::VERSION)?;
    writeln!(w, "result,{}", m.statuses().join(","))?;
    for (r, row) in m.results().iter().zip(rows) {
        writeln!(w, "{r},{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn numeric(rows: &[Vec<f64>]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| io::fmt_real(x)).collect())
        .collect()
}

fn screen(a: ScreenArgs) -> CmdResult {
    let m = match &a.matrix {
        Some(p) => OperatingMatrix::from_csv(&std::fs::read_to_string(p).map_err(Error::from)?)?,
        None => OperatingMatrix::screening_example(),
    };
    let prior = discrete_cd::parse_prior(&a.prior)?;
    let pv = discrete_cd::one_sided_pvalues(&m);
    let pv_text: Vec<Vec<String>> = pv.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
    write_block(&a.out, "pvalues.csv", &m, "one_sided_pvalues", &pv_text)?;
    let block = discrete_cd::confidence_level_block(&m);
    write_block(&a.out, "confidence.csv", &m, "confidence_levels", &numeric(&block))?;
    let post = discrete_cd::posterior(&m, &prior)?;
    write_block(&a.out, "posterior.csv", &m, "posterior", &numeric(&post))?;
    let lik = discrete_cd::normalized_likelihood(&m)?;
    write_block(&a.out, "likelihood.csv", &m, "normalized_likelihood", &numeric(&lik))?;
    let plug = discrete_cd::plugin_sampling(&m, &discrete_cd::diagonal_map(m.k()))?;
    write_block(&a.out, "plugin.csv", &m, "plugin_sampling", &numeric(&plug))?;
    let summary = json!({
        "version": powercd::VERSION,
        "confidence_levels": discrete_cd::confidence_levels(&m),
        "prior": prior,
    });
    write_summary(&a.out, "summary.json", &summary)?;
    Ok(0)
}

fn oracle(a: OracleArgs) -> CmdResult {
    match a.which {
        OracleKind::Exponential { xbar, n, grid, out } => {
            let h = exact_oracles::exponential_cd(xbar, n, &grid)?;
            write_views(&out, "exponential_", &h)?;
            let d = pvfn::confidence_density(&h);
            let (shape, scale) = (n as f64, n as f64 * xbar);
            let sup = (1..grid.len())
                .map(|i| {
                    let mid = grid.point(i) - 0.5 * grid.step();
                    (d.values()[i] - exact_oracles::inverse_gamma_pdf(mid, shape, scale)).abs()
                })
                .fold(0.0, f64::max);
            let summary = json!({
                "version": powercd::VERSION,
                "inverse_gamma": {"shape": shape, "scale": scale},
                "density_sup_diff": sup,
                "median": h.median().ok(),
            });
            write_summary(&out, "summary.json", &summary)?;
        }
        OracleKind::Binomial { x, n, level, grid, out } => {
            let c = exact_oracles::binomial_exact_curve(x, n, &grid)?;
            io::write_confidence_curve(io::create(&out.join("binomial_curve.csv"))?, &c.curve, "exact binomial")?;
            let exact = exact_oracles::binomial_exact_interval(x, n, level)?;
            let cp = exact_oracles::clopper_pearson(x, n, level);
            let summary = json!({
                "version": powercd::VERSION,
                "exact_interval": exact,
                "clopper_pearson": cp,
                "max_endpoint_diff": (exact.0 - cp.0).abs().max((exact.1 - cp.1).abs()),
                "credible_beta_1_1": exact_oracles::beta_credible_interval(x, n, 1.0, 1.0, level),
                "credible_beta_0.1_0.1": exact_oracles::beta_credible_interval(x, n, 0.1, 0.1, level),
            });
            write_summary(&out, "summary.json", &summary)?;
        }
    }
    Ok(0)
}
