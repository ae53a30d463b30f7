//! `delayq` — command-line front end for the delayed-information queueing lab.
//!
//! Subcommands:
//! - `analyze`  parameters -> stability report JSON on stdout
//! - `simulate` scenario config -> trajectory CSV + report JSON files
//! - `scan`     scenario config with a `[scan]` bracket -> threshold JSON
//! - `check`    runs the runtime invariant suite on a config
//!
//! Exit codes: 0 success, 2 invalid config/parameters, 3 numerical failure,
//! 4 bracket error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use delayq_core::analytics::{mean_infinite_server, RateFunction};
use delayq_core::dde::integrate;
use delayq_core::error::Error;
use delayq_core::model::{choice_fraction, HistoryFunction, ModelKind, ModelParams};
use delayq_core::scenario::{run_scan, run_scenario, ScenarioConfig};
use delayq_core::stability::{delta_mod_constant, delta_mod_ma, stability_report};

#[derive(Parser)]
#[command(
    name = "delayq",
    about = "Fluid models of two parallel queues under delayed information",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the stability report for a parameter set as JSON.
    Analyze(AnalyzeArgs),
    /// Integrate a scenario config and write trajectory CSV + report JSON.
    Simulate(SimulateArgs),
    /// Locate the empirical Hopf threshold over the config's delay bracket.
    Scan(ScanArgs),
    /// Run the runtime invariant suite on a scenario config.
    Check(CheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Model kind: constant-delay or moving-average.
    #[arg(long, default_value = "constant-delay")]
    model: String,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's trajectory CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override the config's report JSON path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Scenario config (TOML) with a [scan] section.
    #[arg(long)]
    config: PathBuf,
    /// Override the bracket's lower delay.
    #[arg(long)]
    lo: Option<f64>,
    /// Override the bracket's upper delay.
    #[arg(long)]
    hi: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::Scan(args) => scan(args),
        Command::Check(args) => check(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidParameter(_) => 2,
        Error::Bracket(_) => 4,
        _ => 3,
    }
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, Error> {
    let kind = ModelKind::from_str(&args.model)?;
    let params = ModelParams::new(
        args.lambda,
        args.mu,
        args.alpha,
        args.epsilon,
        args.gamma,
        args.delta,
    )?;
    let report = stability_report(kind, &params)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidConfig(format!("JSON serialization failed: {e}")))?;
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let mut cfg = ScenarioConfig::from_path(&args.config)?;
    if let Some(csv) = args.csv {
        cfg.trajectory_csv = Some(csv);
    }
    if let Some(json) = args.json {
        cfg.report_json = Some(json);
    }
    if cfg.trajectory_csv.is_none() || cfg.report_json.is_none() {
        return Err(Error::InvalidConfig(
            "simulate needs both output paths: set [output] trajectory_csv / report_json \
             in the config or pass --csv / --json"
                .into(),
        ));
    }
    let outcome = run_scenario(&cfg)?;
    println!(
        "verdict: {} (envelope ratio {:.4}, {} extrema, final amplitude {:.3e})",
        outcome.classification.verdict,
        outcome.classification.envelope_ratio,
        outcome.classification.extrema_count,
        outcome.classification.final_amplitude,
    );
    match &outcome.stability {
        Some(r) => println!(
            "stability: delta_cr = {:.6}, delta_mod = {:.6}, resonant = {}",
            r.delta_cr, r.delta_mod, r.resonant
        ),
        None => println!("stability: no oscillatory regime for these parameters"),
    }
    println!("trajectory: {}", cfg.trajectory_csv.as_ref().unwrap().display());
    println!("report:     {}", cfg.report_json.as_ref().unwrap().display());
    Ok(ExitCode::SUCCESS)
}

fn scan(args: ScanArgs) -> Result<ExitCode, Error> {
    let mut cfg = ScenarioConfig::from_path(&args.config)?;
    if let (Some(lo), Some(hi)) = (args.lo, args.hi) {
        cfg.scan = Some(delayq_core::scenario::ScanRequest {
            delta_lo: lo,
            delta_hi: hi,
            tol: cfg.scan.map(|s| s.tol).unwrap_or(1e-3),
        });
    } else if args.lo.is_some() || args.hi.is_some() {
        return Err(Error::InvalidConfig(
            "--lo and --hi must be given together".into(),
        ));
    }
    let outcome = run_scan(&cfg)?;
    let json = serde_json::to_string_pretty(&outcome)
        .map_err(|e| Error::InvalidConfig(format!("JSON serialization failed: {e}")))?;
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> Result<ExitCode, Error> {
    let cfg = ScenarioConfig::from_path(&args.config)?;
    let mut failures = 0u32;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("check {}: {name} — {detail}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let history = cfg.history_function();
    let icfg = cfg.integration_config();

    // determinism: two integrations must agree bit for bit
    let a = integrate(cfg.kind, &cfg.params, &history, &icfg)?;
    let b = integrate(cfg.kind, &cfg.params, &history, &icfg)?;
    report(
        "determinism",
        a == b,
        "two integrations produce identical trajectories".into(),
    );

    // total mass follows the closed-form infinite-server mean
    let q0 = cfg.history.0 + cfg.history.1;
    let rates = RateFunction::from_params(&cfg.params);
    let last = a.state(a.len() - 1);
    let want = mean_infinite_server(a.t_end(), q0, &rates)?;
    let got = last[0] + last[1];
    let rel = ((got - want) / want).abs();
    report(
        "total mass vs closed-form mean",
        rel < 1e-6,
        format!("relative gap {rel:.2e} at t = {:.1}", a.t_end()),
    );

    // moving-average consistency with its defining integral
    if cfg.kind == ModelKind::MovingAverage {
        let mut worst = 0.0f64;
        let delta = cfg.params.delta;
        for frac in [0.3, 0.6, 1.0] {
            let t = delta.max(frac * a.t_end());
            let state = a.sample(t)?;
            for i in 0..2 {
                let pieces = 256;
                let step = delta / pieces as f64;
                let mut acc = 0.0;
                for j in 0..=pieces {
                    let w = if j == 0 || j == pieces { 0.5 } else { 1.0 };
                    acc += w * a.sample(t - delta + j as f64 * step)?[i];
                }
                let quad = acc * step / delta;
                worst = worst.max(((state[2 + i] - quad) / quad).abs());
            }
        }
        report(
            "moving average vs quadrature",
            worst < 1e-4,
            format!("worst relative gap {worst:.2e}"),
        );
    }

    // symmetry: identical histories stay identical
    let mid = 0.5 * (cfg.history.0 + cfg.history.1);
    let sym_h = HistoryFunction::constant(&[mid, mid])?;
    let sym = integrate(cfg.kind, &cfg.params, &sym_h, &icfg)?;
    let worst = (0..sym.len())
        .map(|k| {
            let s = sym.state(k);
            (s[0] - s[1]).abs()
        })
        .fold(0.0f64, f64::max);
    report(
        "symmetry under identical histories",
        worst < 1e-12,
        format!("max |q1 - q2| = {worst:.2e}"),
    );

    // choice fractions on sampled states sum to one
    let mut worst = 0.0f64;
    for k in (0..a.len()).step_by((a.len() / 64).max(1)) {
        let s = a.state(k);
        let (p1, p2) = choice_fraction(s[0], s[1])?;
        worst = worst.max((p1 + p2 - 1.0).abs());
    }
    report(
        "choice fractions sum to one",
        worst <= f64::EPSILON,
        format!("worst |p1 + p2 - 1| = {worst:.2e}"),
    );

    // report consistency: delta_mod in the report equals the module value
    match stability_report(cfg.kind, &cfg.params) {
        Ok(r) => {
            let expect = if r.resonant {
                match cfg.kind {
                    ModelKind::ConstantDelay => delta_mod_constant(
                        cfg.params.lambda,
                        cfg.params.mu,
                        cfg.params.alpha,
                        cfg.params.epsilon,
                    )?,
                    ModelKind::MovingAverage => delta_mod_ma(
                        cfg.params.lambda,
                        cfg.params.mu,
                        cfg.params.alpha,
                        cfg.params.epsilon,
                    )?,
                }
            } else {
                r.delta_cr
            };
            report(
                "report delta_mod consistency",
                (r.delta_mod - expect).abs() < 1e-12,
                format!("report {:.6} vs module {expect:.6}", r.delta_mod),
            );
        }
        Err(Error::NoOscillation { .. }) | Err(Error::NoCriticalDelay { .. }) => {
            report(
                "report delta_mod consistency",
                true,
                "skipped: no oscillatory regime".into(),
            );
        }
        Err(e) => return Err(e),
    }

    // classification runs without error on the configured horizon
    let classification =
        delayq_core::classify::classify_trajectory(&a, &cfg.params, &cfg.classify)?;
    report(
        "classification",
        true,
        format!(
            "verdict {} (ratio {:.4})",
            classification.verdict, classification.envelope_ratio
        ),
    );

    if failures == 0 {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{failures} check(s) failed");
        Ok(ExitCode::from(3))
    }
}
