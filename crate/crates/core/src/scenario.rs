//! Scenario configs (TOML), the one-shot scenario driver, and the CSV/JSON
//! emitters behind the command-line front end.
//!
//! A scenario is one integration: model kind, parameters, per-queue constant
//! history values, grid resolution, classifier thresholds, and output paths.
//! The same document may carry a `[scan]` section with a delay bracket for
//! threshold scans.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{classify_trajectory, default_horizon, Classification, ClassifySettings};
use crate::dde::{integrate, IntegrationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::{HistoryFunction, ModelKind, ModelParams};
use crate::scan::{empirical_threshold_scan, ScanOutcome, ScanSettings};
use crate::stability::{stability_report, StabilityReport};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelKind,
    params: RawParams,
    history: RawHistory,
    #[serde(default)]
    integration: RawIntegration,
    #[serde(default)]
    classify: Option<ClassifySettings>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    scan: Option<RawScan>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
    epsilon: f64,
    gamma: f64,
    delta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    q1: f64,
    q2: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    steps_per_delay: Option<usize>,
    t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trajectory_csv: Option<PathBuf>,
    report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    delta_lo: f64,
    delta_hi: f64,
    tol: Option<f64>,
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// Constant per-queue history values on `[-delta, 0]`.
    pub history: (f64, f64),
    pub steps_per_delay: usize,
    /// Integration horizon; defaults to [`default_horizon`].
    pub t_end: f64,
    pub classify: ClassifySettings,
    pub trajectory_csv: Option<PathBuf>,
    pub report_json: Option<PathBuf>,
    /// Optional threshold-scan bracket.
    pub scan: Option<ScanRequest>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanRequest {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub tol: f64,
}

impl ScenarioConfig {
    /// Parses and validates a TOML scenario document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let params = ModelParams::new(
            raw.params.lambda,
            raw.params.mu,
            raw.params.alpha,
            raw.params.epsilon,
            raw.params.gamma,
            raw.params.delta,
        )
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !raw.history.q1.is_finite() || !raw.history.q2.is_finite() {
            return Err(Error::InvalidConfig("history values must be finite".into()));
        }
        let classify = raw.classify.unwrap_or_default();
        classify
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let steps_per_delay = raw
            .integration
            .steps_per_delay
            .unwrap_or(IntegrationConfig::DEFAULT_STEPS_PER_DELAY);
        let t_end = raw
            .integration
            .t_end
            .unwrap_or_else(|| default_horizon(raw.model, &params));
        IntegrationConfig::new(steps_per_delay, t_end)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let scan = match raw.scan {
            None => None,
            Some(s) => {
                let tol = s.tol.unwrap_or(1e-3);
                if !(s.delta_lo.is_finite() && s.delta_hi.is_finite() && tol.is_finite())
                    || s.delta_lo <= 0.0
                    || s.delta_lo >= s.delta_hi
                    || tol <= 0.0
                {
                    return Err(Error::InvalidConfig(format!(
                        "scan needs 0 < delta_lo < delta_hi and tol > 0, got [{}, {}], tol {}",
                        s.delta_lo, s.delta_hi, tol
                    )));
                }
                Some(ScanRequest {
                    delta_lo: s.delta_lo,
                    delta_hi: s.delta_hi,
                    tol,
                })
            }
        };
        Ok(Self {
            kind: raw.model,
            params,
            history: (raw.history.q1, raw.history.q2),
            steps_per_delay,
            t_end,
            classify,
            trajectory_csv: raw.output.trajectory_csv,
            report_json: raw.output.report_json,
            scan,
        })
    }

    /// Reads a scenario from a TOML file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn history_function(&self) -> HistoryFunction {
        HistoryFunction::constant(&[self.history.0, self.history.1])
            .expect("finite history values checked at construction")
    }

    pub fn integration_config(&self) -> IntegrationConfig {
        IntegrationConfig {
            steps_per_delay: self.steps_per_delay,
            t_end: self.t_end,
        }
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            tol: self.scan.map(|s| s.tol).unwrap_or(1e-3),
            steps_per_delay: self.steps_per_delay,
            classify: self.classify,
            ..Default::default()
        }
    }
}

/// Everything `run_scenario` produces.
#[derive(Debug)]
pub struct ScenarioOutcome {
    /// Stability analysis; absent when the parameters admit no oscillatory
    /// instability (the run itself is still valid).
    pub stability: Option<StabilityReport>,
    pub classification: Classification,
    pub trajectory: Trajectory,
}

/// Top-level JSON document written by `simulate`: stability-report fields
/// plus the classification, in fixed order.
#[derive(Debug, Serialize)]
pub struct ReportDocument<'a> {
    pub model: ModelKind,
    pub params: &'a ModelParams,
    pub history: [f64; 2],
    pub stability: &'a Option<StabilityReport>,
    pub classification: &'a Classification,
}

/// Integrates, classifies, and writes the configured outputs.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let history = cfg.history_function();
    let trajectory = integrate(cfg.kind, &cfg.params, &history, &cfg.integration_config())?;
    let classification = classify_trajectory(&trajectory, &cfg.params, &cfg.classify)?;
    let stability = match stability_report(cfg.kind, &cfg.params) {
        Ok(r) => Some(r),
        Err(Error::NoOscillation { .. }) | Err(Error::NoCriticalDelay { .. }) => None,
        Err(e) => return Err(e),
    };

    if let Some(path) = &cfg.trajectory_csv {
        write_with_parents(path, &trajectory_csv(&trajectory))?;
    }
    if let Some(path) = &cfg.report_json {
        let doc = ReportDocument {
            model: cfg.kind,
            params: &cfg.params,
            history: [cfg.history.0, cfg.history.1],
            stability: &stability,
            classification: &classification,
        };
        write_with_parents(path, &report_json(&doc)?)?;
    }

    Ok(ScenarioOutcome {
        stability,
        classification,
        trajectory,
    })
}

/// Runs the scan described by the config's `[scan]` section.
pub fn run_scan(cfg: &ScenarioConfig) -> Result<ScanOutcome> {
    let request = cfg.scan.ok_or_else(|| {
        Error::InvalidConfig("config has no [scan] section with delta_lo / delta_hi".into())
    })?;
    empirical_threshold_scan(
        cfg.kind,
        &cfg.params,
        &cfg.history_function(),
        request.delta_lo,
        request.delta_hi,
        &cfg.scan_settings(),
    )
}

/// CSV rendering of a trajectory, history segment `[-delta, 0]` included.
///
/// Header `t,q1,q2` (plus `,m1,m2` for the moving-average model), one row
/// per grid node, shortest round-trip float formatting — byte-identical
/// across runs.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.steps_per_delay() as isize;
    let mut out = String::new();
    out.push_str(if traj.dim() == 4 { "t,q1,q2,m1,m2\n" } else { "t,q1,q2\n" });
    let mut row = |t: f64, state: &[f64]| {
        out.push_str(&format!("{t}"));
        for v in state {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    };
    for k in -n..0 {
        let t = k as f64 * traj.dt();
        row(t, &traj.history_state(t));
    }
    for k in 0..traj.len() {
        row(traj.time(k), traj.state(k));
    }
    out
}

/// Pretty JSON with trailing newline.
pub fn report_json(doc: &ReportDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::InvalidConfig(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_with_parents(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}
