//! Empirical Hopf-threshold location: bisection over the delay, classifying
//! a fresh integration at every probe.
//!
//! Near the threshold both the decay rate (stable side) and the growth and
//! relaxation rates (unstable side) vanish, so a fixed horizon cannot decide
//! a probe: a trajectory relaxing onto a small limit cycle looks exactly
//! like slow convergence. Probes therefore escalate their horizon (doubling,
//! up to [`ScanSettings::max_horizon_scale`]) until the verdict is decisive:
//!
//! - `Converging` counts once the amplitude has genuinely died
//!   (below `decided_floor` of the equilibrium) or halves when the horizon
//!   doubles;
//! - `Oscillating` counts on clear envelope growth (ratio above
//!   `growth_ratio`) or when two consecutive horizons agree.
//!
//! Residually indeterminate probes land on the stable side; the remaining
//! band is narrower than the bisection tolerance in the regimes of interest.

use serde::Serialize;

use crate::classify::{classify_trajectory, default_horizon, Classification, ClassifySettings, Verdict};
use crate::dde::{integrate, IntegrationConfig};
use crate::error::{Error, Result};
use crate::model::{HistoryFunction, ModelKind, ModelParams};

/// Scan configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    /// Bisection stops when the bracket is narrower than this (default 1e-3).
    pub tol: f64,
    pub steps_per_delay: usize,
    pub classify: ClassifySettings,
    /// Largest horizon multiplier a probe may escalate to (default 16).
    pub max_horizon_scale: u32,
    /// Amplitude fraction of the equilibrium below which convergence is
    /// accepted immediately (default 1e-3).
    pub decided_floor: f64,
    /// Envelope ratio above which growth is accepted immediately
    /// (default 1.05).
    pub growth_ratio: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            steps_per_delay: IntegrationConfig::DEFAULT_STEPS_PER_DELAY,
            classify: ClassifySettings::default(),
            max_horizon_scale: 16,
            decided_floor: 1e-3,
            growth_ratio: 1.05,
        }
    }
}

/// One probe of the scan.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    pub delta: f64,
    pub verdict: Verdict,
    /// Horizon of the integration that settled the verdict.
    pub horizon: f64,
}

/// Result of a completed scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanOutcome {
    /// Midpoint of the final bracket.
    pub threshold: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub probes: Vec<ProbeRecord>,
}

fn classify_at_scale(
    kind: ModelKind,
    base: &ModelParams,
    history: &HistoryFunction,
    delta: f64,
    scale: u32,
    settings: &ScanSettings,
) -> Result<(Classification, f64)> {
    let p = base.with_delta(delta)?;
    let t_end = scale as f64 * default_horizon(kind, &p);
    let cfg = IntegrationConfig::new(settings.steps_per_delay, t_end)?;
    let traj = integrate(kind, &p, history, &cfg)?;
    Ok((classify_trajectory(&traj, &p, &settings.classify)?, t_end))
}

/// Classifies one delay decisively, escalating the horizon as needed.
pub fn decisive_probe(
    kind: ModelKind,
    base: &ModelParams,
    history: &HistoryFunction,
    delta: f64,
    settings: &ScanSettings,
) -> Result<ProbeRecord> {
    let equilibrium = base.equilibrium_per_queue();
    let mut prev: Option<Classification> = None;
    let mut scale = 1u32;
    loop {
        let (c, horizon) = classify_at_scale(kind, base, history, delta, scale, settings)?;
        let decided = match c.verdict {
            Verdict::Converging => {
                c.final_amplitude <= settings.decided_floor * equilibrium
                    || prev.as_ref().is_some_and(|p| {
                        p.verdict == Verdict::Converging
                            && c.final_amplitude <= 0.5 * p.final_amplitude
                    })
            }
            Verdict::Oscillating => {
                c.envelope_ratio >= settings.growth_ratio
                    || prev.as_ref().is_some_and(|p| p.verdict == Verdict::Oscillating)
            }
            Verdict::Indeterminate => false,
        };
        if decided || scale >= settings.max_horizon_scale {
            // residual indeterminacy counts as the stable side
            let verdict = match c.verdict {
                Verdict::Indeterminate => Verdict::Converging,
                v => v,
            };
            return Ok(ProbeRecord {
                delta,
                verdict,
                horizon,
            });
        }
        prev = Some(c);
        scale *= 2;
    }
}

/// Locates the delay at which the classification flips from `Converging`
/// (at `lo`) to `Oscillating` (at `hi`) by bisection; returns the midpoint
/// of the final bracket together with the probe log.
pub fn empirical_threshold_scan(
    kind: ModelKind,
    base: &ModelParams,
    history: &HistoryFunction,
    lo: f64,
    hi: f64,
    settings: &ScanSettings,
) -> Result<ScanOutcome> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::Bracket(format!(
            "need 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut probes = Vec::new();

    let at_lo = decisive_probe(kind, base, history, lo, settings)?;
    if at_lo.verdict != Verdict::Converging {
        return Err(Error::Bracket(format!(
            "lower endpoint {lo} classifies as {}, expected Converging",
            at_lo.verdict
        )));
    }
    probes.push(at_lo);

    let at_hi = decisive_probe(kind, base, history, hi, settings)?;
    if at_hi.verdict != Verdict::Oscillating {
        return Err(Error::Bracket(format!(
            "upper endpoint {hi} classifies as {}, expected Oscillating",
            at_hi.verdict
        )));
    }
    probes.push(at_hi);

    let (mut lo, mut hi) = (lo, hi);
    while hi - lo >= settings.tol {
        let mid = 0.5 * (lo + hi);
        let probe = decisive_probe(kind, base, history, mid, settings)?;
        let verdict = probe.verdict;
        probes.push(probe);
        if verdict == Verdict::Oscillating {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(ScanOutcome {
        threshold: 0.5 * (lo + hi),
        bracket_lo: lo,
        bracket_hi: hi,
        probes,
    })
}
