//! Envelope-based classification of integrated trajectories.
//!
//! The classifier watches the queue imbalance `d(t) = q1(t) - q2(t)`. After a
//! burn-in fraction of the horizon it collects the local maxima of `|d|` and
//! compares the mean of the last quartile of maxima against the first: a
//! clearly shrinking envelope is `Converging`, a flat-or-growing one with
//! non-negligible amplitude is `Oscillating`.

use serde::Serialize;

use crate::dde::Trajectory;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};
use crate::stability::{delta_cr_ma, omega_cr_constant, omega_ma};

/// Trajectory verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Converging,
    Oscillating,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "Converging",
            Verdict::Oscillating => "Oscillating",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

/// Classification result with its supporting measurements.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Mean of the last quartile of `|d|` maxima over the mean of the first.
    pub envelope_ratio: f64,
    /// Number of local maxima of `|d|` found after burn-in.
    pub extrema_count: usize,
    /// Mean of the last quartile of maxima (or the tail maximum when too few
    /// extrema exist).
    pub final_amplitude: f64,
}

/// Classifier thresholds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
pub struct ClassifySettings {
    /// Fraction of the horizon discarded before measuring (default 0.5).
    pub burn_in: f64,
    /// Envelope ratios below this are `Converging` (default 0.9).
    pub converging_ratio: f64,
    /// Envelope ratios above this are `Oscillating` (default 0.98).
    pub oscillating_ratio: f64,
    /// Amplitudes below this fraction of the per-queue equilibrium count as
    /// fully converged (default 1e-6).
    pub amplitude_floor: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            burn_in: 0.5,
            converging_ratio: 0.9,
            oscillating_ratio: 0.98,
            amplitude_floor: 1e-6,
        }
    }
}

impl ClassifySettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParameter(format!(
                "burn_in must lie in [0, 1), got {}",
                self.burn_in
            )));
        }
        let ratios_ok = self.converging_ratio > 0.0
            && self.converging_ratio <= self.oscillating_ratio
            && self.oscillating_ratio.is_finite();
        if !ratios_ok {
            return Err(Error::InvalidParameter(
                "need 0 < converging_ratio <= oscillating_ratio".into(),
            ));
        }
        if self.amplitude_floor < 0.0 {
            return Err(Error::InvalidParameter(
                "amplitude_floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Reference oscillation frequency used for horizon and span checks: the
/// Hopf frequency of the model (at the configured window for the
/// moving-average model, falling back to the critical window outside the
/// oscillatory regime).
pub fn reference_frequency(kind: ModelKind, p: &ModelParams) -> Option<f64> {
    match kind {
        ModelKind::ConstantDelay => omega_cr_constant(p.lambda, p.mu)
            .ok()
            .filter(|w| *w > 0.0),
        ModelKind::MovingAverage => omega_ma(p.lambda, p.mu, p.delta)
            .ok()
            .or_else(|| delta_cr_ma(p.lambda, p.mu).and_then(|d| omega_ma(p.lambda, p.mu, d)).ok()),
    }
}

/// Default classification horizon: `max(100 delta, 800 / omega)`.
///
/// The 800/omega term leaves a post-burn-in window of ~64 oscillation
/// periods; near-critical runs relax onto their limit cycle slowly and a
/// shorter window still sits inside the transient. Without an oscillatory
/// regime the fallback is `max(100 delta, 20 / mu)`.
pub fn default_horizon(kind: ModelKind, p: &ModelParams) -> f64 {
    match reference_frequency(kind, p) {
        Some(w) => (100.0 * p.delta).max(800.0 / w),
        None => (100.0 * p.delta).max(20.0 / p.mu),
    }
}

/// Classifies the queue imbalance of an integrated trajectory.
///
/// Requires the post-burn-in window to span at least 20 oscillation periods
/// of the model's reference frequency (when one exists).
pub fn classify_trajectory(
    traj: &Trajectory,
    p: &ModelParams,
    settings: &ClassifySettings,
) -> Result<Classification> {
    settings.validate()?;
    let kind = if traj.dim() == 4 {
        ModelKind::MovingAverage
    } else {
        ModelKind::ConstantDelay
    };
    let nodes = traj.len();
    let start = ((settings.burn_in * (nodes - 1) as f64).ceil() as usize).min(nodes - 1);
    let window = traj.t_end() - traj.time(start);
    if let Some(w) = reference_frequency(kind, p) {
        let need = 20.0 * 2.0 * std::f64::consts::PI / w;
        if window < need {
            return Err(Error::TrajectoryTooShort(format!(
                "post-burn-in window {window:.1} shorter than 20 periods ({need:.1})"
            )));
        }
    }
    let dabs: Vec<f64> = (start..nodes)
        .map(|k| {
            let s = traj.state(k);
            (s[0] - s[1]).abs()
        })
        .collect();
    Ok(classify_series(&dabs, p.equilibrium_per_queue(), settings))
}

/// Core envelope classification of a |d| series sampled on a uniform grid.
pub(crate) fn classify_series(
    dabs: &[f64],
    equilibrium: f64,
    settings: &ClassifySettings,
) -> Classification {
    let maxima = local_maxima(dabs);
    let floor = settings.amplitude_floor * equilibrium.abs();

    let (ratio, final_amplitude) = if maxima.len() >= 4 {
        let q = (maxima.len() / 4).max(1);
        let first: f64 = maxima[..q].iter().sum::<f64>() / q as f64;
        let last: f64 = maxima[maxima.len() - q..].iter().sum::<f64>() / q as f64;
        let ratio = if first > 0.0 { last / first } else { 0.0 };
        (ratio, last)
    } else {
        let tail_start = dabs.len() - dabs.len() / 4 - 1;
        let tail_max = dabs[tail_start..].iter().copied().fold(0.0f64, f64::max);
        (0.0, tail_max)
    };

    let verdict = if final_amplitude <= floor {
        Verdict::Converging
    } else if maxima.len() < 8 {
        Verdict::Indeterminate
    } else if ratio < settings.converging_ratio {
        Verdict::Converging
    } else if ratio > settings.oscillating_ratio {
        Verdict::Oscillating
    } else {
        Verdict::Indeterminate
    };

    Classification {
        verdict,
        envelope_ratio: ratio,
        extrema_count: maxima.len(),
        final_amplitude,
    }
}

/// Values of the interior local maxima of a series (non-strict shoulder on
/// one side allowed, flat runs rejected).
fn local_maxima(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..series.len().saturating_sub(1) {
        let (a, b, c) = (series[i - 1], series[i], series[i + 1]);
        if b >= a && b >= c && (b > a || b > c) {
            out.push(b);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::{integrate, IntegrationConfig};
    use crate::model::HistoryFunction;

    #[test]
    fn synthetic_decaying_envelope_converges() {
        // d(t) = e^{-0.1 t} cos(w t) sampled finely over many periods
        let w = 5f64.sqrt() / 2.0;
        let dt = 0.02;
        let n = (300.0 / dt) as usize;
        let series: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                ((-0.1 * t).exp() * (w * t).cos()).abs()
            })
            .collect();
        let c = classify_series(&series, 1.5, &ClassifySettings::default());
        assert_eq!(c.verdict, Verdict::Converging);
        assert!(c.envelope_ratio < 0.9);
        assert!(c.extrema_count > 50);
    }

    #[test]
    fn synthetic_flat_envelope_oscillates() {
        let w = 1.0;
        let dt = 0.02;
        let n = (400.0 / dt) as usize;
        let series: Vec<f64> = (0..n)
            .map(|k| (w * k as f64 * dt).sin().abs())
            .collect();
        let c = classify_series(&series, 1.5, &ClassifySettings::default());
        assert_eq!(c.verdict, Verdict::Oscillating);
        // grid sampling perturbs each peak by O((w dt)^2)
        assert!((c.envelope_ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn identical_histories_converge_with_tiny_amplitude() {
        let p = ModelParams::new(3.0, 1.0, 1.0, 0.2, 5f64.sqrt(), 1.947).unwrap();
        let h = HistoryFunction::constant(&[2.0, 2.0]).unwrap();
        let t_end = default_horizon(ModelKind::ConstantDelay, &p);
        let cfg = IntegrationConfig::new(64, t_end).unwrap();
        let traj = integrate(ModelKind::ConstantDelay, &p, &h, &cfg).unwrap();
        let c = classify_trajectory(&traj, &p, &ClassifySettings::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Converging);
        assert!(c.final_amplitude < 1e-10);
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let p = ModelParams::new(3.0, 1.0, 1.0, 0.2, 5f64.sqrt(), 1.947).unwrap();
        let h = HistoryFunction::constant(&[1.0, 2.0]).unwrap();
        let cfg = IntegrationConfig::new(32, 10.0).unwrap();
        let traj = integrate(ModelKind::ConstantDelay, &p, &h, &cfg).unwrap();
        assert!(matches!(
            classify_trajectory(&traj, &p, &ClassifySettings::default()),
            Err(Error::TrajectoryTooShort(_))
        ));
    }

    #[test]
    fn settings_validation() {
        let s = ClassifySettings {
            burn_in: 1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = ClassifySettings {
            converging_ratio: 0.99,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
