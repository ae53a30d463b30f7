//! Model parameters, arrival rate, choice fractions, and the right-hand
//! sides of the two fluid models.
//!
//! All functions here are pure; values are immutable and safe to share
//! across threads.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which of the two fluid models a state vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Choice driven by queue lengths observed `delta` time units ago.
    /// State is `(q1, q2)`.
    ConstantDelay,
    /// Choice driven by the trailing moving average of the queue lengths
    /// over a window of width `delta`. State is `(q1, q2, m1, m2)`.
    MovingAverage,
}

impl ModelKind {
    /// Dimension of the state vector.
    pub fn dim(self) -> usize {
        match self {
            ModelKind::ConstantDelay => 2,
            ModelKind::MovingAverage => 4,
        }
    }

    /// Number of queue components (always two parallel queues).
    pub fn queues(self) -> usize {
        2
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-delay" => Ok(ModelKind::ConstantDelay),
            "moving-average" => Ok(ModelKind::MovingAverage),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?} (expected \"constant-delay\" or \"moving-average\")"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::ConstantDelay => "constant-delay",
            ModelKind::MovingAverage => "moving-average",
        })
    }
}

/// Parameters shared by both models.
///
/// The total arrival rate is `lambda * (1 + alpha * epsilon * sin(gamma t))`,
/// each queue serves at rate `mu`, and queue-length information reaches
/// customers with lag (or averaging window) `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Base arrival rate (jobs per unit time, > 0).
    pub lambda: f64,
    /// Service rate of each queue (1/time, > 0).
    pub mu: f64,
    /// Relative amplitude of the rate modulation, `0 <= alpha <= 1`.
    pub alpha: f64,
    /// Perturbation scale multiplying the modulation, `epsilon >= 0`.
    pub epsilon: f64,
    /// Forcing frequency of the arrival rate (rad per unit time, >= 0).
    pub gamma: f64,
    /// Information delay / averaging window (time, > 0).
    pub delta: f64,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        mu: f64,
        alpha: f64,
        epsilon: f64,
        gamma: f64,
        delta: f64,
    ) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            alpha,
            epsilon,
            gamma,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda,
            self.mu,
            self.alpha,
            self.epsilon,
            self.gamma,
            self.delta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "parameters must be finite, got {self:?}"
            )));
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        // alpha * epsilon <= 1 keeps the arrival rate nonnegative for all t.
        if self.alpha * self.epsilon > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha * epsilon = {} > 1 would make the arrival rate negative",
                self.alpha * self.epsilon
            )));
        }
        Ok(())
    }

    /// Total arrival rate `lambda (1 + alpha epsilon sin(gamma t))` at time `t`.
    pub fn arrival_rate(&self, t: f64) -> f64 {
        self.lambda * (1.0 + self.alpha * self.epsilon * (self.gamma * t).sin())
    }

    /// Unforced symmetric equilibrium of each queue, `lambda / (2 mu)`.
    pub fn equilibrium_per_queue(&self) -> f64 {
        self.lambda / (2.0 * self.mu)
    }

    /// Copy of the parameters with a different delay.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.lambda,
            self.mu,
            self.alpha,
            self.epsilon,
            self.gamma,
            delta,
        )
    }
}

/// Total arrival rate at time `t` — free-function form of
/// [`ModelParams::arrival_rate`].
pub fn arrival_rate(t: f64, p: &ModelParams) -> f64 {
    p.arrival_rate(t)
}

/// Fraction of arrivals joining each queue when the observed levels are
/// `x1` and `x2` (multinomial logit on the negated levels).
///
/// Computed as the logistic of the difference, so large inputs never reach
/// `exp` with a positive argument: `p1 = 1 / (1 + exp(x1 - x2))`. The two
/// fractions sum to one up to a single rounding and swap exactly under
/// argument exchange.
pub fn choice_fraction(x1: f64, x2: f64) -> Result<(f64, f64)> {
    if !x1.is_finite() || !x2.is_finite() {
        return Err(Error::NonFinite("choice_fraction"));
    }
    let d = x1 - x2;
    let e = (-d.abs()).exp();
    let small = e / (1.0 + e);
    let big = 1.0 - small;
    Ok(if d >= 0.0 { (small, big) } else { (big, small) })
}

/// Right-hand side of the constant-delay model.
///
/// `delayed` is the state at `t - delta`; the choice fractions are evaluated
/// on the delayed queue lengths, the service terms on the current ones.
pub fn constant_delay_rhs(
    t: f64,
    state: [f64; 2],
    delayed: [f64; 2],
    p: &ModelParams,
) -> Result<[f64; 2]> {
    let (p1, p2) = choice_fraction(delayed[0], delayed[1])?;
    let rate = p.arrival_rate(t);
    Ok([
        rate * p1 - p.mu * state[0],
        rate * p2 - p.mu * state[1],
    ])
}

/// Right-hand side of the moving-average model with state
/// `(q1, q2, m1, m2)`.
///
/// The choice fractions act on the current averages `(m1, m2)`; the average
/// dynamics `dm_i/dt = (q_i(t) - q_i(t - delta)) / delta` use the current and
/// delayed queue lengths only, so `delayed` is read in its first two
/// components.
pub fn moving_average_rhs(
    t: f64,
    state: [f64; 4],
    delayed: [f64; 4],
    p: &ModelParams,
) -> Result<[f64; 4]> {
    let (p1, p2) = choice_fraction(state[2], state[3])?;
    let rate = p.arrival_rate(t);
    Ok([
        rate * p1 - p.mu * state[0],
        rate * p2 - p.mu * state[1],
        (state[0] - delayed[0]) / p.delta,
        (state[1] - delayed[1]) / p.delta,
    ])
}

/// Per-component initial function on `[-delta, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentHistory {
    Constant(f64),
    /// Piecewise-linear table; times strictly increasing, constant
    /// extrapolation outside the covered span.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl ComponentHistory {
    fn validate(&self) -> Result<()> {
        match self {
            ComponentHistory::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(
                        "history constant must be finite".into(),
                    ));
                }
            }
            ComponentHistory::Tabulated { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated history needs matching, non-empty times and values".into(),
                    ));
                }
                if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "tabulated history entries must be finite".into(),
                    ));
                }
                if times.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter(
                        "tabulated history times must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            ComponentHistory::Constant(v) => *v,
            ComponentHistory::Tabulated { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= *times.last().unwrap() {
                    return *values.last().unwrap();
                }
                let j = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[j]) / (times[j + 1] - times[j]);
                values[j] + w * (values[j + 1] - values[j])
            }
        }
    }

    /// Exact mean over `[a, b]` (piecewise-linear integration for tables).
    fn mean_over(&self, a: f64, b: f64) -> f64 {
        match self {
            ComponentHistory::Constant(v) => *v,
            ComponentHistory::Tabulated { times, .. } => {
                // Integrate the piecewise-linear interpolant exactly by
                // trapezoid over the breakpoints that fall inside [a, b].
                let mut nodes = vec![a];
                nodes.extend(times.iter().copied().filter(|&t| t > a && t < b));
                nodes.push(b);
                let mut area = 0.0;
                for w in nodes.windows(2) {
                    area += 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0]);
                }
                area / (b - a)
            }
        }
    }
}

/// Initial condition for the queue components on `[-delta, 0]`.
///
/// Both models take one entry per queue; the moving-average model derives
/// its initial averages from these by quadrature (see the integrator).
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFunction {
    components: Vec<ComponentHistory>,
}

impl HistoryFunction {
    pub fn new(components: Vec<ComponentHistory>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "history needs at least one component".into(),
            ));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    /// Constant history, one value per component.
    pub fn constant(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| ComponentHistory::Constant(v)).collect())
    }

    pub fn components(&self) -> usize {
        self.components.len()
    }

    /// Value of component `i` at time `t` (expected `t <= 0`).
    pub fn eval(&self, i: usize, t: f64) -> f64 {
        self.components[i].eval(t)
    }

    /// Mean of component `i` over `[a, b]`; exact for both variants.
    pub fn mean_over(&self, i: usize, a: f64, b: f64) -> f64 {
        self.components[i].mean_over(a, b)
    }

    /// Appends a component (used to extend queue histories with derived
    /// moving-average components).
    pub(crate) fn push(&mut self, c: ComponentHistory) {
        self.components.push(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(lambda: f64, mu: f64, alpha: f64, epsilon: f64, gamma: f64, delta: f64) -> ModelParams {
        ModelParams::new(lambda, mu, alpha, epsilon, gamma, delta).unwrap()
    }

    #[test]
    fn arrival_rate_examples() {
        let p = params(3.0, 1.0, 1.0, 0.2, 5f64.sqrt(), 1.0);
        assert_eq!(p.arrival_rate(0.0), 3.0);

        // peak of the sinusoid: gamma * t = pi/2
        let p = params(3.0, 1.0, 1.0, 0.2, 1.0, 1.0);
        let t = std::f64::consts::FRAC_PI_2;
        assert!((p.arrival_rate(t) - 3.6).abs() < 1e-12);

        // frozen direct evaluation: 10 (1 + 0.2 sin sqrt(96)) at t = 1
        let p = params(10.0, 1.0, 1.0, 0.2, 96f64.sqrt(), 1.0);
        assert!((p.arrival_rate(1.0) - 9.270841319297455).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.5, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.5, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, 1.5, 0.0, 1.0).is_ok());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn choice_fraction_examples() {
        let (p1, p2) = choice_fraction(0.0, 0.0).unwrap();
        assert_eq!((p1, p2), (0.5, 0.5));

        // frozen logistic(1) oracle value
        let (p1, p2) = choice_fraction(1.0, 2.0).unwrap();
        assert!((p1 - 0.7310585786300049).abs() < 1e-15);
        assert!((p2 - 0.2689414213699951).abs() < 1e-15);

        // huge imbalance, no overflow
        let (p1, p2) = choice_fraction(1000.0, 0.0).unwrap();
        assert!(p1.is_finite() && p2.is_finite());
        assert!(p1 < 1e-300 && (p2 - 1.0).abs() < 1e-15);

        assert!(choice_fraction(f64::NAN, 0.0).is_err());
        assert!(choice_fraction(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn constant_delay_rhs_examples() {
        // symmetric state: both components lambda/2 - mu q
        let p = params(3.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let out = constant_delay_rhs(0.7, [1.2, 1.2], [0.4, 0.4], &p).unwrap();
        assert_eq!(out[0], out[1]);
        assert!((out[0] - (1.5 - 1.2)).abs() < 1e-15);

        // equilibrium
        let q = p.lambda / (2.0 * p.mu);
        let out = constant_delay_rhs(0.0, [q, q], [q, q], &p).unwrap();
        assert!(out[0].abs() < 1e-15 && out[1].abs() < 1e-15);

        // frozen composition with the logistic oracle
        let out = constant_delay_rhs(0.0, [1.0, 2.0], [1.0, 2.0], &p).unwrap();
        assert!((out[0] - 1.1931757358900147).abs() < 1e-12);
        assert!((out[1] + 1.1931757358900147).abs() < 1e-12);
    }

    #[test]
    fn moving_average_rhs_examples() {
        let p = params(10.0, 1.0, 0.0, 0.0, 0.0, 2.0);

        // full symmetry at equilibrium
        let q = 5.0;
        let out = moving_average_rhs(0.0, [q, q, q, q], [q, q, q, q], &p).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14));

        // equal averages split arrivals evenly regardless of q1, q2
        let out = moving_average_rhs(0.0, [4.0, 3.0, 2.0, 2.0], [0.0, 0.0, 0.0, 0.0], &p).unwrap();
        assert!((out[0] + 4.0 - (out[1] + 3.0)).abs() < 1e-14);

        // frozen example: m1=4, m2=3, delayed q = (2, 5)
        let out = moving_average_rhs(0.0, [4.0, 3.0, 4.0, 3.0], [2.0, 5.0, 0.0, 0.0], &p).unwrap();
        assert!((out[0] - (-1.3105857863000488)).abs() < 1e-12);
        assert!((out[1] - 4.310585786300049).abs() < 1e-12);
        assert!((out[2] - 1.0).abs() < 1e-15);
        assert!((out[3] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn history_tabulated_eval_and_mean() {
        let h = HistoryFunction::new(vec![ComponentHistory::Tabulated {
            times: vec![-2.0, -1.0, 0.0],
            values: vec![1.0, 3.0, 3.0],
        }])
        .unwrap();
        assert_eq!(h.eval(0, -2.0), 1.0);
        assert_eq!(h.eval(0, -1.5), 2.0);
        assert_eq!(h.eval(0, 0.0), 3.0);
        assert_eq!(h.eval(0, -3.0), 1.0); // clamped
        // exact mean of the piecewise-linear segments: (2 + 3) / 2 over [-2, 0]
        assert!((h.mean_over(0, -2.0, 0.0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn history_validation() {
        assert!(HistoryFunction::constant(&[f64::NAN]).is_err());
        assert!(HistoryFunction::new(vec![ComponentHistory::Tabulated {
            times: vec![0.0, 0.0],
            values: vec![1.0, 2.0],
        }])
        .is_err());
    }

    proptest! {
        #[test]
        fn choice_fractions_sum_to_one(x1 in -1e6f64..1e6, x2 in -1e6f64..1e6) {
            let (p1, p2) = choice_fraction(x1, x2).unwrap();
            prop_assert!((0.0..=1.0).contains(&p1));
            prop_assert!((0.0..=1.0).contains(&p2));
            // exp underflows for differences beyond ~745; the small fraction
            // is then a true zero in f64
            if (x1 - x2).abs() < 700.0 {
                prop_assert!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0);
            }
            prop_assert!((p1 + p2 - 1.0).abs() <= f64::EPSILON);
        }

        #[test]
        fn choice_fractions_antisymmetric(x1 in -1e6f64..1e6, x2 in -1e6f64..1e6) {
            let (a1, a2) = choice_fraction(x1, x2).unwrap();
            let (b1, b2) = choice_fraction(x2, x1).unwrap();
            prop_assert_eq!(a1.to_bits(), b2.to_bits());
            prop_assert_eq!(a2.to_bits(), b1.to_bits());
        }

        #[test]
        fn constant_delay_total_mass(
            q1 in -5.0f64..20.0, q2 in -5.0f64..20.0,
            d1 in -5.0f64..20.0, d2 in -5.0f64..20.0,
            t in 0.0f64..50.0,
        ) {
            let p = params(3.0, 1.0, 1.0, 0.2, 5f64.sqrt(), 1.5);
            let out = constant_delay_rhs(t, [q1, q2], [d1, d2], &p).unwrap();
            let expect = p.arrival_rate(t) - p.mu * (q1 + q2);
            let scale = 1.0 + p.arrival_rate(t).abs() + (p.mu * (q1 + q2)).abs();
            prop_assert!((out[0] + out[1] - expect).abs() <= 1e-14 * scale);
        }

        #[test]
        fn moving_average_total_mass(
            q1 in -5.0f64..20.0, q2 in -5.0f64..20.0,
            m1 in -5.0f64..20.0, m2 in -5.0f64..20.0,
            t in 0.0f64..50.0,
        ) {
            let p = params(10.0, 1.0, 1.0, 0.1, 2.0, 2.0);
            let out = moving_average_rhs(t, [q1, q2, m1, m2], [0.5, 0.7, 0.0, 0.0], &p).unwrap();
            let expect = p.arrival_rate(t) - p.mu * (q1 + q2);
            let scale = 1.0 + p.arrival_rate(t).abs() + (p.mu * (q1 + q2)).abs();
            prop_assert!((out[0] + out[1] - expect).abs() <= 1e-14 * scale);
        }

        #[test]
        fn rhs_swap_symmetry(
            q1 in -5.0f64..20.0, q2 in -5.0f64..20.0,
            d1 in -5.0f64..20.0, d2 in -5.0f64..20.0,
            t in 0.0f64..50.0,
        ) {
            let p = params(3.0, 1.0, 1.0, 0.2, 5f64.sqrt(), 1.5);
            let a = constant_delay_rhs(t, [q1, q2], [d1, d2], &p).unwrap();
            let b = constant_delay_rhs(t, [q2, q1], [d2, d1], &p).unwrap();
            prop_assert_eq!(a[0].to_bits(), b[1].to_bits());
            prop_assert_eq!(a[1].to_bits(), b[0].to_bits());

            let pm = params(10.0, 1.0, 1.0, 0.1, 2.0, 2.0);
            let a = moving_average_rhs(t, [q1, q2, d1, d2], [q2, q1, 0.0, 0.0], &pm).unwrap();
            let b = moving_average_rhs(t, [q2, q1, d2, d1], [q1, q2, 0.0, 0.0], &pm).unwrap();
            prop_assert_eq!(a[0].to_bits(), b[1].to_bits());
            prop_assert_eq!(a[1].to_bits(), b[0].to_bits());
            prop_assert_eq!(a[2].to_bits(), b[3].to_bits());
            prop_assert_eq!(a[3].to_bits(), b[2].to_bits());
        }
    }
}
