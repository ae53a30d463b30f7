//! Mean of the time-varying infinite-server queue and the symmetric
//! equilibrium both fluid models relax to.
//!
//! With exponential service the mean `q(t)` solves the linear ODE
//! `dq/dt = lambda(t) - mu(t) q`, whose solution is
//!
//! ```text
//! q(t) = q0 exp(-M(t)) + ∫_0^t lambda(s) exp(-(M(t) - M(s))) ds,
//! M(t) = ∫_0^t mu
//! ```
//!
//! Constant and sinusoidal rates use closed forms; tabulated rates fall
//! back to adaptive Simpson quadrature.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Absolute tolerance for the adaptive quadrature used with tabulated rates.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Piecewise-linear rate table with constant extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl RateTable {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter(
                "rate table needs matching, non-empty times and values".into(),
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "rate table entries must be finite".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "rate table times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= *self.times.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let j = self.times.partition_point(|&x| x <= t) - 1;
        let w = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        self.values[j] + w * (self.values[j + 1] - self.values[j])
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let mut nodes = vec![a];
        nodes.extend(self.times.iter().copied().filter(|&t| t > a && t < b));
        nodes.push(b);
        let mut area = 0.0;
        for w in nodes.windows(2) {
            area += 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0]);
        }
        area
    }

    fn min_value(&self) -> f64 {
        // piecewise linear: extrema sit at breakpoints
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Arrival/service rate specification for the infinite-server mean.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFunction {
    Constant {
        lambda: f64,
        mu: f64,
    },
    /// `lambda(t) = lambda (1 + amplitude sin(gamma t))` with constant `mu`.
    Sinusoidal {
        lambda: f64,
        amplitude: f64,
        gamma: f64,
        mu: f64,
    },
    Tabulated {
        lambda: RateTable,
        mu: RateTable,
    },
}

impl RateFunction {
    /// Sinusoidal rate family matching a fluid-model parameter set
    /// (effective amplitude `alpha * epsilon`).
    pub fn from_params(p: &ModelParams) -> Self {
        RateFunction::Sinusoidal {
            lambda: p.lambda,
            amplitude: p.alpha * p.epsilon,
            gamma: p.gamma,
            mu: p.mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Constant { lambda, mu } => {
                if !(lambda.is_finite() && mu.is_finite() && *lambda >= 0.0 && *mu > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "constant rates need lambda >= 0 and mu > 0, got {lambda}, {mu}"
                    )));
                }
            }
            RateFunction::Sinusoidal {
                lambda,
                amplitude,
                gamma,
                mu,
            } => {
                let fin = lambda.is_finite()
                    && amplitude.is_finite()
                    && gamma.is_finite()
                    && mu.is_finite();
                if !fin || *lambda < 0.0 || *mu <= 0.0 || amplitude.abs() > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "sinusoidal rates need lambda >= 0, mu > 0, |amplitude| <= 1, got {self:?}"
                    )));
                }
            }
            RateFunction::Tabulated { lambda, mu } => {
                if lambda.min_value() < 0.0 {
                    return Err(Error::InvalidParameter(
                        "tabulated lambda(t) must be nonnegative".into(),
                    ));
                }
                if mu.min_value() <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "tabulated mu(t) must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { lambda, .. } => *lambda,
            RateFunction::Sinusoidal {
                lambda,
                amplitude,
                gamma,
                ..
            } => lambda * (1.0 + amplitude * (gamma * t).sin()),
            RateFunction::Tabulated { lambda, .. } => lambda.eval(t),
        }
    }

    pub fn mu_at(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { mu, .. } => *mu,
            RateFunction::Sinusoidal { mu, .. } => *mu,
            RateFunction::Tabulated { mu, .. } => mu.eval(t),
        }
    }

    /// `∫_a^b mu(s) ds`, exact for all variants.
    fn mu_integral(&self, a: f64, b: f64) -> f64 {
        match self {
            RateFunction::Constant { mu, .. } | RateFunction::Sinusoidal { mu, .. } => {
                mu * (b - a)
            }
            RateFunction::Tabulated { mu, .. } => mu.integral(a, b),
        }
    }
}

/// Mean queue length of the infinite-server system at time `t >= 0`,
/// starting from mean `q0`.
pub fn mean_infinite_server(t: f64, q0: f64, rates: &RateFunction) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    rates.validate()?;
    if t == 0.0 {
        return Ok(q0);
    }
    match rates {
        RateFunction::Constant { lambda, mu } => {
            let decay = (-mu * t).exp();
            Ok(q0 * decay + lambda / mu * (1.0 - decay))
        }
        RateFunction::Sinusoidal {
            lambda,
            amplitude,
            gamma,
            mu,
        } => {
            let decay = (-mu * t).exp();
            let base = q0 * decay + lambda / mu * (1.0 - decay);
            let osc = lambda * amplitude / (mu * mu + gamma * gamma)
                * (mu * (gamma * t).sin() - gamma * (gamma * t).cos() + decay * gamma);
            Ok(base + osc)
        }
        RateFunction::Tabulated { .. } => mean_infinite_server_quadrature(t, q0, rates),
    }
}

/// Quadrature evaluation of the same mean, usable with every rate variant.
///
/// Integrates `lambda(s) exp(-(M(t) - M(s)))`, which stays bounded by the
/// peak arrival rate, so no large exponentials appear.
pub fn mean_infinite_server_quadrature(t: f64, q0: f64, rates: &RateFunction) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    rates.validate()?;
    if t == 0.0 {
        return Ok(q0);
    }
    let total = rates.mu_integral(0.0, t);
    let integrand = |s: f64| rates.lambda_at(s) * (-(total - rates.mu_integral(0.0, s))).exp();
    Ok(q0 * (-total).exp() + adaptive_simpson(&integrand, 0.0, t, QUADRATURE_TOL))
}

/// Large-`t` limit of the sinusoidal mean:
/// `lambda/mu + lambda a / (mu^2 + gamma^2) (mu sin(gamma t) - gamma cos(gamma t))`.
pub fn mean_infinite_server_steady(t: f64, rates: &RateFunction) -> Result<f64> {
    rates.validate()?;
    match rates {
        RateFunction::Constant { lambda, mu } => Ok(lambda / mu),
        RateFunction::Sinusoidal {
            lambda,
            amplitude,
            gamma,
            mu,
        } => Ok(lambda / mu
            + lambda * amplitude / (mu * mu + gamma * gamma)
                * (mu * (gamma * t).sin() - gamma * (gamma * t).cos())),
        RateFunction::Tabulated { .. } => Err(Error::UnsupportedRate(
            "steady-state form requires constant or sinusoidal rates",
        )),
    }
}

/// Symmetric equilibrium of each queue: half the steady infinite-server mean.
pub fn equilibrium_per_queue(t: f64, rates: &RateFunction) -> Result<f64> {
    Ok(mean_infinite_server_steady(t, rates)? / 2.0)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_rates() -> RateFunction {
        RateFunction::Sinusoidal {
            lambda: 3.0,
            amplitude: 0.2,
            gamma: 5f64.sqrt(),
            mu: 1.0,
        }
    }

    #[test]
    fn zero_time_returns_initial_mean() {
        assert_eq!(mean_infinite_server(0.0, 1.7, &sin_rates()).unwrap(), 1.7);
        assert!(mean_infinite_server(-1.0, 0.0, &sin_rates()).is_err());
    }

    #[test]
    fn constant_rates_textbook_form() {
        let rates = RateFunction::Constant { lambda: 3.0, mu: 1.0 };
        for t in [0.1, 0.5, 2.0, 10.0] {
            let got = mean_infinite_server(t, 0.0, &rates).unwrap();
            let want = 3.0 * (1.0 - (-t).exp());
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn sinusoidal_closed_form_matches_frozen_quadrature() {
        // frozen with 40-digit quadrature of the defining integral at t = 2
        let got = mean_infinite_server(2.0, 0.0, &sin_rates()).unwrap();
        assert!((got - 2.5803351376617587).abs() < 1e-13);
    }

    #[test]
    fn closed_form_matches_quadrature_path() {
        for t in [0.3, 1.0, 2.7, 6.0, 12.0] {
            let a = mean_infinite_server(t, 0.8, &sin_rates()).unwrap();
            let b = mean_infinite_server_quadrature(t, 0.8, &sin_rates()).unwrap();
            assert!(
                (a - b).abs() <= 1e-8 * a.abs().max(1.0),
                "t={t}: closed {a} vs quadrature {b}"
            );
        }
    }

    #[test]
    fn steady_form_examples() {
        let flat = RateFunction::Sinusoidal {
            lambda: 3.0,
            amplitude: 0.0,
            gamma: 1.0,
            mu: 1.0,
        };
        assert_eq!(mean_infinite_server_steady(12.3, &flat).unwrap(), 3.0);
        assert_eq!(equilibrium_per_queue(12.3, &flat).unwrap(), 1.5);

        let c10 = RateFunction::Constant { lambda: 10.0, mu: 1.0 };
        assert_eq!(equilibrium_per_queue(0.0, &c10).unwrap(), 5.0);

        // gamma t = pi/2: sin = 1, cos = 0 -> 3 + 0.6/6 = 3.1
        let g = 5f64.sqrt();
        let t = std::f64::consts::FRAC_PI_2 / g;
        let got = mean_infinite_server_steady(t, &sin_rates()).unwrap();
        assert!((got - 3.1).abs() < 1e-13);
        assert!((equilibrium_per_queue(t, &sin_rates()).unwrap() - 1.55).abs() < 1e-13);
    }

    #[test]
    fn steady_difference_decays_like_exp() {
        // mean(q0 = lambda/mu) - steady = (lambda a gamma / (mu^2 + gamma^2)) e^{-mu t}
        let rates = sin_rates();
        let coeff = 3.0 * 0.2 * 5f64.sqrt() / 6.0;
        for t in [1.0, 2.0, 4.0, 8.0] {
            let full = mean_infinite_server(t, 3.0, &rates).unwrap();
            let steady = mean_infinite_server_steady(t, &rates).unwrap();
            assert!(
                ((full - steady) - coeff * (-t).exp()).abs() < 1e-13,
                "t={t}"
            );
        }
    }

    #[test]
    fn steady_rejects_tabulated() {
        let rates = RateFunction::Tabulated {
            lambda: RateTable::new(vec![0.0, 1.0], vec![2.0, 3.0]).unwrap(),
            mu: RateTable::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(),
        };
        assert!(matches!(
            mean_infinite_server_steady(1.0, &rates),
            Err(Error::UnsupportedRate(_))
        ));
    }

    #[test]
    fn mean_satisfies_defining_ode() {
        // central difference of the mean matches lambda(t) - mu(t) q(t) to O(h^2)
        let tabulated = RateFunction::Tabulated {
            lambda: RateTable::new(vec![0.0, 1.0, 2.0, 5.0], vec![2.0, 4.0, 1.0, 3.0]).unwrap(),
            mu: RateTable::new(vec![0.0, 2.5, 5.0], vec![0.5, 1.5, 1.0]).unwrap(),
        };
        let constant = RateFunction::Constant { lambda: 3.0, mu: 1.0 };
        for (name, rates) in [
            ("constant", &constant),
            ("sinusoidal", &sin_rates()),
            ("tabulated", &tabulated),
        ] {
            let h = 1e-4;
            for t in [0.4, 1.3, 3.2] {
                let q = mean_infinite_server(t, 0.7, rates).unwrap();
                let qp = mean_infinite_server(t + h, 0.7, rates).unwrap();
                let qm = mean_infinite_server(t - h, 0.7, rates).unwrap();
                let deriv = (qp - qm) / (2.0 * h);
                let rhs = rates.lambda_at(t) - rates.mu_at(t) * q;
                assert!(
                    (deriv - rhs).abs() < 50.0 * h * h + 1e-9,
                    "{name} t={t}: {deriv} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn long_run_periodicity() {
        let rates = sin_rates();
        let period = 2.0 * std::f64::consts::PI / 5f64.sqrt();
        let mut prev_gap = f64::INFINITY;
        for t in [5.0, 10.0, 20.0, 30.0] {
            let a = mean_infinite_server(t, 9.0, &rates).unwrap();
            let b = mean_infinite_server(t + period, 9.0, &rates).unwrap();
            let gap = (a - b).abs();
            assert!(gap < prev_gap || gap < 1e-12, "gap should shrink, t={t}");
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-10);
    }
}
