//! Python bindings: the stability formulas, the DDE integrator, the
//! trajectory classifier, and the threshold scan, driven in-process.
//!
//! ```python
//! import delayq
//! p = delayq.Params(lam=3.0, mu=1.0, delta=1.947, alpha=1.0, epsilon=0.2,
//!                   gamma=2.2360679774997896)
//! traj = delayq.integrate("constant-delay", p, history=(1.0, 2.0))
//! print(delayq.classify(traj, p)["verdict"])
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};

use delayq_core::classify::{classify_trajectory, default_horizon, ClassifySettings};
use delayq_core::dde::{integrate as core_integrate, IntegrationConfig, Trajectory as CoreTrajectory};
use delayq_core::error::Error;
use delayq_core::model::{
    choice_fraction as core_choice_fraction, HistoryFunction, ModelKind, ModelParams,
};
use delayq_core::scan::{empirical_threshold_scan, ScanSettings};
use delayq_core::scenario::trajectory_csv;
use delayq_core::stability;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::InvalidConfig(_) | Error::NonFinite(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_kind(kind: &str) -> PyResult<ModelKind> {
    kind.parse::<ModelKind>().map_err(to_py_err)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

/// Model parameters: arrival rate `lam (1 + alpha epsilon sin(gamma t))`,
/// service rate `mu`, information delay / averaging window `delta`.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Params {
    inner: ModelParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (lam, mu, delta, alpha = 0.0, epsilon = 0.0, gamma = 0.0))]
    fn new(lam: f64, mu: f64, delta: f64, alpha: f64, epsilon: f64, gamma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ModelParams::new(lam, mu, alpha, epsilon, gamma, delta).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    /// Arrival rate at time `t`.
    fn arrival_rate(&self, t: f64) -> f64 {
        self.inner.arrival_rate(t)
    }

    /// Unforced symmetric equilibrium of each queue, `lam / (2 mu)`.
    fn equilibrium_per_queue(&self) -> f64 {
        self.inner.equilibrium_per_queue()
    }

    /// Copy with a different delay.
    fn with_delta(&self, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_delta(delta).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(lam={}, mu={}, delta={}, alpha={}, epsilon={}, gamma={})",
            p.lambda, p.mu, p.delta, p.alpha, p.epsilon, p.gamma
        )
    }
}

/// An integrated trajectory on a uniform grid with dense output.
#[pyclass(frozen)]
struct Trajectory {
    inner: CoreTrajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end()
    }

    /// Grid times `0, dt, ..., t_end`.
    fn times(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|k| self.inner.time(k)).collect()
    }

    /// Grid states, one row per time.
    fn states(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len())
            .map(|k| self.inner.state(k).to_vec())
            .collect()
    }

    /// Dense evaluation anywhere in `[-delta, t_end]`.
    fn sample(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.sample(t).map_err(to_py_err)
    }

    /// CSV rendering (history segment included), as written by the CLI.
    fn csv(&self) -> String {
        trajectory_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Integrates one of the two models; `history` holds the constant
/// per-queue values on `[-delta, 0]`.
#[pyfunction]
#[pyo3(signature = (kind, params, history, steps_per_delay = 128, t_end = None))]
fn integrate(
    kind: &str,
    params: &Params,
    history: (f64, f64),
    steps_per_delay: usize,
    t_end: Option<f64>,
) -> PyResult<Trajectory> {
    let kind = parse_kind(kind)?;
    let h = HistoryFunction::constant(&[history.0, history.1]).map_err(to_py_err)?;
    let t_end = t_end.unwrap_or_else(|| default_horizon(kind, &params.inner));
    let cfg = IntegrationConfig::new(steps_per_delay, t_end).map_err(to_py_err)?;
    Ok(Trajectory {
        inner: core_integrate(kind, &params.inner, &h, &cfg).map_err(to_py_err)?,
    })
}

/// Envelope classification of a trajectory; returns a dict with `verdict`,
/// `envelope_ratio`, `extrema_count`, `final_amplitude`.
#[pyfunction]
#[pyo3(signature = (trajectory, params, burn_in = 0.5))]
fn classify<'py>(
    py: Python<'py>,
    trajectory: &Trajectory,
    params: &Params,
    burn_in: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let settings = ClassifySettings {
        burn_in,
        ..Default::default()
    };
    let c = classify_trajectory(&trajectory.inner, &params.inner, &settings).map_err(to_py_err)?;
    serialize_to_py(py, &c)
}

/// Full stability report as a dict (thresholds, resonance flag,
/// Routh–Hurwitz coefficients, and for the moving-average model the
/// conflicting slow-flow placement of the threshold).
#[pyfunction]
fn stability_report<'py>(py: Python<'py>, kind: &str, params: &Params) -> PyResult<Bound<'py, PyAny>> {
    let report = stability::stability_report(parse_kind(kind)?, &params.inner).map_err(to_py_err)?;
    serialize_to_py(py, &report)
}

/// Bisects the delay between a converging `lo` and an oscillating `hi`;
/// returns a dict with the threshold, final bracket, and probe log.
#[pyfunction]
#[pyo3(signature = (kind, params, history, lo, hi, tol = 1e-3, steps_per_delay = 128))]
#[allow(clippy::too_many_arguments)]
fn scan_threshold<'py>(
    py: Python<'py>,
    kind: &str,
    params: &Params,
    history: (f64, f64),
    lo: f64,
    hi: f64,
    tol: f64,
    steps_per_delay: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = parse_kind(kind)?;
    let h = HistoryFunction::constant(&[history.0, history.1]).map_err(to_py_err)?;
    let settings = ScanSettings {
        tol,
        steps_per_delay,
        ..Default::default()
    };
    let outcome =
        empirical_threshold_scan(kind, &params.inner, &h, lo, hi, &settings).map_err(to_py_err)?;
    serialize_to_py(py, &outcome)
}

/// Multinomial-logit join fractions for observed levels `(x1, x2)`.
#[pyfunction]
fn choice_fraction(x1: f64, x2: f64) -> PyResult<(f64, f64)> {
    core_choice_fraction(x1, x2).map_err(to_py_err)
}

/// Default classification horizon for a parameter set.
#[pyfunction]
fn horizon(kind: &str, params: &Params) -> PyResult<f64> {
    Ok(default_horizon(parse_kind(kind)?, &params.inner))
}

/// Mean of the time-varying infinite-server queue under the parameter
/// set's sinusoidal rate, starting from mean `q0`.
#[pyfunction]
fn mean_infinite_server(t: f64, q0: f64, params: &Params) -> PyResult<f64> {
    let rates = delayq_core::analytics::RateFunction::from_params(&params.inner);
    delayq_core::analytics::mean_infinite_server(t, q0, &rates).map_err(to_py_err)
}

macro_rules! wrap_f64_fns {
    ($($(#[$doc:meta])* fn $name:ident($($arg:ident: f64),+) => $path:path;)+) => {
        $(
            $(#[$doc])*
            #[pyfunction]
            fn $name($($arg: f64),+) -> PyResult<f64> {
                $path($($arg),+).map_err(to_py_err)
            }
        )+
    };
}

wrap_f64_fns! {
    /// Hopf frequency of the constant-delay model.
    fn omega_cr_constant(lam: f64, mu: f64) => stability::omega_cr_constant;
    /// Critical delay of the constant-delay model.
    fn delta_cr_constant(lam: f64, mu: f64) => stability::delta_cr_constant;
    /// Signed resonant detuning threshold of the constant-delay model.
    fn delta1_threshold_constant(lam: f64, mu: f64, alpha: f64) => stability::delta1_threshold_constant;
    /// Resonance-modified critical delay of the constant-delay model.
    fn delta_mod_constant(lam: f64, mu: f64, alpha: f64, epsilon: f64) => stability::delta_mod_constant;
    /// Hopf frequency of the moving-average model at window `delta`.
    fn omega_ma(lam: f64, mu: f64, delta: f64) => stability::omega_ma;
    /// Critical averaging window of the moving-average model.
    fn delta_cr_ma(lam: f64, mu: f64) => stability::delta_cr_ma;
    /// Integration-validated detuning threshold of the moving-average model.
    fn delta1_threshold_ma(lam: f64, mu: f64, alpha: f64) => stability::delta1_threshold_ma;
    /// Slow-flow (analytical) placement of the same threshold.
    fn delta1_threshold_ma_slow_flow(lam: f64, mu: f64, alpha: f64) => stability::delta1_threshold_ma_slow_flow;
    /// Validated modified critical window of the moving-average model.
    fn delta_mod_ma(lam: f64, mu: f64, alpha: f64, epsilon: f64) => stability::delta_mod_ma;
    /// Slow-flow placement of the modified critical window.
    fn delta_mod_ma_slow_flow(lam: f64, mu: f64, alpha: f64, epsilon: f64) => stability::delta_mod_ma_slow_flow;
}

#[pymodule]
fn delayq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(stability_report, m)?)?;
    m.add_function(wrap_pyfunction!(scan_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(choice_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(horizon, m)?)?;
    m.add_function(wrap_pyfunction!(mean_infinite_server, m)?)?;
    m.add_function(wrap_pyfunction!(omega_cr_constant, m)?)?;
    m.add_function(wrap_pyfunction!(delta_cr_constant, m)?)?;
    m.add_function(wrap_pyfunction!(delta1_threshold_constant, m)?)?;
    m.add_function(wrap_pyfunction!(delta_mod_constant, m)?)?;
    m.add_function(wrap_pyfunction!(omega_ma, m)?)?;
    m.add_function(wrap_pyfunction!(delta_cr_ma, m)?)?;
    m.add_function(wrap_pyfunction!(delta1_threshold_ma, m)?)?;
    m.add_function(wrap_pyfunction!(delta1_threshold_ma_slow_flow, m)?)?;
    m.add_function(wrap_pyfunction!(delta_mod_ma, m)?)?;
    m.add_function(wrap_pyfunction!(delta_mod_ma_slow_flow, m)?)?;
    Ok(())
}
