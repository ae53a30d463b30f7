//! Fixed-step method-of-steps integrator for delay differential equations
//! with a single constant lag, with cubic Hermite dense output.
//!
//! The grid is aligned to the delay (`dt = delta / steps_per_delay`), so the
//! full-step lagged lookups land exactly on grid nodes and only the RK4
//! midpoint stages read the dense output. Everything is deterministic:
//! identical inputs produce bit-identical trajectories.

use crate::error::{Error, Result};
use crate::model::{
    constant_delay_rhs, moving_average_rhs, ComponentHistory, HistoryFunction, ModelKind,
    ModelParams,
};

/// A delayed system `dy/dt = f(t, y(t), y(t - delta))`.
pub trait DelaySystem {
    fn dim(&self) -> usize;

    /// Writes `f(t, state, delayed)` into `out` (`out.len() == dim()`).
    fn eval(&self, t: f64, state: &[f64], delayed: &[f64], out: &mut [f64]) -> Result<()>;
}

/// The two fluid models as a [`DelaySystem`].
pub struct FluidSystem<'a> {
    pub kind: ModelKind,
    pub params: &'a ModelParams,
}

impl DelaySystem for FluidSystem<'_> {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn eval(&self, t: f64, state: &[f64], delayed: &[f64], out: &mut [f64]) -> Result<()> {
        match self.kind {
            ModelKind::ConstantDelay => {
                let d = constant_delay_rhs(
                    t,
                    [state[0], state[1]],
                    [delayed[0], delayed[1]],
                    self.params,
                )?;
                out.copy_from_slice(&d);
            }
            ModelKind::MovingAverage => {
                let d = moving_average_rhs(
                    t,
                    [state[0], state[1], state[2], state[3]],
                    [delayed[0], delayed[1], delayed[2], delayed[3]],
                    self.params,
                )?;
                out.copy_from_slice(&d);
            }
        }
        Ok(())
    }
}

/// Grid resolution and horizon of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Steps per delay interval; the step is `delta / steps_per_delay`.
    pub steps_per_delay: usize,
    /// Requested end time; rounded up to a whole number of steps.
    pub t_end: f64,
}

impl IntegrationConfig {
    pub const DEFAULT_STEPS_PER_DELAY: usize = 128;

    pub fn new(steps_per_delay: usize, t_end: f64) -> Result<Self> {
        let cfg = Self {
            steps_per_delay,
            t_end,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_delay < 16 {
            return Err(Error::InvalidParameter(format!(
                "steps_per_delay must be >= 16, got {}",
                self.steps_per_delay
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Solution on a uniform grid plus the per-node derivatives that define the
/// cubic Hermite dense output. The initial history is retained so the
/// trajectory can be sampled on `[-delta, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    dt: f64,
    delta: f64,
    steps_per_delay: usize,
    /// Node states, row-major `(steps + 1) x dim`.
    states: Vec<f64>,
    /// Node derivatives, same layout.
    derivs: Vec<f64>,
    history: HistoryFunction,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn steps_per_delay(&self) -> usize {
        self.steps_per_delay
    }

    /// Number of grid nodes (steps + 1).
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Time of grid node `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// State at grid node `k`.
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    /// Derivative at grid node `k`.
    pub fn deriv(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.dim..(k + 1) * self.dim]
    }

    /// State on the history segment `t <= 0` (moving-average components are
    /// the derived initial averages, held constant backwards).
    pub fn history_state(&self, t: f64) -> Vec<f64> {
        (0..self.dim).map(|i| self.history.eval(i, t)).collect()
    }

    /// Dense evaluation at any `t` in `[-delta, t_end]`; exact at grid nodes.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let fuzz = 1e-9 * self.dt;
        if t < -self.delta - fuzz || t > self.t_end() + fuzz {
            return Err(Error::OutOfRange {
                t,
                lo: -self.delta,
                hi: self.t_end(),
            });
        }
        if t <= 0.0 {
            return Ok(self.history_state(t));
        }
        let u = t / self.dt;
        let nearest = u.round();
        // snap to the node so grid times reproduce stored states exactly
        if (u - nearest).abs() < 1e-9 {
            let k = (nearest as usize).min(self.len() - 1);
            return Ok(self.state(k).to_vec());
        }
        // keep the Hermite stencil in range for t within the fuzz of t_end
        let k = (u.floor() as usize).min(self.len() - 2);
        let theta = u - k as f64;
        let mut out = vec![0.0; self.dim];
        hermite(
            self.state(k),
            self.deriv(k),
            self.state(k + 1),
            self.deriv(k + 1),
            self.dt,
            theta,
            &mut out,
        );
        Ok(out)
    }

    fn interior(&self, k: usize, theta: f64, out: &mut [f64]) {
        if theta == 0.0 {
            out.copy_from_slice(self.state(k));
        } else {
            hermite(
                self.state(k),
                self.deriv(k),
                self.state(k + 1),
                self.deriv(k + 1),
                self.dt,
                theta,
                out,
            );
        }
    }
}

/// Cubic Hermite basis evaluation on one step of width `h`.
fn hermite(y0: &[f64], d0: &[f64], y1: &[f64], d1: &[f64], h: f64, theta: f64, out: &mut [f64]) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    for i in 0..out.len() {
        out[i] = h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i];
    }
}

/// Integrates one of the two fluid models.
///
/// `history` carries the two queue components on `[-delta, 0]`. For the
/// moving-average model the initial averages `m_i(0)` are derived from the
/// history by exact quadrature of `(1/delta) ∫ phi_i`, keeping the averaged
/// state consistent with its defining integral from `t = 0` on.
pub fn integrate(
    kind: ModelKind,
    p: &ModelParams,
    history: &HistoryFunction,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    p.validate()?;
    if history.components() != kind.queues() {
        return Err(Error::InvalidParameter(format!(
            "history has {} components, expected one per queue ({})",
            history.components(),
            kind.queues()
        )));
    }
    let mut full = history.clone();
    if kind == ModelKind::MovingAverage {
        for i in 0..kind.queues() {
            let m0 = history.mean_over(i, -p.delta, 0.0);
            full.push(ComponentHistory::Constant(m0));
        }
    }
    let system = FluidSystem { kind, params: p };
    integrate_system(&system, p.delta, &full, cfg)
}

/// Integrates an arbitrary [`DelaySystem`] with lag `delta`; `history` must
/// provide every state component on `[-delta, 0]`.
pub fn integrate_system<S: DelaySystem>(
    system: &S,
    delta: f64,
    history: &HistoryFunction,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let dim = system.dim();
    if history.components() != dim {
        return Err(Error::InvalidParameter(format!(
            "history has {} components, system has dimension {dim}",
            history.components()
        )));
    }
    let n = cfg.steps_per_delay;
    let dt = delta / n as f64;
    let steps = ((cfg.t_end / dt - 1e-9).ceil() as usize).max(1);

    let mut traj = Trajectory {
        dim,
        dt,
        delta,
        steps_per_delay: n,
        states: Vec::with_capacity((steps + 1) * dim),
        derivs: Vec::with_capacity((steps + 1) * dim),
        history: history.clone(),
    };
    for i in 0..dim {
        traj.states.push(history.eval(i, 0.0));
    }

    // Lagged state at time (j + theta) * dt. During step k the lag indices
    // are j = k - n (theta 0 and 1/2) and j = k + 1 - n, all of which point
    // at history (j + theta <= 0) or at already-computed nodes since n >= 16.
    let lag = |traj: &Trajectory, j: isize, theta: f64, out: &mut [f64]| {
        if (j as f64 + theta) * dt <= 0.0 {
            let t = (j as f64 + theta) * dt;
            for (i, o) in out.iter_mut().enumerate() {
                *o = traj.history.eval(i, t);
            }
        } else {
            traj.interior(j as usize, theta, out);
        }
    };

    let mut lagged = vec![0.0; dim];
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    for k in 0..steps {
        let t = k as f64 * dt;
        let j = k as isize - n as isize;
        let blow_up = |_| Error::BlowUp { t };

        let y: Vec<f64> = traj.state(k).to_vec();

        lag(&traj, j, 0.0, &mut lagged);
        system.eval(t, &y, &lagged, &mut k1).map_err(blow_up)?;
        traj.derivs.extend_from_slice(&k1);

        lag(&traj, j, 0.5, &mut lagged);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        system
            .eval(t + 0.5 * dt, &stage, &lagged, &mut k2)
            .map_err(blow_up)?;

        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        system
            .eval(t + 0.5 * dt, &stage, &lagged, &mut k3)
            .map_err(blow_up)?;

        lag(&traj, j + 1, 0.0, &mut lagged);
        for i in 0..dim {
            stage[i] = y[i] + dt * k3[i];
        }
        system
            .eval(t + dt, &stage, &lagged, &mut k4)
            .map_err(blow_up)?;

        let t_next = (k + 1) as f64 * dt;
        for i in 0..dim {
            let next = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !next.is_finite() {
                return Err(Error::BlowUp { t: t_next });
            }
            traj.states.push(next);
        }
    }

    // derivative at the final node completes the dense output
    let t = steps as f64 * dt;
    lag(&traj, steps as isize - n as isize, 0.0, &mut lagged);
    let y: Vec<f64> = traj.state(steps).to_vec();
    system
        .eval(t, &y, &lagged, &mut k1)
        .map_err(|_| Error::BlowUp { t })?;
    traj.derivs.extend_from_slice(&k1);

    Ok(traj)
}
