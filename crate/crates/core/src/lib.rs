//! Numerical laboratory for two-queue fluid models with delayed information
//! and time-varying (sinusoidal) arrival rates.
//!
//! Two models are implemented. In the constant-delay model customers join one
//! of two parallel queues according to a multinomial-logit choice on queue
//! lengths observed `delta` time units in the past. In the moving-average
//! model the choice is driven by the running average of each queue length
//! over the trailing window of width `delta`, which turns the system into a
//! four-dimensional delay differential equation.
//!
//! The crate provides:
//!
//! - [`model`] — parameters, arrival rate, choice fractions, and the
//!   right-hand sides of both models;
//! - [`dde`] — a fixed-step method-of-steps integrator (classic RK4 with
//!   cubic Hermite dense output) for systems with one constant lag;
//! - [`analytics`] — closed-form and quadrature evaluation of the
//!   time-varying infinite-server mean, which the symmetric equilibrium
//!   of both models tracks;
//! - [`stability`] — critical delays, Hopf frequencies, slow-flow matrices,
//!   Routh–Hurwitz coefficients, and the resonance-modified thresholds that
//!   apply when the arrival-rate frequency is twice the Hopf frequency;
//! - [`classify`] / [`scan`] — envelope-based trajectory classification and
//!   empirical threshold location by bisection over the delay;
//! - [`scenario`] — TOML scenario configs, CSV/JSON emission, and the
//!   one-shot `run_scenario` driver used by the CLI and the Python bindings.

pub mod analytics;
pub mod classify;
pub mod dde;
pub mod error;
pub mod model;
pub mod scan;
pub mod scenario;
pub mod stability;

pub use error::{Error, Result};
pub use model::{HistoryFunction, ModelKind, ModelParams};
