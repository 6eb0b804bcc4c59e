//! Mean-field dynamics after a transverse-field quench.
//!
//! With `κ = Ω g̃²/2 = 2g²/δ` the equations of motion read
//!
//! ```text
//! β̃'  = −iδ(β̃ + s_z)
//! s_x' = −2κ Re(β̃) s_y
//! s_y' =  2κ Re(β̃) s_x − Ω s_z
//! s_z' =  Ω s_y
//! ```
//!
//! and conserve the per-spin energy `e = (κ/2)(2 Re(β̃) s_z + |β̃|²) + Ω s_x/2`.

mod lyapunov;

pub use lyapunov::{lyapunov_exponent, LyapunovResult, LyapunovSettings};

use num_complex::Complex64;
use ode_solvers::{dop_shared::IntegrationError, Dop853, OutputType, SVector, System};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassicalState, DimensionlessView, ModelParams};

/// Default relative tolerance of the mean-field integrator.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default trapped/untrapped threshold on |S̄_z| (in units of N/2).
pub const DEFAULT_TRAP_THRESHOLD: f64 = 0.1;

const MAX_STEPS: u32 = u32::MAX;

/// Couplings entering the mean-field equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub delta: f64,
    pub omega: f64,
    /// Ω g̃²/2, equivalently 2g²/δ.
    pub kappa: f64,
}

impl Couplings {
    pub fn from_view(v: &DimensionlessView, omega: f64) -> Self {
        Couplings {
            delta: v.eta * omega,
            omega,
            kappa: omega * v.g_tilde * v.g_tilde / 2.0,
        }
    }

    /// Couplings in units g = 1. For g̃ = 0 (no coupling scale) Ω = 1 is used instead.
    pub fn from_dimensionless(v: &DimensionlessView) -> Self {
        let omega = if v.g_tilde > 0.0 {
            v.omega_unit_g()
        } else {
            1.0
        };
        Self::from_view(v, omega)
    }

    /// Works at Ω = 0 where the dimensionless view is undefined.
    pub fn from_params(p: &ModelParams) -> Self {
        Couplings {
            delta: p.delta,
            omega: p.omega,
            kappa: 2.0 * p.g * p.g / p.delta,
        }
    }

    pub fn view(&self) -> Option<DimensionlessView> {
        if self.omega > 0.0 {
            DimensionlessView::new((2.0 * self.kappa / self.omega).sqrt(), self.delta / self.omega)
                .ok()
        } else {
            None
        }
    }

    fn rhs_flat(&self, x: &[f64], dx: &mut [f64]) {
        let (sx, sy, sz, br, bi) = (x[0], x[1], x[2], x[3], x[4]);
        let drive = 2.0 * self.kappa * br;
        dx[0] = -drive * sy;
        dx[1] = drive * sx - self.omega * sz;
        dx[2] = self.omega * sy;
        dx[3] = self.delta * bi;
        dx[4] = -self.delta * (br + sz);
    }
}

/// Time derivative of a [`ClassicalState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub ds: [f64; 3],
    pub dbeta: Complex64,
}

pub fn eom_rhs(state: &ClassicalState, v: &DimensionlessView, omega: f64) -> Derivative {
    rhs(state, &Couplings::from_view(v, omega))
}

pub fn rhs(state: &ClassicalState, c: &Couplings) -> Derivative {
    let mut d = [0.0; 5];
    c.rhs_flat(&state.to_array(), &mut d);
    Derivative {
        ds: [d[0], d[1], d[2]],
        dbeta: Complex64::new(d[3], d[4]),
    }
}

/// Mean-field energy per spin, E/N.
pub fn classical_energy(state: &ClassicalState, c: &Couplings) -> f64 {
    let beta = state.beta;
    0.5 * c.kappa * (2.0 * beta.re * state.s[2] + beta.norm_sqr()) + 0.5 * c.omega * state.s[0]
}

pub(crate) struct MeanField(pub Couplings);

type State5 = SVector<f64, 5>;

impl System<f64, State5> for MeanField {
    fn system(&self, _t: f64, y: &State5, dy: &mut State5) {
        self.0.rhs_flat(y.as_slice(), dy.as_mut_slice());
    }
}

pub(crate) fn integration_error(e: IntegrationError) -> Error {
    match e {
        IntegrationError::StepSizeUnderflow { x } => Error::Integration {
            time: x,
            reason: "step-size underflow".into(),
        },
        IntegrationError::MaxNumStepReached { x, n_step } => Error::Integration {
            time: x,
            reason: format!("step limit {n_step} reached"),
        },
        IntegrationError::StiffnessDetected { x } => Error::Integration {
            time: x,
            reason: "stiffness detected".into(),
        },
    }
}

/// Build a DOP853 stepper with our defaults.
pub(crate) fn dop853<const D: usize, F: System<f64, SVector<f64, D>>>(
    f: F,
    t0: f64,
    t1: f64,
    dx: f64,
    y0: SVector<f64, D>,
    tol: f64,
    out: OutputType,
) -> Dop853<f64, SVector<f64, D>, F> {
    Dop853::from_param(
        f,
        t0,
        t1,
        dx,
        y0,
        tol,
        tol * 1e-2,
        0.9,
        0.0,
        0.333,
        6.0,
        t1 - t0,
        0.0,
        MAX_STEPS,
        // Oscillatory, non-stiff problem: keep the stiffness heuristic out of the way.
        u32::MAX,
        out,
    )
}

/// Final state only; used by time-reversal checks and the Lyapunov engine.
pub fn advance(x0: &ClassicalState, c: &Couplings, dt: f64, tol: f64) -> Result<ClassicalState> {
    if dt == 0.0 {
        return Ok(*x0);
    }
    let y0 = State5::from_column_slice(&x0.to_array());
    let mut solver = dop853(MeanField(*c), 0.0, dt, dt, y0, tol, OutputType::Sparse);
    solver.integrate().map_err(integration_error)?;
    let y = solver.y_out().last().expect("solver stores the final state");
    Ok(ClassicalState::from_array(y.as_slice()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub rtol: f64,
    pub atol: f64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub evaluations: u64,
    /// max_t |e(t) − e(0)| / max(|e(0)|, tiny)
    pub max_energy_drift: f64,
    /// max_t ||s(t)| − 1|
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ClassicalState>,
    pub couplings: Couplings,
    pub view: Option<DimensionlessView>,
    pub integrator_meta: IntegratorMeta,
}

impl Trajectory {
    pub fn sz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.s[2]).collect()
    }

    pub fn x(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.beta.re).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| classical_energy(s, &self.couplings))
            .collect()
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Integrate the mean-field equations to `t_final` with DOP853 (order 8, embedded 5/3
/// error estimators), sampling the dense output every `sample_dt`.
pub fn integrate(
    x0: &ClassicalState,
    c: &Couplings,
    t_final: f64,
    tol: f64,
    sample_dt: f64,
) -> Result<Trajectory> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final = {t_final} must be > 0")));
    }
    if !(tol > 1e-14 && tol < 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside (1e-14, 1e-3)"
        )));
    }
    if !(sample_dt > 0.0 && sample_dt <= t_final) {
        return Err(Error::InvalidParameter(format!(
            "sample_dt = {sample_dt} must lie in (0, t_final]"
        )));
    }
    let y0 = State5::from_column_slice(&x0.to_array());
    // The stepper's dense output extrapolates a sample that lands on its end point from
    // an earlier step, so the horizon is pushed off the sample grid and the exact final
    // state is reached with a separate step.
    let horizon = t_final + 0.5 * sample_dt;
    let mut solver = dop853(MeanField(*c), 0.0, horizon, sample_dt, y0, tol, OutputType::Dense);
    let mut stats = solver.integrate().map_err(integration_error)?;

    let end_slack = 1e-12 * t_final.max(1.0);
    let mut times = Vec::with_capacity(solver.x_out().len() + 1);
    let mut states = Vec::with_capacity(solver.x_out().len() + 1);
    for (&t, y) in solver.x_out().iter().zip(solver.y_out()) {
        if t > t_final + end_slack || times.last().is_some_and(|&last: &f64| t <= last) {
            continue;
        }
        times.push(t);
        states.push(ClassicalState::from_array(y.as_slice()));
    }
    let last_t = *times.last().expect("dense output starts at t = 0");
    if last_t < t_final - end_slack {
        let from = State5::from_column_slice(&states.last().expect("non-empty").to_array());
        let gap = t_final - last_t;
        let mut tail = dop853(MeanField(*c), 0.0, gap, gap, from, tol, OutputType::Sparse);
        let tail_stats = tail.integrate().map_err(integration_error)?;
        stats.accepted_steps += tail_stats.accepted_steps;
        stats.rejected_steps += tail_stats.rejected_steps;
        stats.num_eval += tail_stats.num_eval;
        let y = tail.y_out().last().expect("solver stores the final state");
        times.push(t_final);
        states.push(ClassicalState::from_array(y.as_slice()));
    }

    let e0 = classical_energy(x0, c);
    let scale = e0.abs().max(1e-300);
    let mut max_energy_drift = 0.0f64;
    let mut max_norm_drift = 0.0f64;
    for s in &states {
        max_energy_drift = max_energy_drift.max((classical_energy(s, c) - e0).abs() / scale);
        max_norm_drift = max_norm_drift.max((s.spin_norm() - 1.0).abs());
    }

    Ok(Trajectory {
        times,
        states,
        couplings: *c,
        view: c.view(),
        integrator_meta: IntegratorMeta {
            method: "DOP853".into(),
            rtol: tol,
            atol: tol * 1e-2,
            accepted_steps: stats.accepted_steps as u64,
            rejected_steps: stats.rejected_steps as u64,
            evaluations: stats.num_eval as u64,
            max_energy_drift,
            max_norm_drift,
        },
    })
}

/// Apply the time-reversal map of the mean-field flow: `s_y → −s_y`, `β̃ → β̃*`.
pub fn time_reversed(state: &ClassicalState) -> ClassicalState {
    ClassicalState {
        s: [state.s[0], -state.s[1], state.s[2]],
        beta: state.beta.conj(),
    }
}

/// Trapezoidal mean of `y(t)` over `[t0, t1]`, interpolating linearly at the window edges.
pub(crate) fn trapezoid_mean(t: &[f64], y: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let integral = trapezoid_integral(t, y, t0, t1)?;
    Ok(integral / (t1 - t0))
}

pub(crate) fn trapezoid_integral(t: &[f64], y: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let empty = Error::EmptyWindow { t0, t1 };
    if t.len() != y.len() || t.len() < 2 || !(t1 > t0) {
        return Err(empty);
    }
    let tol = 1e-9 * (t[t.len() - 1] - t[0]).abs().max(1.0);
    if t0 < t[0] - tol || t1 > t[t.len() - 1] + tol {
        return Err(empty);
    }
    let lerp = |i: usize, at: f64| -> f64 {
        let w = (at - t[i]) / (t[i + 1] - t[i]);
        y[i] + w * (y[i + 1] - y[i])
    };
    let mut total = 0.0;
    for i in 0..t.len() - 1 {
        let (a, b) = (t[i].max(t0), t[i + 1].min(t1));
        if b <= a {
            continue;
        }
        let (ya, yb) = (lerp(i, a), lerp(i, b));
        total += 0.5 * (ya + yb) * (b - a);
    }
    Ok(total)
}

/// Trapezoidal time averages `(S̄_z, X̄)` of `s_z` and `Re β̃` over `window`.
pub fn order_parameters(traj: &Trajectory, window: (f64, f64)) -> Result<(f64, f64)> {
    let sz = trapezoid_mean(&traj.times, &traj.sz(), window.0, window.1)?;
    let x = trapezoid_mean(&traj.times, &traj.x(), window.0, window.1)?;
    Ok((sz, x))
}

/// Default averaging window: the second half of the run.
pub fn default_window(traj: &Trajectory) -> (f64, f64) {
    let t = traj.t_final();
    (t / 2.0, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Trapped,
    Untrapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub label: Phase,
    pub order_parameter_sz: f64,
    pub order_parameter_x: f64,
    /// |S̄_z| / max|s_z| over the window.
    pub confidence: f64,
}

pub fn classify_phase(traj: &Trajectory, window: (f64, f64), threshold: f64) -> Result<PhaseLabel> {
    let (sz_bar, x_bar) = order_parameters(traj, window)?;
    let peak = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(_, s)| s.s[2].abs())
        .fold(0.0f64, f64::max);
    Ok(label_from_order_parameters(sz_bar, x_bar, peak, threshold))
}

pub(crate) fn label_from_order_parameters(
    sz_bar: f64,
    x_bar: f64,
    peak: f64,
    threshold: f64,
) -> PhaseLabel {
    let label = if sz_bar.abs() > threshold {
        Phase::Trapped
    } else {
        Phase::Untrapped
    };
    PhaseLabel {
        label,
        order_parameter_sz: sz_bar,
        order_parameter_x: x_bar,
        confidence: if peak > 0.0 { sz_bar.abs() / peak } else { 0.0 },
    }
}
