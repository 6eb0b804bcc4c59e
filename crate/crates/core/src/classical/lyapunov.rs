//! Largest Lyapunov exponent via Benettin renormalization of the tangent flow.

use ode_solvers::{OutputType, SVector, System};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dop853, integration_error, Couplings};
use crate::error::{Error, Result};
use crate::model::ClassicalState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSettings {
    pub t_total: f64,
    pub t_transient: f64,
    pub renorm_dt: f64,
    /// Size of the perturbation in flattened (s, β̃) coordinates.
    pub d0: f64,
    pub tol: f64,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        LyapunovSettings {
            t_total: 2000.0,
            t_transient: 100.0,
            renorm_dt: 1.0,
            d0: 1e-8,
            tol: 1e-10,
        }
    }
}

impl LyapunovSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.renorm_dt > 0.0
            && self.t_transient >= 0.0
            && self.t_total > self.t_transient + self.renorm_dt
            && self.d0 > 0.0
            && self.tol > 1e-14
            && self.tol < 1e-3;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Lyapunov settings need 0 ≤ t_transient < t_total − renorm_dt, renorm_dt > 0, d0 > 0: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// Raw estimate; may be slightly negative.
    pub lambda: f64,
    pub transient_discarded: f64,
    pub renorm_interval: f64,
    pub fit_window: (f64, f64),
}

impl LyapunovResult {
    /// λ clipped at zero, for reporting.
    pub fn reported(&self) -> f64 {
        self.lambda.max(0.0)
    }
}

struct Tangent(Couplings);

type State10 = SVector<f64, 10>;

impl System<f64, State10> for Tangent {
    fn system(&self, _t: f64, y: &State10, dy: &mut State10) {
        let c = &self.0;
        let (x, d) = (&y.as_slice()[..5], &y.as_slice()[5..]);
        let mut base = [0.0; 5];
        c.rhs_flat(x, &mut base);
        let (sx, sy, br) = (x[0], x[1], x[3]);
        let k2 = 2.0 * c.kappa;
        let tangent = [
            -k2 * (br * d[1] + sy * d[3]),
            k2 * (br * d[0] + sx * d[3]) - c.omega * d[2],
            c.omega * d[1],
            c.delta * d[4],
            -c.delta * (d[3] + d[2]),
        ];
        dy.as_mut_slice()[..5].copy_from_slice(&base);
        dy.as_mut_slice()[5..].copy_from_slice(&tangent);
    }
}

fn norm(d: &[f64]) -> f64 {
    d.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random unit perturbation tangent to the spin sphere at `x0`.
fn initial_direction(x0: &ClassicalState, seed: u64) -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut d = [0.0; 5];
        for x in d.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let radial: f64 = (0..3).map(|i| d[i] * x0.s[i]).sum();
        for (x, s) in d.iter_mut().zip(x0.s) {
            *x -= radial * s;
        }
        let n = norm(&d);
        if n > 1e-6 {
            d.iter_mut().for_each(|x| *x /= n);
            return d;
        }
    }
}

/// Benettin estimate `λ = Σ log(‖δx‖/d₀) / (t_total − t_transient)`, summing only
/// renormalizations after the transient. The separation is evolved with the linearized
/// flow, so `d₀` only fixes the reference scale.
pub fn lyapunov_exponent(
    x0: &ClassicalState,
    c: &Couplings,
    settings: &LyapunovSettings,
    seed: u64,
) -> Result<LyapunovResult> {
    settings.validate()?;
    let dir = initial_direction(x0, seed);
    let mut y = State10::zeros();
    y.as_mut_slice()[..5].copy_from_slice(&x0.to_array());
    for (k, v) in dir.iter().enumerate() {
        y[5 + k] = settings.d0 * v;
    }

    let n_steps = ((settings.t_total / settings.renorm_dt).round() as usize).max(1);
    let dt = settings.t_total / n_steps as f64;
    let mut log_sum = 0.0;
    let mut counted_from = None;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let mut solver = dop853(Tangent(*c), t, t + dt, dt, y, settings.tol, OutputType::Sparse);
        solver.integrate().map_err(integration_error)?;
        y = *solver.y_out().last().expect("solver stores the final state");

        // Keep the reference orbit on the sphere.
        let s = norm(&y.as_slice()[..3]);
        for i in 0..3 {
            y[i] /= s;
        }
        let d = norm(&y.as_slice()[5..]);
        if !d.is_finite() || d == 0.0 {
            return Err(Error::Integration {
                time: t + dt,
                reason: "tangent vector degenerated".into(),
            });
        }
        if t + 0.5 * dt >= settings.t_transient {
            counted_from.get_or_insert(t);
            log_sum += (d / settings.d0).ln();
        }
        for k in 5..10 {
            y[k] *= settings.d0 / d;
        }
    }
    let t_start = counted_from.unwrap_or(settings.t_total);
    Ok(LyapunovResult {
        lambda: log_sum / (settings.t_total - t_start),
        transient_discarded: t_start,
        renorm_interval: dt,
        fit_window: (t_start, settings.t_total),
    })
}
