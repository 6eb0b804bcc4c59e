//! Relaxation-rate fits by Levenberg–Marquardt with analytic Jacobians.
//!
//! Data are divided by `max|y|` before fitting and amplitudes scaled back afterwards.
//! Positive parameters are fitted through their logarithms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const MIN_SAMPLES: usize = 10;
const MAX_ITER: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    ExponentialSaturation,
    TranslatedLogistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub params: BTreeMap<String, f64>,
    pub gamma_effective: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    pub weighting: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FitResult {
    fn failed(kind: FitKind, why: impl Into<String>) -> Self {
        FitResult {
            kind,
            params: BTreeMap::new(),
            gamma_effective: f64::NAN,
            residual_rms: f64::NAN,
            converged: false,
            iterations: 0,
            weighting: "unweighted".into(),
            diagnostic: Some(why.into()),
        }
    }
}

struct LmOutcome {
    p: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

/// Minimise `½‖r(p)‖²`; `model(p)` returns residuals and the row-major Jacobian.
fn levenberg_marquardt(
    model: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    p0: Vec<f64>,
) -> LmOutcome {
    let out = damped_descent(&model, p0);
    if out.converged {
        polish(&model, out)
    } else {
        out
    }
}

/// Undamped Gauss–Newton steps from a converged point. The cost is flat to second order
/// there, so cost comparisons only place the minimum to ~√ε; the gradient places it to ~ε.
fn polish(model: &impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>), mut out: LmOutcome) -> LmOutcome {
    let k = out.p.len();
    for _ in 0..4 {
        let (r, jac) = model(&out.p);
        let j = DMatrix::from_row_slice(r.len(), k, &jac);
        let grad = j.transpose() * DVector::from_column_slice(&r);
        let Some(step) = (j.transpose() * &j).cholesky().map(|c| c.solve(&(-grad))) else {
            break;
        };
        let size = 1.0 + out.p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(step.amax() < 1e-6 * size) {
            break;
        }
        let trial: Vec<f64> = out.p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let (tr, _) = model(&trial);
        let tcost = 0.5 * tr.iter().map(|x| x * x).sum::<f64>();
        if !(tcost <= out.cost * (1.0 + 1e-12)) {
            break;
        }
        out.p = trial;
        out.cost = tcost;
        if step.amax() < 1e-15 * size {
            break;
        }
    }
    out
}

fn damped_descent(
    model: &impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    p0: Vec<f64>,
) -> LmOutcome {
    let k = p0.len();
    let mut p = p0;
    let (mut r, mut jac) = model(&p);
    let mut cost = 0.5 * r.iter().map(|x| x * x).sum::<f64>();
    let mut lambda = 1e-3;
    for iter in 0..MAX_ITER {
        if !cost.is_finite() {
            return LmOutcome { p, cost, iterations: iter, converged: false };
        }
        let j = DMatrix::from_row_slice(r.len(), k, &jac);
        let rv = DVector::from_column_slice(&r);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &rv;
        if grad.amax() < 1e-15 {
            return LmOutcome { p, cost, iterations: iter, converged: true };
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for d in 0..k {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (tr, tj) = model(&trial);
            let tcost = 0.5 * tr.iter().map(|x| x * x).sum::<f64>();
            if tcost.is_finite() && tcost <= cost {
                let small_step = step.amax() < 1e-13 * (1.0 + p.iter().fold(0.0f64, |m, x| m.max(x.abs())));
                let small_gain = cost - tcost <= 1e-16 * cost.max(1e-300);
                p = trial;
                r = tr;
                jac = tj;
                cost = tcost;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if small_step || small_gain {
                    return LmOutcome { p, cost, iterations: iter + 1, converged: true };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No descent direction left at any damping: a (possibly flat) minimum.
            return LmOutcome { p, cost, iterations: iter + 1, converged: true };
        }
    }
    LmOutcome { p, cost, iterations: MAX_ITER, converged: false }
}

fn check_input(kind: FitKind, t: &[f64], y: &[f64]) -> Result<f64, FitResult> {
    if t.len() != y.len() {
        return Err(FitResult::failed(kind, "t and y lengths differ"));
    }
    if t.len() < MIN_SAMPLES {
        return Err(FitResult::failed(kind, format!("need ≥ {MIN_SAMPLES} samples")));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitResult::failed(kind, "non-finite samples"));
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(FitResult::failed(kind, "series is identically zero"));
    }
    let q = (y.len() / 4).max(1);
    let head = y[..q].iter().sum::<f64>() / q as f64;
    let tail = y[y.len() - q..].iter().sum::<f64>() / q as f64;
    if tail <= head {
        return Err(FitResult::failed(kind, "series does not increase"));
    }
    Ok(scale)
}

/// First time the series reaches `level`, linearly interpolated.
fn first_crossing(t: &[f64], y: &[f64], level: f64) -> Option<f64> {
    (1..t.len()).find_map(|i| {
        (y[i - 1] < level && y[i] >= level).then(|| {
            t[i - 1] + (level - y[i - 1]) / (y[i] - y[i - 1]) * (t[i] - t[i - 1])
        })
    })
}

fn rms(cost: f64, n: usize) -> f64 {
    (2.0 * cost / n as f64).sqrt()
}

/// Unweighted least squares on `A(1 − e^{−γt})` with `A, γ > 0`.
pub fn fit_exponential_saturation(t: &[f64], y: &[f64]) -> FitResult {
    let kind = FitKind::ExponentialSaturation;
    let scale = match check_input(kind, t, y) {
        Ok(s) => s,
        Err(f) => return f,
    };
    let ys: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let a0 = ys.iter().cloned().fold(f64::MIN, f64::max);
    let span = t[t.len() - 1] - t[0];
    let t_half = first_crossing(t, &ys, a0 / 2.0)
        .filter(|&th| th > 0.0)
        .unwrap_or(span / 3.0);
    let model = |p: &[f64]| {
        let (a, g) = (p[0].exp(), p[1].exp());
        let mut r = Vec::with_capacity(t.len());
        let mut jac = Vec::with_capacity(2 * t.len());
        for (&ti, &yi) in t.iter().zip(&ys) {
            let e = (-g * ti).exp();
            r.push(a * (1.0 - e) - yi);
            jac.push(a * (1.0 - e));
            jac.push(a * ti * e * g);
        }
        (r, jac)
    };
    let out = levenberg_marquardt(model, vec![a0.ln(), (1.0 / t_half).ln()]);
    let (a, gamma) = (out.p[0].exp() * scale, out.p[1].exp());
    let residual_rms = rms(out.cost, t.len()) * scale;
    let ok = out.converged && residual_rms.is_finite() && gamma > 0.0 && gamma.is_finite();
    FitResult {
        kind,
        params: BTreeMap::from([("A".into(), a), ("gamma".into(), gamma)]),
        gamma_effective: gamma,
        residual_rms,
        converged: ok,
        iterations: out.iterations,
        weighting: "unweighted".into(),
        diagnostic: (!ok).then(|| "Levenberg–Marquardt did not converge".into()),
    }
}

/// Unweighted least squares on `a/(1 + e^{−c(t − t₀)}) − b` with `a, c > 0` and `t₀` free.
/// `γ_logistic = c + 1/t₀`.
///
/// Pure exponential saturation is the `t₀ → −∞` limit of this family, so the midpoint
/// is not forced positive.
pub fn fit_translated_logistic(t: &[f64], y: &[f64]) -> FitResult {
    let kind = FitKind::TranslatedLogistic;
    let scale = match check_input(kind, t, y) {
        Ok(s) => s,
        Err(f) => return f,
    };
    let ys: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let top = ys.iter().cloned().fold(f64::MIN, f64::max);
    let span = t[t.len() - 1] - t[0];
    let t_mid = first_crossing(t, &ys, top / 2.0)
        .filter(|&x| x > 0.0)
        .unwrap_or(span / 3.0);

    let model = |p: &[f64]| {
        let (a, c, t0, b) = (p[0].exp(), p[1].exp(), p[2], p[3]);
        let mut r = Vec::with_capacity(t.len());
        let mut jac = Vec::with_capacity(4 * t.len());
        for (&ti, &yi) in t.iter().zip(&ys) {
            let e = (-c * (ti - t0)).exp();
            let s = 1.0 / (1.0 + e);
            let ds = s * s * e;
            r.push(a * s - b - yi);
            jac.push(a * s);
            jac.push(a * ds * (ti - t0) * c);
            jac.push(-a * ds * c);
            jac.push(-1.0);
        }
        (r, jac)
    };

    let starts = [(1.0, t_mid), (3.0, t_mid), (10.0, t_mid), (1.0, -span)];
    let mut best: Option<LmOutcome> = None;
    for (c_mult, t0) in starts {
        let c0 = c_mult / t_mid;
        let grow = (c0 * t0).exp();
        // y(∞) = top and y(0) = 0.
        let a0 = top * (1.0 + grow) / grow;
        let b0 = a0 / (1.0 + grow);
        let out = levenberg_marquardt(model, vec![a0.ln(), c0.ln(), t0, b0]);
        if best.as_ref().is_none_or(|b| out.cost < b.cost || (!b.converged && out.converged)) {
            best = Some(out);
        }
    }
    let out = best.expect("at least one start");
    let (a, c, t0, b) = (out.p[0].exp(), out.p[1].exp(), out.p[2], out.p[3]);
    let gamma = c + 1.0 / t0;
    let residual_rms = rms(out.cost, t.len()) * scale;
    let ok = out.converged && residual_rms.is_finite() && gamma.is_finite() && gamma > 0.0;
    FitResult {
        kind,
        params: BTreeMap::from([
            ("a".into(), a * scale),
            ("c".into(), c),
            ("t0".into(), t0),
            ("b".into(), b * scale),
        ]),
        gamma_effective: gamma,
        residual_rms,
        converged: ok,
        iterations: out.iterations,
        weighting: "unweighted".into(),
        diagnostic: (!ok).then(|| "Levenberg–Marquardt did not converge".into()),
    }
}
