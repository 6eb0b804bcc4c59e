//! Windowed statistics, relaxation fits and the feasibility calculator.

mod fit;

pub use fit::{fit_exponential_saturation, fit_translated_logistic, FitKind, FitResult};

use crate::classical::{trapezoid_integral, trapezoid_mean};
use crate::error::{Error, Result};

/// Trapezoidal mean of `y` over `[t0, t0 + T]`.
pub fn windowed_time_average(t: &[f64], y: &[f64], t0: f64, span: f64) -> Result<f64> {
    trapezoid_mean(t, y, t0, t0 + span)
}

/// `[(1/T)∫(y − ȳ)² dt] / |ȳ|` over `[t0, t0 + T]`.
pub fn temporal_fluctuations(t: &[f64], y: &[f64], t0: f64, span: f64) -> Result<f64> {
    let mean = windowed_time_average(t, y, t0, span)?;
    if mean.abs() < f64::MIN_POSITIVE {
        return Err(Error::UndefinedNormalization);
    }
    let var = refined_square_integral(t, y, mean, t0, t0 + span)? / span;
    Ok(var.max(0.0) / mean.abs())
}

/// `∫(y − c)² dt` with `y` linear between samples, integrated exactly per segment.
fn refined_square_integral(t: &[f64], y: &[f64], c: f64, t0: f64, t1: f64) -> Result<f64> {
    // Validates the window the same way as the plain mean.
    trapezoid_integral(t, y, t0, t1)?;
    let lerp = |i: usize, at: f64| {
        let w = (at - t[i]) / (t[i + 1] - t[i]);
        y[i] + w * (y[i + 1] - y[i]) - c
    };
    let mut total = 0.0;
    for i in 0..t.len() - 1 {
        let (a, b) = (t[i].max(t0), t[i + 1].min(t1));
        if b <= a {
            continue;
        }
        let (u, v) = (lerp(i, a), lerp(i, b));
        total += (b - a) * (u * u + u * v + v * v) / 3.0;
    }
    Ok(total)
}

/// Ratios `(δ/Γ_el, Ω/Γ_el)` at g̃ = 1: `δ = 2g√η`, `Ω = 2g/√η`.
///
/// `two_g` is the angular frequency 2g in rad/s, `gamma_el` in 1/s.
pub fn feasibility_ratios(two_g: f64, gamma_el: f64, eta: f64) -> Result<(f64, f64)> {
    if !(two_g > 0.0 && gamma_el > 0.0 && eta > 0.0) {
        return Err(Error::InvalidParameter(
            "feasibility needs positive 2g, Γ_el and η".into(),
        ));
    }
    let r = two_g / gamma_el;
    Ok((r * eta.sqrt(), r / eta.sqrt()))
}

/// Same as [`feasibility_ratios`] with 2g given as an ordinary frequency 2g/(2π) in Hz.
pub fn feasibility_ratios_hz(two_g_hz: f64, gamma_el: f64, eta: f64) -> Result<(f64, f64)> {
    feasibility_ratios(2.0 * std::f64::consts::PI * two_g_hz, gamma_el, eta)
}
