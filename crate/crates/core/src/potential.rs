//! Particle-in-a-potential reduction of the mean-field dynamics.
//!
//! For a fast boson (η ≫ 1) the spin moves in `V(s_z)`; for a fast spin (η ≪ 1) the
//! boson quadrature moves in `V(β̃_R)`. The particle starts at rest at `ξ₀` with zero
//! mechanical energy and stays trapped when the barrier between `ξ₀` and its mirror
//! image `−ξ₀` rises above zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DimensionlessView, InitialCondition, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SpinDominated,
    BosonDominated,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spin" | "spin_dominated" => Ok(Regime::SpinDominated),
            "boson" | "boson_dominated" => Ok(Regime::BosonDominated),
            _ => Err(Error::InvalidParameter(format!(
                "unknown regime {s:?} (expected spin or boson)"
            ))),
        }
    }
}

/// `V(s_z) = (Ω²/2)·{[(g̃²/2)(s_z² − cos²θ₀) + sin θ₀]² + s_z² − 1}`.
pub fn spin_potential(sz: f64, g_tilde: f64, theta0: f64, omega: f64) -> f64 {
    let (sin, cos) = theta0.sin_cos();
    let bracket = 0.5 * g_tilde * g_tilde * (sz * sz - cos * cos) + sin;
    0.5 * omega * omega * (bracket * bracket + sz * sz - 1.0)
}

/// `V(β̃_R) = δ²·(β̃_R²/2 − β₀√(1+g̃⁴β̃_R²)/√(1+g̃⁴β₀²) + β₀ − β₀²/2)`, spins initially down.
pub fn boson_potential(x: f64, g_tilde: f64, beta0: f64, delta: f64) -> f64 {
    let g4 = g_tilde.powi(4);
    delta
        * delta
        * (0.5 * x * x - beta0 * (1.0 + g4 * x * x).sqrt() / (1.0 + g4 * beta0 * beta0).sqrt()
            + beta0
            - 0.5 * beta0 * beta0)
}

/// Boson potential for a spin tipped by θ₀ towards +x.
///
/// The fast spin keeps its projection on the instantaneous field `(1, 0, g̃²β̃_R)`, which
/// gives `V = δ²[x²/2 − (K/g̃²)√(1+g̃⁴x²)] + const` with
/// `K = (g̃²β₀cos θ₀ − sin θ₀)/√(1+g̃⁴β₀²)`, and the constant fixes `V(β₀) = 0`.
/// Reduces to [`boson_potential`] at θ₀ = 0.
pub fn boson_potential_tilted(x: f64, g_tilde: f64, theta0: f64, beta0: f64, delta: f64) -> f64 {
    let g2 = g_tilde * g_tilde;
    let g4 = g2 * g2;
    let (sin, cos) = theta0.sin_cos();
    let root0 = (1.0 + g4 * beta0 * beta0).sqrt();
    let k_over_g2 = (beta0 * cos - sin / g2) / root0;
    let v = |y: f64| 0.5 * y * y - k_over_g2 * (1.0 + g4 * y * y).sqrt();
    delta * delta * (v(x) - v(beta0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCurve {
    pub regime: Regime,
    pub g_tilde: f64,
    pub theta0: f64,
    /// β₀ for the boson regime.
    pub beta0: Option<f64>,
    /// Ω (spin regime) or δ (boson regime).
    pub scale: f64,
    pub xi_initial: f64,
    pub coordinate_grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn regime_potential(regime: Regime, g_tilde: f64, theta0: f64, beta0: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |xi| match regime {
        Regime::SpinDominated => spin_potential(xi, g_tilde, theta0, scale),
        Regime::BosonDominated => boson_potential_tilted(xi, g_tilde, theta0, beta0, scale),
    }
}

fn xi_initial(regime: Regime, theta0: f64, beta0: f64) -> f64 {
    match regime {
        Regime::SpinDominated => -theta0.cos(),
        Regime::BosonDominated => beta0,
    }
}

/// Sample the regime's potential on `points` equally spaced ξ. The grid spans
/// `[−1, 1]` for the spin and `[−1.5|β₀|, 1.5|β₀|]` (at least ±1) for the boson.
pub fn potential_curve(
    regime: Regime,
    g_tilde: f64,
    ic: &InitialCondition,
    scale: f64,
    points: usize,
) -> Result<PotentialCurve> {
    if points < 2 {
        return Err(Error::InvalidParameter("need at least 2 grid points".into()));
    }
    let beta0 = match regime {
        Regime::SpinDominated => None,
        Regime::BosonDominated => Some(ic.beta0(None)?),
    };
    let b0 = beta0.unwrap_or(0.0);
    let half = match regime {
        Regime::SpinDominated => 1.0,
        Regime::BosonDominated => (1.5 * b0.abs()).max(1.0),
    };
    let v = regime_potential(regime, g_tilde, ic.theta0, b0, scale);
    let grid: Vec<f64> = (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect();
    let values = grid.iter().map(|&x| v(x)).collect();
    Ok(PotentialCurve {
        regime,
        g_tilde,
        theta0: ic.theta0,
        beta0,
        scale,
        xi_initial: xi_initial(regime, ic.theta0, b0),
        coordinate_grid: grid,
        values,
    })
}

/// `g̃ˢ = √2·√((1 + sin θ₀)/cos²θ₀)`.
pub fn critical_coupling_spin(theta0: f64) -> Result<f64> {
    let cos = theta0.cos();
    if cos.abs() < 1e-12 {
        return Err(Error::DegeneratePotential);
    }
    Ok(std::f64::consts::SQRT_2 * ((1.0 + theta0.sin()) / (cos * cos)).sqrt())
}

/// `g̃ᵇ = [(4 − β₀)/(β₀(2 − β₀)²)]^(1/4)`, valid for β₀ ∈ (0, 2).
pub fn critical_coupling_boson(beta0: f64) -> Result<f64> {
    if !(beta0 > 0.0 && beta0 < 2.0) {
        return Err(Error::OutsideDomain(beta0));
    }
    Ok(((4.0 - beta0) / (beta0 * (2.0 - beta0).powi(2))).powf(0.25))
}

const SHRINK: f64 = 1e-6;
const SCAN_POINTS: usize = 64;

/// Height of the barrier separating `ξ₀` from `−ξ₀`: the maximum of `V` over the
/// interior of `[−|ξ₀|, |ξ₀|]` (coarse scan, then golden-section refinement).
pub fn barrier_height(regime: Regime, g_tilde: f64, theta0: f64, beta0: f64) -> Result<f64> {
    let xi0 = xi_initial(regime, theta0, beta0);
    if xi0.abs() < 1e-9 {
        return Err(match regime {
            Regime::SpinDominated => Error::DegeneratePotential,
            Regime::BosonDominated => Error::OutsideDomain(beta0),
        });
    }
    let v = regime_potential(regime, g_tilde, theta0, beta0, 1.0);
    let a = xi0.abs() * (1.0 - SHRINK);
    Ok(maximize(&v, -a, a))
}

fn maximize(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = (hi - lo) / SCAN_POINTS as f64;
    let mut best = (lo, f(lo));
    for i in 1..=SCAN_POINTS {
        let x = lo + h * i as f64;
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    best.1.max(fc).max(fd)
}

pub const CRITICAL_BRACKET: (f64, f64) = (1e-3, 50.0);

/// Independent oracle for the closed forms: bisection on g̃ for a vanishing barrier
/// height, to 1e-9 absolute.
pub fn numeric_critical_coupling(regime: Regime, ic: &InitialCondition) -> Result<f64> {
    numeric_critical_coupling_in(regime, ic, CRITICAL_BRACKET)
}

pub fn numeric_critical_coupling_in(
    regime: Regime,
    ic: &InitialCondition,
    (lo, hi): (f64, f64),
) -> Result<f64> {
    let beta0 = match regime {
        Regime::SpinDominated => 0.0,
        Regime::BosonDominated => ic.beta0(None)?,
    };
    let height = |g: f64| barrier_height(regime, g, ic.theta0, beta0);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (height(a)?, height(b)?);
    if fa.signum() == fb.signum() || fa == 0.0 && fb == 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    let rising = fa < fb;
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        let fm = height(m)?;
        if (fm < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqptReport {
    /// Energy of the quench state, −(g̃²/2)ΩN/2.
    pub e0: f64,
    /// Spin-regime critical energy −ΩN/2.
    pub e_c_spin: f64,
    /// Boson-regime critical energy −Ω·m′ₓ.
    pub e_c_boson: f64,
    /// Eigenvalue sector m′ₓ = (g̃²/√(1+g̃⁴))·N/2 of the rotated collective spin.
    pub m_x_prime: f64,
}

/// Excited-state QPT energies for the θ₀ = 0, β₀ = 1 quench. N defaults to 1 (per spin).
pub fn eqpt_energies(p: &ModelParams, v: &DimensionlessView) -> EqptReport {
    let n = p.n_spins.unwrap_or(1) as f64;
    let g2 = v.g_tilde * v.g_tilde;
    let m_x_prime = g2 / (1.0 + g2 * g2).sqrt() * n / 2.0;
    EqptReport {
        e0: -(g2 / 2.0) * p.omega * n / 2.0,
        e_c_spin: -p.omega * n / 2.0,
        e_c_boson: -p.omega * m_x_prime,
        m_x_prime,
    }
}
