//! Model parameters, the (g̃, η) phase-diagram coordinates, and initial states.
//!
//! Physical couplings follow the Dicke Hamiltonian
//! `H = (2g/√N)(a + a†)S_z + δ a†a + Ω S_x`. The phase diagram is organised in
//! the normalised coupling `g̃ = 2g/√(δΩ)` (coupling over the ground-state QPT point)
//! and the frequency ratio `η = δ/Ω`. Unless stated otherwise times are `g·t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::QuantumState;

/// Default hard ceiling for the boson Fock cutoff.
pub const DEFAULT_FOCK_CEILING: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Spin-boson coupling g. Zero is accepted for the decoupled reference limit.
    pub g: f64,
    /// Boson frequency δ.
    pub delta: f64,
    /// Transverse field Ω.
    pub omega: f64,
    pub n_spins: Option<u32>,
}

impl ModelParams {
    pub fn new(g: f64, delta: f64, omega: f64, n_spins: Option<u32>) -> Result<Self> {
        let p = ModelParams {
            g,
            delta,
            omega,
            n_spins,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g = {} must be ≥ 0", self.g)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "δ = {} must be > 0",
                self.delta
            )));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Ω = {} must be ≥ 0",
                self.omega
            )));
        }
        if self.n_spins == Some(0) {
            return Err(Error::InvalidParameter("N must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn with_spins(mut self, n_spins: u32) -> Result<Self> {
        self.n_spins = Some(n_spins);
        self.validate()?;
        Ok(self)
    }

    pub fn require_spins(&self) -> Result<u32> {
        self.n_spins
            .ok_or_else(|| Error::InvalidParameter("particle number N is required".into()))
    }

    /// Ground-state QPT coupling √(δΩ)/2.
    pub fn g_qpt(&self) -> f64 {
        (self.delta * self.omega).sqrt() / 2.0
    }

    /// Coherent amplitude of the Ω = 0 ground state, α_s = g√N/δ.
    pub fn alpha_s(&self) -> Result<f64> {
        let n = self.require_spins()? as f64;
        Ok(self.g * n.sqrt() / self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessView {
    pub g_tilde: f64,
    pub eta: f64,
}

impl DimensionlessView {
    /// `g_tilde = 0` is allowed here (decoupled dynamics); inverting to physical
    /// couplings requires `g_tilde > 0`.
    pub fn new(g_tilde: f64, eta: f64) -> Result<Self> {
        if !(g_tilde.is_finite() && g_tilde >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g̃ = {g_tilde} must be ≥ 0"
            )));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("η = {eta} must be > 0")));
        }
        Ok(DimensionlessView { g_tilde, eta })
    }

    /// Transverse field in units where g = 1.
    pub fn omega_unit_g(&self) -> f64 {
        2.0 / (self.g_tilde * self.eta.sqrt())
    }
}

pub fn to_dimensionless(p: &ModelParams) -> Result<DimensionlessView> {
    p.validate()?;
    if p.omega == 0.0 {
        return Err(Error::DimensionlessUndefined);
    }
    DimensionlessView::new(2.0 * p.g / (p.delta * p.omega).sqrt(), p.delta / p.omega)
}

pub fn from_dimensionless(v: &DimensionlessView, g: f64) -> Result<ModelParams> {
    if !(v.g_tilde > 0.0 && v.g_tilde.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "g̃ = {} must be > 0 to recover δ and Ω",
            v.g_tilde
        )));
    }
    if !(v.eta > 0.0 && v.eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("η = {} must be > 0", v.eta)));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter(format!("g = {g} must be > 0")));
    }
    let root_eta = v.eta.sqrt();
    ModelParams::new(
        g,
        2.0 * g * root_eta / v.g_tilde,
        2.0 * g / (v.g_tilde * root_eta),
        None,
    )
}

/// Which description of the initial boson amplitude is authoritative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BosonAmplitude {
    /// β₀ = α/α_s.
    Relative(f64),
    /// Absolute coherent amplitude α.
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Tipping angle from the south pole, in (−π, π].
    pub theta0: f64,
    pub boson: BosonAmplitude,
}

impl InitialCondition {
    pub fn new(theta0: f64, beta0: f64) -> Result<Self> {
        Self::build(theta0, BosonAmplitude::Relative(beta0))
    }

    pub fn with_alpha(theta0: f64, alpha: f64) -> Result<Self> {
        Self::build(theta0, BosonAmplitude::Absolute(alpha))
    }

    /// The post-quench state of the main phase diagram: spins down, α = α_s.
    pub fn ground_state_quench() -> Self {
        InitialCondition {
            theta0: 0.0,
            boson: BosonAmplitude::Relative(1.0),
        }
    }

    fn build(theta0: f64, boson: BosonAmplitude) -> Result<Self> {
        use std::f64::consts::PI;
        if !(theta0 > -PI && theta0 <= PI) {
            return Err(Error::InvalidParameter(format!(
                "θ₀ = {theta0} must lie in (−π, π]"
            )));
        }
        let amp = match boson {
            BosonAmplitude::Relative(b) | BosonAmplitude::Absolute(b) => b,
        };
        if !amp.is_finite() {
            return Err(Error::InvalidParameter("boson amplitude must be finite".into()));
        }
        Ok(InitialCondition { theta0, boson })
    }

    /// β₀, resolving an absolute amplitude against α_s when needed.
    pub fn beta0(&self, params: Option<&ModelParams>) -> Result<f64> {
        match self.boson {
            BosonAmplitude::Relative(b) => Ok(b),
            BosonAmplitude::Absolute(alpha) => {
                let p = params.ok_or(Error::MissingModelParams)?;
                let alpha_s = p.alpha_s().map_err(|_| Error::MissingModelParams)?;
                if alpha_s == 0.0 {
                    return Err(Error::InvalidParameter("α_s = 0, β₀ undefined".into()));
                }
                Ok(alpha / alpha_s)
            }
        }
    }

    /// Absolute coherent amplitude α = β₀·g√N/δ.
    pub fn alpha(&self, params: &ModelParams) -> Result<f64> {
        match self.boson {
            BosonAmplitude::Absolute(alpha) => Ok(alpha),
            BosonAmplitude::Relative(b) => Ok(b * params.alpha_s()?),
        }
    }
}

/// Mean-field state: unit spin vector `s = 2⟨S⟩/N` and the scaled boson
/// amplitude `β̃ = δβ/g` with `β = ⟨a⟩/√N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub s: [f64; 3],
    pub beta: Complex64,
}

impl ClassicalState {
    pub fn new(s: [f64; 3], beta: Complex64) -> Result<Self> {
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "spin vector must be unit length, |s| = {norm}"
            )));
        }
        Ok(ClassicalState { s, beta })
    }

    pub fn spin_norm(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Flattened `(s_x, s_y, s_z, Re β̃, Im β̃)`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.s[0], self.s[1], self.s[2], self.beta.re, self.beta.im]
    }

    pub fn from_array(x: &[f64]) -> Self {
        ClassicalState {
            s: [x[0], x[1], x[2]],
            beta: Complex64::new(x[3], x[4]),
        }
    }
}

pub fn build_initial_classical(
    ic: &InitialCondition,
    params: Option<&ModelParams>,
) -> Result<ClassicalState> {
    let beta0 = ic.beta0(params)?;
    let (sin, cos) = ic.theta0.sin_cos();
    Ok(ClassicalState {
        s: [sin, 0.0, -cos],
        beta: Complex64::new(beta0, 0.0),
    })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Amplitudes of `exp(iθ₀S_y)|S, −S⟩` indexed by `k = m + N/2`.
///
/// From the Wigner d-matrix column `d^S_{m,−S}`:
/// `c_k = √C(N,k) cos^{N−k}(θ₀/2) sin^k(θ₀/2)`. The mean spin points along
/// `(sin θ₀, 0, −cos θ₀)`, the same tilt as the mean-field initial state.
pub fn spin_coherent_amplitudes(n_spins: u32, theta0: f64) -> Vec<Complex64> {
    let n = n_spins as usize;
    let lf = ln_factorials(n);
    let (s, c) = (theta0 / 2.0).sin_cos();
    (0..=n)
        .map(|k| {
            let binom = (0.5 * (lf[n] - lf[k] - lf[n - k])).exp();
            Complex64::new(binom * c.powi((n - k) as i32) * s.powi(k as i32), 0.0)
        })
        .collect()
}

/// Poisson weights of a coherent state, computed in log space.
fn poisson_weights(mean: f64, upto: usize) -> Vec<f64> {
    let lf = ln_factorials(upto);
    if mean == 0.0 {
        let mut w = vec![0.0; upto + 1];
        w[0] = 1.0;
        return w;
    }
    let ln_mean = mean.ln();
    (0..=upto)
        .map(|n| (-mean + n as f64 * ln_mean - lf[n]).exp())
        .collect()
}

/// Smallest cutoff `n_max` whose discarded Poisson tail `Σ_{n>n_max} |c_n|²` is ≤ `eps`.
///
/// Returns `(n_max, tail)`. The search starts at `⌈|α|² + 10√(|α|² + 1)⌉` and extends
/// until the remaining weight is negligible; the minimal cutoff is then located by
/// binary search over the monotone suffix sums.
pub fn fock_cutoff(alpha: f64, eps: f64, ceiling: usize) -> Result<(usize, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0, 1)")));
    }
    let mean = alpha * alpha;
    let mut upper = (mean + 10.0 * (mean + 1.0).sqrt()).ceil() as usize + 1;
    let weights = loop {
        let w = poisson_weights(mean, upper);
        let last = w[upper];
        // Past the mode the tail beyond `upper` is bounded by a geometric series.
        let ratio = mean / (upper as f64 + 1.0);
        if ratio < 0.5 && last * ratio / (1.0 - ratio) < eps * 1e-6 {
            break w;
        }
        upper *= 2;
        if upper > 16 * ceiling.max(64) {
            return Err(Error::CutoffCeiling {
                needed: upper,
                ceiling,
            });
        }
    };
    // suffix[i] = Σ_{n ≥ i} w_n, summed from the small end.
    let mut suffix = vec![0.0; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    // Tail beyond cutoff c is suffix[c + 1], non-increasing in c.
    let tails = &suffix[1..];
    let n_max = tails.partition_point(|&t| t > eps);
    if n_max > ceiling {
        return Err(Error::CutoffCeiling {
            needed: n_max,
            ceiling,
        });
    }
    Ok((n_max, tails[n_max]))
}

/// Boson coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!` for `n ≤ n_max`.
pub fn coherent_amplitudes(alpha: f64, n_max: usize) -> Vec<Complex64> {
    let w = poisson_weights(alpha * alpha, n_max);
    w.iter()
        .enumerate()
        .map(|(n, &p)| {
            let sign = if alpha < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
            Complex64::new(sign * p.sqrt(), 0.0)
        })
        .collect()
}

pub fn build_initial_quantum(
    p: &ModelParams,
    ic: &InitialCondition,
    eps: f64,
) -> Result<QuantumState> {
    build_initial_quantum_with_ceiling(p, ic, eps, DEFAULT_FOCK_CEILING)
}

/// Product of a spin coherent state and a boson coherent state |α⟩, truncated at the
/// minimal Fock cutoff with normalisation deficit ≤ `eps`, then renormalised.
pub fn build_initial_quantum_with_ceiling(
    p: &ModelParams,
    ic: &InitialCondition,
    eps: f64,
    ceiling: usize,
) -> Result<QuantumState> {
    let n_spins = p.require_spins()?;
    let alpha = ic.alpha(p)?;
    let (n_max, _tail) = fock_cutoff(alpha, eps, ceiling)?;
    let spin = spin_coherent_amplitudes(n_spins, ic.theta0);
    let mut boson = coherent_amplitudes(alpha, n_max);
    let kept: f64 = boson.iter().map(|c| c.norm_sqr()).sum();
    let scale = 1.0 / kept.sqrt();
    for c in &mut boson {
        *c *= scale;
    }
    Ok(QuantumState::product(n_spins, &spin, &boson))
}

/// Parameter set accepted from configuration files and CLI flags.
///
/// Dimensionless keys (`g_tilde`, `eta`) win over `delta`/`omega` when both are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedModel {
    pub params: ModelParams,
    pub view: DimensionlessView,
    pub initial: InitialCondition,
}

impl ModelConfig {
    /// Fill unset fields from `other`.
    pub fn or(self, other: &ModelConfig) -> ModelConfig {
        ModelConfig {
            g: self.g.or(other.g),
            delta: self.delta.or(other.delta),
            omega: self.omega.or(other.omega),
            n_spins: self.n_spins.or(other.n_spins),
            g_tilde: self.g_tilde.or(other.g_tilde),
            eta: self.eta.or(other.eta),
            theta0: self.theta0.or(other.theta0),
            beta0: self.beta0.or(other.beta0),
            alpha: self.alpha.or(other.alpha),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedModel> {
        let g = self.g.unwrap_or(1.0);
        let (view, mut params) = match (self.g_tilde, self.eta) {
            (Some(gt), Some(eta)) => {
                if self.delta.is_some() || self.omega.is_some() {
                    log::warn!(
                        "both (g_tilde, eta) and (delta, omega) given; using g_tilde = {gt}, eta = {eta}"
                    );
                }
                let view = DimensionlessView::new(gt, eta)?;
                (view, from_dimensionless(&view, g)?)
            }
            (None, None) => match (self.delta, self.omega) {
                (Some(delta), Some(omega)) => {
                    let p = ModelParams::new(g, delta, omega, None)?;
                    (to_dimensionless(&p)?, p)
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "give either (g_tilde, eta) or (delta, omega)".into(),
                    ))
                }
            },
            _ => {
                return Err(Error::InvalidParameter(
                    "g_tilde and eta must be given together".into(),
                ))
            }
        };
        params.n_spins = self.n_spins;
        params.validate()?;
        let theta0 = self.theta0.unwrap_or(0.0);
        let initial = match (self.beta0, self.alpha) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "beta0 and alpha are mutually exclusive".into(),
                ))
            }
            (None, Some(alpha)) => InitialCondition::with_alpha(theta0, alpha)?,
            (b, None) => InitialCondition::new(theta0, b.unwrap_or(1.0))?,
        };
        Ok(ResolvedModel {
            params,
            view,
            initial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn dimensionless_examples() {
        let v = to_dimensionless(&ModelParams::new(1.0, 2.0, 2.0, None).unwrap()).unwrap();
        assert_relative_eq!(v.g_tilde, 1.0, max_relative = 1e-15);
        assert_relative_eq!(v.eta, 1.0, max_relative = 1e-15);

        let p = from_dimensionless(&DimensionlessView::new(SQRT_2, 4.0).unwrap(), 1.0).unwrap();
        let back = to_dimensionless(&p).unwrap();
        assert_relative_eq!(back.g_tilde, SQRT_2, max_relative = 1e-12);
        assert_relative_eq!(back.eta, 4.0, max_relative = 1e-12);

        // δΩ = 4/g̃², δ/Ω = 1 → δ = Ω = 2/g̃
        let p = from_dimensionless(&DimensionlessView::new(1.3, 1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(p.delta, 1.538_461_538_461_538_4, max_relative = 1e-12);
        assert_relative_eq!(p.omega, p.delta, max_relative = 1e-12);
    }

    #[test]
    fn from_dimensionless_examples() {
        let p = from_dimensionless(&DimensionlessView::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!((p.delta, p.omega), (2.0, 2.0));
        let p = from_dimensionless(&DimensionlessView::new(2.0, 4.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(p.delta, 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.omega, 0.5, max_relative = 1e-15);
        let gt = 3f64.powf(0.25);
        let p = from_dimensionless(&DimensionlessView::new(gt, 0.1).unwrap(), 1.0).unwrap();
        assert_relative_eq!(p.delta, 0.480_562_282_826_950_9, max_relative = 1e-12);
        assert_relative_eq!(p.omega, 4.805_622_828_269_509, max_relative = 1e-12);
    }

    #[test]
    fn omega_zero_has_no_view() {
        let p = ModelParams::new(1.0, 2.0, 0.0, None).unwrap();
        assert!(matches!(to_dimensionless(&p), Err(Error::DimensionlessUndefined)));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(1.0, 0.0, 1.0, None).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 1.0, None).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, Some(0)).is_err());
        assert!(InitialCondition::new(-std::f64::consts::PI, 1.0).is_err());
        assert!(InitialCondition::new(std::f64::consts::PI, 1.0).is_ok());
    }

    #[test]
    fn classical_initial_states() {
        let s = build_initial_classical(&InitialCondition::new(0.0, 1.0).unwrap(), None).unwrap();
        assert_eq!(s.s, [0.0, 0.0, -1.0]);
        assert_eq!(s.beta, Complex64::new(1.0, 0.0));

        let s =
            build_initial_classical(&InitialCondition::new(FRAC_PI_2, 0.0).unwrap(), None).unwrap();
        assert_relative_eq!(s.s[0], 1.0);
        assert!(s.s[2].abs() < 1e-16);
        assert_eq!(s.beta, Complex64::new(0.0, 0.0));

        let s =
            build_initial_classical(&InitialCondition::new(FRAC_PI_4, 1.0).unwrap(), None).unwrap();
        assert_relative_eq!(s.s[0], SQRT_2 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(s.s[2], -SQRT_2 / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn absolute_amplitude_needs_params() {
        let ic = InitialCondition::with_alpha(0.0, 2.0).unwrap();
        assert!(matches!(
            build_initial_classical(&ic, None),
            Err(Error::MissingModelParams)
        ));
        // α_s = g√N/δ = 1·2/1 = 2 → β₀ = 1
        let p = ModelParams::new(1.0, 1.0, 1.0, Some(4)).unwrap();
        let s = build_initial_classical(&ic, Some(&p)).unwrap();
        assert_relative_eq!(s.beta.re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn vacuum_down_state_is_single_entry() {
        for n in [1u32, 2, 7] {
            let p = ModelParams::new(1.0, 1.0, 1.0, Some(n)).unwrap();
            let ic = InitialCondition::with_alpha(0.0, 0.0).unwrap();
            let psi = build_initial_quantum(&p, &ic, 1e-6).unwrap();
            assert_eq!(psi.n_max(), 0);
            assert_eq!(psi.get(0, 0), Complex64::new(1.0, 0.0));
            let nonzero = psi.coeffs().iter().filter(|c| c.norm() > 0.0).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn poisson_tail_cutoff_matches_summation() {
        // Oracle: direct summation of e^{-4} 4^n / n!.
        let eps = 1e-6;
        let mut p = (-4.0f64).exp();
        let mut cumulative = 0.0;
        let mut expected = None;
        for n in 0..100usize {
            if n > 0 {
                p *= 4.0 / n as f64;
            }
            cumulative += p;
            if expected.is_none() && 1.0 - cumulative <= eps {
                expected = Some(n);
            }
        }
        let expected = expected.unwrap();
        let (n_max, tail) = fock_cutoff(2.0, eps, 4096).unwrap();
        assert_eq!(n_max, expected);
        assert!(tail <= eps);
        // One level less would exceed the tolerance.
        let mut q = (-4.0f64).exp();
        let mut kept = q;
        for n in 1..n_max {
            q *= 4.0 / n as f64;
            kept += q;
        }
        assert!(1.0 - kept > eps);

        let pm = ModelParams::new(1.0, 1.0 / 2f64.sqrt(), 1.0, Some(2)).unwrap();
        // α = β₀ g √N / δ = 1·√2·√2 = 2
        let psi = build_initial_quantum(&pm, &InitialCondition::new(0.0, 1.0).unwrap(), eps).unwrap();
        assert_eq!(psi.n_max(), expected);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cutoff_ceiling_reported() {
        match fock_cutoff(30.0, 1e-6, 100) {
            Err(Error::CutoffCeiling { needed, ceiling }) => {
                assert!(needed > 100);
                assert_eq!(ceiling, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_precedence_and_validation() {
        let cfg = ModelConfig {
            g_tilde: Some(2.0),
            eta: Some(4.0),
            delta: Some(9.0),
            omega: Some(9.0),
            ..Default::default()
        };
        let r = cfg.resolve().unwrap();
        assert_eq!(r.view.g_tilde, 2.0);
        assert_relative_eq!(r.params.delta, 2.0, max_relative = 1e-15);

        let cfg = ModelConfig {
            delta: Some(2.0),
            omega: Some(2.0),
            ..Default::default()
        };
        let r = cfg.resolve().unwrap();
        assert_relative_eq!(r.view.g_tilde, 1.0);

        let both = ModelConfig {
            g_tilde: Some(1.0),
            eta: Some(1.0),
            beta0: Some(1.0),
            alpha: Some(1.0),
            ..Default::default()
        };
        assert!(both.resolve().is_err());
        assert!(ModelConfig::default().resolve().is_err());
        let parsed: ModelConfig = serde_json::from_str(r#"{"g_tilde": 1.3, "eta": 1}"#).unwrap();
        assert_eq!(parsed.g_tilde, Some(1.3));
        assert!(serde_json::from_str::<ModelConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
