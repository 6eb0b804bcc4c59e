//! Exact evolution in the symmetric Dicke ⊗ Fock space.
//!
//! A state is stored row-major as `ψ[mi, n]` with `mi = m + N/2 ∈ 0..=N` and
//! `n ∈ 0..=n_max`.

mod dense;
mod hamiltonian;
mod krylov;
mod observables;
mod propagate;

pub use dense::{dense_hamiltonian, dense_reference_evolve, DENSE_DIMENSION_CAP};
pub use hamiltonian::HamiltonianAction;
pub use krylov::{krylov_step, KrylovSettings};
pub use observables::{entanglement_entropy, observables, trace_distance, ObservableRecord};
pub use propagate::{
    propagate_adaptive, CutoffEvent, CutoffEventKind, PropagationMeta, PropagationSettings,
    QuantumTrajectory,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    n_spins: u32,
    n_max: usize,
    /// g·t at which the state is defined.
    pub time: f64,
    coeffs: Vec<Complex64>,
}

impl QuantumState {
    pub fn zeros(n_spins: u32, n_max: usize) -> Self {
        QuantumState {
            n_spins,
            n_max,
            time: 0.0,
            coeffs: vec![Complex64::new(0.0, 0.0); (n_spins as usize + 1) * (n_max + 1)],
        }
    }

    /// `|spin⟩ ⊗ |boson⟩` with `spin` indexed by `mi` and `boson` by `n`.
    pub fn product(n_spins: u32, spin: &[Complex64], boson: &[Complex64]) -> Self {
        assert_eq!(spin.len(), n_spins as usize + 1, "spin amplitudes must have N + 1 entries");
        assert!(!boson.is_empty(), "boson amplitudes must be non-empty");
        let coeffs = spin
            .iter()
            .flat_map(|&a| boson.iter().map(move |&b| a * b))
            .collect();
        QuantumState {
            n_spins,
            n_max: boson.len() - 1,
            time: 0.0,
            coeffs,
        }
    }

    pub fn from_coeffs(n_spins: u32, n_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), (n_spins as usize + 1) * (n_max + 1));
        QuantumState {
            n_spins,
            n_max,
            time: 0.0,
            coeffs,
        }
    }

    /// Basis state `|m = mi − N/2⟩ ⊗ |n⟩`.
    pub fn basis(n_spins: u32, n_max: usize, mi: usize, n: usize) -> Self {
        let mut s = Self::zeros(n_spins, n_max);
        s.coeffs[mi * (n_max + 1) + n] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, mi: usize, n: usize) -> Complex64 {
        self.coeffs[mi * (self.n_max + 1) + n]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
    }

    /// Boson level populations `Σ_m |ψ[m, n]|²`.
    pub fn populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_max + 1];
        for row in self.coeffs.chunks(self.n_max + 1) {
            for (pn, c) in p.iter_mut().zip(row) {
                *pn += c.norm_sqr();
            }
        }
        p
    }

    /// Copy onto a new cutoff, zero-padding or truncating. Returns the discarded norm².
    pub fn resized(&self, n_max: usize) -> (QuantumState, f64) {
        let mut out = QuantumState::zeros(self.n_spins, n_max);
        out.time = self.time;
        let keep = n_max.min(self.n_max) + 1;
        let mut discarded = 0.0;
        for (src, dst) in self
            .coeffs
            .chunks(self.n_max + 1)
            .zip(out.coeffs.chunks_mut(n_max + 1))
        {
            dst[..keep].copy_from_slice(&src[..keep]);
            discarded += src[keep..].iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        (out, discarded)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
