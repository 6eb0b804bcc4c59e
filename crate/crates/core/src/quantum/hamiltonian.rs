use num_complex::Complex64;

use crate::model::ModelParams;
use crate::parallel::{for_each_row, Execution};

/// Matrix-free action of `H = (2g/√N)(a + a†)S_z + δ a†a + Ω S_x` on a fixed cutoff.
#[derive(Debug, Clone)]
pub struct HamiltonianAction {
    n_spins: u32,
    n_max: usize,
    coupling: f64,
    delta: f64,
    half_omega: f64,
    exec: Execution,
    sqrt_n: Vec<f64>,
    /// `c₊(m) = √(S(S+1) − m(m+1))` indexed by `mi`.
    c_plus: Vec<f64>,
}

impl HamiltonianAction {
    pub fn new(n_spins: u32, n_max: usize, g: f64, delta: f64, omega: f64) -> Self {
        let s = n_spins as f64 / 2.0;
        HamiltonianAction {
            n_spins,
            n_max,
            coupling: 2.0 * g / (n_spins as f64).sqrt(),
            delta,
            half_omega: 0.5 * omega,
            exec: Execution::default(),
            sqrt_n: (0..=n_max + 1).map(|n| (n as f64).sqrt()).collect(),
            c_plus: (0..=n_spins as usize)
                .map(|mi| {
                    let m = mi as f64 - s;
                    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
                })
                .collect(),
        }
    }

    /// Panics if `p` carries no spin number.
    pub fn from_params(p: &ModelParams, n_max: usize) -> Self {
        let n = p.n_spins.expect("HamiltonianAction needs N");
        Self::new(n, n_max, p.g, p.delta, p.omega)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn n_spins(&self) -> u32 {
        self.n_spins
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_spins as usize + 1) * (self.n_max + 1)
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// Upper bound on the spectral radius, used to pick Krylov steps.
    pub fn norm_bound(&self) -> f64 {
        let s = self.n_spins as f64 / 2.0;
        let nm = self.n_max as f64;
        self.coupling.abs() * s * 2.0 * (nm + 1.0).sqrt()
            + self.delta.abs() * nm
            + 2.0 * self.half_omega.abs() * s
    }

    /// `out = H psi`. Each spin row is computed independently, so the result is
    /// bitwise identical for any thread count.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let stride = self.n_max + 1;
        assert_eq!(psi.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let s = self.n_spins as f64 / 2.0;
        let last = self.n_spins as usize;
        for_each_row(out, stride, self.exec, |mi, row| {
            let m = mi as f64 - s;
            let here = &psi[mi * stride..(mi + 1) * stride];
            let zc = self.coupling * m;
            for n in 0..stride {
                let mut acc = here[n] * (self.delta * n as f64);
                if n > 0 {
                    acc += here[n - 1] * (zc * self.sqrt_n[n]);
                }
                if n + 1 < stride {
                    acc += here[n + 1] * (zc * self.sqrt_n[n + 1]);
                }
                row[n] = acc;
            }
            if self.half_omega != 0.0 {
                if mi > 0 {
                    let w = self.half_omega * self.c_plus[mi - 1];
                    let below = &psi[(mi - 1) * stride..mi * stride];
                    row.iter_mut().zip(below).for_each(|(r, b)| *r += b * w);
                }
                if mi < last {
                    let w = self.half_omega * self.c_plus[mi];
                    let above = &psi[(mi + 1) * stride..(mi + 2) * stride];
                    row.iter_mut().zip(above).for_each(|(r, a)| *r += a * w);
                }
            }
        });
    }

    pub fn apply_vec(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply(psi, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{dot, QuantumState};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn diagonal_when_decoupled() {
        let h = HamiltonianAction::new(3, 5, 0.0, 0.7, 0.0);
        for mi in 0..=3 {
            for n in 0..=5 {
                let psi = QuantumState::basis(3, 5, mi, n);
                let out = h.apply_vec(psi.coeffs());
                for (k, c) in out.iter().enumerate() {
                    let expect = if k == mi * 6 + n { 0.7 * n as f64 } else { 0.0 };
                    assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn spin_half_transverse_field() {
        let h = HamiltonianAction::new(1, 0, 0.0, 1.0, 1.0);
        let up = h.apply_vec(QuantumState::basis(1, 0, 1, 0).coeffs());
        assert_eq!(up, vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        let down = h.apply_vec(QuantumState::basis(1, 0, 0, 0).coeffs());
        assert_eq!(down, vec![Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)]);
    }

    #[test]
    fn hermitian_on_random_vectors() {
        let h = HamiltonianAction::new(6, 9, 0.8, 1.3, 0.6);
        let (a, b) = (random(h.dim(), 1), random(h.dim(), 2));
        let lhs = dot(&a, &h.apply_vec(&b));
        let rhs = dot(&b, &h.apply_vec(&a)).conj();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let h = HamiltonianAction::new(10, 20, 0.8, 1.3, 0.6);
        let psi = random(h.dim(), 3);
        let par = h.clone().with_execution(Execution::Parallel).apply_vec(&psi);
        let seq = h.with_execution(Execution::Sequential).apply_vec(&psi);
        assert_eq!(par, seq);
    }

    #[test]
    fn norm_bound_dominates_rayleigh_quotient() {
        let h = HamiltonianAction::new(4, 12, 1.0, 1.3, 0.9);
        for seed in 0..5 {
            let psi = random(h.dim(), seed);
            let r = dot(&psi, &h.apply_vec(&psi)).re / dot(&psi, &psi).re;
            assert!(r.abs() <= h.norm_bound());
        }
    }
}
