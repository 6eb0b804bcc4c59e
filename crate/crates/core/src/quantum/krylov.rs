//! `exp(−iHt)ψ` by Lanczos projection.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{dot, norm, HamiltonianAction};
use crate::error::{Error, Result};

const MAX_HALVINGS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovSettings {
    pub m_krylov: usize,
    /// Allowed error norm per unit time.
    pub tol: f64,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings {
            m_krylov: 30,
            tol: 1e-12,
        }
    }
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    eigvals: Vec<f64>,
    /// Eigenvectors of T, column-major k×k.
    eigvecs: DMatrix<f64>,
    /// β_k, zero after a happy breakdown.
    residual: f64,
}

impl Lanczos {
    fn build(h: &HamiltonianAction, v: &[Complex64], beta0: f64, m: usize) -> Lanczos {
        let dim = v.len();
        let m = m.min(dim);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(v.iter().map(|c| c / beta0).collect());
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let mut residual = 0.0;
        for j in 0..m {
            h.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // Three-term recurrence, then a second pass against the same two vectors.
            let lo = j.saturating_sub(1);
            w.iter_mut().zip(&basis[j]).for_each(|(x, y)| *x -= a * y);
            if j > 0 {
                let bp = beta[j - 1];
                w.iter_mut().zip(&basis[j - 1]).for_each(|(x, y)| *x -= bp * y);
            }
            for q in &basis[lo..=j] {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let b = norm(&w);
            let scale = a.abs() + beta.last().copied().unwrap_or(0.0) + 1.0;
            if b <= 1e-13 * scale {
                residual = 0.0;
                break;
            }
            residual = b;
            if j + 1 == m {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|c| c / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        basis.truncate(k);
        Lanczos {
            basis,
            eigvals: eig.eigenvalues.iter().copied().collect(),
            eigvecs: eig.eigenvectors,
            residual,
        }
    }

    /// `exp(−iT h) e₁`.
    fn propagate_e1(&self, h: f64) -> Vec<Complex64> {
        let k = self.eigvals.len();
        let weights: Vec<Complex64> = (0..k)
            .map(|j| Complex64::from_polar(self.eigvecs[(0, j)], -self.eigvals[j] * h))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|j| weights[j] * self.eigvecs[(i, j)]).sum())
            .collect()
    }
}

/// `ψ' ≈ exp(−iH·dt)ψ`. Sub-steps are halved until the Lanczos error estimate
/// `β₀ β_m |e_mᵀ exp(−iT h) e₁|` is at most `tol·h`, or at the rounding floor.
pub fn krylov_step(
    h: &HamiltonianAction,
    psi: &[Complex64],
    dt: f64,
    settings: &KrylovSettings,
) -> Result<Vec<Complex64>> {
    if !(dt >= 0.0) || settings.m_krylov < 2 {
        return Err(Error::InvalidParameter(format!(
            "krylov_step needs dt ≥ 0 and m ≥ 2 (dt = {dt}, m = {})",
            settings.m_krylov
        )));
    }
    let mut v = psi.to_vec();
    let mut remaining = dt;
    let mut step = dt;
    while remaining > 0.0 {
        let beta0 = norm(&v);
        if beta0 == 0.0 {
            break;
        }
        let lz = Lanczos::build(h, &v, beta0, settings.m_krylov);
        let mut hs = step.min(remaining);
        let mut halvings = 0;
        // The last component of exp(−iTh)e₁ cannot be resolved below rounding.
        let floor = 64.0 * f64::EPSILON * beta0 * lz.residual;
        let y = loop {
            let y = lz.propagate_e1(hs);
            let err = beta0 * lz.residual * y.last().map_or(0.0, |c| c.norm());
            if err <= (settings.tol * hs).max(floor) || lz.residual == 0.0 {
                break y;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::KrylovNonConvergence {
                    estimate: err,
                    halvings,
                });
            }
            hs *= 0.5;
        };
        v.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (q, &c) in lz.basis.iter().zip(&y) {
            let c = c * beta0;
            v.iter_mut().zip(q).for_each(|(x, b)| *x += c * b);
        }
        // Accepted step size seeds the next attempt; allow it to grow again.
        step = if halvings == 0 { 2.0 * hs } else { hs };
        remaining -= hs;
        if remaining < 1e-14 * dt {
            break;
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::dense_hamiltonian;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = norm(&v);
        v.into_iter().map(|c| c / n).collect()
    }

    fn dense_expm(h: &HamiltonianAction, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let eig = SymmetricEigen::new(dense_hamiltonian(h));
        let q = &eig.eigenvectors;
        let d = psi.len();
        let proj: Vec<Complex64> = (0..d)
            .map(|j| (0..d).map(|i| psi[i] * q[(i, j)]).sum::<Complex64>())
            .map(|c: Complex64| c)
            .enumerate()
            .map(|(j, c)| c * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t))
            .collect();
        (0..d)
            .map(|i| (0..d).map(|j| proj[j] * q[(i, j)]).sum())
            .collect()
    }

    #[test]
    fn diagonal_phases_exact() {
        let h = HamiltonianAction::new(2, 6, 0.0, 0.9, 0.0);
        let psi = random(h.dim(), 4);
        let out = krylov_step(&h, &psi, 2.5, &KrylovSettings::default()).unwrap();
        for mi in 0..3 {
            for n in 0..7 {
                let k = mi * 7 + n;
                let expect = psi[k] * Complex64::from_polar(1.0, -0.9 * n as f64 * 2.5);
                assert!((out[k] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let h = HamiltonianAction::new(2, 8, 1.0, 1.3, 0.7);
        let psi = random(h.dim(), 5);
        let out = krylov_step(&h, &psi, 3.0, &KrylovSettings::default()).unwrap();
        let reference = dense_expm(&h, &psi, 3.0);
        let diff: f64 = out
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-10, "diff = {diff}");
    }

    #[test]
    fn preserves_norm() {
        let h = HamiltonianAction::new(8, 30, 1.0, 0.5, 2.0);
        let psi = random(h.dim(), 6);
        let out = krylov_step(&h, &psi, 1.7, &KrylovSettings::default()).unwrap();
        assert!((norm(&out) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_subspace() {
        let h = HamiltonianAction::new(1, 1, 1.0, 1.0, 1.0);
        let psi = random(h.dim(), 7);
        let s = KrylovSettings { m_krylov: 1, tol: 1e-10 };
        assert!(krylov_step(&h, &psi, 1.0, &s).is_err());
    }
}
