use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{dot, HamiltonianAction, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub sz: f64,
    pub sz2: f64,
    /// ⟨a + a†⟩/2
    pub x: f64,
    pub nbar: f64,
    pub energy: f64,
    pub parity: f64,
    /// Von Neumann entropy of the spin reduction, natural log.
    pub svn: f64,
}

impl ObservableRecord {
    pub fn sz_var(&self) -> f64 {
        (self.sz2 - self.sz * self.sz).max(0.0)
    }
}

/// Expectation values normalised by `‖ψ‖²`.
///
/// Parity is `Π = exp(iπ(S_x + a†a + N/2))`, which acts as `Π|m, n⟩ = (−1)^(N+n)|−m, n⟩`.
pub fn observables(psi: &QuantumState, h: &HamiltonianAction) -> ObservableRecord {
    let stride = psi.n_max() + 1;
    let n_spins = psi.n_spins() as usize;
    let s = n_spins as f64 / 2.0;
    let c = psi.coeffs();
    let norm2 = psi.norm_sqr();
    let (mut sz, mut sz2, mut a, mut nbar, mut parity) =
        (0.0, 0.0, Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0));
    for mi in 0..=n_spins {
        let m = mi as f64 - s;
        let row = &c[mi * stride..(mi + 1) * stride];
        let mirror = &c[(n_spins - mi) * stride..(n_spins - mi + 1) * stride];
        for n in 0..stride {
            let p = row[n].norm_sqr();
            sz += m * p;
            sz2 += m * m * p;
            nbar += n as f64 * p;
            if n + 1 < stride {
                a += row[n].conj() * row[n + 1] * ((n + 1) as f64).sqrt();
            }
            let sign = if (n_spins + n) & 1 == 0 { 1.0 } else { -1.0 };
            parity += row[n].conj() * mirror[n] * sign;
        }
    }
    let energy = dot(c, &h.apply_vec(c)).re;
    ObservableRecord {
        sz: sz / norm2,
        sz2: sz2 / norm2,
        x: a.re / norm2,
        nbar: nbar / norm2,
        energy: energy / norm2,
        parity: parity.re / norm2,
        svn: entanglement_entropy(psi),
    }
}

/// `S = −Σ λ log λ` over the eigenvalues of the smaller reduced density matrix.
pub fn entanglement_entropy(psi: &QuantumState) -> f64 {
    let rows = psi.n_spins() as usize + 1;
    let cols = psi.n_max() + 1;
    let c = DMatrix::from_row_slice(rows, cols, psi.coeffs());
    let gram = if rows <= cols {
        &c * c.adjoint()
    } else {
        c.adjoint() * &c
    };
    let trace: f64 = gram.diagonal().iter().map(|z| z.re).sum();
    if trace <= 0.0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues
        .iter()
        .map(|&l| l / trace)
        .filter(|&l| l > 1e-14)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Trace distance `√(1 − |⟨ψ|φ⟩|²)` between two pure states (normalised internally),
/// evaluated as the norm of the component of φ orthogonal to ψ.
pub fn trace_distance(psi: &QuantumState, phi: &QuantumState) -> f64 {
    assert_eq!(psi.n_spins(), phi.n_spins());
    let n_max = psi.n_max().max(phi.n_max());
    let (a, _) = psi.resized(n_max);
    let (b, _) = phi.resized(n_max);
    let (na, nb) = (a.norm_sqr().sqrt(), b.norm_sqr().sqrt());
    let overlap = dot(a.coeffs(), b.coeffs()) / (na * nb);
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (y / nb - overlap * x / na).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coherent_amplitudes, spin_coherent_amplitudes};
    use crate::quantum::{dense_hamiltonian, norm};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n_spins: u32, n_max: usize, seed: u64) -> QuantumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = (n_spins as usize + 1) * (n_max + 1);
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let n = norm(&v);
        QuantumState::from_coeffs(n_spins, n_max, v.into_iter().map(|c| c / n).collect())
    }

    #[test]
    fn south_pole_vacuum() {
        let psi = QuantumState::basis(6, 4, 0, 0);
        let r = observables(&psi, &HamiltonianAction::new(6, 4, 1.0, 1.0, 1.0));
        assert_eq!((r.sz, r.sz2, r.x, r.nbar), (-3.0, 9.0, 0.0, 0.0));
        assert!(r.svn.abs() < 1e-12);
    }

    #[test]
    fn coherent_boson_quadrature() {
        let alpha = 1.7;
        let boson = coherent_amplitudes(alpha, 60);
        let spin = spin_coherent_amplitudes(4, 0.0);
        let psi = QuantumState::product(4, &spin, &boson);
        let r = observables(&psi, &HamiltonianAction::new(4, 60, 1.0, 1.0, 1.0));
        assert_relative_eq!(r.x, alpha, max_relative = 1e-12);
        assert_relative_eq!(r.nbar, alpha * alpha, max_relative = 1e-12);
    }

    /// exp(iπ(S_x + a†a + N/2)) assembled densely from the eigenbasis of S_x.
    fn dense_parity(n_spins: u32, n_max: usize) -> DMatrix<Complex64> {
        let sx = dense_hamiltonian(&HamiltonianAction::new(n_spins, 0, 0.0, 0.0, 1.0));
        let eig = SymmetricEigen::new(sx);
        let d = n_spins as usize + 1;
        let mut rot = DMatrix::<Complex64>::zeros(d, d);
        for k in 0..d {
            let phase = Complex64::from_polar(1.0, std::f64::consts::PI * (eig.eigenvalues[k] + n_spins as f64 / 2.0));
            for i in 0..d {
                for j in 0..d {
                    rot[(i, j)] += phase * eig.eigenvectors[(i, k)] * eig.eigenvectors[(j, k)];
                }
            }
        }
        let b = n_max + 1;
        let mut out = DMatrix::<Complex64>::zeros(d * b, d * b);
        for i in 0..d {
            for j in 0..d {
                for n in 0..b {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    out[(i * b + n, j * b + n)] = rot[(i, j)] * sign;
                }
            }
        }
        out
    }

    #[test]
    fn parity_matches_dense_exponential() {
        for n_spins in [1u32, 2, 3, 5] {
            let psi = random_state(n_spins, 3, n_spins as u64);
            let p = dense_parity(n_spins, 3);
            let v = nalgebra::DVector::from_column_slice(psi.coeffs());
            let expect = (v.adjoint() * &p * &v)[(0, 0)];
            let r = observables(&psi, &HamiltonianAction::new(n_spins, 3, 0.0, 1.0, 0.0));
            assert!((r.parity - expect.re).abs() < 1e-12, "N = {n_spins}");
            assert!(expect.im.abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_of_product_and_bell_states() {
        let spin = spin_coherent_amplitudes(5, 0.8);
        let boson = coherent_amplitudes(1.2, 30);
        assert!(entanglement_entropy(&QuantumState::product(5, &spin, &boson)).abs() < 1e-12);

        let mut psi = QuantumState::zeros(3, 4);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        psi.coeffs_mut()[0] = Complex64::new(h, 0.0);
        psi.coeffs_mut()[2 * 5 + 1] = Complex64::new(0.0, h);
        assert_relative_eq!(entanglement_entropy(&psi), 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn schmidt_symmetry() {
        let psi = random_state(4, 9, 11);
        let rows = 5;
        let cols = 10;
        let c = DMatrix::from_row_slice(rows, cols, psi.coeffs());
        let entropy = |m: DMatrix<Complex64>| {
            SymmetricEigen::new(m)
                .eigenvalues
                .iter()
                .filter(|&&l| l > 1e-14)
                .map(|&l| -l * l.ln())
                .sum::<f64>()
        };
        let spin = entropy(&c * c.adjoint());
        let boson = entropy(c.adjoint() * &c);
        assert!((spin - boson).abs() < 1e-10);
        assert!((entanglement_entropy(&psi) - spin).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_basics() {
        let a = random_state(2, 3, 1);
        let b = random_state(2, 3, 2);
        assert!(trace_distance(&a, &a) < 1e-15);
        let d = trace_distance(&a, &b);
        let ov = dot(a.coeffs(), b.coeffs()).norm_sqr();
        assert_relative_eq!(d, (1.0 - ov).sqrt(), max_relative = 1e-10);
        let mut phased = a.clone();
        phased.coeffs_mut().iter_mut().for_each(|c| *c *= Complex64::from_polar(2.0, 0.3));
        assert!(trace_distance(&a, &phased) < 1e-15);
    }
}
