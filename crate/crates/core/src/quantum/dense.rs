//! Brute-force reference: full matrix, eigendecomposition, exact phases.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{observables, HamiltonianAction, PropagationMeta, QuantumState, QuantumTrajectory};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DENSE_DIMENSION_CAP: usize = 2000;

/// Dense real symmetric matrix of `h`, assembled column by column from the matrix-free action.
pub fn dense_hamiltonian(h: &HamiltonianAction) -> DMatrix<f64> {
    let d = h.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut e = vec![Complex64::new(0.0, 0.0); d];
    for j in 0..d {
        e[j] = Complex64::new(1.0, 0.0);
        let col = h.apply_vec(&e);
        for (i, c) in col.iter().enumerate() {
            m[(i, j)] = c.re;
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    m
}

/// Exact evolution at the fixed cutoff of `psi0`, sampled every `sample_dt`.
pub fn dense_reference_evolve(
    psi0: &QuantumState,
    p: &ModelParams,
    t_final: f64,
    sample_dt: f64,
) -> Result<QuantumTrajectory> {
    let d = psi0.dim();
    if d > DENSE_DIMENSION_CAP {
        return Err(Error::DimensionTooLarge {
            dim: d,
            cap: DENSE_DIMENSION_CAP,
        });
    }
    if !(t_final >= 0.0 && sample_dt > 0.0) {
        return Err(Error::InvalidParameter("need t_final ≥ 0 and sample_dt > 0".into()));
    }
    let h = HamiltonianAction::new(psi0.n_spins(), psi0.n_max(), p.g, p.delta, p.omega);
    let eig = SymmetricEigen::new(dense_hamiltonian(&h));
    let q = &eig.eigenvectors;
    let proj: Vec<Complex64> = (0..d)
        .map(|j| (0..d).map(|i| psi0.coeffs()[i] * q[(i, j)]).sum())
        .collect();

    let at = |t: f64| -> QuantumState {
        let phased: Vec<Complex64> = proj
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t))
            .collect();
        let coeffs = (0..d)
            .map(|i| (0..d).map(|j| phased[j] * q[(i, j)]).sum())
            .collect();
        let mut s = QuantumState::from_coeffs(psi0.n_spins(), psi0.n_max(), coeffs);
        s.time = psi0.time + t;
        s
    };

    let mut times = sample_times(t_final, sample_dt);
    times.dedup();
    let mut records = Vec::with_capacity(times.len());
    let mut last = psi0.clone();
    for &t in &times {
        last = at(t);
        records.push(observables(&last, &h));
    }
    let n_max_history = vec![psi0.n_max(); times.len()];
    Ok(QuantumTrajectory {
        times: times.iter().map(|t| psi0.time + t).collect(),
        records,
        n_max_history,
        events: Vec::new(),
        meta: PropagationMeta::dense(d),
        final_state: last,
    })
}

/// `0, dt, 2dt, …` up to `t_final`, with `t_final` appended when it is not a multiple.
pub(crate) fn sample_times(t_final: f64, dt: f64) -> Vec<f64> {
    let k = (t_final / dt + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=k).map(|i| i as f64 * dt).collect();
    if t_final - out[k] > 1e-9 * dt {
        out.push(t_final);
    } else {
        out[k] = t_final;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_initial_quantum, InitialCondition};

    #[test]
    fn sample_grid() {
        assert_eq!(sample_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(sample_times(1.1, 0.5), vec![0.0, 0.5, 1.0, 1.1]);
        assert_eq!(sample_times(0.0, 0.5), vec![0.0]);
    }

    #[test]
    fn decoupled_precession_and_energy() {
        let p = ModelParams::new(0.0, 1.0, 0.8, Some(6)).unwrap();
        let psi0 = build_initial_quantum(&p, &InitialCondition::new(0.0, 0.0).unwrap(), 1e-6)
            .unwrap()
            .resized(4)
            .0;
        let traj = dense_reference_evolve(&psi0, &p, 10.0, 0.5).unwrap();
        for (t, r) in traj.times.iter().zip(&traj.records) {
            assert!((r.sz + 3.0 * (0.8 * t).cos()).abs() < 1e-10);
            assert!((r.energy - traj.records[0].energy).abs() < 1e-10);
        }
    }

    #[test]
    fn refuses_large_dimension() {
        let psi0 = QuantumState::zeros(40, 60);
        let p = ModelParams::new(1.0, 1.0, 1.0, Some(40)).unwrap();
        assert!(matches!(
            dense_reference_evolve(&psi0, &p, 1.0, 0.1),
            Err(Error::DimensionTooLarge { .. })
        ));
    }
}
