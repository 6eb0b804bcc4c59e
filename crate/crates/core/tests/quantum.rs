use dicke_core::classical::{integrate, Couplings};
use dicke_core::model::{
    build_initial_classical, build_initial_quantum, fock_cutoff, from_dimensionless, spin_coherent_amplitudes,
    DimensionlessView, InitialCondition, ModelParams,
};
use dicke_core::quantum::{
    dense_hamiltonian, entanglement_entropy, krylov_step, observables, propagate_adaptive, HamiltonianAction,
    KrylovSettings, PropagationSettings, QuantumState,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_state(n_spins: u32, n_max: usize, seed: u64) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = (n_spins as usize + 1) * (n_max + 1);
    let coeffs = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut psi = QuantumState::from_coeffs(n_spins, n_max, coeffs);
    psi.normalize();
    psi
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn params(g_tilde: f64, eta: f64, n_spins: u32) -> ModelParams {
    from_dimensionless(&DimensionlessView::new(g_tilde, eta).unwrap(), 1.0)
        .unwrap()
        .with_spins(n_spins)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_is_hermitian(n_spins in 1u32..8, n_max in 0usize..12, seed in any::<u64>(), g in 0.0f64..3.0) {
        let h = HamiltonianAction::new(n_spins, n_max, g, 0.7, 1.9);
        let a = random_state(n_spins, n_max, seed);
        let b = random_state(n_spins, n_max, seed ^ 0x5555);
        let lhs = inner(a.coeffs(), &h.apply_vec(b.coeffs()));
        let rhs = inner(&h.apply_vec(a.coeffs()), b.coeffs());
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        let m = dense_hamiltonian(&h);
        prop_assert!((&m - m.transpose()).amax() == 0.0);
    }

    #[test]
    fn krylov_step_is_unitary(n_spins in 1u32..10, n_max in 1usize..20, seed in any::<u64>(), dt in 0.01f64..5.0) {
        let h = HamiltonianAction::new(n_spins, n_max, 1.0, 1.3, 0.6);
        let psi = random_state(n_spins, n_max, seed);
        let out = krylov_step(&h, psi.coeffs(), dt, &KrylovSettings::default()).unwrap();
        let norm: f64 = out.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entropy_within_bounds(n_spins in 1u32..10, n_max in 0usize..15, seed in any::<u64>()) {
        let psi = random_state(n_spins, n_max, seed);
        let s = entanglement_entropy(&psi);
        let bound = ((n_spins as f64 + 1.0).ln()).min((n_max as f64 + 1.0).ln());
        prop_assert!(s >= 0.0 && s <= bound + 1e-12, "{s} vs {bound}");
    }

    #[test]
    fn variance_is_non_negative(n_spins in 1u32..10, n_max in 0usize..10, seed in any::<u64>()) {
        let psi = random_state(n_spins, n_max, seed);
        let r = observables(&psi, &HamiltonianAction::new(n_spins, n_max, 1.0, 1.0, 1.0));
        prop_assert!(r.sz_var() >= -1e-10);
    }

    #[test]
    fn initial_state_is_normalised(alpha in 0.0f64..8.0, theta0 in -1.5f64..1.5, n_spins in 1u32..30) {
        let eps = 1e-6;
        let p = params(1.0, 1.0, n_spins);
        let psi = build_initial_quantum(&p, &InitialCondition::with_alpha(theta0, alpha).unwrap(), eps).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
        let (_, tail) = fock_cutoff(alpha, eps, 4096).unwrap();
        prop_assert!(tail <= eps);
    }
}

#[test]
fn coherent_spin_points_along_tilt() {
    for n_spins in [1u32, 4, 17, 60] {
        for theta0 in [-1.2, -0.3, 0.0, 0.7, 1.4] {
            let c = spin_coherent_amplitudes(n_spins, theta0);
            let s = n_spins as f64 / 2.0;
            let mut sz = 0.0;
            let mut s_plus = Complex64::new(0.0, 0.0);
            for k in 0..=n_spins as usize {
                let m = k as f64 - s;
                sz += m * c[k].norm_sqr();
                if k < n_spins as usize {
                    s_plus += c[k + 1].conj() * c[k] * (s * (s + 1.0) - m * (m + 1.0)).sqrt();
                }
            }
            assert!((sz / s + theta0.cos()).abs() < 1e-10, "N = {n_spins}, θ₀ = {theta0}");
            assert!((s_plus.re / s - theta0.sin()).abs() < 1e-10, "N = {n_spins}, θ₀ = {theta0}");
            assert!(s_plus.im.abs() < 1e-10);
        }
    }
}

#[test]
fn norm_deficit_bounded_by_discards() {
    let p = params(1.2, 0.8, 12);
    let psi0 = build_initial_quantum(&p, &InitialCondition::new(0.0, 1.0).unwrap(), 1e-6).unwrap();
    let traj = propagate_adaptive(&psi0, &p, 60.0, &PropagationSettings::default()).unwrap();
    let deficit = 1.0 - traj.meta.final_norm.powi(2);
    assert!(deficit.abs() <= traj.meta.total_discarded_norm + 1e-10);
    for r in &traj.records {
        let bound = (13f64).ln();
        assert!(r.svn >= 0.0 && r.svn <= bound + 1e-12);
        assert!(r.sz_var() >= -1e-10);
    }
}

#[test]
fn tilted_start_follows_mean_field() {
    let (g_tilde, eta, theta0, t) = (0.8, 1.0, 0.6, 3.0);
    let ic = InitialCondition::new(theta0, 1.0).unwrap();
    let view = DimensionlessView::new(g_tilde, eta).unwrap();
    let classical = integrate(
        &build_initial_classical(&ic, None).unwrap(),
        &Couplings::from_dimensionless(&view),
        t,
        1e-12,
        t,
    )
    .unwrap();
    let sz_cl = classical.states.last().unwrap().s[2];
    let mut errors = Vec::new();
    for n in [10u32, 20, 40] {
        let p = params(g_tilde, eta, n);
        let psi0 = build_initial_quantum(&p, &ic, 1e-8).unwrap();
        let s = PropagationSettings {
            sample_dt: t,
            eps: 1e-8,
            ..Default::default()
        };
        let traj = propagate_adaptive(&psi0, &p, t, &s).unwrap();
        let sz = traj.records.last().unwrap().sz / (n as f64 / 2.0);
        errors.push((sz - sz_cl).abs());
    }
    // Finite-N corrections shrink roughly as 1/√N.
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[2] < 0.6 * errors[0], "{errors:?}");
}
