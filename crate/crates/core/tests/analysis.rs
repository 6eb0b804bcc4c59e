use dicke_core::analysis::{
    feasibility_ratios, fit_exponential_saturation, fit_translated_logistic, temporal_fluctuations,
    windowed_time_average,
};
use proptest::prelude::*;

fn grid(t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t1 * i as f64 / n as f64).collect()
}

fn wave(t: &[f64], a: f64, w: f64, c: f64) -> Vec<f64> {
    t.iter().map(|&x| c + a * (w * x).sin()).collect()
}

proptest! {
    #[test]
    fn average_is_linear(
        a in -3.0f64..3.0, b in -3.0f64..3.0,
        w1 in 0.1f64..5.0, w2 in 0.1f64..5.0,
        t0 in 0.0f64..40.0, span in 1.0f64..50.0,
    ) {
        let t = grid(100.0, 1000);
        let y1 = wave(&t, 1.0, w1, 0.3);
        let y2 = wave(&t, 2.0, w2, -1.0);
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
        let lhs = windowed_time_average(&t, &mix, t0, span).unwrap();
        let rhs = a * windowed_time_average(&t, &y1, t0, span).unwrap()
            + b * windowed_time_average(&t, &y2, t0, span).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn average_is_shift_invariant(shift in -50.0f64..50.0, t0 in 0.0f64..40.0, span in 1.0f64..50.0, w in 0.1f64..5.0) {
        let t = grid(100.0, 1000);
        let y = wave(&t, 1.5, w, 0.2);
        let shifted: Vec<f64> = t.iter().map(|x| x + shift).collect();
        let a = windowed_time_average(&t, &y, t0, span).unwrap();
        let b = windowed_time_average(&shifted, &y, t0 + shift, span).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn fluctuations_non_negative(c in -5.0f64..5.0, a in 0.0f64..3.0, w in 0.1f64..5.0, t0 in 0.0f64..40.0) {
        prop_assume!(c.abs() > 1e-3);
        let t = grid(100.0, 1000);
        let y = wave(&t, a, w, c);
        if let Ok(f) = temporal_fluctuations(&t, &y, t0, 50.0) {
            prop_assert!(f >= 0.0);
        }
    }

    #[test]
    fn exponential_fit_is_scale_equivariant(gamma in 0.02f64..0.5, amp in 0.5f64..5.0, k in 0.01f64..100.0) {
        let t = grid(60.0, 240);
        let y: Vec<f64> = t.iter().map(|&x| amp * (1.0 - (-gamma * x).exp()) * (1.0 + 0.02 * (1.7 * x).sin())).collect();
        let ky: Vec<f64> = y.iter().map(|v| k * v).collect();
        let (f1, f2) = (fit_exponential_saturation(&t, &y), fit_exponential_saturation(&t, &ky));
        prop_assert!(f1.converged && f2.converged);
        prop_assert!(((f1.gamma_effective - f2.gamma_effective) / f1.gamma_effective).abs() < 1e-9);
        prop_assert!((f2.params["A"] / f1.params["A"] - k).abs() < 1e-9 * k);
    }

    #[test]
    fn logistic_fit_is_scale_equivariant(
        c in 0.1f64..1.0,
        t0 in 5.0f64..20.0,
        a in 0.5f64..5.0,
        k in 0.01f64..100.0,
    ) {
        let t = grid(60.0, 240);
        let y: Vec<f64> = t
            .iter()
            .map(|&x| (a / (1.0 + (-c * (x - t0)).exp()) - a / (1.0 + (c * t0).exp())) * (1.0 + 0.02 * (1.7 * x).sin()))
            .collect();
        let ky: Vec<f64> = y.iter().map(|v| k * v).collect();
        let (f1, f2) = (fit_translated_logistic(&t, &y), fit_translated_logistic(&t, &ky));
        prop_assert!(f1.converged && f2.converged);
        prop_assert!(((f1.gamma_effective - f2.gamma_effective) / f1.gamma_effective).abs() < 1e-9);
        prop_assert!((f2.params["a"] / f1.params["a"] - k).abs() < 1e-9 * k);
        prop_assert!((f2.params["b"] - k * f1.params["b"]).abs() < 1e-9 * k * f1.params["a"]);
    }

    #[test]
    fn feasibility_product(two_g in 1.0f64..1e6, gamma in 1e-2f64..1e4, eta in 1e-3f64..1e3) {
        let (d, o) = feasibility_ratios(two_g, gamma, eta).unwrap();
        let r = two_g / gamma;
        prop_assert!((d * o - r * r).abs() <= 4.0 * f64::EPSILON * r * r);
    }
}
