use fracfield::mlf::{
    gronwall_e, mittag_leffler, ml_decay_envelope, ml_eval, ml_eval_with, sector_constant, MlMethod, MlQuery,
};
use fracfield::special::{gamma, rgamma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

#[test]
fn automatic_route_agrees_with_integral_representation() {
    // above β = 1 + α/2 the integral route goes through the recurrence in β,
    // whose repeated division by z makes it a poor oracle for |z| < 1
    for alpha in [0.1, 0.2, 0.3, 0.45, 0.5, 0.55, 0.7, 0.8, 0.9, 0.95, 0.99] {
        for beta in [alpha, 1.0, 0.5, 1.3, alpha + 1.0, 1.9] {
            for x in log_grid(-3.0, 6.0, 45) {
                if beta >= 1.0 + 0.5 * alpha && x < 1.0 {
                    continue;
                }
                let q = MlQuery::new(alpha, beta, -x).unwrap();
                let auto = ml_eval(q).unwrap();
                let reference = ml_eval_with(q, MlMethod::Integral).unwrap();
                let rel = ((auto - reference) / reference).abs();
                let tol = if x <= 50.0 { 1e-9 } else { 1e-7 };
                assert!(rel <= tol, "E_{{{alpha},{beta}}}(-{x}): {auto} vs {reference}");
            }
        }
    }
}

#[test]
fn recurrence_identity_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.05..1.95);
        let beta = rng.gen_range(0.1..3.0);
        let z = if rng.gen_bool(0.8) {
            -(10f64.powf(rng.gen_range(-3.0..4.0)))
        } else {
            // keep e^{z^{1/α}} representable
            rng.gen_range(0.0..30f64.powf(alpha).min(5.0))
        };
        let lhs = mittag_leffler(alpha, beta, z).unwrap();
        let rhs = z * mittag_leffler(alpha, alpha + beta, z).unwrap() + rgamma(beta);
        assert!(
            (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0),
            "alpha={alpha} beta={beta} z={z}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn relaxation_function_is_completely_monotone_on_samples() {
    let ts = log_grid(-3.0, 6.0, 300);
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let e: Vec<f64> = ts.iter().map(|t| mittag_leffler(alpha, 1.0, -t).unwrap()).collect();
        assert!(e.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(e.windows(2).all(|p| p[1] < p[0]));
        for i in 1..ts.len() - 1 {
            let left = (e[i] - e[i - 1]) / (ts[i] - ts[i - 1]);
            let right = (e[i + 1] - e[i]) / (ts[i + 1] - ts[i]);
            assert!(right >= left, "alpha={alpha}: convexity fails at t={}", ts[i]);
        }
    }
}

#[test]
fn kernel_function_is_bounded_and_decreasing() {
    let ts = log_grid(-3.0, 6.0, 300);
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let e: Vec<f64> = ts.iter().map(|t| mittag_leffler(alpha, alpha, -t).unwrap()).collect();
        assert!(e.iter().all(|v| *v >= 0.0 && *v <= 1.0 / gamma(alpha)));
        assert!(e.windows(2).all(|p| p[1] <= p[0]));
    }
}

#[test]
fn sector_bound_with_frozen_constants() {
    // fitted once on this grid: the supremum of |E(-t)|(1+t) is attained at
    // t = 0 for both families, i.e. c = 1/Γ(β)
    let ts: Vec<f64> = std::iter::once(0.0).chain(log_grid(-3.0, 6.0, 360)).collect();
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        for beta in [1.0, alpha] {
            let c = 1.0 / gamma(beta);
            assert!(sector_constant(alpha, beta, &ts).unwrap() <= c * (1.0 + 1e-12));
        }
    }
}

#[test]
fn envelope_and_gronwall_examples() {
    assert!((ml_decay_envelope(1.0, 2.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-14);
    assert_eq!(ml_decay_envelope(0.3, 5.0, 0.0).unwrap(), 1.0);
    let v = ml_decay_envelope(0.5, 1.0, 4.0).unwrap();
    assert!((v - mittag_leffler(0.5, 1.0, -2.0).unwrap()).abs() < 1e-15);
    assert!(ml_decay_envelope(0.5, 0.0, 1.0).is_err());

    assert!((gronwall_e(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-14);
    assert_eq!(gronwall_e(0.5, 0.0).unwrap(), 1.0);
    assert!((gronwall_e(0.5, 4.0).unwrap() - mittag_leffler(0.5, 1.0, 2.0).unwrap()).abs() < 1e-12);
    assert!(gronwall_e(0.5, -1.0).is_err());
}

#[test]
fn envelope_is_non_increasing_in_time() {
    for alpha in [0.2, 0.6, 0.95] {
        let v: Vec<f64> = (0..400)
            .map(|i| ml_decay_envelope(alpha, 1.3, i as f64 * 0.05).unwrap())
            .collect();
        assert!(v.windows(2).all(|p| p[1] <= p[0]));
    }
}

#[test]
fn orders_above_one_are_covered_on_the_negative_axis() {
    for alpha in [1.1, 1.3, 1.5, 1.7, 1.9] {
        for beta in [0.5, 1.0, 1.5, 2.5] {
            for x in log_grid(0.0, 4.0, 40) {
                let q = MlQuery::new(alpha, beta, -x).unwrap();
                let auto = ml_eval(q).unwrap();
                let reference = ml_eval_with(q, MlMethod::Integral).unwrap();
                let tol = if x <= 50.0 { 1e-9 } else { 1e-7 };
                assert!(
                    (auto - reference).abs() <= tol * reference.abs().max(1e-3),
                    "E_{{{alpha},{beta}}}(-{x}): {auto} vs {reference}"
                );
            }
        }
    }
}
