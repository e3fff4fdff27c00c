use fracfield::diagnostics::{
    bisect_mu, estimate_gn_constant, fit_decay, gn_ratio, k_star, local_l2, lyapunov_big_h, lyapunov_dissipation_check,
    steady_states, AlleeStates, C_GN_EMP, GN_REFERENCE_SEED,
};
use fracfield::fode::{solve_exact, LinearFode};
use fracfield::fractional::TimeGrid;
use fracfield::grid::{Domain, Field};
use fracfield::kernels::{build_kernel, KernelShape};
use fracfield::solver::{run, Competition, ModelParams, RunOptions, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn allee_roots_on_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..500 {
        let mu = rng.gen_range(0.01..10.0);
        let k = rng.gen_range(0.01..10.0);
        let gamma = rng.gen_range(0.0..1.0) * mu / (4.0 * k);
        if gamma == 0.0 {
            continue;
        }
        let s = AlleeStates::new(mu, k, gamma);
        assert!(s.valid);
        assert!(gamma / mu < s.a && s.a < s.big_a);
        for r in [s.a, s.big_a] {
            assert!((mu * r * (1.0 - k * r) - gamma).abs() <= 1e-12 * gamma.max(1.0));
        }
    }
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let s = steady_states(&p);
    assert!((s.a - 0.1127017).abs() < 1e-7 && (s.big_a - 0.8872983).abs() < 1e-7);
}

#[test]
fn k_star_is_monotone() {
    let mut last = 0.0;
    for mu in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let v = k_star(2, mu, 0.5, Some(C_GN_EMP)).unwrap();
        assert!(v > last);
        last = v;
    }
    assert!(k_star(2, 1.0, 0.4, Some(1.0)).unwrap() > k_star(2, 1.0, 0.5, Some(1.0)).unwrap());
    assert!(k_star(3, 1.0, 0.5, Some(1.0)).is_err());
}

#[test]
fn local_norm_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let dom = Domain::new(2, 3.0, 24).unwrap();
    let u = Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
    let (c, d) = ([0.5, -1.0], 0.8);
    let mut direct = 0.0;
    for i in 0..dom.len() {
        let p = dom.point(i);
        if (p[0] - c[0]).abs() < d && (p[1] - c[1]).abs() < d {
            direct += u.values()[i].powi(2);
        }
    }
    assert_eq!(local_l2(&u, c, d), direct * dom.cell_measure());
}

#[test]
fn lyapunov_value_is_non_negative_and_vanishes_only_at_zero() {
    let s = AlleeStates::new(1.0, 1.0, 0.1);
    let dom = Domain::new(1, 4.0, 64).unwrap();
    assert_eq!(lyapunov_big_h(&Field::zeros(dom), [0.0, 0.0], 0.5, &s).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        let u = Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(0.0..0.99 * s.a)).collect()).unwrap();
        assert!(lyapunov_big_h(&u, [0.0, 0.0], 0.5, &s).unwrap() > 0.0);
    }
    assert!(lyapunov_big_h(&Field::constant(dom, s.a), [0.0, 0.0], 0.5, &s).is_err());
    let invalid = AlleeStates::new(1.0, 1.0, 0.3);
    assert!(lyapunov_big_h(&Field::zeros(dom), [0.0, 0.0], 0.5, &invalid).is_err());
}

#[test]
fn dissipation_of_the_zero_run() {
    let dom = Domain::new(1, 4.0, 64).unwrap();
    let j = build_kernel(KernelShape::Box { radius: 0.5 }, dom, None).unwrap();
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let opts = RunOptions {
        keep_history: true,
        ..Default::default()
    };
    let rec = run(&Field::zeros(dom), &p, &Competition::Kernel(j), 0.2, 0.01, &opts).unwrap();
    let r = lyapunov_dissipation_check(&rec, &[[0.0, 0.0], [1.0, 0.0]], 0.1).unwrap();
    assert!(r.passed && r.max_margin <= 0.0);
}

#[test]
fn dissipation_requires_the_sub_threshold_regime() {
    let dom = Domain::new(1, 16.0, 128).unwrap();
    let j = build_kernel(KernelShape::Box { radius: 0.5 }, dom, None).unwrap();
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let opts = RunOptions {
        keep_history: true,
        ..Default::default()
    };
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 0.5).unwrap();
    let rec = run(&u0, &p, &Competition::Kernel(j), 0.1, 0.01, &opts).unwrap();
    assert!(lyapunov_dissipation_check(&rec, &[[0.0, 0.0]], 0.1).is_err());
    let mut no_history = rec.clone();
    no_history.history = None;
    assert!(lyapunov_dissipation_check(&no_history, &[[0.0, 0.0]], 0.1).is_err());
}

#[test]
fn pure_decay_reproduces_the_scalar_solution() {
    let (alpha, gamma, c, dt, horizon) = (0.5, 0.5, 0.7, 1e-3, 2.0);
    let dom = Domain::new(1, 4.0, 16).unwrap();
    let p = ModelParams::standard(alpha, 0.0, 1.0, gamma).unwrap();
    let opts = RunOptions {
        seam_tolerance: 1.0,
        ..Default::default()
    };
    let rec = run(&Field::constant(dom, c), &p, &Competition::Global, horizon, dt, &opts).unwrap();
    let grid = TimeGrid::covering(horizon, dt).unwrap();
    let exact = solve_exact(&LinearFode::relaxation(alpha, gamma, c).unwrap(), &grid).unwrap();
    assert_eq!(exact.len(), rec.diagnostics.len());
    for (d, e) in rec.diagnostics.iter().zip(&exact) {
        if d.t >= 0.5 * horizon {
            assert!((d.sup_norm - e).abs() <= 1e-3 * e);
        }
    }
    let fit = fit_decay(&rec).unwrap();
    assert_eq!(fit.sigma, gamma);
    assert!(fit.violation.abs() <= 1e-2);

    let zero = run(&Field::zeros(dom), &p, &Competition::Global, 0.1, 0.01, &opts).unwrap();
    assert_eq!(fit_decay(&zero).unwrap().violation, 0.0);
}

#[test]
fn growing_runs_are_rejected_by_the_decay_fit() {
    let dom = Domain::new(1, 16.0, 128).unwrap();
    let j = build_kernel(KernelShape::Box { radius: 1.0 }, dom, None).unwrap();
    let p = ModelParams::standard(0.5, 5.0, 0.5, 0.5).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 1.0, 1.0).unwrap();
    let rec = run(&u0, &p, &Competition::Kernel(j), 0.5, 0.01, &RunOptions::default()).unwrap();
    assert_eq!(rec.termination, Termination::Completed);
    assert!(fit_decay(&rec).is_err());
}

#[test]
fn gagliardo_nirenberg_sampler() {
    let dom = Domain::new(2, 4.0, 64).unwrap();
    let mode = Field::from_fn(dom, |x| (std::f64::consts::PI / 4.0 * x[0]).cos()).unwrap();
    let r = gn_ratio(&mode).unwrap();
    assert!(r.is_finite() && r > 0.0);
    assert!(gn_ratio(&Field::zeros(dom)).is_none());
    let mut last = 0.0;
    for n in [5, 20, 80] {
        let v = estimate_gn_constant(dom, n, 9).unwrap();
        assert!(v >= last);
        last = v;
    }
    assert_eq!(estimate_gn_constant(dom, 200, GN_REFERENCE_SEED).unwrap(), C_GN_EMP);
}

#[test]
fn bisection_reports_failure_at_the_lower_end() {
    assert_eq!(bisect_mu(0.1, 1.0, 10, |_| Ok(false)).unwrap(), None);
    assert_eq!(bisect_mu(0.1, 1.0, 10, |_| Ok(true)).unwrap(), Some(1.0));
    assert!(bisect_mu(1.0, 0.5, 10, |_| Ok(true)).is_err());
}
