use fracfield::diagnostics::steady_states;
use fracfield::grid::{Domain, Field, Fourier};
use fracfield::kernels::{build_kernel, KernelShape};
use fracfield::mlf::mittag_leffler;
use fracfield::solver::{
    operator_bound_check, positivity_dt_bound, run, run_spectral, shifted_laplacian_residual, step_imex,
    step_nonlinear_diffusion, Competition, ModelParams, RunOptions, Termination,
};
use fracfield::special::gamma;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn box_kernel(dom: Domain, radius: f64) -> Competition {
    Competition::Kernel(build_kernel(KernelShape::Box { radius }, dom, None).unwrap())
}

fn no_seam() -> RunOptions {
    RunOptions {
        seam_tolerance: 1.0,
        keep_history: true,
        ..Default::default()
    }
}

fn max_step_change(levels: &[Field]) -> f64 {
    levels
        .windows(2)
        .flat_map(|w| w[0].values().iter().zip(w[1].values()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn constant_states_are_fixed_by_both_integrators() {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let s = steady_states(&p);
    for (dim, m) in [(1, 64), (2, 32)] {
        let dom = Domain::new(dim, 6.0, m).unwrap();
        let comp = box_kernel(dom, 1.0);
        for c in [0.0, s.a, s.big_a] {
            let u0 = Field::constant(dom, c);
            for rec in [
                run(&u0, &p, &comp, 1.0, 0.01, &no_seam()).unwrap(),
                run_spectral(&u0, &p, &comp, 1.0, 0.01, &no_seam()).unwrap(),
            ] {
                let h = rec.history.unwrap();
                assert_eq!(h.len(), 101);
                assert!(max_step_change(&h) <= 1e-9, "c = {c}");
            }
        }
    }
}

#[test]
fn implicit_solve_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dom = Domain::new(2, 3.0, 32).unwrap();
    let fourier = Fourier::new(dom);
    for _ in 0..10 {
        let rhs: Vec<f64> = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = rng.gen_range(0.5..50.0);
        let mut spec = fourier.forward(&rhs);
        for (v, l) in spec.iter_mut().zip(dom.stencil_symbol()) {
            *v /= shift + l;
        }
        let v = fourier.inverse(spec);
        assert!(shifted_laplacian_residual(&dom, shift, &v, &rhs) <= 1e-10);
    }
}

#[test]
fn degenerate_stepper_at_unit_exponent_matches_the_linear_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for (dim, m) in [(1, 64), (2, 24)] {
        let dom = Domain::new(dim, 4.0, m).unwrap();
        let p = ModelParams::nonlinear_diffusion(0.6, 0.8, 0.7, 0.3, 1.0).unwrap();
        let q = ModelParams::standard(0.6, 0.8, 0.7, 0.3).unwrap();
        for len in [1, 2, 5] {
            let hist: Vec<Field> = (0..len)
                .map(|_| Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(0.0..0.5)).collect()).unwrap())
                .collect();
            let a = step_nonlinear_diffusion(&hist, &p, 0.01).unwrap();
            let b = step_imex(&hist, &q, &Competition::Global, 0.01).unwrap();
            let worst = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-9, "{worst:e}");
        }
    }
}

#[test]
fn zero_state_of_the_degenerate_variant() {
    let dom = Domain::new(1, 4.0, 32).unwrap();
    let p = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 2.5).unwrap();
    let mut hist = vec![Field::zeros(dom)];
    for _ in 0..10 {
        let next = step_nonlinear_diffusion(&hist, &p, 0.01).unwrap();
        assert!(next.values().iter().all(|v| *v == 0.0));
        hist.push(next);
    }
    let q = ModelParams::standard(0.5, 1.0, 1.0, 1.0).unwrap();
    assert!(step_nonlinear_diffusion(&hist, &q, 0.01).is_err());
}

#[test]
fn single_mode_decays_by_the_relaxation_multiplier() {
    let dom = Domain::new(1, 3.0, 64).unwrap();
    let xi = std::f64::consts::PI / 3.0 * 2.0;
    let p = ModelParams::standard(0.6, 0.0, 0.0, 0.0).unwrap();
    let u0 = Field::from_fn(dom, |x| 1.0 + 0.5 * (xi * x[0]).cos()).unwrap();
    let rec = run_spectral(&u0, &p, &Competition::Global, 1.0, 0.05, &no_seam()).unwrap();
    let h = rec.history.unwrap();
    assert_eq!(h[0].values(), u0.values());
    for (n, f) in h.iter().enumerate() {
        let e = mittag_leffler(0.6, 1.0, -xi * xi * (n as f64 * 0.05).powf(0.6)).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            let x = dom.coord(i);
            assert!((v - (1.0 + 0.5 * e * (xi * x).cos())).abs() < 1e-12);
        }
    }
}

#[test]
fn classical_limit_of_the_spectral_path() {
    let dom = Domain::new(1, 3.0, 64).unwrap();
    let p = ModelParams::standard(1.0, 0.0, 0.0, 0.0).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 1.5, 1.0).unwrap();
    let rec = run_spectral(&u0, &p, &Competition::Global, 0.5, 0.05, &no_seam()).unwrap();
    let fourier = Fourier::new(dom);
    let spec0 = fourier.forward(u0.values());
    let lambdas = dom.wavenumbers_squared();
    let exact: Vec<f64> = fourier.inverse(spec0.iter().zip(&lambdas).map(|(c, l)| c * (-l * 0.5).exp()).collect());
    let last = rec.history.unwrap().pop().unwrap();
    let worst = last
        .values()
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn integrators_agree_on_a_smooth_problem() {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let dom = Domain::new(1, 8.0, 128).unwrap();
    let comp = box_kernel(dom, 1.0);
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 1.0).unwrap();
    let opts = RunOptions {
        seam_tolerance: 1.0,
        ..Default::default()
    };
    let a = run(&u0, &p, &comp, 2.0, 0.005, &opts).unwrap();
    let b = run_spectral(&u0, &p, &comp, 2.0, 0.005, &opts).unwrap();
    assert_eq!(a.diagnostics.len(), b.diagnostics.len());
    for (x, y) in a.diagnostics.iter().zip(&b.diagnostics) {
        assert!((x.sup_norm - y.sup_norm).abs() <= 0.02 * y.sup_norm, "t = {}", x.t);
    }
}

#[test]
fn suppression_free_growth_blows_up() {
    let dom = Domain::new(1, 16.0, 256).unwrap();
    let p = ModelParams::standard(0.5, 5.0, 0.0, 0.0).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 2.0).unwrap();
    let rec = run(&u0, &p, &box_kernel(dom, 1.0), 1.0, 1e-3, &RunOptions::default()).unwrap();
    match rec.termination {
        Termination::BlowUp { certified, norm, .. } => {
            assert!(certified);
            assert!(norm > 1e6);
            assert_eq!(rec.sup_norm_max(), norm);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(rec.termination.label(), "blow_up");
}

#[test]
fn records_are_well_formed() {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let dom = Domain::new(1, 16.0, 128).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 0.8).unwrap();
    let opts = RunOptions {
        snapshot_times: vec![0.0, 0.25, 1.0, 7.0],
        ..Default::default()
    };
    let rec = run(&u0, &p, &box_kernel(dom, 1.0), 1.0, 0.01, &opts).unwrap();
    assert_eq!(rec.termination, Termination::Completed);
    assert_eq!(rec.diagnostics.len(), 101);
    assert!(rec.diagnostics.windows(2).all(|w| w[1].t > w[0].t));
    assert!(rec
        .diagnostics
        .iter()
        .all(|d| d.sup_norm.is_finite() && d.mass.is_finite() && d.local_l2.is_finite()));
    let times: Vec<f64> = rec.snapshots.iter().map(|s| s.0).collect();
    assert_eq!(times.len(), 3);
    assert!((times[1] - 0.25).abs() < 1e-12 && (times[2] - 1.0).abs() < 1e-12);
    assert_eq!(rec.clamp_events, 0);
}

#[test]
fn run_preconditions() {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
    let dom = Domain::new(1, 4.0, 64).unwrap();
    let comp = box_kernel(dom, 0.5);
    let u0 = Field::bump(dom, [0.0, 0.0], 1.0, 0.5).unwrap();
    let o = RunOptions::default();
    assert!(run(&u0, &p, &comp, 1.0, 0.0, &o).is_err());
    assert!(run(&u0, &p, &comp, -1.0, 0.01, &o).is_err());
    let edge = Field::bump(dom, [3.5, 0.0], 0.5, 1.0).unwrap();
    assert!(run(&edge, &p, &comp, 1.0, 0.01, &o).is_err());
    let neg = Field::constant(dom, -0.1);
    assert!(run(&neg, &p, &comp, 1.0, 0.01, &o).is_err());
    let nl = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 2.0).unwrap();
    assert!(run_spectral(&u0, &nl, &Competition::Global, 1.0, 0.01, &o).is_err());
}

#[test]
fn mass_reaching_the_faces_stops_the_run() {
    let p = ModelParams::standard(0.5, 0.0, 0.0, 0.0).unwrap();
    let dom = Domain::new(1, 4.0, 64).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 1.0, 1.0).unwrap();
    let rec = run(&u0, &p, &box_kernel(dom, 0.5), 5.0, 0.01, &RunOptions::default()).unwrap();
    assert!(matches!(rec.termination, Termination::SeamViolation { .. }));
}

#[test]
fn positivity_bound_keeps_states_non_negative() {
    assert_eq!(positivity_dt_bound(0.5, 1.0, 0.5, 1.0, 1.0).unwrap(), f64::INFINITY);
    // dense global coupling with mass well above one
    let dom = Domain::new(1, 16.0, 128).unwrap();
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 3.0).unwrap();
    let p = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 2.0).unwrap();
    let dt = positivity_dt_bound(0.5, 1.0, 1.0, u0.sup_norm(), u0.mass()).unwrap();
    assert!(dt.is_finite() && dt > 0.0);
    let safe = run(&u0, &p, &Competition::Global, 0.05, 0.5 * dt, &RunOptions::default()).unwrap();
    assert_eq!(safe.clamp_events, 0);
    let coarse = run(&u0, &p, &Competition::Global, 0.5, 0.05, &RunOptions::default()).unwrap();
    assert!(coarse.clamp_events > 0);
}

#[test]
fn solution_operators_are_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (dim, m) in [(1, 64), (2, 32)] {
        let dom = Domain::new(dim, 4.0, m).unwrap();
        for alpha in [0.3, 0.5, 0.9] {
            for t in [0.0, 0.01, 0.1, 1.0, 10.0, 1e3] {
                let phi = Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
                let r = operator_bound_check(&phi, t, alpha).unwrap();
                assert!(r.passed, "{r:?}");
                assert!(r.s_ratio <= 1.0 + 1e-9 && r.k_ratio <= 1.0 / gamma(alpha) + 1e-9);
            }
        }
    }
    // mean-zero data: every mode decays
    let dom = Domain::new(1, 4.0, 64).unwrap();
    let phi = Field::from_fn(dom, |x| (std::f64::consts::PI * x[0] / 4.0).sin()).unwrap();
    let r = operator_bound_check(&phi, 1e8, 0.5).unwrap();
    assert!(r.s_ratio < 1e-3 && r.k_ratio < 1e-3);
}
