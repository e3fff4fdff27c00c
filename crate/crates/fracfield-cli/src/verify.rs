//! Invariant suites. Each acceptance criterion is one function returning
//! named checks; `verify <suite>` runs a fixed group of them.

use std::f64::consts::PI;
use std::time::Instant;

use fracfield::diagnostics::{
    bisect_mu, estimate_gn_constant, fit_decay, k_star, lyapunov_dissipation_check, steady_states, GN_REFERENCE_SEED,
};
use fracfield::fode::{
    comparison_cap, quadratic_blow_up_time, solve_exact, solve_l1, solve_quadratic_l1, Forcing, LinearFode,
};
use fracfield::fractional::{caputo_l1, check_power_inequality, History, TimeGrid};
use fracfield::grid::{Domain, Field};
use fracfield::kernels::{build_kernel, KernelShape};
use fracfield::mlf::mittag_leffler;
use fracfield::solver::{
    operator_bound_check, run, run_spectral, step_imex, step_nonlinear_diffusion, Competition, ModelParams, RunOptions,
    RunRecord, Termination,
};
use fracfield::special::{gamma, rgamma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::num;

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
            passed: ok,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"name": self.name, "value": num(self.value), "limit": num(self.limit), "passed": self.passed})
    }
}

/// The checks of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// First failing check, for one-line summaries.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

type Checks = fracfield::Result<Vec<Check>>;

struct Criterion {
    id: u8,
    title: &'static str,
    budget: f64,
    body: fn() -> Checks,
}

const CRITERIA: [Criterion; 13] = [
    Criterion {
        id: 1,
        title: "Mittag-Leffler values and recurrence",
        budget: 5.0,
        body: mittag_leffler_values,
    },
    Criterion {
        id: 2,
        title: "Mittag-Leffler bound lemmas",
        budget: 10.0,
        body: bound_lemmas,
    },
    Criterion {
        id: 3,
        title: "L1 convergence order",
        budget: 10.0,
        body: l1_convergence,
    },
    Criterion {
        id: 4,
        title: "discrete power inequality",
        budget: 30.0,
        body: power_inequality,
    },
    Criterion {
        id: 5,
        title: "fractional ODE cross-validation",
        budget: 30.0,
        body: fode_cross_validation,
    },
    Criterion {
        id: 6,
        title: "steady states",
        budget: 60.0,
        body: steady_states_fixed,
    },
    Criterion {
        id: 7,
        title: "boundedness under competition",
        budget: 600.0,
        body: boundedness,
    },
    Criterion {
        id: 8,
        title: "blow-up contrast",
        budget: 60.0,
        body: blow_up_contrast,
    },
    Criterion {
        id: 9,
        title: "extinction envelope",
        budget: 300.0,
        body: extinction_envelope,
    },
    Criterion {
        id: 10,
        title: "Lyapunov dissipation",
        budget: 300.0,
        body: lyapunov_dissipation,
    },
    Criterion {
        id: 11,
        title: "nonlinear diffusion",
        budget: 600.0,
        body: nonlinear_diffusion,
    },
    Criterion {
        id: 12,
        title: "solution operator bounds",
        budget: 30.0,
        body: operator_bounds,
    },
    Criterion {
        id: 13,
        title: "integrator agreement",
        budget: 120.0,
        body: integrator_agreement,
    },
];

/// Runs criterion `id` (1 to 13) and appends its runtime check.
pub fn criterion(id: u8) -> Option<CriterionReport> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let mut checks = match (c.body)() {
        Ok(v) => v,
        Err(e) => vec![Check {
            name: format!("error: {e}"),
            value: f64::NAN,
            limit: f64::NAN,
            passed: false,
        }],
    };
    let seconds = start.elapsed().as_secs_f64();
    checks.push(Check::at_most("runtime_seconds", seconds, c.budget));
    Some(CriterionReport {
        id: c.id,
        title: c.title,
        checks,
        seconds,
    })
}

pub const SUITES: [&str; 7] = [
    "mlf",
    "fractional",
    "fode",
    "theorem1",
    "lyapunov",
    "boundedness",
    "allee",
];

/// Criteria run by a suite; `None` for an unknown name.
pub fn suite_criteria(suite: &str) -> Option<&'static [u8]> {
    Some(match suite {
        "mlf" => &[1, 2],
        "fractional" => &[3, 12, 13],
        "fode" => &[5],
        "theorem1" => &[4],
        "lyapunov" => &[10],
        "boundedness" => &[7, 8, 11],
        "allee" => &[6, 9],
        _ => return None,
    })
}

/// Runs a suite and returns its JSON verdict.
pub fn run_suite(suite: &str) -> Option<(bool, Value)> {
    let ids = suite_criteria(suite)?;
    let reports: Vec<CriterionReport> = ids.iter().filter_map(|&i| criterion(i)).collect();
    let passed = reports.iter().all(CriterionReport::passed);
    let checks: Vec<Value> = reports
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(move |c| {
                let mut v = c.to_json();
                v["criterion"] = json!(r.id);
                v
            })
        })
        .collect();
    Some((passed, json!({"suite": suite, "passed": passed, "checks": checks})))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn completed(rec: &RunRecord) -> bool {
    rec.termination == Termination::Completed
}

fn box_kernel(dom: Domain, radius: f64) -> fracfield::Result<Competition> {
    Ok(Competition::Kernel(build_kernel(
        KernelShape::Box { radius },
        dom,
        None,
    )?))
}

fn mittag_leffler_values() -> Checks {
    let mut out = vec![
        Check::at_most(
            "E_1,1(-1) - 1/e",
            (mittag_leffler(1.0, 1.0, -1.0)? - (-1.0f64).exp()).abs(),
            1e-10,
        ),
        Check::at_most(
            "|E_2,1(-(pi/2)^2)|",
            mittag_leffler(2.0, 1.0, -(PI / 2.0).powi(2))?.abs(),
            1e-10,
        ),
    ];
    let mut at_zero: f64 = 0.0;
    for alpha in [0.1, 0.5, 0.9, 1.5] {
        for beta in [0.5, 1.0, 1.7, 3.0] {
            at_zero = at_zero.max((mittag_leffler(alpha, beta, 0.0)? - rgamma(beta)).abs());
        }
    }
    out.push(Check::at_most("E(0) - 1/Gamma(beta)", at_zero, 1e-10));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.05..1.95);
        let beta = rng.gen_range(0.1..3.0);
        let z = if rng.gen_bool(0.8) {
            -(10f64.powf(rng.gen_range(-3.0..4.0)))
        } else {
            rng.gen_range(0.0..30f64.powf(alpha).min(5.0))
        };
        let lhs = mittag_leffler(alpha, beta, z)?;
        let rhs = z * mittag_leffler(alpha, alpha + beta, z)? + rgamma(beta);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    out.push(Check::at_most("recurrence residual (1000 samples)", worst, 1e-8));
    Ok(out)
}

fn bound_lemmas() -> Checks {
    let ts: Vec<f64> = std::iter::once(0.0).chain(log_grid(-3.0, 6.0, 360)).collect();
    let mut out = Vec::new();
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let e1: Vec<f64> = ts
            .iter()
            .map(|t| mittag_leffler(alpha, 1.0, -t))
            .collect::<Result<_, _>>()?;
        let ea: Vec<f64> = ts
            .iter()
            .map(|t| mittag_leffler(alpha, alpha, -t))
            .collect::<Result<_, _>>()?;
        let mut monotone = e1.windows(2).filter(|p| p[1] >= p[0]).count();
        monotone += e1.iter().filter(|v| !(**v > 0.0 && **v <= 1.0)).count();
        let mut convex = 0;
        for i in 2..ts.len() - 1 {
            let left = (e1[i] - e1[i - 1]) / (ts[i] - ts[i - 1]);
            let right = (e1[i + 1] - e1[i]) / (ts[i + 1] - ts[i]);
            if right < left {
                convex += 1;
            }
        }
        let cap = 1.0 / gamma(alpha);
        let kernel = ea.windows(2).filter(|p| p[1] > p[0]).count()
            + ea.iter()
                .filter(|v| !(**v >= 0.0 && **v <= cap * (1.0 + 1e-12)))
                .count();
        let mut sector = 0;
        for (beta, e) in [(1.0, &e1), (alpha, &ea)] {
            let c = 1.0 / gamma(beta);
            sector += ts
                .iter()
                .zip(e.iter())
                .filter(|(t, v)| v.abs() * (1.0 + *t) > c * (1.0 + 1e-12))
                .count();
        }
        out.push(Check::at_most(
            format!("alpha={alpha} monotone decay violations"),
            monotone as f64,
            0.0,
        ));
        out.push(Check::at_most(
            format!("alpha={alpha} convexity violations"),
            convex as f64,
            0.0,
        ));
        out.push(Check::at_most(
            format!("alpha={alpha} E_a,a bound violations"),
            kernel as f64,
            0.0,
        ));
        out.push(Check::at_most(
            format!("alpha={alpha} c/(1+t) violations"),
            sector as f64,
            0.0,
        ));
    }
    Ok(out)
}

fn l1_convergence() -> Checks {
    let mut out = Vec::new();
    for alpha in [0.3, 0.5, 0.7] {
        let exact = 2.0 / gamma(3.0 - alpha);
        let errs = (6..=10)
            .map(|p| {
                let grid = TimeGrid::covering(1.0, 2f64.powi(-p))?;
                let d = caputo_l1(&History::sample(grid, |t| t * t)?, alpha)?;
                Ok((d[grid.n_steps()] - exact).abs())
            })
            .collect::<fracfield::Result<Vec<f64>>>()?;
        let order = errs
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        out.push(Check::at_least(
            format!("alpha={alpha} observed order"),
            order,
            2.0 - alpha - 0.2,
        ));
    }
    Ok(out)
}

fn power_inequality() -> Checks {
    let dt = 1e-3;
    let grid = TimeGrid::covering(1.0, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    let mut tol = 0.0;
    let mut failures = 0;
    for case in 0..100 {
        let modes: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..12.0),
                    rng.gen_range(0.0..6.3),
                )
            })
            .collect();
        let trend = rng.gen_range(-1.0..1.0);
        let raw: Vec<f64> = grid
            .times()
            .map(|t| trend * t + modes.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum::<f64>())
            .collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = rng.gen_range(0.0..0.5);
        let h = History::new(grid, raw.iter().map(|v| v - lo + floor).collect())?;
        let r = check_power_inequality(&h, [0.3, 0.5, 0.7][case % 3], 2 + (case % 3) as u32)?;
        worst = worst.min(r.min_margin);
        tol = r.tolerance;
        failures += usize::from(!r.passed);
    }
    Ok(vec![
        Check::at_least("min margin over 100 series", worst, -tol),
        Check::at_most("failed series", failures as f64, 0.0),
    ])
}

/// Max relative deviation on `[T/2, T]`, away from the `t^α` start-up layer.
fn late_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    a.iter()
        .zip(b)
        .skip(n / 2)
        .map(|(x, y)| ((x - y) / x).abs())
        .fold(0.0, f64::max)
}

fn fode_cross_validation() -> Checks {
    let grid = TimeGrid::covering(1.0, 1e-3)?;
    let mut err: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7] {
        for coeff in [-1.0, -2.0] {
            for (eta, f) in [(1.0, 0.0), (0.0, 1.0), (2.0, 0.5)] {
                let p = LinearFode::new(alpha, coeff, eta, Forcing::Constant(f))?;
                err = err.max(late_relative_error(&solve_exact(&p, &grid)?, &solve_l1(&p, &grid)?));
            }
        }
    }
    let horizon = 4.0;
    let grid = TimeGrid::covering(horizon, 2e-3)?;
    let mut excess = f64::NEG_INFINITY;
    for alpha in [0.3, 0.5, 0.8] {
        for (c, b, w0) in [(1.0, 2.0, 1.0), (0.1, 1.0, 0.0), (3.0, 0.5, 2.0)] {
            let p = LinearFode::new(alpha, -c, w0, Forcing::Constant(b))?;
            let cap = comparison_cap(w0, b, alpha, horizon)?;
            for w in [solve_exact(&p, &grid)?, solve_l1(&p, &grid)?] {
                excess = excess.max(w.iter().copied().fold(f64::MIN, f64::max) - cap);
            }
        }
    }
    Ok(vec![
        Check::at_most("L1 vs exact relative error", err, 1e-3),
        Check::at_most("excess over comparison cap", excess, 1e-9),
    ])
}

fn unbounded_seam() -> RunOptions {
    RunOptions {
        seam_tolerance: 1.0,
        keep_history: true,
        ..Default::default()
    }
}

fn steady_states_fixed() -> Checks {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1)?;
    let s = steady_states(&p);
    let mut out = Vec::new();
    for (dim, m) in [(1, 128), (2, 64)] {
        let dom = Domain::new(dim, 6.0, m)?;
        let comp = box_kernel(dom, 1.0)?;
        for (label, c) in [("0", 0.0), ("a", s.a), ("A", s.big_a)] {
            let u0 = Field::constant(dom, c);
            for (name, rec) in [
                ("imex", run(&u0, &p, &comp, 1.0, 0.01, &unbounded_seam())?),
                ("spectral", run_spectral(&u0, &p, &comp, 1.0, 0.01, &unbounded_seam())?),
            ] {
                let h = rec.history.as_deref().unwrap_or_default();
                let change = h
                    .windows(2)
                    .flat_map(|w| w[0].values().iter().zip(w[1].values()).map(|(a, b)| (a - b).abs()))
                    .fold(0.0, f64::max);
                out.push(Check::at_most(
                    format!("N={dim} u={label} {name} step change"),
                    change,
                    1e-9,
                ));
                out.push(Check::at_least(
                    format!("N={dim} u={label} {name} steps"),
                    h.len() as f64 - 1.0,
                    100.0,
                ));
            }
        }
    }
    Ok(out)
}

/// Coarse and fine runs of a refinement study, run concurrently.
fn refinement_pair(
    coarse: impl FnOnce() -> fracfield::Result<RunRecord> + Send,
    fine: impl FnOnce() -> fracfield::Result<RunRecord> + Send,
) -> fracfield::Result<(RunRecord, RunRecord)> {
    let (a, b) = rayon::join(coarse, fine);
    Ok((a?, b?))
}

fn plateau_checks(label: &str, a: &RunRecord, b: &RunRecord, out: &mut Vec<Check>) {
    for (tag, r) in [("coarse", a), ("fine", b)] {
        out.push(Check::holds(
            format!("{label} {tag} completed ({})", r.termination.label()),
            completed(r),
        ));
        out.push(Check::at_most(
            format!("{label} {tag} clamp events"),
            r.clamp_events as f64,
            0.0,
        ));
    }
    out.push(Check::at_most(
        format!("{label} late sup plateau change under refinement"),
        rel_diff(late_plateau(a), late_plateau(b)),
        0.05,
    ));
}

/// Largest sup-norm over `[T/2, T]`; the initial value does not count.
fn late_plateau(r: &RunRecord) -> f64 {
    r.diagnostics
        .iter()
        .filter(|d| d.t >= 0.5 * r.horizon)
        .map(|d| d.sup_norm)
        .fold(f64::NAN, f64::max)
}

fn boundedness() -> Checks {
    let mut out = Vec::new();
    let horizon = 5.0;

    let p1 = ModelParams::standard(0.5, 5.0, 0.5, 0.5)?;
    let threshold1 = k_star(1, p1.mu, 1.0, None)?;
    out.push(Check::holds(
        format!("N=1 k = {} above k* = {threshold1}", p1.k),
        p1.k > threshold1,
    ));
    let one_d = |m: usize, dt: f64| -> fracfield::Result<RunRecord> {
        let dom = Domain::new(1, 32.0, m)?;
        let u0 = Field::bump(dom, [0.0, 0.0], 1.0, 1.0)?;
        run(&u0, &p1, &box_kernel(dom, 1.0)?, horizon, dt, &RunOptions::default())
    };
    let (a, b) = refinement_pair(|| one_d(128, 0.01), || one_d(256, 0.005))?;
    plateau_checks("N=1", &a, &b, &mut out);

    // k is fixed from the coarse lattice, whose η is the smaller one
    let coarse = Domain::new(2, 32.0, 64)?;
    let j = build_kernel(KernelShape::Box { radius: 2.0 }, coarse, None)?;
    let c_gn = estimate_gn_constant(coarse, 200, GN_REFERENCE_SEED)?;
    let (mu, gamma_) = (10.0, 0.001);
    let threshold = k_star(2, mu, j.eta(), Some(c_gn))?;
    let p2 = ModelParams::standard(0.5, mu, 2.0 * threshold, gamma_)?;
    out.push(Check::holds(
        format!("N=2 k = {} is twice k* (C_GN = {c_gn})", p2.k),
        p2.k > threshold,
    ));
    let two_d = |m: usize, dt: f64| -> fracfield::Result<RunRecord> {
        let dom = Domain::new(2, 32.0, m)?;
        let u0 = Field::bump(dom, [0.0, 0.0], 8.0, 0.8 / p2.k)?;
        let comp = box_kernel(dom, 2.0)?;
        if let Some(jf) = comp.kernel() {
            if p2.k <= k_star(2, mu, jf.eta(), Some(c_gn))? {
                return Err(fracfield::Error::Regime("k below threshold on the fine lattice".into()));
            }
        }
        run(&u0, &p2, &comp, horizon, dt, &RunOptions::default())
    };
    let (a, b) = refinement_pair(|| two_d(64, 0.01), || two_d(128, 0.005))?;
    plateau_checks("N=2 k=2k*", &a, &b, &mut out);
    Ok(out)
}

fn blow_up_contrast() -> Checks {
    let (alpha, mu, height) = (0.5, 5.0, 2.0);
    let dom = Domain::new(1, 16.0, 256)?;
    let p = ModelParams::standard(alpha, mu, 0.0, 0.0)?;
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, height)?;
    let rec = run(&u0, &p, &box_kernel(dom, 1.0)?, 1.0, 1e-3, &RunOptions::default())?;
    let mut out = Vec::new();
    let t_pde = match rec.termination {
        Termination::BlowUp { t, certified, .. } => {
            out.push(Check::holds("PDE blow-up certified", certified));
            t
        }
        ref other => {
            out.push(Check::holds(format!("PDE blow-up (got {})", other.label()), false));
            return Ok(out);
        }
    };
    let t_series = quadratic_blow_up_time(alpha, mu, height, 400)?.unwrap_or(f64::INFINITY);
    out.push(Check::at_most("series blow-up time of D^a w = mu w^2", t_series, 1.0));
    let grid = TimeGrid::covering(2.0 * t_series, t_series / 20_000.0)?;
    let t_step = solve_quadratic_l1(alpha, mu, height, &grid, 1e8)?
        .blow_up_time
        .unwrap_or(f64::INFINITY);
    out.push(Check::at_most(
        "stepper vs series blow-up time",
        rel_diff(t_step, t_series),
        0.02,
    ));
    // the ODE from the peak value is a supersolution: it cannot blow up later
    out.push(Check::at_least("PDE time / ODE time", t_pde / t_series, 1.0));
    Ok(out)
}

fn extinction_envelope() -> Checks {
    let mut out = Vec::new();

    // pure decay: spatially constant data, no growth
    let (alpha, gamma_, c, dt, horizon) = (0.5, 0.5, 0.7, 1e-3, 2.0);
    let dom = Domain::new(1, 4.0, 16)?;
    let p = ModelParams::standard(alpha, 0.0, 1.0, gamma_)?;
    let rec = run(
        &Field::constant(dom, c),
        &p,
        &Competition::Global,
        horizon,
        dt,
        &unbounded_seam(),
    )?;
    let exact = solve_exact(
        &LinearFode::relaxation(alpha, gamma_, c)?,
        &TimeGrid::covering(horizon, dt)?,
    )?;
    let sup: Vec<f64> = rec.diagnostics.iter().map(|d| d.sup_norm).collect();
    out.push(Check::at_most(
        "pure decay vs fractional ODE",
        late_relative_error(&exact, &sup),
        1e-3,
    ));

    // working point: largest μ whose run decays monotonically with σ > 0
    let dom = Domain::new(1, 32.0, 128)?;
    let comp = box_kernel(dom, 1.0)?;
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 0.2)?;
    let sim = |mu: f64| -> fracfield::Result<RunRecord> {
        run(
            &u0,
            &ModelParams::standard(0.5, mu, 1.0, 0.5)?,
            &comp,
            5.0,
            0.01,
            &RunOptions::default(),
        )
    };
    let regime = |mu: f64| -> fracfield::Result<bool> {
        let r = sim(mu)?;
        Ok(completed(&r) && fit_decay(&r).is_ok())
    };
    let Some(mu_star) = bisect_mu(0.05, 4.0, 8, regime)? else {
        out.push(Check::holds("extinction regime found", false));
        return Ok(out);
    };
    out.push(Check::at_least("located mu threshold", mu_star, 0.05));
    for (label, mu) in [("working point", mu_star), ("half working point", 0.5 * mu_star)] {
        let r = sim(mu)?;
        let fit = fit_decay(&r)?;
        out.push(Check::at_most(
            format!("{label} envelope violation (mu={mu:.4})"),
            fit.violation,
            0.05,
        ));
    }
    Ok(out)
}

fn lyapunov_dissipation() -> Checks {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1)?;
    let s = steady_states(&p);
    let dom = Domain::new(1, 16.0, 2048)?;
    let comp = Competition::Kernel(build_kernel(KernelShape::Box { radius: 0.5 }, dom, Some(0.25))?);
    let u0 = Field::bump(dom, [0.0, 0.0], 1.0, 0.1)?;
    let opts = RunOptions {
        keep_history: true,
        ..Default::default()
    };
    let rec = run(&u0, &p, &comp, 1.0, 1e-3, &opts)?;
    let probes: Vec<[f64; 2]> = (-8..=8).map(|i| [0.2 * i as f64, 0.0]).collect();
    let r = lyapunov_dissipation_check(&rec, &probes, 0.125)?;
    Ok(vec![
        Check::holds(format!("run completed ({})", rec.termination.label()), completed(&rec)),
        Check::at_most("sup norm / a", rec.sup_norm_max() / s.a, 1.0 - 1e-12),
        Check::at_most("delta smallness", r.smallness, 0.0),
        Check::holds("check not skipped", !r.skipped),
        Check::at_most("max dissipation margin", r.max_margin, r.tolerance),
    ])
}

fn nonlinear_diffusion() -> Checks {
    let mut out = Vec::new();
    let horizon = 5.0;
    let study = |dim: usize, m_exp: f64, points: usize, dt: f64| -> fracfield::Result<RunRecord> {
        let p = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, m_exp)?;
        p.check_dimension(dim)?;
        let dom = Domain::new(dim, 16.0, points)?;
        let u0 = if dim == 1 {
            Field::bump(dom, [0.0, 0.0], 1.0, 1.0)?
        } else {
            // keep the mass below one so the explicit reaction stays non-negative
            let unit = Field::bump(dom, [0.0, 0.0], 4.0, 1.0)?;
            Field::bump(dom, [0.0, 0.0], 4.0, 0.5 / unit.mass())?
        };
        run(&u0, &p, &Competition::Global, horizon, dt, &RunOptions::default())
    };
    for (dim, exponents, coarse) in [(1, &[2.0, 2.5, 3.0][..], 128), (2, &[1.5, 2.5][..], 64)] {
        for &m_exp in exponents {
            let (a, b) = refinement_pair(
                || study(dim, m_exp, coarse, 0.01),
                || study(dim, m_exp, 2 * coarse, 0.005),
            )?;
            plateau_checks(&format!("N={dim} m={m_exp}"), &a, &b, &mut out);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst: f64 = 0.0;
    for (dim, m) in [(1, 64), (2, 24)] {
        let dom = Domain::new(dim, 4.0, m)?;
        let p = ModelParams::nonlinear_diffusion(0.6, 0.8, 0.7, 0.3, 1.0)?;
        let q = ModelParams::standard(0.6, 0.8, 0.7, 0.3)?;
        for len in [1, 2, 5] {
            let hist = (0..len)
                .map(|_| Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(0.0..0.5)).collect()))
                .collect::<fracfield::Result<Vec<Field>>>()?;
            let a = step_nonlinear_diffusion(&hist, &p, 0.01)?;
            let b = step_imex(&hist, &q, &Competition::Global, 0.01)?;
            worst = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .fold(worst, f64::max);
        }
    }
    out.push(Check::at_most("m=1 stepper vs linear stepper", worst, 1e-9));
    Ok(out)
}

fn operator_bounds() -> Checks {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut s_excess = f64::NEG_INFINITY;
    let mut k_excess = f64::NEG_INFINITY;
    for (dim, m) in [(1, 64), (2, 32)] {
        let dom = Domain::new(dim, 4.0, m)?;
        for alpha in [0.3, 0.5, 0.9] {
            for t in [0.0, 0.01, 0.1, 1.0, 10.0, 1e3] {
                let phi = Field::new(dom, (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
                let r = operator_bound_check(&phi, t, alpha)?;
                s_excess = s_excess.max(r.s_ratio - 1.0);
                k_excess = k_excess.max(r.k_ratio - 1.0 / gamma(alpha));
            }
        }
    }
    Ok(vec![
        Check::at_most("S ratio - 1", s_excess, 1e-9),
        Check::at_most("K ratio - 1/Gamma(alpha)", k_excess, 1e-9),
    ])
}

fn integrator_agreement() -> Checks {
    let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1)?;
    let dom = Domain::new(1, 8.0, 128)?;
    let comp = box_kernel(dom, 1.0)?;
    let u0 = Field::bump(dom, [0.0, 0.0], 2.0, 1.0)?;
    let opts = RunOptions {
        seam_tolerance: 1.0,
        ..Default::default()
    };
    let (a, b) = refinement_pair(
        || run(&u0, &p, &comp, 2.0, 0.005, &opts),
        || run_spectral(&u0, &p, &comp, 2.0, 0.005, &opts),
    )?;
    let worst = a
        .diagnostics
        .iter()
        .zip(&b.diagnostics)
        .map(|(x, y)| rel_diff(x.sup_norm, y.sup_norm))
        .fold(0.0, f64::max);
    Ok(vec![
        Check::holds("both completed", completed(&a) && completed(&b)),
        Check::at_most("sup-norm curve relative gap", worst, 0.02),
    ])
}
