//! Time stepping for
//!
//! ```text
//! D^α u = Δu + μ u² (1 - k J∗u) - γ u                       (standard)
//! D^α u = ∇·((u+1)^{m-1} ∇u) + μ u² (1 - k ∫u) - γ u         (nonlinear diffusion)
//! ```
//!
//! on a periodic [`Domain`], by two independent integrators:
//!
//! * IMEX-L1: L1 in time, diffusion and death implicit, the quadratic and
//!   nonlocal terms explicit. The constant-coefficient solve is done exactly
//!   in Fourier space; the degenerate-diffusion solve uses preconditioned CG.
//! * Spectral fractional Duhamel: per Fourier mode,
//!   `û(t_n) = E_{α,1}(-λ t_n^α) û₀ + Σ_m ĥ_m W_λ(n-m)` with exact product
//!   weights for piecewise-constant `h`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::diagnostics::{local_l2, lyapunov_big_h, AlleeStates};
use crate::error::{require, Error, Result};
use crate::fractional::{l1_scale, l1_weights_closed, L1Weights};
use crate::grid::{apply_laplacian, Domain, Field, Fourier};
use crate::kernels::{convolve, seam_mass_fraction, Kernel};
use crate::mlf::mittag_leffler;

/// Which equation is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Standard,
    /// Mobility `(u+1)^{m-1}` and global coupling `J ≡ 1`.
    NonlinearDiffusion {
        m: f64,
    },
}

/// `(α, μ, k, γ)` and the variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub mu: f64,
    pub k: f64,
    pub gamma: f64,
    pub variant: Variant,
}

impl ModelParams {
    pub fn standard(alpha: f64, mu: f64, k: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            alpha,
            mu,
            k,
            gamma,
            variant: Variant::Standard,
        };
        p.check_common()?;
        Ok(p)
    }

    pub fn nonlinear_diffusion(alpha: f64, mu: f64, k: f64, gamma: f64, m: f64) -> Result<Self> {
        let p = Self {
            alpha,
            mu,
            k,
            gamma,
            variant: Variant::NonlinearDiffusion { m },
        };
        p.check_common()?;
        require(m.is_finite() && m > 0.0 && m <= 3.0, "m", m, "must lie in (0, 3]")?;
        Ok(p)
    }

    fn check_common(&self) -> Result<()> {
        require(
            self.alpha > 0.0 && self.alpha <= 1.0,
            "alpha",
            self.alpha,
            "must lie in (0, 1]",
        )?;
        require(
            self.mu >= 0.0 && self.mu.is_finite(),
            "mu",
            self.mu,
            "must be non-negative",
        )?;
        require(self.k >= 0.0 && self.k.is_finite(), "k", self.k, "must be non-negative")?;
        require(
            self.gamma >= 0.0 && self.gamma.is_finite(),
            "gamma",
            self.gamma,
            "must be non-negative",
        )?;
        Ok(())
    }

    /// Checks the exponent window `2 - 2/N < m ≤ 3` for the given dimension.
    /// `m = 1` passes as well: it is the linear-diffusion cross-check.
    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if let Variant::NonlinearDiffusion { m } = self.variant {
            let lo = 2.0 - 2.0 / dim as f64;
            require(
                m == 1.0 || (m > lo && m <= 3.0),
                "m",
                m,
                "must satisfy 2 - 2/N < m <= 3",
            )?;
        }
        Ok(())
    }
}

/// The nonlocal term: a kernel, or global mass coupling (`J ≡ 1`).
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Competition {
    Kernel(Kernel),
    Global,
}

impl Competition {
    fn apply(&self, u: &Field) -> Result<Vec<f64>> {
        match self {
            Competition::Kernel(j) => Ok(convolve(j, u)?.into_values()),
            Competition::Global => Ok(vec![u.mass(); u.values().len()]),
        }
    }

    fn check_domain(&self, dom: &Domain) -> Result<()> {
        match self {
            Competition::Kernel(j) => j.domain().same_as(dom),
            Competition::Global => Ok(()),
        }
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match self {
            Competition::Kernel(j) => Some(j),
            Competition::Global => None,
        }
    }
}

/// `μ u² (1 - k C(u))` (the death term is handled by each integrator).
fn growth(p: &ModelParams, u: &Field, comp: &Competition) -> Result<Vec<f64>> {
    let c = comp.apply(u)?;
    Ok(u.values()
        .iter()
        .zip(&c)
        .map(|(v, cv)| p.mu * v * v * (1.0 - p.k * cv))
        .collect())
}

/// `Σ_{i=1}^{n} b_i (u^{n+1-i} - u^{n-i})`, `n = levels.len() - 1`.
fn memory_term(b: &[f64], levels: &[Vec<f64>]) -> Vec<f64> {
    let n = levels.len() - 1;
    let mut out = vec![0.0; levels[0].len()];
    for i in 1..=n {
        let (hi, lo, bi) = (&levels[n + 1 - i], &levels[n - i], b[i]);
        for ((o, a), c) in out.iter_mut().zip(hi).zip(lo) {
            *o += bi * (a - c);
        }
    }
    out
}

/// Right-hand side `c₀ (uⁿ - Hⁿ) + μ (uⁿ)² (1 - k C(uⁿ))` of the implicit step.
fn imex_rhs(
    levels: &[Vec<f64>],
    b: &[f64],
    c0: f64,
    p: &ModelParams,
    dom: Domain,
    comp: &Competition,
) -> Result<Vec<f64>> {
    let n = levels.len() - 1;
    let h = memory_term(b, levels);
    let current = Field::from_raw(dom, levels[n].clone());
    let g = growth(p, &current, comp)?;
    Ok(levels[n]
        .iter()
        .zip(&h)
        .zip(&g)
        .map(|((u, m), r)| c0 * (u - m) + r)
        .collect())
}

/// Solves `(c₀ + γ) v - Δ_h v = rhs` exactly in Fourier space.
fn solve_shifted_laplacian(fourier: &Fourier, symbol: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let mut spec = fourier.forward(rhs);
    for (s, l) in spec.iter_mut().zip(symbol) {
        *s /= shift + l;
    }
    fourier.inverse(spec)
}

/// Residual of `s v - Δ_h v = rhs` relative to the norm of `rhs`.
pub fn shifted_laplacian_residual(dom: &Domain, shift: f64, v: &[f64], rhs: &[f64]) -> f64 {
    let mut lap = vec![0.0; v.len()];
    apply_laplacian(dom, v, &mut lap);
    let num: f64 = v
        .iter()
        .zip(&lap)
        .zip(rhs)
        .map(|((x, l), r)| (shift * x - l - r).powi(2))
        .sum();
    let den: f64 = rhs.iter().map(|r| r * r).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn check_history(history: &[Field], p: &ModelParams, dt: f64) -> Result<Domain> {
    require(dt > 0.0 && dt.is_finite(), "dt", dt, "must be positive")?;
    let first = history.first().ok_or(Error::ShortHistory { needed: 1, got: 0 })?;
    let dom = *first.domain();
    for f in history {
        dom.same_as(f.domain())?;
    }
    p.check_dimension(dom.dim())?;
    Ok(dom)
}

/// One IMEX-L1 step of the standard variant from the full history
/// `u⁰, …, uⁿ`; returns `uⁿ⁺¹`.
pub fn step_imex(history: &[Field], p: &ModelParams, comp: &Competition, dt: f64) -> Result<Field> {
    let dom = check_history(history, p, dt)?;
    comp.check_domain(&dom)?;
    let levels: Vec<Vec<f64>> = history.iter().map(|f| f.values().to_vec()).collect();
    let w = l1_weights_closed(p.alpha, levels.len());
    let c0 = l1_scale(p.alpha, dt);
    let rhs = imex_rhs(&levels, w.as_slice(), c0, p, dom, comp)?;
    let v = solve_shifted_laplacian(&Fourier::new(dom), &dom.stencil_symbol(), c0 + p.gamma, &rhs);
    Field::new(dom, v)
}

/// One step of the nonlinear-diffusion variant: lagged mobility
/// `(uⁿ+1)^{m-1}` averaged onto faces, conservative flux form, diffusion
/// and death implicit, growth `μ u² (1 - k ∫u)` explicit.
pub fn step_nonlinear_diffusion(history: &[Field], p: &ModelParams, dt: f64) -> Result<Field> {
    let m = match p.variant {
        Variant::NonlinearDiffusion { m } => m,
        Variant::Standard => {
            return Err(Error::Regime(
                "standard variant passed to the degenerate stepper".into(),
            ))
        }
    };
    let dom = check_history(history, p, dt)?;
    if history.iter().flat_map(|f| f.values()).any(|v| *v < 0.0) {
        return Err(Error::Regime("nonlinear diffusion needs a non-negative history".into()));
    }
    let levels: Vec<Vec<f64>> = history.iter().map(|f| f.values().to_vec()).collect();
    let w = l1_weights_closed(p.alpha, levels.len());
    let c0 = l1_scale(p.alpha, dt);
    let rhs = imex_rhs(&levels, w.as_slice(), c0, p, dom, &Competition::Global)?;
    let op = MobilityOperator::new(&dom, levels.last().unwrap(), m, c0 + p.gamma);
    let v = op.solve(&rhs, levels.last().unwrap())?;
    Field::new(dom, v)
}

/// `A v = s v - ∇_h·(D ∇_h v)` with face-averaged mobility.
struct MobilityOperator {
    dom: Domain,
    shift: f64,
    /// Face coefficient to the +1 neighbour along each axis, divided by h².
    faces: [Vec<f64>; 2],
}

impl MobilityOperator {
    fn new(dom: &Domain, u: &[f64], m: f64, shift: f64) -> Self {
        let n = dom.points();
        let inv_h2 = 1.0 / (dom.spacing() * dom.spacing());
        let d: Vec<f64> = u.iter().map(|v| (v + 1.0).powf(m - 1.0)).collect();
        let neighbour = |c: usize, axis: usize| {
            let [i, j] = dom.unflatten(c);
            if axis == 0 {
                dom.flatten([(i + 1) % n, j])
            } else {
                dom.flatten([i, (j + 1) % n])
            }
        };
        let face = |axis: usize| -> Vec<f64> {
            (0..dom.len())
                .map(|c| 0.5 * (d[c] + d[neighbour(c, axis)]) * inv_h2)
                .collect()
        };
        let faces = if dom.dim() == 1 {
            [face(0), Vec::new()]
        } else {
            [face(0), face(1)]
        };
        Self {
            dom: *dom,
            shift,
            faces,
        }
    }

    fn neighbours(&self, c: usize, axis: usize) -> (usize, usize) {
        let n = self.dom.points();
        let [i, j] = self.dom.unflatten(c);
        if axis == 0 {
            (
                self.dom.flatten([(i + n - 1) % n, j]),
                self.dom.flatten([(i + 1) % n, j]),
            )
        } else {
            (
                self.dom.flatten([i, (j + n - 1) % n]),
                self.dom.flatten([i, (j + 1) % n]),
            )
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for c in 0..v.len() {
            let mut acc = self.shift * v[c];
            for axis in 0..self.dom.dim() {
                let (lo, hi) = self.neighbours(c, axis);
                let f = &self.faces[axis];
                acc -= f[c] * (v[hi] - v[c]) - f[lo] * (v[c] - v[lo]);
            }
            out[c] = acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dom.len())
            .map(|c| {
                let mut d = self.shift;
                for axis in 0..self.dom.dim() {
                    let (lo, _) = self.neighbours(c, axis);
                    d += self.faces[axis][c] + self.faces[axis][lo];
                }
                d
            })
            .collect()
    }

    /// Jacobi-preconditioned conjugate gradients to relative residual 1e-12.
    fn solve(&self, rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        const TOL: f64 = 1e-12;
        let n = rhs.len();
        let diag = self.diagonal();
        let norm_b = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_b == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = guess.to_vec();
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let max_iter = 10 * n + 100;
        for it in 0..max_iter {
            let res = r.iter().map(|x| x * x).sum::<f64>().sqrt() / norm_b;
            if res <= TOL {
                return Ok(x);
            }
            if it + 1 == max_iter {
                return Err(Error::LinearSolve {
                    iterations: it,
                    residual: res,
                });
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let step = rz / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        unreachable!()
    }
}

/// Step size below which one IMEX step keeps a non-negative state.
///
/// With a non-negative history the implicit operator is monotone and the
/// memory part of the right-hand side is at least `c₀ (1 - b₁) uⁿ`, so
/// `c₀ (1 - b₁) ≥ μ S (k C - 1)⁺` suffices, where `S` bounds `u` and `C`
/// bounds the coupling term (`J∗u` or `∫u`). Infinite when the reaction
/// cannot turn negative.
pub fn positivity_dt_bound(alpha: f64, mu: f64, k: f64, sup: f64, coupling_sup: f64) -> Result<f64> {
    require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    let excess = mu * sup * (k * coupling_sup - 1.0);
    if excess <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let one_minus_b1 = 2.0 - 2f64.powf(1.0 - alpha);
    Ok((one_minus_b1 / (crate::special::gamma(2.0 - alpha) * excess)).powf(1.0 / alpha))
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The sup-norm passed the threshold at `t`. `certified` when it had
    /// also at least doubled over the last 1% of the elapsed steps (or
    /// became non-finite).
    BlowUp {
        t: f64,
        norm: f64,
        certified: bool,
    },
    /// Mass near the box faces exceeded the allowed share at `t`.
    SeamViolation {
        t: f64,
    },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowUp { .. } => "blow_up",
            Termination::SeamViolation { .. } => "seam_violation",
        }
    }
}

/// Ball on which the local diagnostics are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub center: [f64; 2],
    pub delta: f64,
}

/// One diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub sup_norm: f64,
    pub mass: f64,
    pub local_l2: f64,
    /// `H` on the probe ball; `None` when disabled or undefined.
    pub lyapunov: Option<f64>,
}

/// Run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub blow_up_threshold: f64,
    pub snapshot_times: Vec<f64>,
    /// Probe ball; defaults to the origin with half-width `δ₀/2` (kernel)
    /// or `L/8` (global coupling).
    pub probe: Option<Probe>,
    /// Record the Lyapunov value on the probe (needs valid Allee states).
    pub lyapunov: bool,
    /// Keep every level in the record.
    pub keep_history: bool,
    /// Width of the band along the box faces that must stay empty;
    /// defaults to twice the kernel support (kernel) or `L/8` (global).
    pub seam_margin: Option<f64>,
    /// Largest allowed share of the mass inside the band.
    pub seam_tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            blow_up_threshold: 1e6,
            snapshot_times: Vec::new(),
            probe: None,
            lyapunov: false,
            keep_history: false,
            seam_margin: None,
            seam_tolerance: 1e-6,
        }
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub params: ModelParams,
    pub domain: Domain,
    pub dt: f64,
    pub horizon: f64,
    pub probe: Probe,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub snapshots: Vec<(f64, Field)>,
    pub termination: Termination,
    /// Cells that came out below `-1e-12` and were reset to 0.
    pub clamp_events: usize,
    /// Every level, when requested.
    pub history: Option<Vec<Field>>,
}

impl RunRecord {
    /// Largest sup norm seen, including the rejected level that ended a
    /// blow-up (infinite if that level was not finite).
    pub fn sup_norm_max(&self) -> f64 {
        let recorded = self.diagnostics.iter().map(|d| d.sup_norm).fold(0.0, f64::max);
        match self.termination {
            Termination::BlowUp { norm, .. } => recorded.max(norm),
            _ => recorded,
        }
    }

    pub fn final_field(&self) -> Option<&Field> {
        self.history.as_ref().and_then(|h| h.last())
    }
}

/// A time integrator: proposes the next level, then is told the accepted
/// (clamped) value.
trait Scheme {
    fn propose(&mut self) -> Result<Vec<f64>>;
    fn accept(&mut self, u: Vec<f64>) -> Result<()>;
}

struct ImexScheme<'a> {
    dom: Domain,
    params: ModelParams,
    comp: &'a Competition,
    c0: f64,
    weights: L1Weights,
    levels: Vec<Vec<f64>>,
    fourier: Fourier,
    symbol: Vec<f64>,
}

impl Scheme for ImexScheme<'_> {
    fn propose(&mut self) -> Result<Vec<f64>> {
        self.weights.extend_to(self.levels.len() + 1);
        let rhs = imex_rhs(
            &self.levels,
            self.weights.as_slice(),
            self.c0,
            &self.params,
            self.dom,
            self.comp,
        )?;
        match self.params.variant {
            Variant::Standard => Ok(solve_shifted_laplacian(
                &self.fourier,
                &self.symbol,
                self.c0 + self.params.gamma,
                &rhs,
            )),
            Variant::NonlinearDiffusion { m } => {
                let last = self.levels.last().unwrap();
                MobilityOperator::new(&self.dom, last, m, self.c0 + self.params.gamma).solve(&rhs, last)
            }
        }
    }

    fn accept(&mut self, u: Vec<f64>) -> Result<()> {
        self.levels.push(u);
        Ok(())
    }
}

/// Fractional Duhamel in Fourier space.
struct SpectralScheme<'a> {
    dom: Domain,
    params: ModelParams,
    comp: &'a Competition,
    fourier: Fourier,
    /// Distinct-eigenvalue index of every mode.
    mode_class: Vec<usize>,
    /// Per class: `S(t_n) = E_{α,1}(-λ t_n^α)` and the product weights
    /// `W(j) = F(j dt) - F((j-1) dt)`, `F(x) = x^α E_{α,α+1}(-λ x^α)`.
    semigroup: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    u0_hat: Vec<Complex64>,
    h_hat: Vec<Vec<Complex64>>,
}

impl<'a> SpectralScheme<'a> {
    fn new(u0: &Field, params: ModelParams, comp: &'a Competition, dt: f64, steps: usize) -> Result<Self> {
        let dom = *u0.domain();
        let lambdas = dom.wavenumbers_squared();
        let mut classes: HashMap<u64, usize> = HashMap::new();
        let mut distinct = Vec::new();
        let mode_class = lambdas
            .iter()
            .map(|l| {
                *classes.entry(l.to_bits()).or_insert_with(|| {
                    distinct.push(*l);
                    distinct.len() - 1
                })
            })
            .collect();
        let alpha = params.alpha;
        let mut semigroup = Vec::with_capacity(distinct.len());
        let mut weights = Vec::with_capacity(distinct.len());
        for &lambda in &distinct {
            let mut s = Vec::with_capacity(steps + 1);
            let mut f = Vec::with_capacity(steps + 1);
            for j in 0..=steps {
                let x = j as f64 * dt;
                if j == 0 {
                    s.push(1.0);
                    f.push(0.0);
                    continue;
                }
                let xa = x.powf(alpha);
                if lambda == 0.0 {
                    s.push(1.0);
                    f.push(xa / crate::special::gamma(alpha + 1.0));
                } else {
                    s.push(mittag_leffler(alpha, 1.0, -lambda * xa)?);
                    f.push(xa * mittag_leffler(alpha, alpha + 1.0, -lambda * xa)?);
                }
            }
            let w: Vec<f64> = (0..=steps)
                .map(|j| if j == 0 { 0.0 } else { f[j] - f[j - 1] })
                .collect();
            semigroup.push(s);
            weights.push(w);
        }
        let fourier = Fourier::new(dom);
        let mut scheme = Self {
            dom,
            params,
            comp,
            u0_hat: fourier.forward(u0.values()),
            fourier,
            mode_class,
            semigroup,
            weights,
            h_hat: Vec::new(),
        };
        scheme.push_source(u0.values())?;
        Ok(scheme)
    }

    fn push_source(&mut self, u: &[f64]) -> Result<()> {
        let field = Field::from_raw(self.dom, u.to_vec());
        let g = growth(&self.params, &field, self.comp)?;
        let h: Vec<f64> = g.iter().zip(u).map(|(g, v)| g - self.params.gamma * v).collect();
        self.h_hat.push(self.fourier.forward(&h));
        Ok(())
    }
}

impl Scheme for SpectralScheme<'_> {
    fn propose(&mut self) -> Result<Vec<f64>> {
        let n1 = self.h_hat.len(); // index of the level being computed
        let mut out: Vec<Complex64> = self
            .u0_hat
            .iter()
            .zip(&self.mode_class)
            .map(|(u, &c)| u * self.semigroup[c][n1])
            .collect();
        for (m, h) in self.h_hat.iter().enumerate() {
            let lag = n1 - m;
            for ((o, hv), &c) in out.iter_mut().zip(h).zip(&self.mode_class) {
                *o += hv * self.weights[c][lag];
            }
        }
        Ok(self.fourier.inverse(out))
    }

    fn accept(&mut self, u: Vec<f64>) -> Result<()> {
        self.push_source(&u)
    }
}

fn default_probe(dom: &Domain, comp: &Competition) -> Probe {
    let delta = match comp.kernel() {
        Some(j) if j.delta0() > 0.0 => 0.5 * j.delta0(),
        _ => dom.half_width() / 8.0,
    };
    Probe {
        center: [0.0, 0.0],
        delta,
    }
}

fn default_seam_margin(dom: &Domain, comp: &Competition) -> f64 {
    match comp.kernel() {
        Some(j) => (2.0 * j.support_radius()).max(dom.spacing()),
        None => dom.half_width() / 8.0,
    }
}

#[derive(Clone, Copy)]
enum Integrator {
    Imex,
    Spectral,
}

/// Runs the IMEX-L1 integrator to `horizon` (or until blow-up or seam
/// violation).
pub fn run(
    u0: &Field,
    p: &ModelParams,
    comp: &Competition,
    horizon: f64,
    dt: f64,
    opts: &RunOptions,
) -> Result<RunRecord> {
    drive(u0, p, comp, horizon, dt, opts, Integrator::Imex)
}

/// Runs the spectral fractional-Duhamel integrator (standard variant only).
pub fn run_spectral(
    u0: &Field,
    p: &ModelParams,
    comp: &Competition,
    horizon: f64,
    dt: f64,
    opts: &RunOptions,
) -> Result<RunRecord> {
    if p.variant != Variant::Standard {
        return Err(Error::Regime(
            "the spectral integrator handles the standard variant only".into(),
        ));
    }
    drive(u0, p, comp, horizon, dt, opts, Integrator::Spectral)
}

/// Every check [`run`] performs before the first step: step and horizon,
/// parameter window, domains, sign of the data, the seam band and the
/// Lyapunov regime.
pub fn validate_run(
    u0: &Field,
    p: &ModelParams,
    comp: &Competition,
    horizon: f64,
    dt: f64,
    opts: &RunOptions,
) -> Result<()> {
    require(dt > 0.0 && dt.is_finite(), "dt", dt, "must be positive")?;
    require(horizon > 0.0 && horizon.is_finite(), "T", horizon, "must be positive")?;
    require(
        opts.blow_up_threshold > 0.0,
        "blow_up_threshold",
        opts.blow_up_threshold,
        "must be positive",
    )?;
    require(
        opts.seam_tolerance >= 0.0,
        "seam_tolerance",
        opts.seam_tolerance,
        "must be non-negative",
    )?;
    let dom = *u0.domain();
    comp.check_domain(&dom)?;
    p.check_dimension(dom.dim())?;
    if u0.min() < 0.0 {
        return Err(Error::Regime("initial data must be non-negative".into()));
    }
    let margin = opts.seam_margin.unwrap_or_else(|| default_seam_margin(&dom, comp));
    if seam_mass_fraction(u0, margin) > opts.seam_tolerance {
        return Err(Error::Regime(format!(
            "initial data reaches the seam band of width {margin}"
        )));
    }
    if opts.lyapunov && !AlleeStates::new(p.mu, p.k, p.gamma).valid {
        return Err(Error::Regime("Lyapunov diagnostics need 0 < γ < μ/(4k)".into()));
    }
    Ok(())
}

fn drive(
    u0: &Field,
    p: &ModelParams,
    comp: &Competition,
    horizon: f64,
    dt: f64,
    opts: &RunOptions,
    integrator: Integrator,
) -> Result<RunRecord> {
    validate_run(u0, p, comp, horizon, dt, opts)?;
    let dom = *u0.domain();
    let margin = opts.seam_margin.unwrap_or_else(|| default_seam_margin(&dom, comp));
    let probe = opts.probe.unwrap_or_else(|| default_probe(&dom, comp));
    let states = opts.lyapunov.then(|| AlleeStates::new(p.mu, p.k, p.gamma));
    let steps = ((horizon / dt).round() as usize).max(1);

    let mut scheme: Box<dyn Scheme> = match integrator {
        Integrator::Imex => Box::new(ImexScheme {
            dom,
            params: *p,
            comp,
            c0: l1_scale(p.alpha, dt),
            weights: l1_weights_closed(p.alpha, 2),
            levels: vec![u0.values().to_vec()],
            fourier: Fourier::new(dom),
            symbol: dom.stencil_symbol(),
        }),
        Integrator::Spectral => Box::new(SpectralScheme::new(u0, *p, comp, dt, steps)?),
    };

    let row = |t: f64, u: &Field| DiagnosticsRow {
        t,
        sup_norm: u.sup_norm(),
        mass: u.mass(),
        local_l2: local_l2(u, probe.center, probe.delta),
        lyapunov: states.and_then(|s| lyapunov_big_h(u, probe.center, probe.delta, &s).ok()),
    };
    let mut wanted: Vec<f64> = opts
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t >= 0.0 && *t <= horizon + 0.5 * dt)
        .collect();
    wanted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    wanted.dedup();
    let mut snapshots = Vec::new();
    let mut take_snapshots = |t: f64, u: &Field, snaps: &mut Vec<(f64, Field)>| {
        while let Some(&ts) = wanted.first() {
            if ts <= t + 0.5 * dt {
                snaps.push((t, u.clone()));
                wanted.remove(0);
            } else {
                break;
            }
        }
    };

    let mut diagnostics = vec![row(0.0, u0)];
    take_snapshots(0.0, u0, &mut snapshots);
    let mut history = opts.keep_history.then(|| vec![u0.clone()]);
    let mut clamp_events = 0;
    let mut termination = Termination::Completed;

    for n in 1..=steps {
        let t = n as f64 * dt;
        let mut next = scheme.propose()?;
        let finite = next.iter().all(|v| v.is_finite());
        let sup = if finite {
            next.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            f64::INFINITY
        };
        if sup > opts.blow_up_threshold {
            let window = ((n as f64 * 0.01).ceil() as usize).max(1);
            let earlier = diagnostics[n.saturating_sub(window)].sup_norm;
            termination = Termination::BlowUp {
                t,
                norm: sup,
                certified: !finite || sup >= 2.0 * earlier,
            };
            break;
        }
        for v in next.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-12 {
                    clamp_events += 1;
                }
                *v = 0.0;
            }
        }
        let field = Field::from_raw(dom, next.clone());
        diagnostics.push(row(t, &field));
        take_snapshots(t, &field, &mut snapshots);
        if let Some(h) = history.as_mut() {
            h.push(field.clone());
        }
        if seam_mass_fraction(&field, margin) > opts.seam_tolerance {
            termination = Termination::SeamViolation { t };
            break;
        }
        scheme.accept(next)?;
    }

    Ok(RunRecord {
        params: *p,
        domain: dom,
        dt,
        horizon,
        probe,
        diagnostics,
        snapshots,
        termination,
        clamp_events,
        history,
    })
}

/// Norm ratios of the solution operators at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorBoundReport {
    /// `‖S_α(t)φ‖₂ / ‖φ‖₂`.
    pub s_ratio: f64,
    /// `‖K_α(t)φ‖₂ / ‖φ‖₂`.
    pub k_ratio: f64,
    pub s_bound: f64,
    pub k_bound: f64,
    pub passed: bool,
}

/// Applies the multipliers `E_{α,1}(-|ξ|² t^α)` and `E_{α,α}(-|ξ|² t^α)`
/// to `φ` and compares the norm ratios with `1` and `1/Γ(α)`.
pub fn operator_bound_check(phi: &Field, t: f64, alpha: f64) -> Result<OperatorBoundReport> {
    require(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "must lie in (0, 1)")?;
    require(t >= 0.0, "t", t, "must be non-negative")?;
    let norm = phi.l2_norm();
    if norm == 0.0 {
        return Err(Error::Regime("operator bounds need a non-zero field".into()));
    }
    let dom = *phi.domain();
    let fourier = Fourier::new(dom);
    let hat = fourier.forward(phi.values());
    let ta = t.powf(alpha);
    let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut s_hat = Vec::with_capacity(hat.len());
    let mut k_hat = Vec::with_capacity(hat.len());
    for (c, l) in hat.iter().zip(dom.wavenumbers_squared()) {
        let (s, k) = match cache.get(&l.to_bits()) {
            Some(v) => *v,
            None => {
                let v = (
                    mittag_leffler(alpha, 1.0, -l * ta)?,
                    mittag_leffler(alpha, alpha, -l * ta)?,
                );
                cache.insert(l.to_bits(), v);
                v
            }
        };
        s_hat.push(c * s);
        k_hat.push(c * k);
    }
    let s_field = Field::from_raw(dom, fourier.inverse(s_hat));
    let k_field = Field::from_raw(dom, fourier.inverse(k_hat));
    let s_ratio = s_field.l2_norm() / norm;
    let k_ratio = k_field.l2_norm() / norm;
    let k_bound = 1.0 / crate::special::gamma(alpha);
    Ok(OperatorBoundReport {
        s_ratio,
        k_ratio,
        s_bound: 1.0,
        k_bound,
        passed: s_ratio <= 1.0 + 1e-9 && k_ratio <= k_bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_kernel, KernelShape};

    fn setup(dim: usize) -> (Domain, Competition) {
        let dom = Domain::new(dim, 6.0, if dim == 1 { 64 } else { 32 }).unwrap();
        let j = build_kernel(KernelShape::Box { radius: 1.0 }, dom, None).unwrap();
        (dom, Competition::Kernel(j))
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::standard(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::standard(0.5, -1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 3.5).is_err());
        let p = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 1.5).unwrap();
        assert!(p.check_dimension(2).is_ok());
        let q = ModelParams::nonlinear_diffusion(0.5, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(q.check_dimension(1).is_ok());
        assert!(q.check_dimension(2).is_err());
    }

    #[test]
    fn zero_state_is_fixed() {
        for dim in [1, 2] {
            let (dom, comp) = setup(dim);
            let p = ModelParams::standard(0.5, 1.0, 1.0, 0.1).unwrap();
            let mut hist = vec![Field::zeros(dom)];
            for _ in 0..5 {
                let next = step_imex(&hist, &p, &comp, 0.01).unwrap();
                assert!(next.values().iter().all(|v| *v == 0.0));
                hist.push(next);
            }
        }
    }

    #[test]
    fn direct_solve_meets_residual_target() {
        let (dom, _) = setup(2);
        let rhs: Vec<f64> = (0..dom.len()).map(|i| ((i * 37) % 11) as f64).collect();
        let shift = 7.3;
        let v = solve_shifted_laplacian(&Fourier::new(dom), &dom.stencil_symbol(), shift, &rhs);
        assert!(shifted_laplacian_residual(&dom, shift, &v, &rhs) <= 1e-12);
    }

    #[test]
    fn linear_mobility_matches_the_fourier_solve() {
        let (dom, _) = setup(2);
        let u: Vec<f64> = (0..dom.len()).map(|i| ((i * 13) % 7) as f64 * 0.1).collect();
        let rhs: Vec<f64> = (0..dom.len()).map(|i| ((i * 37) % 11) as f64).collect();
        let op = MobilityOperator::new(&dom, &u, 1.0, 4.0);
        let cg = op.solve(&rhs, &u).unwrap();
        let direct = solve_shifted_laplacian(&Fourier::new(dom), &dom.stencil_symbol(), 4.0, &rhs);
        assert!(cg.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn mobility_operator_conserves_mass() {
        let (dom, _) = setup(1);
        let u: Vec<f64> = (0..dom.len()).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let op = MobilityOperator::new(&dom, &u, 2.5, 0.0);
        let mut out = vec![0.0; dom.len()];
        op.apply(&u, &mut out);
        assert!(out.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn operator_bounds_at_time_zero() {
        let (dom, _) = setup(1);
        let phi = Field::from_fn(dom, |p| (p[0]).cos() + 0.3).unwrap();
        let r = operator_bound_check(&phi, 0.0, 0.5).unwrap();
        assert!((r.s_ratio - 1.0).abs() < 1e-12);
        assert!((r.k_ratio - 1.0 / crate::special::gamma(0.5)).abs() < 1e-12);
        assert!(r.passed);
    }
}
