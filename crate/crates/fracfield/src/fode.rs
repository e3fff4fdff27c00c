//! Scalar fractional ODEs `D^α w = A w + f(t)`, `w(0) = η`.
//!
//! Two independent solvers: the Mittag-Leffler representation
//!
//! ```text
//! w(t) = η E_{α,1}(A t^α) + ∫₀ᵗ (t-τ)^{α-1} E_{α,α}(A (t-τ)^α) f(τ) dτ
//! ```
//!
//! with the convolution done in closed form on each step (using
//! `∫₀ˣ s^{α-1} E_{α,α}(A s^α) ds = x^α E_{α,α+1}(A x^α)`), and implicit L1
//! time stepping. Also the comparison bounds used by the boundedness and
//! decay arguments, and a solver for the blow-up comparison problem
//! `D^α w = μ w²`.

use crate::error::{require, Error, Result};
use crate::fractional::{l1_memory, l1_scale, l1_weights_closed, TimeGrid};
use crate::mlf::{gronwall_e, mittag_leffler};
use crate::special::{gamma, ln_gamma};

/// Right-hand side forcing `f(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Constant(f64),
    /// One sample per grid level.
    Sampled(Vec<f64>),
}

impl Forcing {
    fn at(&self, j: usize) -> f64 {
        match self {
            Forcing::Constant(c) => *c,
            Forcing::Sampled(v) => v[j],
        }
    }
}

/// `D^α w = A w + f`, `w(0) = η`, with `α ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFode {
    pub alpha: f64,
    pub coeff: f64,
    pub eta: f64,
    pub forcing: Forcing,
}

impl LinearFode {
    pub fn new(alpha: f64, coeff: f64, eta: f64, forcing: Forcing) -> Result<Self> {
        require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
        require(coeff.is_finite(), "A", coeff, "must be finite")?;
        require(eta.is_finite(), "eta", eta, "must be finite")?;
        let finite = match &forcing {
            Forcing::Constant(c) => c.is_finite(),
            Forcing::Sampled(v) => v.iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite("forcing"));
        }
        Ok(Self {
            alpha,
            coeff,
            eta,
            forcing,
        })
    }

    /// Unforced relaxation `D^α w = -σ w`.
    pub fn relaxation(alpha: f64, sigma: f64, eta: f64) -> Result<Self> {
        Self::new(alpha, -sigma, eta, Forcing::Constant(0.0))
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if let Forcing::Sampled(v) = &self.forcing {
            if v.len() != grid.n_steps() + 1 {
                return Err(Error::ShapeMismatch(format!(
                    "{} forcing samples on a grid of {} steps",
                    v.len(),
                    grid.n_steps()
                )));
            }
        }
        Ok(())
    }

    /// `x^α E_{α,α+1}(A x^α)`, the response at time `x` to unit forcing
    /// switched on at time 0.
    fn step_response(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let xa = x.powf(self.alpha);
        Ok(xa * mittag_leffler(self.alpha, self.alpha + 1.0, self.coeff * xa)?)
    }
}

/// Mittag-Leffler solution on the grid. Sampled forcing is treated as
/// piecewise constant, equal to the mean of the two end samples on each
/// step; constant forcing is integrated exactly.
pub fn solve_exact(p: &LinearFode, grid: &TimeGrid) -> Result<Vec<f64>> {
    p.check_grid(grid)?;
    let n = grid.n_steps();
    let response: Vec<f64> = (0..=n).map(|m| p.step_response(grid.t(m))).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = grid.t(j);
        let free = if j == 0 {
            p.eta
        } else {
            p.eta * mittag_leffler(p.alpha, 1.0, p.coeff * t.powf(p.alpha))?
        };
        let forced = match &p.forcing {
            Forcing::Constant(c) => c * response[j],
            Forcing::Sampled(f) => (0..j)
                .map(|i| 0.5 * (f[i] + f[i + 1]) * (response[j - i] - response[j - i - 1]))
                .sum(),
        };
        out.push(free + forced);
    }
    Ok(out)
}

/// Implicit L1 time stepping:
/// `(c₀ - A) w_j = c₀ w_{j-1} - c₀ Σ_{i≥1} b_i (w_{j-i} - w_{j-i-1}) + f_j`.
pub fn solve_l1(p: &LinearFode, grid: &TimeGrid) -> Result<Vec<f64>> {
    p.check_grid(grid)?;
    let n = grid.n_steps();
    let c0 = l1_scale(p.alpha, grid.dt());
    let diag = c0 - p.coeff;
    if diag.abs() <= 1e-12 * c0 {
        return Err(Error::SingularStep(diag));
    }
    let weights = l1_weights_closed(p.alpha, n);
    let b = weights.as_slice();
    let mut w = Vec::with_capacity(n + 1);
    w.push(p.eta);
    for j in 1..=n {
        let rhs = c0 * (w[j - 1] - l1_memory(b, &w, j)) + p.forcing.at(j);
        w.push(rhs / diag);
    }
    Ok(w)
}

/// Henry's bound `a E_β(θ t)` with `θ = (b Γ(β))^{1/β}`.
pub fn gronwall_majorant(a: f64, b: f64, beta: f64, t: f64) -> Result<f64> {
    require(a >= 0.0, "a", a, "must be non-negative")?;
    require(b >= 0.0, "b", b, "must be non-negative")?;
    require(beta > 0.0, "beta", beta, "must be positive")?;
    require(t >= 0.0, "t", t, "must be non-negative")?;
    let theta = (b * gamma(beta)).powf(1.0 / beta);
    Ok(a * gronwall_e(beta, theta * t)?)
}

/// A-priori cap `u₀ + b T^α / (α Γ(α))` for `D^α u ≤ b`.
pub fn comparison_cap(u0: f64, b: f64, alpha: f64, horizon: f64) -> Result<f64> {
    require(u0 >= 0.0, "u0", u0, "must be non-negative")?;
    require(b >= 0.0, "b", b, "must be non-negative")?;
    require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    require(horizon > 0.0, "T", horizon, "must be positive")?;
    Ok(u0 + b * horizon.powf(alpha) / (alpha * gamma(alpha)))
}

/// Outcome of stepping `D^α w = μ w²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRun {
    pub values: Vec<f64>,
    /// First time the solution exceeded the threshold, if it did.
    pub blow_up_time: Option<f64>,
}

/// L1 stepping of `D^α w = μ w²` with the reaction taken at the previous
/// level; stops once `w` passes `threshold`.
pub fn solve_quadratic_l1(alpha: f64, mu: f64, w0: f64, grid: &TimeGrid, threshold: f64) -> Result<QuadraticRun> {
    require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    require(mu >= 0.0, "mu", mu, "must be non-negative")?;
    require(w0 >= 0.0, "w0", w0, "must be non-negative")?;
    let n = grid.n_steps();
    let c0 = l1_scale(alpha, grid.dt());
    let weights = l1_weights_closed(alpha, n);
    let b = weights.as_slice();
    let mut w = vec![w0];
    for j in 1..=n {
        let next = w[j - 1] - l1_memory(b, &w, j) + mu * w[j - 1] * w[j - 1] / c0;
        w.push(next);
        if !next.is_finite() || next > threshold {
            return Ok(QuadraticRun {
                values: w,
                blow_up_time: Some(grid.t(j)),
            });
        }
    }
    Ok(QuadraticRun {
        values: w,
        blow_up_time: None,
    })
}

/// Coefficients of `w(t) = Σ c_k t^{αk}` solving `D^α w = μ w²`, `w(0) = w₀`:
/// `c_{k+1} = μ Γ(αk+1)/Γ(αk+α+1) Σ_{i+j=k} c_i c_j`.
pub fn quadratic_series(alpha: f64, mu: f64, w0: f64, terms: usize) -> Result<Vec<f64>> {
    require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    require(terms >= 2, "terms", terms as f64, "need at least two terms")?;
    let mut c = vec![w0];
    for k in 0..terms - 1 {
        let conv: f64 = (0..=k).map(|i| c[i] * c[k - i]).sum();
        let ratio = (ln_gamma(alpha * k as f64 + 1.0) - ln_gamma(alpha * (k + 1) as f64 + 1.0)).exp();
        c.push(mu * ratio * conv);
    }
    Ok(c)
}

/// Blow-up time of `D^α w = μ w²` estimated from the radius of convergence
/// of [`quadratic_series`] in `τ = t^α`. The coefficients are positive, so
/// the nearest singularity sits on the positive axis. The radius is taken
/// from the ratio of the last two coefficients; `None` when the data are
/// trivial (`μ w₀ = 0`, no blow-up).
pub fn quadratic_blow_up_time(alpha: f64, mu: f64, w0: f64, terms: usize) -> Result<Option<f64>> {
    require(w0 >= 0.0, "w0", w0, "must be non-negative")?;
    if mu * w0 == 0.0 {
        return Ok(None);
    }
    // normalize to avoid overflow: with c_k = w₀ (μ w₀)^k d_k the d_k solve
    // the same recursion for μ = w₀ = 1
    let d = quadratic_series(alpha, 1.0, 1.0, terms)?;
    let k = terms - 1;
    // the ratio converges like 1/k, so extrapolate linearly in 1/k
    let r1 = d[k - 1] / d[k];
    let r2 = d[k - 2] / d[k - 1];
    let (k1, k2) = (k as f64, (k - 1) as f64);
    let radius = (r1 * k1 - r2 * k2) / (k1 - k2);
    Ok(Some((radius / (mu * w0)).powf(1.0 / alpha)))
}
