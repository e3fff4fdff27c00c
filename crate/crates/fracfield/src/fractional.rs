//! Discrete Caputo calculus on uniform time grids.
//!
//! The Caputo derivative is discretized with the L1 scheme
//!
//! ```text
//! D_j = dt^{-α}/Γ(2-α) · Σ_{i=0}^{j-1} b_i (u_{j-i} - u_{j-i-1}),
//! b_i = (i+1)^{1-α} - i^{1-α},
//! ```
//!
//! which is the exact Caputo derivative of the piecewise-linear interpolant
//! of the samples. Rewritten as `D_j = c Σ_i w_i (u_j - u_{j-i})` the
//! weights `w_i` are non-negative, so for any convex `φ` the discrete chain
//! inequality `φ'(u_j) D_j[u] ≥ D_j[φ(u)]` holds exactly, not only in the
//! limit. That is what makes the power inequality checkable without a
//! discretization allowance beyond round-off.

use crate::error::{require, Error, Result};
use crate::special::gamma;

/// Uniform time grid `t_j = j·dt`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        require(dt > 0.0 && dt.is_finite(), "dt", dt, "must be positive")?;
        require(n_steps >= 1, "n_steps", n_steps as f64, "need at least one step")?;
        Ok(Self { dt, n_steps })
    }

    /// Grid covering `[0, horizon]` with step `dt` (the last step may be
    /// rounded to the nearest whole number of steps).
    pub fn covering(horizon: f64, dt: f64) -> Result<Self> {
        require(horizon > 0.0, "horizon", horizon, "must be positive")?;
        require(dt > 0.0, "dt", dt, "must be positive")?;
        Self::new(dt, ((horizon / dt).round() as usize).max(1))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |j| self.t(j))
    }
}

/// Samples `levels[j] ≈ u(t_j)` on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct History<T> {
    grid: TimeGrid,
    levels: Vec<T>,
}

impl<T> History<T> {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

impl History<f64> {
    pub fn new(grid: TimeGrid, levels: Vec<f64>) -> Result<Self> {
        check_len(&grid, levels.len())?;
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("history level"));
        }
        Ok(Self { grid, levels })
    }

    /// Samples `f(t_j)`.
    pub fn sample(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.levels.iter().map(|&v| f(v)).collect())
    }
}

impl History<Vec<f64>> {
    /// A history of spatial fields (all levels share one length).
    pub fn new_fields(grid: TimeGrid, levels: Vec<Vec<f64>>) -> Result<Self> {
        check_len(&grid, levels.len())?;
        let width = levels[0].len();
        if levels.iter().any(|l| l.len() != width) {
            return Err(Error::ShapeMismatch("field levels differ in length".into()));
        }
        if levels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("history level"));
        }
        Ok(Self { grid, levels })
    }

    /// The scalar series at one spatial index.
    pub fn at(&self, index: usize) -> Result<History<f64>> {
        History::new(self.grid, self.levels.iter().map(|l| l[index]).collect())
    }
}

fn check_len(grid: &TimeGrid, len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::ShortHistory { needed: 2, got: len });
    }
    if len != grid.n_steps + 1 {
        return Err(Error::ShapeMismatch(format!(
            "{} levels on a grid of {} steps",
            len, grid.n_steps
        )));
    }
    Ok(())
}

/// L1 weights `b_j = (j+1)^{1-α} - j^{1-α}` for `j < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    alpha: f64,
    b: Vec<f64>,
}

impl L1Weights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Extends the table to at least `n` weights.
    pub fn extend_to(&mut self, n: usize) {
        let start = self.b.len();
        self.b.extend((start..n).map(|j| l1_weight(self.alpha, j)));
    }
}

fn l1_weight(alpha: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    // (j+1)^{1-α} (1 - (j/(j+1))^{1-α}), free of cancellation for large j
    let jp = (j + 1) as f64;
    -jp.powf(1.0 - alpha) * ((1.0 - alpha) * (-1.0 / jp).ln_1p()).exp_m1()
}

/// The first `n` L1 weights for order `alpha`.
pub fn l1_weights(alpha: f64, n: usize) -> Result<L1Weights> {
    require(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "must lie in (0, 1)")?;
    require(n >= 1, "n", n as f64, "need at least one weight")?;
    Ok(L1Weights {
        alpha,
        b: (0..n).map(|j| l1_weight(alpha, j)).collect(),
    })
}

/// Weights for orders in `(0, 1]`; at `α = 1` the scheme is backward Euler.
pub(crate) fn l1_weights_closed(alpha: f64, n: usize) -> L1Weights {
    if alpha == 1.0 {
        let mut b = vec![0.0; n.max(1)];
        b[0] = 1.0;
        L1Weights { alpha, b }
    } else {
        L1Weights {
            alpha,
            b: (0..n.max(1)).map(|j| l1_weight(alpha, j)).collect(),
        }
    }
}

/// `dt^{-α}/Γ(2-α)`, the scale in front of the L1 sum.
pub fn l1_scale(alpha: f64, dt: f64) -> f64 {
    dt.powf(-alpha) / gamma(2.0 - alpha)
}

/// `Σ_{i=1}^{j-1} b_i (u_{j-i} - u_{j-i-1})`: the memory part of the L1
/// sum at level `j`, i.e. everything except the `b_0 (u_j - u_{j-1})` term.
pub fn l1_memory(b: &[f64], u: &[f64], j: usize) -> f64 {
    (1..j).map(|i| b[i] * (u[j - i] - u[j - i - 1])).sum()
}

/// L1 approximation of the Caputo derivative at every grid level.
///
/// Entry `j` corresponds to `t_j`; entry 0 is zero (the Caputo derivative
/// of the piecewise-linear interpolant vanishes at the origin).
pub fn caputo_l1(h: &History<f64>, alpha: f64) -> Result<Vec<f64>> {
    require(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "must lie in (0, 1)")?;
    Ok(caputo_l1_unchecked(h.levels(), alpha, h.grid().dt()))
}

pub(crate) fn caputo_l1_unchecked(u: &[f64], alpha: f64, dt: f64) -> Vec<f64> {
    let n = u.len() - 1;
    let w = l1_weights_closed(alpha, n);
    let b = w.as_slice();
    let scale = l1_scale(alpha, dt);
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for j in 1..=n {
        out.push(scale * ((u[j] - u[j - 1]) + l1_memory(b, u, j)));
    }
    out
}

/// Riemann-Liouville integral `(1/Γ(α)) ∫₀^{t_j} (t_j-s)^{α-1} u(s) ds` at
/// every level, with `u` interpolated linearly between samples and the
/// singular weight integrated exactly on each step. Exact for affine `u`.
/// Accepts `α ∈ (0, 1]`.
pub fn rl_integral(h: &History<f64>, alpha: f64) -> Result<Vec<f64>> {
    require(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "must lie in (0, 1]")?;
    let u = h.levels();
    let n = u.len() - 1;
    let (lo, hi) = product_trapezoid_weights(alpha, n);
    let scale = h.grid().dt().powf(alpha) / gamma(alpha);
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for j in 1..=n {
        let mut acc = 0.0;
        for i in 0..j {
            let m = j - i;
            acc += u[i] * lo[m] + u[i + 1] * hi[m];
        }
        out.push(scale * acc);
    }
    Ok(out)
}

/// `lo[m] = ∫₀¹ (m-σ)^{α-1}(1-σ) dσ`, `hi[m] = ∫₀¹ (m-σ)^{α-1} σ dσ`.
fn product_trapezoid_weights(alpha: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    // 10-point Gauss-Legendre on [0, 1]; the integrands are analytic there
    // for m ≥ 2
    const X: [f64; 5] = [
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    const W: [f64; 5] = [
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_4,
        0.219_086_362_515_982,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    let mut lo = vec![0.0; n + 1];
    let mut hi = vec![0.0; n + 1];
    for m in 1..=n {
        let mf = m as f64;
        let total = if m == 1 {
            1.0 / alpha
        } else {
            -mf.powf(alpha) * (alpha * (-1.0 / mf).ln_1p()).exp_m1() / alpha
        };
        let h = if m == 1 {
            1.0 / (alpha * (alpha + 1.0))
        } else {
            let mut acc = 0.0;
            for (x, w) in X.iter().zip(W) {
                for s in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
                    acc += 0.5 * w * (mf - s).powf(alpha - 1.0) * s;
                }
            }
            acc
        };
        hi[m] = h;
        lo[m] = total - h;
    }
    (lo, hi)
}

/// Per-level margins of the power inequality `u^{n-1} D^α u ≥ (1/n) D^α uⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInequalityReport {
    pub power: u32,
    /// `M_j`, entry 0 is zero.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// `C·dt`: the allowance below zero.
    pub tolerance: f64,
    pub slack_constant: f64,
    pub passed: bool,
}

/// The constant `C` in the allowance `C·dt`. The discrete inequality is
/// exact for the L1 scheme, so `C` only has to cover round-off.
pub const POWER_SLACK_CONSTANT: f64 = 1e-6;

pub fn check_power_inequality(h: &History<f64>, alpha: f64, power: u32) -> Result<PowerInequalityReport> {
    require(power >= 2, "n", power as f64, "must be at least 2")?;
    if let Some((level, &value)) = h.levels().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeSample { level, value });
    }
    let du = caputo_l1(h, alpha)?;
    let dun = caputo_l1(&h.map(|v| v.powi(power as i32))?, alpha)?;
    let margins: Vec<f64> = h
        .levels()
        .iter()
        .zip(du.iter().zip(&dun))
        .map(|(u, (a, b))| u.powi(power as i32 - 1) * a - b / power as f64)
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = POWER_SLACK_CONSTANT * h.grid().dt();
    Ok(PowerInequalityReport {
        power,
        passed: min_margin >= -tolerance,
        margins,
        min_margin,
        tolerance,
        slack_constant: POWER_SLACK_CONSTANT,
    })
}

/// `max_j |Σ_ball D[u(y)]_j Δy - D[Σ_ball u(y) Δy]_j|` for a field history.
pub fn check_exchange(h: &History<Vec<f64>>, alpha: f64, ball: &[usize], cell_measure: f64) -> Result<f64> {
    require(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "must lie in (0, 1)")?;
    let width = h.levels()[0].len();
    if let Some(&bad) = ball.iter().find(|&&i| i >= width) {
        return Err(Error::ShapeMismatch(format!(
            "ball index {bad} outside a field of {width} cells"
        )));
    }
    if ball.is_empty() {
        return Ok(0.0);
    }
    let dt = h.grid().dt();
    let n = h.len();
    let mut summed_derivs = vec![0.0; n];
    for &y in ball {
        let series: Vec<f64> = h.levels().iter().map(|l| l[y]).collect();
        for (acc, d) in summed_derivs.iter_mut().zip(caputo_l1_unchecked(&series, alpha, dt)) {
            *acc += d * cell_measure;
        }
    }
    let integrals: Vec<f64> = h
        .levels()
        .iter()
        .map(|l| ball.iter().map(|&y| l[y] * cell_measure).sum())
        .collect();
    let deriv_of_integral = caputo_l1_unchecked(&integrals, alpha, dt);
    Ok(summed_derivs
        .iter()
        .zip(&deriv_of_integral)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
