//! Periodic cell-centred lattices approximating ℝᴺ, fields on them, and
//! the FFT plumbing shared by the convolution and spectral paths.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{require, Error, Result};

/// The box `[-L, L)^N` with `M` cells per axis and periodic wrap.
/// Cell `i` on an axis has centre `-L + (i + ½) h`, `h = 2L/M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl Domain {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        require(dim == 1 || dim == 2, "N", dim as f64, "dimension must be 1 or 2")?;
        require(
            half_width > 0.0 && half_width.is_finite(),
            "L",
            half_width,
            "must be positive",
        )?;
        require(
            points >= 8 && points.is_multiple_of(2),
            "M",
            points as f64,
            "must be even and at least 8",
        )?;
        Ok(Self {
            dim,
            half_width,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// `h^N`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Number of lattice cells, `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Axis indices of a flat (row-major) index; the unused second slot is 0 in 1-D.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.points + idx[1]
        }
    }

    /// Coordinates of the cell centre (second slot 0 in 1-D).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(flat);
        if self.dim == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    /// Signed lattice offset in `-M/2 .. M/2` of axis index `i` relative to `0`.
    pub fn wrap_offset(&self, i: isize) -> isize {
        let m = self.points as isize;
        let r = i.rem_euclid(m);
        if r >= m / 2 {
            r - m
        } else {
            r
        }
    }

    /// Periodic distance (max norm) between two cell centres.
    pub fn distance_inf(&self, a: usize, b: usize) -> f64 {
        let (ia, ib) = (self.unflatten(a), self.unflatten(b));
        let h = self.spacing();
        (0..self.dim)
            .map(|d| (self.wrap_offset(ia[d] as isize - ib[d] as isize) as f64 * h).abs())
            .fold(0.0, f64::max)
    }

    /// Flat indices of the cells whose centres lie in the open cube
    /// `center + (-δ, δ)^N` (periodic).
    pub fn open_cube(&self, center: [f64; 2], delta: f64) -> Vec<usize> {
        let h = self.spacing();
        let period = 2.0 * self.half_width;
        let inside = |x: f64, c: f64| {
            let mut d = (x - c).rem_euclid(period);
            if d >= 0.5 * period {
                d -= period;
            }
            d.abs() < delta - 1e-12 * h
        };
        (0..self.len())
            .filter(|&f| {
                let p = self.point(f);
                (0..self.dim).all(|d| inside(p[d], center[d]))
            })
            .collect()
    }

    /// Distance (max norm) from a cell centre to the nearest face of the box.
    pub fn seam_distance(&self, flat: usize) -> f64 {
        let p = self.point(flat);
        (0..self.dim)
            .map(|d| self.half_width - p[d].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Squared wavenumbers `|ξ|²` of the continuous Laplacian, in FFT order.
    pub fn wavenumbers_squared(&self) -> Vec<f64> {
        let k = |i: usize| PI / self.half_width * self.wrap_offset(i as isize) as f64;
        (0..self.len())
            .map(|f| {
                let [i, j] = self.unflatten(f);
                if self.dim == 1 {
                    k(i).powi(2)
                } else {
                    k(i).powi(2) + k(j).powi(2)
                }
            })
            .collect()
    }

    /// Eigenvalues of the negated periodic finite-difference Laplacian, in FFT order.
    pub fn stencil_symbol(&self) -> Vec<f64> {
        let h = self.spacing();
        let m = self.points as f64;
        let s = |i: usize| (2.0 - 2.0 * (2.0 * PI * i as f64 / m).cos()) / (h * h);
        (0..self.len())
            .map(|f| {
                let [i, j] = self.unflatten(f);
                if self.dim == 1 {
                    s(i)
                } else {
                    s(i) + s(j)
                }
            })
            .collect()
    }

    pub(crate) fn same_as(&self, other: &Domain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("domain {self} differs from {other}")))
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={} N={} L={}", self.points, self.dim, self.half_width)
    }
}

/// Values on every cell of a [`Domain`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a domain of {} cells",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field value"));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        Self {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(domain: Domain, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::new(domain, (0..domain.len()).map(|i| f(domain.point(i))).collect())
    }

    /// Smooth compactly supported bump `height · exp(1 - 1/(1 - r²/R²))`
    /// (Euclidean `r` from `center`), peak `height` at the centre.
    pub fn bump(domain: Domain, center: [f64; 2], radius: f64, height: f64) -> Result<Self> {
        require(radius > 0.0, "radius", radius, "must be positive")?;
        Self::from_fn(domain, |p| {
            let r2: f64 = (0..domain.dim).map(|d| (p[d] - center[d]).powi(2)).sum();
            let s = r2 / (radius * radius);
            if s < 1.0 {
                height * (1.0 - 1.0 / (1.0 - s)).exp()
            } else {
                0.0
            }
        })
    }

    pub(crate) fn from_raw(domain: Domain, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `h^N Σ u`.
    pub fn mass(&self) -> f64 {
        self.domain.cell_measure() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.domain.cell_measure() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Periodic finite-difference Laplacian (3-point in 1-D, 5-point in 2-D).
    pub fn laplacian(&self) -> Field {
        let mut out = vec![0.0; self.values.len()];
        apply_laplacian(&self.domain, &self.values, &mut out);
        Field::from_raw(self.domain, out)
    }
}

/// Header line of the snapshot CSV format.
pub fn field_header(t: f64, dom: &Domain) -> String {
    format!("# field t={t} {dom}")
}

/// Snapshot CSV: the header, then one line per lattice row (a single value
/// per line in 1-D, `M` comma-separated values in 2-D).
pub fn format_field(t: f64, u: &Field) -> String {
    let dom = u.domain();
    let mut s = field_header(t, dom);
    s.push('\n');
    let row = if dom.dim == 1 { 1 } else { dom.points };
    for chunk in u.values.chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Parses a snapshot written by [`format_field`] and checks it against `dom`.
pub fn parse_field(text: &str, dom: &Domain) -> Result<(f64, Field)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let fields = crate::kernels::parse_header(header, "field")?;
    let get = |key: &str| -> Result<&str> {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("field header lacks {key}")))
    };
    let bad = |key: &str| Error::Parse(format!("bad {key} in field header"));
    let t: f64 = get("t")?.parse().map_err(|_| bad("t"))?;
    let m: usize = get("M")?.parse().map_err(|_| bad("M"))?;
    let n: usize = get("N")?.parse().map_err(|_| bad("N"))?;
    let l: f64 = get("L")?.parse().map_err(|_| bad("L"))?;
    if m != dom.points || n != dom.dim || (l - dom.half_width).abs() > 1e-12 * l.abs() {
        return Err(Error::ShapeMismatch(format!(
            "field file is for M={m} N={n} L={l}, domain is {dom}"
        )));
    }
    let mut values = Vec::with_capacity(dom.len());
    for line in lines {
        for item in line.split(',') {
            let item = item.trim();
            values.push(
                item.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad field value `{item}`")))?,
            );
        }
    }
    Ok((t, Field::new(*dom, values)?))
}

pub(crate) fn apply_laplacian(dom: &Domain, u: &[f64], out: &mut [f64]) {
    let m = dom.points;
    let inv_h2 = 1.0 / (dom.spacing() * dom.spacing());
    if dom.dim == 1 {
        for i in 0..m {
            let (l, r) = ((i + m - 1) % m, (i + 1) % m);
            out[i] = (u[l] - 2.0 * u[i] + u[r]) * inv_h2;
        }
    } else {
        for i in 0..m {
            let (up, down) = ((i + m - 1) % m, (i + 1) % m);
            for j in 0..m {
                let (l, r) = ((j + m - 1) % m, (j + 1) % m);
                let c = i * m + j;
                out[c] = (u[up * m + j] + u[down * m + j] + u[i * m + l] + u[i * m + r] - 4.0 * u[c]) * inv_h2;
            }
        }
    }
}

/// Forward/inverse discrete Fourier transforms on a [`Domain`].
#[derive(Clone)]
pub struct Fourier {
    domain: Domain,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("domain", &self.domain).finish()
    }
}

impl Fourier {
    pub fn new(domain: Domain) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            domain,
            forward: planner.plan_fft_forward(domain.points),
            inverse: planner.plan_fft_inverse(domain.points),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.domain.points;
        // rows (the only axis in 1-D)
        plan.process(data);
        if self.domain.dim == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                for i in 0..m {
                    col[i] = data[i * m + j];
                }
                plan.process(&mut col);
                for i in 0..m {
                    data[i * m + j] = col[i];
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform, normalized, keeping the real part.
    pub fn inverse(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.domain.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }
}
