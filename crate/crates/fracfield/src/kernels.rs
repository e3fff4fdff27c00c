//! Competition kernels `J ≥ 0` with unit mass and a certified positive
//! floor on a neighbourhood of the origin, and the periodic convolution
//! `J∗u`.
//!
//! Kernel values live on the displacement lattice `{m h : -M/2 ≤ m < M/2}^N`,
//! stored centred (index `i` ↔ offset `i - M/2`). After sampling, values are
//! rescaled so that `h^N Σ J = 1` holds to round-off.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{require, Error, Result};
use crate::grid::{Domain, Field, Fourier};

/// Analytic kernel profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    /// Uniform on the closed cube `[-r, r]^N`.
    Box { radius: f64 },
    /// `exp(-|x|²/(2s²))` on the closed Euclidean ball of radius `cutoff`.
    TruncatedGaussian { scale: f64, cutoff: f64 },
    /// Centred lattice values (row-major in 2-D), as read by [`read_tabulated`].
    Tabulated(Vec<f64>),
}

/// A discretized admissible kernel.
#[derive(Debug, Clone)]
pub struct Kernel {
    domain: Domain,
    shape: KernelShape,
    /// Centred lattice values.
    values: Vec<f64>,
    /// Non-zero entries as (wrapped flat offset, value).
    stencil: Vec<([isize; 2], f64)>,
    support_radius: f64,
    delta0: f64,
    min_on_ball: f64,
    eta: f64,
    spectrum: Vec<Complex64>,
    fourier: Fourier,
}

/// Certified floor is this fraction of the attained minimum, so that the
/// strict inequality `inf J > η` holds.
pub const ETA_FRACTION: f64 = 0.99;

impl Kernel {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// Centred lattice values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest max-norm offset carrying non-zero weight.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Attained minimum of `J` over the closed lattice cube `[-δ₀, δ₀]^N`.
    pub fn min_on_ball(&self) -> f64 {
        self.min_on_ball
    }

    /// Certified floor `η = 0.99 · min_on_ball`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `h^N Σ J`.
    pub fn mass(&self) -> f64 {
        self.domain.cell_measure() * self.values.iter().sum::<f64>()
    }

    /// Value at a lattice offset (axis offsets in `-M/2 .. M/2`).
    pub fn at_offset(&self, offset: [isize; 2]) -> f64 {
        let half = (self.domain.points() / 2) as isize;
        let idx = |o: isize| (self.domain.wrap_offset(o) + half) as usize;
        if self.domain.dim() == 1 {
            self.values[idx(offset[0])]
        } else {
            self.values[self.domain.flatten([idx(offset[0]), idx(offset[1])])]
        }
    }
}

fn centred_offset(dom: &Domain, flat: usize) -> [isize; 2] {
    let half = (dom.points() / 2) as isize;
    let [i, j] = dom.unflatten(flat);
    if dom.dim() == 1 {
        [i as isize - half, 0]
    } else {
        [i as isize - half, j as isize - half]
    }
}

/// Builds and certifies a kernel. `delta0` defaults to half the support
/// radius.
pub fn build_kernel(shape: KernelShape, dom: Domain, delta0: Option<f64>) -> Result<Kernel> {
    let h = dom.spacing();
    let l = dom.half_width();
    let raw: Vec<f64> = match &shape {
        KernelShape::Box { radius } => {
            require(*radius > 0.0, "r", *radius, "must be positive")?;
            require(*radius < l, "r", *radius, "support must fit inside the box")?;
            (0..dom.len())
                .map(|f| {
                    let o = centred_offset(&dom, f);
                    let inside = (0..dom.dim()).all(|d| (o[d] as f64 * h).abs() <= radius * (1.0 + 1e-12));
                    if inside {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        KernelShape::TruncatedGaussian { scale, cutoff } => {
            require(*scale > 0.0, "s", *scale, "must be positive")?;
            require(*cutoff > 0.0, "R", *cutoff, "must be positive")?;
            require(*cutoff < l, "R", *cutoff, "support must fit inside the box")?;
            (0..dom.len())
                .map(|f| {
                    let o = centred_offset(&dom, f);
                    let r2: f64 = (0..dom.dim()).map(|d| (o[d] as f64 * h).powi(2)).sum();
                    if r2.sqrt() <= cutoff * (1.0 + 1e-12) {
                        (-r2 / (2.0 * scale * scale)).exp()
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        KernelShape::Tabulated(v) => {
            if v.len() != dom.len() {
                return Err(Error::Kernel(format!(
                    "{} tabulated values for a domain of {} cells",
                    v.len(),
                    dom.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Kernel("tabulated values must be finite and non-negative".into()));
            }
            v.clone()
        }
    };
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Kernel("kernel has no mass".into()));
    }
    let norm = 1.0 / (total * dom.cell_measure());
    let values: Vec<f64> = raw.iter().map(|v| v * norm).collect();

    let mut support_radius: f64 = 0.0;
    let mut stencil = Vec::new();
    for (f, &v) in values.iter().enumerate() {
        if v > 0.0 {
            let o = centred_offset(&dom, f);
            let r = (0..dom.dim()).map(|d| (o[d] as f64 * h).abs()).fold(0.0, f64::max);
            support_radius = support_radius.max(r);
            stencil.push((o, v));
        }
    }
    if support_radius >= l {
        return Err(Error::Kernel("support reaches the edge of the box".into()));
    }
    let delta0 = delta0.unwrap_or(0.5 * support_radius);
    require(delta0 >= 0.0, "delta0", delta0, "must be non-negative")?;
    let min_on_ball = (0..dom.len())
        .filter(|&f| {
            let o = centred_offset(&dom, f);
            (0..dom.dim()).all(|d| (o[d] as f64 * h).abs() <= delta0 * (1.0 + 1e-12))
        })
        .map(|f| values[f])
        .fold(f64::INFINITY, f64::min);
    if min_on_ball <= 0.0 {
        return Err(Error::Kernel(format!(
            "kernel vanishes somewhere on the cube of half-width δ₀ = {delta0}"
        )));
    }

    let fourier = Fourier::new(dom);
    // wrapped (origin at index 0) copy for the transform path
    let mut wrapped = vec![0.0; dom.len()];
    let m = dom.points() as isize;
    for (o, v) in &stencil {
        let i = o[0].rem_euclid(m) as usize;
        let j = o[1].rem_euclid(m) as usize;
        wrapped[dom.flatten([i, j])] = *v;
    }
    let spectrum = fourier.forward(&wrapped);

    Ok(Kernel {
        domain: dom,
        shape,
        values,
        stencil,
        support_radius,
        delta0,
        min_on_ball,
        eta: ETA_FRACTION * min_on_ball,
        spectrum,
        fourier,
    })
}

/// `(J∗u)_x = h^N Σ_y J(x-y) u_y` by summing over the kernel's non-zero
/// offsets. Reference path.
pub fn convolve_direct(j: &Kernel, u: &Field) -> Result<Field> {
    j.domain.same_as(u.domain())?;
    let dom = j.domain;
    let m = dom.points() as isize;
    let hn = dom.cell_measure();
    let uv = u.values();
    let mut out = vec![0.0; dom.len()];
    for (x, slot) in out.iter_mut().enumerate() {
        let [xi, xj] = dom.unflatten(x);
        let mut acc = 0.0;
        for (o, v) in &j.stencil {
            let yi = (xi as isize - o[0]).rem_euclid(m) as usize;
            let yj = (xj as isize - o[1]).rem_euclid(m) as usize;
            acc += v * uv[dom.flatten([yi, yj])];
        }
        *slot = hn * acc;
    }
    Ok(Field::from_raw(dom, out))
}

/// Same as [`convolve_direct`] through the FFT.
pub fn convolve_fft(j: &Kernel, u: &Field) -> Result<Field> {
    j.domain.same_as(u.domain())?;
    let hn = j.domain.cell_measure();
    let mut spec = j.fourier.forward(u.values());
    for (s, k) in spec.iter_mut().zip(&j.spectrum) {
        *s *= k * hn;
    }
    Ok(Field::from_raw(j.domain, j.fourier.inverse(spec)))
}

/// Default convolution: the transform path.
pub fn convolve(j: &Kernel, u: &Field) -> Result<Field> {
    convolve_fft(j, u)
}

/// `∫ u ≈ h^N Σ u`.
pub fn global_mass(u: &Field) -> f64 {
    u.mass()
}

/// Share of the total mass held by cells within `margin` of the box faces.
pub fn seam_mass_fraction(u: &Field, margin: f64) -> f64 {
    let dom = u.domain();
    let total: f64 = u.values().iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let near: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| dom.seam_distance(*i) < margin)
        .map(|(_, v)| v.abs())
        .sum();
    near / total
}

/// Header line of the tabulated-kernel CSV format.
pub fn kernel_header(dom: &Domain) -> String {
    format!("# kernel {dom}")
}

/// Writes centred lattice values, one per line, after the header.
pub fn write_tabulated(path: &Path, k: &Kernel) -> Result<()> {
    let mut s = kernel_header(&k.domain);
    s.push('\n');
    for v in &k.values {
        s.push_str(&format!("{v:e}\n"));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a tabulated kernel and checks its header against `dom`.
pub fn read_tabulated(path: &Path, dom: &Domain) -> Result<KernelShape> {
    let text = std::fs::read_to_string(path)?;
    parse_tabulated(&text, dom)
}

pub fn parse_tabulated(text: &str, dom: &Domain) -> Result<KernelShape> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty kernel file".into()))?;
    let fields = parse_header(header, "kernel")?;
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse(format!("kernel header lacks {key}")))
    };
    let m: usize = get("M")?
        .parse()
        .map_err(|_| Error::Parse("bad M in kernel header".into()))?;
    let n: usize = get("N")?
        .parse()
        .map_err(|_| Error::Parse("bad N in kernel header".into()))?;
    let l: f64 = get("L")?
        .parse()
        .map_err(|_| Error::Parse("bad L in kernel header".into()))?;
    if m != dom.points() || n != dom.dim() || (l - dom.half_width()).abs() > 1e-12 * l.abs() {
        return Err(Error::Kernel(format!(
            "kernel file is for M={m} N={n} L={l}, domain is {dom}"
        )));
    }
    let values = lines
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad kernel value `{l}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelShape::Tabulated(values))
}

/// Splits `# <tag> k=v k=v ...` into pairs.
pub(crate) fn parse_header(line: &str, tag: &str) -> Result<Vec<(String, String)>> {
    let rest = line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|r| r.strip_prefix(tag))
        .ok_or_else(|| Error::Parse(format!("expected `# {tag} ...` header, got `{line}`")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("bad header entry `{kv}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom1(m: usize) -> Domain {
        Domain::new(1, 4.0, m).unwrap()
    }

    #[test]
    fn box_kernel_in_one_dimension() {
        let d = dom1(256);
        let k = build_kernel(KernelShape::Box { radius: 1.0 }, d, None).unwrap();
        let h = d.spacing();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert_eq!(k.delta0(), 0.5);
        // 2r/h + 1 lattice points share unit mass
        assert!((k.min_on_ball() - 1.0 / (2.0 + h)).abs() < 1e-12);
        assert!((k.min_on_ball() - 0.5).abs() <= h);
        assert_eq!(k.eta(), ETA_FRACTION * k.min_on_ball());
    }

    #[test]
    fn delta_kernel_only_certifies_the_zero_ball() {
        let d = dom1(32);
        let mut v = vec![0.0; 32];
        v[16] = 1.0;
        let k = build_kernel(KernelShape::Tabulated(v.clone()), d, None).unwrap();
        assert_eq!(k.delta0(), 0.0);
        assert!(k.eta() > 0.0);
        assert!(build_kernel(KernelShape::Tabulated(v), d, Some(0.3)).is_err());
    }

    #[test]
    fn gaussian_in_two_dimensions() {
        let d = Domain::new(2, 4.0, 32).unwrap();
        let k = build_kernel(
            KernelShape::TruncatedGaussian {
                scale: 0.5,
                cutoff: 2.0,
            },
            d,
            None,
        )
        .unwrap();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert_eq!(k.delta0(), 1.0);
        // h = 0.25, so (δ₀, δ₀) is a lattice offset (4, 4) and the minimum sits there
        assert_eq!(k.min_on_ball(), k.at_offset([4, 4]));
    }

    #[test]
    fn rejects_bad_kernels() {
        let d = dom1(32);
        assert!(build_kernel(KernelShape::Box { radius: 5.0 }, d, None).is_err());
        assert!(build_kernel(KernelShape::Tabulated(vec![0.0; 32]), d, None).is_err());
        assert!(build_kernel(KernelShape::Tabulated(vec![1.0; 5]), d, None).is_err());
        let mut neg = vec![0.0; 32];
        neg[16] = 1.0;
        neg[3] = -1.0;
        assert!(build_kernel(KernelShape::Tabulated(neg), d, None).is_err());
    }

    #[test]
    fn convolution_identities() {
        let d = dom1(64);
        let k = build_kernel(KernelShape::Box { radius: 0.7 }, d, None).unwrap();
        let c = Field::constant(d, 2.5);
        for out in [convolve_direct(&k, &c).unwrap(), convolve_fft(&k, &c).unwrap()] {
            assert!(out.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
        // identity kernel
        let mut id = vec![0.0; 64];
        id[32] = 1.0;
        let idk = build_kernel(KernelShape::Tabulated(id), d, None).unwrap();
        let u = Field::from_fn(d, |p| (p[0] * 1.3).sin() + 2.0).unwrap();
        let out = convolve_fft(&idk, &u).unwrap();
        assert!(out.values().iter().zip(u.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        // spike of unit mass reproduces J, shifted to the spike
        let mut spike = Field::zeros(d);
        spike.values_mut()[10] = 1.0 / d.spacing();
        let out = convolve_direct(&k, &spike).unwrap();
        for x in 0..64 {
            let expect = k.at_offset([x as isize - 10, 0]);
            assert!((out.values()[x] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let k = build_kernel(KernelShape::Box { radius: 1.0 }, dom1(32), None).unwrap();
        assert!(convolve(&k, &Field::zeros(dom1(64))).is_err());
    }

    #[test]
    fn tabulated_round_trip() {
        let d = Domain::new(2, 2.0, 16).unwrap();
        let k = build_kernel(KernelShape::Box { radius: 0.5 }, d, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        write_tabulated(&path, &k).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# kernel M=16 N=2 L=2\n"));
        let k2 = build_kernel(read_tabulated(&path, &d).unwrap(), d, None).unwrap();
        assert!(k
            .values()
            .iter()
            .zip(k2.values())
            .all(|(a, b)| (a - b).abs() < 1e-12 * a.max(1.0)));
        assert!(read_tabulated(&path, &Domain::new(2, 2.0, 8).unwrap()).is_err());
    }

    #[test]
    fn global_mass_examples() {
        let d = Domain::new(1, 2.0, 16).unwrap();
        assert_eq!(global_mass(&Field::zeros(d)), 0.0);
        assert!((global_mass(&Field::constant(d, 1.0)) - 4.0).abs() < 1e-15);
    }
}
