//! Typed experiment description built from a [`RawConfig`], and the
//! objects a run needs.

use std::path::{Path, PathBuf};

use fracfield::grid::{parse_field, Domain, Field};
use fracfield::kernels::{build_kernel, read_tabulated, KernelShape};
use fracfield::solver::{validate_run, Competition, ModelParams, Probe, RunOptions};
use fracfield::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, RawConfig};

/// Environment variable that overrides `output.dir`.
pub const OUT_ENV: &str = "FRACFIELD_OUT";

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Box {
        radius: f64,
    },
    Gaussian {
        scale: f64,
        cutoff: f64,
    },
    Tabulated(PathBuf),
    /// `J ≡ 1`: global mass coupling.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Bump {
        center: [f64; 2],
        radius: f64,
        height: f64,
    },
    Constant(f64),
    Tabulated(PathBuf),
    /// A bump modulated cell by cell by `1 + amplitude (ξ - ½)`, `ξ`
    /// uniform from the configured seed.
    Noisy {
        center: [f64; 2],
        radius: f64,
        height: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorChoice {
    Imex,
    Spectral,
}

impl IntegratorChoice {
    pub fn label(&self) -> &'static str {
        match self {
            IntegratorChoice::Imex => "imex",
            IntegratorChoice::Spectral => "spectral",
        }
    }
}

/// Everything a `simulate`, `report` or `sweep` invocation reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub domain: Domain,
    pub kernel: KernelSpec,
    pub delta0: Option<f64>,
    pub initial: InitialSpec,
    pub integrator: IntegratorChoice,
    pub dt: f64,
    pub horizon: f64,
    pub snapshots: Vec<f64>,
    pub probe_center: Option<[f64; 2]>,
    pub probe_delta: Option<f64>,
    pub lyapunov: bool,
    pub blow_up_threshold: f64,
    pub seam_margin: Option<f64>,
    pub seam_tolerance: f64,
    pub c_gn: Option<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// The objects a run consumes, all validated.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub u0: Field,
    pub competition: Competition,
    pub options: RunOptions,
    /// Non-fatal remarks (e.g. a probe wider than the certified radius).
    pub warnings: Vec<String>,
}

fn point(key: &str, v: Option<Vec<f64>>, dim: usize) -> Result<[f64; 2], ConfigError> {
    match v {
        None => Ok([0.0, 0.0]),
        Some(v) if v.len() == dim => Ok([v[0], if dim == 2 { v[1] } else { 0.0 }]),
        Some(v) => Err(ConfigError::new(
            key,
            format!("expected {dim} coordinates, got {}", v.len()),
        )),
    }
}

fn lib_error(section: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { name, value, reason } => {
            ConfigError::new(format!("{section}.{name}"), format!("{value} {reason}"))
        }
        other => ConfigError::new(section, other.to_string()),
    }
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = PathBuf::from(file);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Parses the whole file; `base` resolves relative file references.
    pub fn from_text(text: &str, base: &Path) -> Result<(Self, RawConfig), ConfigError> {
        let raw = RawConfig::parse(text)?;
        let cfg = Self::from_raw(&raw, base)?;
        Ok((cfg, raw))
    }

    pub fn from_raw(raw: &RawConfig, base: &Path) -> Result<Self, ConfigError> {
        let alpha = raw.require("model.alpha")?;
        let mu = raw.require("model.mu")?;
        let k = raw.get_or("model.k", 0.0)?;
        let gamma = raw.require("model.gamma")?;
        let params = match raw.get_str("model.variant").as_deref().unwrap_or("standard") {
            "standard" => ModelParams::standard(alpha, mu, k, gamma),
            "nonlinear_diffusion" => ModelParams::nonlinear_diffusion(alpha, mu, k, gamma, raw.require("model.m")?),
            other => return Err(ConfigError::new("model.variant", format!("unknown variant `{other}`"))),
        }
        .map_err(|e| lib_error("model", e))?;

        let dim: usize = raw.require("domain.dim")?;
        let domain = Domain::new(dim, raw.require("domain.half_width")?, raw.require("domain.points")?)
            .map_err(|e| lib_error("domain", e))?;
        params.check_dimension(dim).map_err(|e| lib_error("model", e))?;

        let kernel = match raw.get_str("kernel.shape").as_deref().unwrap_or("box") {
            "box" => KernelSpec::Box {
                radius: raw.require("kernel.radius")?,
            },
            "gaussian" => KernelSpec::Gaussian {
                scale: raw.require("kernel.scale")?,
                cutoff: raw.require("kernel.cutoff")?,
            },
            "tabulated" => KernelSpec::Tabulated(resolve(
                base,
                &raw.get_str("kernel.file")
                    .ok_or_else(|| ConfigError::new("kernel.file", "missing"))?,
            )),
            "global" => KernelSpec::Global,
            other => return Err(ConfigError::new("kernel.shape", format!("unknown shape `{other}`"))),
        };
        if matches!(params.variant, fracfield::solver::Variant::NonlinearDiffusion { .. })
            && kernel != KernelSpec::Global
        {
            return Err(ConfigError::new(
                "kernel.shape",
                "the nonlinear-diffusion variant uses `global` coupling",
            ));
        }
        let delta0 = raw.get("kernel.delta0")?;

        let initial = match raw.get_str("initial.shape").as_deref().unwrap_or("bump") {
            "bump" => InitialSpec::Bump {
                center: point("initial.center", raw.get_list("initial.center")?, dim)?,
                radius: raw.require("initial.radius")?,
                height: raw.require("initial.height")?,
            },
            "constant" => InitialSpec::Constant(raw.require("initial.value")?),
            "tabulated" => InitialSpec::Tabulated(resolve(
                base,
                &raw.get_str("initial.file")
                    .ok_or_else(|| ConfigError::new("initial.file", "missing"))?,
            )),
            "noisy_bump" => InitialSpec::Noisy {
                center: point("initial.center", raw.get_list("initial.center")?, dim)?,
                radius: raw.require("initial.radius")?,
                height: raw.require("initial.height")?,
                amplitude: raw.get_or("initial.amplitude", 0.5)?,
            },
            other => return Err(ConfigError::new("initial.shape", format!("unknown shape `{other}`"))),
        };

        let integrator = match raw.get_str("run.integrator").as_deref().unwrap_or("imex") {
            "imex" => IntegratorChoice::Imex,
            "spectral" => IntegratorChoice::Spectral,
            other => {
                return Err(ConfigError::new(
                    "run.integrator",
                    format!("unknown integrator `{other}`"),
                ))
            }
        };
        let dt: f64 = raw.require("run.dt")?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::new("run.dt", "must be positive"));
        }
        let horizon: f64 = raw.require("run.horizon")?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ConfigError::new("run.horizon", "must be positive"));
        }
        let snapshots = raw.get_list("run.snapshots")?.unwrap_or_default();
        if let Some(t) = snapshots.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(ConfigError::new("run.snapshots", format!("bad time {t}")));
        }
        let probe_center = match raw.get_list("diagnostics.probe_center")? {
            Some(v) => Some(point("diagnostics.probe_center", Some(v), dim)?),
            None => None,
        };

        Ok(Self {
            params,
            domain,
            kernel,
            delta0,
            initial,
            integrator,
            dt,
            horizon,
            snapshots,
            probe_center,
            probe_delta: raw.get("diagnostics.probe_delta")?,
            lyapunov: raw.get_or("diagnostics.lyapunov", false)?,
            blow_up_threshold: raw.get_or("run.blow_up_threshold", 1e6)?,
            seam_margin: raw.get("run.seam_margin")?,
            seam_tolerance: raw.get_or("run.seam_tolerance", 1e-6)?,
            c_gn: raw.get("diagnostics.c_gn")?,
            output_dir: PathBuf::from(raw.get_str("output.dir").unwrap_or_else(|| "fracfield-out".into())),
            seed: raw.get_or("seed", 0)?,
        })
    }

    /// `output.dir`, unless the environment overrides it.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }

    /// Builds kernel, initial data and options, and runs every pre-run
    /// check of the solver.
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        let dom = self.domain;
        let competition = match &self.kernel {
            KernelSpec::Global => Competition::Global,
            spec => {
                let shape = match spec {
                    KernelSpec::Box { radius } => KernelShape::Box { radius: *radius },
                    KernelSpec::Gaussian { scale, cutoff } => KernelShape::TruncatedGaussian {
                        scale: *scale,
                        cutoff: *cutoff,
                    },
                    KernelSpec::Tabulated(path) => {
                        read_tabulated(path, &dom).map_err(|e| ConfigError::new("kernel.file", e.to_string()))?
                    }
                    KernelSpec::Global => unreachable!(),
                };
                Competition::Kernel(build_kernel(shape, dom, self.delta0).map_err(|e| lib_error("kernel", e))?)
            }
        };

        let u0 = match &self.initial {
            InitialSpec::Bump { center, radius, height } => Field::bump(dom, *center, *radius, *height),
            InitialSpec::Constant(c) => Field::new(dom, vec![*c; dom.len()]),
            InitialSpec::Tabulated(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| ConfigError::new("initial.file", e.to_string()))?;
                parse_field(&text, &dom).map(|(_, f)| f)
            }
            InitialSpec::Noisy {
                center,
                radius,
                height,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Field::bump(dom, *center, *radius, *height).and_then(|b| {
                    let v = b
                        .values()
                        .iter()
                        .map(|x| x * (1.0 + amplitude * (rng.gen::<f64>() - 0.5)))
                        .collect();
                    Field::new(dom, v)
                })
            }
        }
        .map_err(|e| lib_error("initial", e))?;

        let mut warnings = Vec::new();
        let probe = match (self.probe_center, self.probe_delta) {
            (None, None) => None,
            (c, d) => {
                let delta = match d {
                    Some(d) if d > 0.0 => d,
                    Some(_) => return Err(ConfigError::new("diagnostics.probe_delta", "must be positive")),
                    None => match competition.kernel() {
                        Some(j) => 0.5 * j.delta0(),
                        None => dom.half_width() / 8.0,
                    },
                };
                Some(Probe {
                    center: c.unwrap_or([0.0, 0.0]),
                    delta,
                })
            }
        };
        if let (Some(p), Some(j)) = (probe, competition.kernel()) {
            if p.delta > 0.5 * j.delta0() * (1.0 + 1e-12) {
                warnings.push(format!(
                    "probe half-width {} exceeds half the certified radius ({} / 2)",
                    p.delta,
                    j.delta0()
                ));
            }
        }
        let options = RunOptions {
            blow_up_threshold: self.blow_up_threshold,
            snapshot_times: self.snapshots.clone(),
            probe,
            lyapunov: self.lyapunov,
            keep_history: self.lyapunov,
            seam_margin: self.seam_margin,
            seam_tolerance: self.seam_tolerance,
        };
        if self.integrator == IntegratorChoice::Spectral && self.params.variant != fracfield::solver::Variant::Standard
        {
            return Err(ConfigError::new(
                "run.integrator",
                "the spectral integrator handles the standard variant only",
            ));
        }
        validate_run(&u0, &self.params, &competition, self.horizon, self.dt, &options)
            .map_err(|e| lib_error("run", e))?;
        Ok(Prepared {
            u0,
            competition,
            options,
            warnings,
        })
    }
}
