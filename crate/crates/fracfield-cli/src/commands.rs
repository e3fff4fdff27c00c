//! `simulate` and `report`: run one configured experiment and write its
//! artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fracfield::diagnostics::{estimate_gn_constant, fit_decay, k_star, lyapunov_dissipation_check, steady_states};
use fracfield::grid::format_field;
use fracfield::solver::{run, run_spectral, ModelParams, RunRecord, Termination, Variant};
use serde_json::{json, Value};

use crate::config::ConfigError;
use crate::experiment::{ExperimentConfig, IntegratorChoice, Prepared};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_SEAM: i32 = 4;

/// Why a command could not finish.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl From<fracfield::Error> for CliError {
    fn from(e: fracfield::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

pub fn exit_code_for(t: &Termination) -> i32 {
    match t {
        Termination::Completed => EXIT_OK,
        Termination::BlowUp { .. } => EXIT_BLOW_UP,
        Termination::SeamViolation { .. } => EXIT_SEAM,
    }
}

/// Reads and fully validates a config file; nothing is written.
pub fn load(path: &Path) -> Result<(ExperimentConfig, Prepared), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("unreadable: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (cfg, raw) = ExperimentConfig::from_text(&text, base)?;
    raw.reject_unused()?;
    let prepared = cfg.prepare()?;
    Ok((cfg, prepared))
}

pub fn execute(cfg: &ExperimentConfig, prep: &Prepared) -> Result<RunRecord, CliError> {
    let f = match cfg.integrator {
        IntegratorChoice::Imex => run,
        IntegratorChoice::Spectral => run_spectral,
    };
    Ok(f(
        &prep.u0,
        &cfg.params,
        &prep.competition,
        cfg.horizon,
        cfg.dt,
        &prep.options,
    )?)
}

/// JSON number, or `null` for NaN and infinities.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn params_json(p: &ModelParams) -> Value {
    let mut v = json!({"alpha": p.alpha, "mu": p.mu, "k": p.k, "gamma": p.gamma});
    match p.variant {
        Variant::Standard => v["variant"] = json!("standard"),
        Variant::NonlinearDiffusion { m } => {
            v["variant"] = json!("nonlinear_diffusion");
            v["m"] = json!(m);
        }
    }
    v
}

pub fn termination_json(t: &Termination) -> Value {
    match *t {
        Termination::Completed => json!({"kind": "completed"}),
        Termination::BlowUp { t, norm, certified } => {
            json!({"kind": "blow_up", "t": t, "norm": num(norm), "certified": certified})
        }
        Termination::SeamViolation { t } => json!({"kind": "seam_violation", "t": t}),
    }
}

/// `t,sup_norm,mass,local_l2,lyapunov`, one row per step.
pub fn diagnostics_csv(rec: &RunRecord) -> String {
    let mut s = String::from("t,sup_norm,mass,local_l2,lyapunov\n");
    for d in &rec.diagnostics {
        let lyap = d.lyapunov.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", d.t, d.sup_norm, d.mass, d.local_l2, lyap);
    }
    s
}

/// Writes `diagnostics.csv`, `snapshot_NNN.csv` and `summary.json`.
pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    prep: &Prepared,
    rec: &RunRecord,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let diag = dir.join("diagnostics.csv");
    fs::write(&diag, diagnostics_csv(rec))?;
    written.push(diag);
    let mut snaps = Vec::new();
    for (i, (t, field)) in rec.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:03}.csv");
        fs::write(dir.join(&name), format_field(*t, field))?;
        snaps.push(json!({"t": t, "file": name}));
        written.push(dir.join(name));
    }
    let summary = json!({
        "params": params_json(&cfg.params),
        "domain": {"dim": cfg.domain.dim(), "points": cfg.domain.points(), "half_width": cfg.domain.half_width()},
        "integrator": cfg.integrator.label(),
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "steps": rec.diagnostics.len() - 1,
        "termination": termination_json(&rec.termination),
        "sup_norm_max": num(rec.sup_norm_max()),
        "clamp_events": rec.clamp_events,
        "snapshots": snaps,
        "warnings": prep.warnings,
    });
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
    written.push(path);
    Ok(written)
}

/// Runs and writes a configured simulation; the exit code follows the
/// termination.
pub fn simulate(path: &Path) -> Result<(i32, RunRecord, PathBuf), CliError> {
    let (cfg, prep) = load(path)?;
    for w in &prep.warnings {
        eprintln!("warning: {w}");
    }
    let rec = execute(&cfg, &prep)?;
    let dir = cfg.resolved_output_dir();
    write_run(&dir, &cfg, &prep, &rec)?;
    Ok((exit_code_for(&rec.termination), rec, dir))
}

/// The report JSON for one run.
pub fn report_json(cfg: &ExperimentConfig, prep: &Prepared, rec: &RunRecord) -> Result<Value, CliError> {
    let p = &cfg.params;
    let kstar = match (cfg.domain.dim(), prep.competition.kernel()) {
        (1, _) => json!(0.0),
        (_, None) => Value::Null,
        (_, Some(j)) => {
            let c = match cfg.c_gn {
                Some(c) => c,
                None => estimate_gn_constant(cfg.domain, 200, cfg.seed)?,
            };
            num(k_star(2, p.mu, j.eta(), Some(c))?)
        }
    };
    let s = steady_states(p);
    let decay = fit_decay(rec).ok().map(|f| num(f.violation)).unwrap_or(Value::Null);
    let lyapunov = if rec.history.is_some() {
        match lyapunov_dissipation_check(rec, &[rec.probe.center], rec.probe.delta) {
            Ok(r) if !r.skipped => num(r.max_margin),
            _ => Value::Null,
        }
    } else {
        Value::Null
    };
    Ok(json!({
        "params": params_json(p),
        "k_star": kstar,
        "steady_states": {"a": num(s.a), "A": num(s.big_a), "valid": s.valid},
        "sup_norm_max": num(rec.sup_norm_max()),
        "decay_violation": decay,
        "lyapunov_margin": lyapunov,
        "termination": termination_json(&rec.termination),
    }))
}

/// Runs the configured experiment and writes `report.json`.
pub fn report(path: &Path) -> Result<(Value, PathBuf), CliError> {
    let (cfg, prep) = load(path)?;
    let rec = execute(&cfg, &prep)?;
    let value = report_json(&cfg, &prep, &rec)?;
    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(&dir)?;
    let out = dir.join("report.json");
    fs::write(&out, serde_json::to_string_pretty(&value).unwrap() + "\n")?;
    Ok((value, out))
}
