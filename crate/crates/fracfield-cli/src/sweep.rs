//! Parameter sweeps: every point of a (μ, k, γ, α) grid is an independent
//! run of the same experiment.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fracfield::diagnostics::fit_decay;
use fracfield::solver::ModelParams;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands::{execute, num, params_json, termination_json, CliError};
use crate::config::{ConfigError, RawConfig};
use crate::experiment::{ExperimentConfig, Prepared};

pub const DEFAULT_MAX_POINTS: usize = 10_000;

/// Swept axes, in grid-coordinate order.
pub const AXES: [&str; 4] = ["mu", "k", "gamma", "alpha"];

/// `lo:hi:n` (n evenly spaced values) or a comma list.
pub fn parse_axis(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |m: String| ConfigError::new(key, m);
    let mut values = if let Some((lo, rest)) = text.split_once(':') {
        let (hi, n) = rest.split_once(':').ok_or_else(|| bad("expected `lo:hi:n`".into()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("cannot parse `{}`", s.trim())))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| bad(format!("cannot parse count `{}`", n.trim())))?;
        if n == 0 || hi < lo || (n > 1 && hi == lo) {
            return Err(bad(format!("empty range {text}")));
        }
        if n == 1 {
            vec![lo]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("cannot parse `{}`", s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("empty range".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("non-finite value".into()));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

/// One grid point and its validated experiment.
pub struct SweepPoint {
    /// `[μ, k, γ, α]`.
    pub coords: [f64; 4],
    pub config: ExperimentConfig,
    pub prepared: Prepared,
}

/// A validated sweep, ready to run.
pub struct SweepPlan {
    pub points: Vec<SweepPoint>,
    pub workers: usize,
    pub output_dir: PathBuf,
}

/// Parses a sweep config and validates every point before anything runs.
pub fn plan(text: &str, base: &Path) -> Result<SweepPlan, ConfigError> {
    let mut raw = RawConfig::parse(text)?;
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for name in AXES {
        let key = format!("sweep.{name}");
        let swept = raw.get_str(&key);
        let model_key = format!("model.{name}");
        let values = match swept {
            Some(text) => {
                if raw.contains(&model_key) {
                    return Err(ConfigError::new(key, format!("also set as {model_key}")));
                }
                let v = parse_axis(&key, &text)?;
                raw.set_default(&model_key, v[0].to_string());
                v
            }
            None => vec![f64::NAN],
        };
        axes.push(values);
    }
    let max_points: usize = raw.get_or("sweep.max_points", DEFAULT_MAX_POINTS)?;
    let workers: usize = raw.get_or("sweep.workers", 0)?;
    let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
    match total {
        Some(n) if n <= max_points => {}
        _ => {
            return Err(ConfigError::new(
                "sweep.max_points",
                format!(
                    "grid has {} points, cap is {max_points}",
                    total.map_or("too many".into(), |n| n.to_string())
                ),
            ))
        }
    }
    let base_cfg = ExperimentConfig::from_raw(&raw, base)?;
    raw.reject_unused()?;
    let output_dir = base_cfg.resolved_output_dir();

    let mut points = Vec::new();
    for &mu in &axes[0] {
        for &k in &axes[1] {
            for &gamma in &axes[2] {
                for &alpha in &axes[3] {
                    let b = base_cfg.params;
                    let pick = |v: f64, d: f64| if v.is_nan() { d } else { v };
                    let coords = [pick(mu, b.mu), pick(k, b.k), pick(gamma, b.gamma), pick(alpha, b.alpha)];
                    let at = |e: ConfigError| {
                        ConfigError::new(
                            format!(
                                "sweep point mu={} k={} gamma={} alpha={}",
                                coords[0], coords[1], coords[2], coords[3]
                            ),
                            format!("{}: {}", e.path, e.message),
                        )
                    };
                    let params = ModelParams {
                        alpha: coords[3],
                        mu: coords[0],
                        k: coords[1],
                        gamma: coords[2],
                        variant: b.variant,
                    };
                    let params = match b.variant {
                        fracfield::solver::Variant::Standard => {
                            ModelParams::standard(params.alpha, params.mu, params.k, params.gamma)
                        }
                        fracfield::solver::Variant::NonlinearDiffusion { m } => {
                            ModelParams::nonlinear_diffusion(params.alpha, params.mu, params.k, params.gamma, m)
                        }
                    }
                    .map_err(|e| at(ConfigError::new("model", e.to_string())))?;
                    let config = ExperimentConfig {
                        params,
                        ..base_cfg.clone()
                    };
                    let prepared = config.prepare().map_err(at)?;
                    points.push(SweepPoint {
                        coords,
                        config,
                        prepared,
                    });
                }
            }
        }
    }
    Ok(SweepPlan {
        points,
        workers,
        output_dir,
    })
}

/// Result of one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub coords: [f64; 4],
    pub outcome: String,
    pub sup_max: f64,
    pub decay_violation: Option<f64>,
    pub summary: Value,
}

/// Summary of a finished sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<PointResult>,
    /// Lines of (k, γ, α) along which the outcome changes more than once
    /// as μ increases.
    pub non_monotone_lines: Vec<[f64; 3]>,
    pub csv: PathBuf,
    pub jsonl: PathBuf,
}

fn run_point(p: &SweepPoint) -> Result<PointResult, CliError> {
    let rec = execute(&p.config, &p.prepared)?;
    let decay = fit_decay(&rec).ok().map(|f| f.violation);
    let summary = json!({
        "mu": p.coords[0], "k": p.coords[1], "gamma": p.coords[2], "alpha": p.coords[3],
        "params": params_json(&p.config.params),
        "termination": termination_json(&rec.termination),
        "sup_max": num(rec.sup_norm_max()),
        "decay_violation": decay.map(num).unwrap_or(Value::Null),
        "clamp_events": rec.clamp_events,
    });
    Ok(PointResult {
        coords: p.coords,
        outcome: rec.termination.label().to_string(),
        sup_max: rec.sup_norm_max(),
        decay_violation: decay,
        summary,
    })
}

/// Whether the outcome switches at most once along increasing μ.
fn non_monotone(results: &[PointResult]) -> Vec<[f64; 3]> {
    let mut lines: Vec<[f64; 3]> = Vec::new();
    let mut sorted: Vec<&PointResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        let key = |r: &PointResult| [r.coords[1], r.coords[2], r.coords[3], r.coords[0]];
        key(a)
            .iter()
            .zip(key(b))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for group in sorted.chunk_by(|a, b| a.coords[1..] == b.coords[1..]) {
        let switches = group.windows(2).filter(|w| w[0].outcome != w[1].outcome).count();
        if switches > 1 {
            lines.push([group[0].coords[1], group[0].coords[2], group[0].coords[3]]);
        }
    }
    lines
}

/// Runs all points and writes `sweep.csv` and `points.jsonl`, sorted by
/// grid coordinates whatever the execution order.
pub fn execute_plan(plan: SweepPlan) -> Result<SweepOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let mut results: Vec<PointResult> =
        pool.install(|| plan.points.par_iter().map(run_point).collect::<Result<Vec<_>, _>>())?;
    results.sort_by(|a, b| {
        a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut csv = String::from("mu,k,gamma,alpha,outcome,sup_max,decay_violation\n");
    let mut jsonl = String::new();
    for r in &results {
        let dv = r.decay_violation.map(|v| v.to_string()).unwrap_or_default();
        let [mu, k, g, a] = r.coords;
        let _ = writeln!(csv, "{mu},{k},{g},{a},{},{},{dv}", r.outcome, r.sup_max);
        jsonl.push_str(&r.summary.to_string());
        jsonl.push('\n');
    }
    fs::create_dir_all(&plan.output_dir)?;
    let csv_path = plan.output_dir.join("sweep.csv");
    let jsonl_path = plan.output_dir.join("points.jsonl");
    fs::write(&csv_path, csv)?;
    fs::write(&jsonl_path, jsonl)?;
    Ok(SweepOutcome {
        non_monotone_lines: non_monotone(&results),
        results,
        csv: csv_path,
        jsonl: jsonl_path,
    })
}
