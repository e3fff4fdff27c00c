use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand, ValueEnum};
use fracfield::fode::{solve_exact, solve_l1, Forcing, LinearFode};
use fracfield::fractional::TimeGrid;
use fracfield::mlf::{mittag_leffler, ml_eval_with, MlMethod, MlQuery};
use fracfield_cli::commands::{self, CliError, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use fracfield_cli::config::ConfigError;
use fracfield_cli::{sweep, verify};

#[derive(Parser)]
#[command(
    name = "fracfield",
    version,
    about = "Time-fractional nonlocal reaction-diffusion simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured simulation and write its diagnostics, snapshots and summary.
    Simulate { config: PathBuf },
    /// Run an invariant suite and print a JSON verdict.
    Verify {
        #[arg(value_parser = verify::SUITES)]
        suite: String,
    },
    /// Run every point of a parameter grid.
    Sweep { config: PathBuf },
    /// Evaluate E_{alpha,beta}(z).
    MlEval {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Solve D^alpha w = A w + f exactly and by the L1 scheme; CSV on stdout.
    Fode {
        #[arg(long)]
        alpha: f64,
        /// The coefficient A.
        #[arg(long, allow_hyphen_values = true)]
        coeff: f64,
        /// Initial value w(0).
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
        /// Constant forcing f.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        forcing: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Run a configured simulation and write a JSON analysis of it.
    Report { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Series,
    Asymptotic,
    Integral,
}

fn argument_error(e: fracfield::Error) -> CliError {
    match e {
        fracfield::Error::InvalidParameter { name, value, reason } => {
            CliError::Config(ConfigError::new(name, format!("{value} {reason}")))
        }
        other => other.into(),
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Simulate { config } => {
            let (code, rec, dir) = commands::simulate(&config)?;
            println!(
                "{}: {} steps, sup norm max {}, clamp events {}, output in {}",
                rec.termination.label(),
                rec.diagnostics.len() - 1,
                rec.sup_norm_max(),
                rec.clamp_events,
                dir.display()
            );
            Ok(code)
        }
        Command::Report { config } => {
            let (value, path) = commands::report(&config)?;
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
            eprintln!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Verify { suite } => {
            let (passed, value) = verify::run_suite(&suite).expect("suite names are checked by the parser");
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
            Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| ConfigError::new(config.display().to_string(), format!("unreadable: {e}")))?;
            let plan = sweep::plan(&text, config.parent().unwrap_or(std::path::Path::new(".")))?;
            let out = sweep::execute_plan(plan)?;
            println!("{} points written to {}", out.results.len(), out.csv.display());
            if out.non_monotone_lines.is_empty() {
                println!("outcome is monotone in mu on every (k, gamma, alpha) line");
            } else {
                for [k, g, a] in &out.non_monotone_lines {
                    println!("outcome is not monotone in mu at k={k} gamma={g} alpha={a}");
                }
            }
            Ok(EXIT_OK)
        }
        Command::MlEval { alpha, beta, z, method } => {
            let value = match method {
                Method::Auto => mittag_leffler(alpha, beta, z),
                m => {
                    let m = match m {
                        Method::Series => MlMethod::Series,
                        Method::Asymptotic => MlMethod::Asymptotic,
                        _ => MlMethod::Integral,
                    };
                    MlQuery::new(alpha, beta, z).and_then(|q| ml_eval_with(q, m))
                }
            }
            .map_err(argument_error)?;
            println!("{value:e}");
            Ok(EXIT_OK)
        }
        Command::Fode {
            alpha,
            coeff,
            eta,
            forcing,
            dt,
            horizon,
        } => {
            let p = LinearFode::new(alpha, coeff, eta, Forcing::Constant(forcing)).map_err(argument_error)?;
            let grid = TimeGrid::covering(horizon, dt).map_err(argument_error)?;
            let exact = solve_exact(&p, &grid)?;
            let l1 = solve_l1(&p, &grid)?;
            let mut csv = String::from("t,w_exact,w_l1,envelope\n");
            for (j, t) in grid.times().enumerate() {
                let envelope = eta * mittag_leffler(alpha, 1.0, coeff * t.powf(alpha))?;
                let _ = writeln!(csv, "{t},{},{},{envelope}", exact[j], l1[j]);
            }
            print!("{csv}");
            Ok(EXIT_OK)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    if code == EXIT_CONFIG {
        eprintln!("no output was written");
    }
    exit(code);
}
