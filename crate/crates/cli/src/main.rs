//! `weakrig`: rigidity analysis, formation simulation, gradient checks and
//! Henneberg growth from the command line.
//!
//! Exit codes: 0 success or rigid, 1 error, 2 not rigid, 3 time limit
//! reached, 4 incorrect equilibrium.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use weakrig::formation::{
    classify_equilibrium, simulate, SimulationConfig, TerminalStatus, ThreeAgent, DEFAULT_FD_STEP,
};
use weakrig::henneberg::{grow_random, triangle_seed, DEFAULT_MIX};
use weakrig::io::{framework_to_json, parse_framework, parse_targets, to_json, trace_to_csv};
use weakrig::rigidity::gradient_check;
use weakrig::{classify, Error, DEFAULT_RANK_TOL};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NOT_RIGID: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_INCORRECT_EQUILIBRIUM: u8 = 4;

/// Largest analytic vs finite-difference deviation accepted by
/// `check-gradient`.
const GRADIENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "weakrig",
    version,
    about = "Weak rigidity analysis and formation control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank test for (infinitesimal) weak rigidity.
    Analyze {
        framework: PathBuf,
        /// Relative singular-value threshold for the numerical rank.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Integrate the gradient formation controller with RK4.
    Simulate {
        framework: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "t-max", default_value_t = 200.0)]
        t_max: f64,
        /// Convergence threshold on the error norm.
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        /// Keep every k-th integration step in the trace.
        #[arg(long = "record-every", default_value_t = 10)]
        record_every: usize,
        /// Trace CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the summary as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Grow a minimally weakly rigid framework from a triangle.
    Grow {
        /// Final number of vertices.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Probability of a 0-extension at each step.
        #[arg(long, default_value_t = DEFAULT_MIX)]
        mix: f64,
        /// Framework JSON destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replayable step log destination.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compare the analytic rigidity matrix with central finite differences.
    CheckGradient {
        framework: PathBuf,
        #[arg(long = "fd-step", default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulationSummary {
    status: TerminalStatus,
    final_error_norm: f64,
    steps: usize,
    final_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_jacobian_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unstable: Option<bool>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Analyze {
            framework,
            tol,
            json,
        } => analyze(&framework, tol, json),
        Command::Simulate {
            framework,
            targets,
            dt,
            t_max,
            eps,
            record_every,
            out,
            json,
        } => {
            positive("dt", dt)?;
            positive("eps", eps)?;
            if record_every == 0 {
                return Err(Error::InvalidParameter(
                    "--record-every must be positive, got 0".into(),
                ));
            }
            if !(t_max.is_finite() && t_max >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "--t-max must be non-negative, got {t_max}"
                )));
            }
            let cfg = SimulationConfig {
                dt,
                t_max,
                convergence_eps: eps,
                record_every,
                ..SimulationConfig::default()
            };
            run_simulation(&framework, &targets, &cfg, out.as_deref(), json)
        }
        Command::Grow {
            n,
            seed,
            mix,
            out,
            log,
        } => grow(n, seed, mix, out.as_deref(), log.as_deref()),
        Command::CheckGradient { framework, fd_step } => {
            positive("fd-step", fd_step)?;
            check_gradient(&framework, fd_step)
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), Error> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Prefixes a file-format error with the offending path.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => Error::Parse(format!("{}: {other}", path.display())),
    }
}

fn load_framework(path: &Path) -> Result<weakrig::Framework, Error> {
    parse_framework(&read(path)?).map_err(|e| in_file(path, e))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let io_err = |e: std::io::Error| Error::InvalidParameter(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn analyze(path: &Path, tol: f64, json: bool) -> Result<u8, Error> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "--tol must lie in (0, 1), got {tol}"
        )));
    }
    let f = load_framework(path)?;
    let report = classify(&f, tol)?;
    if json {
        print!("{}", to_json(&report));
    } else {
        println!(
            "rank {}/{} - {}",
            report.rank, report.required_rank, report.verdict
        );
        println!("null space dimension: {}", report.null_space_dim);
        println!(
            "trivial motion residual: {:e}",
            report.trivial_motion_residual
        );
        if let Some(note) = &report.note {
            println!("note: {note}");
        }
    }
    Ok(if report.verdict.is_rigid() {
        EXIT_OK
    } else {
        EXIT_NOT_RIGID
    })
}

fn run_simulation(
    fw: &Path,
    targets: &Path,
    cfg: &SimulationConfig,
    out: Option<&Path>,
    json: bool,
) -> Result<u8, Error> {
    let f = load_framework(fw)?;
    let t = parse_targets(&read(targets)?, f.graph()).map_err(|e| in_file(targets, e))?;
    if ThreeAgent::detect(f.graph()).is_err() {
        eprintln!("warning: not the three-agent topology; stability results do not apply");
    }
    let trace = simulate(&f, &t, cfg)?;
    if let Some(out) = out {
        write_atomic(out, &trace_to_csv(&trace))?;
    }
    let mut summary = SimulationSummary {
        status: trace.terminal_status,
        final_error_norm: trace.final_error_norm(),
        steps: trace.steps,
        final_time: *trace.times.last().expect("trace has an initial sample"),
        min_jacobian_eig: None,
        unstable: None,
    };
    if trace.terminal_status == TerminalStatus::IncorrectEquilibrium {
        let end = f.with_positions(trace.final_positions().to_vec())?;
        let eq = classify_equilibrium(&end, &t, cfg.convergence_eps.max(1e-6))?;
        if let Some(eig) = eq.min_jacobian_eig {
            summary.min_jacobian_eig = Some(eig);
            summary.unstable = Some(eig < 0.0);
        }
    }
    if json {
        print!("{}", to_json(&summary));
    } else {
        println!("status: {}", status_name(summary.status));
        println!("final error norm: {:e}", summary.final_error_norm);
        println!("steps: {}", summary.steps);
        println!("final time: {}", summary.final_time);
        if let Some(eig) = summary.min_jacobian_eig {
            let tag = if eig < 0.0 {
                "unstable"
            } else {
                "not shown unstable"
            };
            println!("min flow Jacobian eigenvalue: {eig:e} ({tag})");
        }
    }
    Ok(match trace.terminal_status {
        TerminalStatus::Converged => EXIT_OK,
        TerminalStatus::MaxTime => EXIT_TIMEOUT,
        TerminalStatus::IncorrectEquilibrium => EXIT_INCORRECT_EQUILIBRIUM,
        TerminalStatus::Diverged | TerminalStatus::Degenerate => {
            eprintln!(
                "error: simulation ended {}",
                status_name(trace.terminal_status)
            );
            EXIT_ERROR
        }
    })
}

fn status_name(s: TerminalStatus) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| format!("{s:?}"))
}

fn grow(
    n: usize,
    seed: u64,
    mix: f64,
    out: Option<&Path>,
    log: Option<&Path>,
) -> Result<u8, Error> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "--n must be at least 3, got {n}"
        )));
    }
    let growth = grow_random(&triangle_seed(), n - 3, seed, mix, DEFAULT_RANK_TOL)?;
    let fw_json = framework_to_json(growth.last());
    match out {
        Some(p) => write_atomic(p, &fw_json)?,
        None => print!("{fw_json}"),
    }
    if let Some(p) = log {
        write_atomic(p, &growth.log())?;
    }
    let g = growth.last().graph();
    eprintln!(
        "grew {} vertices: {} edges, {} angles, {} verification rejections",
        g.n(),
        g.m(),
        g.q(),
        growth.verification_rejections.iter().sum::<usize>()
    );
    Ok(EXIT_OK)
}

fn check_gradient(path: &Path, fd_step: f64) -> Result<u8, Error> {
    let f = load_framework(path)?;
    let dev = gradient_check(&f, fd_step)?;
    println!("max deviation: {dev:e}");
    Ok(if dev < GRADIENT_TOLERANCE {
        EXIT_OK
    } else {
        EXIT_ERROR
    })
}
