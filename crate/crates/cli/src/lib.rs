//! Command-line front end: run configuration, built-in problems, tabulated
//! problem files and the solve/verify/simulate commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod registry;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Format, GridConfig, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "occmfg", version, about = "Occupation-measure solver for stopping/control problems and mean-field games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the linear program of a single-agent (frozen-field) problem.
    SolveSingle(Flags),
    /// Search for a mean-field equilibrium from several starts.
    SolveMfg(Flags),
    /// Solve the dynamic program of a single-agent problem.
    Dp(Flags),
    /// Certify the measures in the output directory.
    Verify(Flags),
    /// Simulate finite populations against the mean-field solution.
    Simulate(Flags),
    /// Write the single-agent linear program in MPS format.
    ExportLp(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry problem name or tabulated problem file.
    #[arg(long)]
    problem: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Grid sizes as t_count,x_count,a_count.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridConfig>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    n_starts: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_grid(s: &str) -> Result<GridConfig, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [t, x, a] = parts.as_slice() else {
        return Err("expected t_count,x_count,a_count".into());
    };
    let n = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v}: {e}"));
    Ok(GridConfig {
        t_count: n(t)?,
        x_count: n(x)?,
        a_count: n(a)?,
    })
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.problem {
            cfg.problem = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if let Some(g) = self.grid {
            cfg.grid = g;
        }
        if let Some(s) = self.seed {
            cfg.mfg.seed = s;
        }
        if let Some(d) = self.damping {
            cfg.mfg.damping = d;
        }
        if let Some(t) = self.tol {
            cfg.mfg.tol = t;
        }
        if let Some(n) = self.max_iter {
            cfg.mfg.max_iter = n;
        }
        if let Some(n) = self.n_starts {
            cfg.mfg.n_starts = n;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one command. Exit codes: 0 success, 1 solver failure or failed
/// certification, 2 usage or configuration error. Errors are reported as
/// JSON on `err`.
pub fn run_command_with<S: AsRef<str>>(argv: &[S], out: &mut impl Write, err: &mut impl Write) -> i32 {
    let cli = match Cli::try_parse_from(argv.iter().map(|s| s.as_ref())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let result = run(cli.command);
    match result {
        Ok((summary, pass)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{}", serde_json::to_string(&e.report()).expect("report serializes"));
            match e {
                CliError::Config { .. } | CliError::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}

pub fn run_command<S: AsRef<str>>(argv: &[S]) -> i32 {
    run_command_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn run(command: Command) -> Result<(serde_json::Value, bool), CliError> {
    match command {
        Command::SolveSingle(f) => Ok((commands::solve_single(&f.resolve()?)?, true)),
        Command::SolveMfg(f) => Ok((commands::solve_mfg(&f.resolve()?)?, true)),
        Command::Dp(f) => Ok((commands::dp(&f.resolve()?)?, true)),
        Command::Verify(f) => {
            let (summary, report) = commands::verify(&f.resolve()?)?;
            Ok((summary, report.pass))
        }
        Command::Simulate(f) => Ok((commands::simulate(&f.resolve()?)?, true)),
        Command::ExportLp(f) => Ok((commands::export_lp(&f.resolve()?)?, true)),
    }
}
