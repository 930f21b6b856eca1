//! Subcommands. Each one resolves the run configuration, computes, writes
//! its artifacts to the output directory and returns a JSON summary that is
//! also written as `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use occmfg::chain::assemble_transition;
use occmfg::domain::{moment_of, stop_immediately, ExitMeasure, FeedbackPolicy, Grid, MomentVector, OccupationFlow, ProblemSpec};
use occmfg::lp::build_occupation_lp;
use occmfg::mfg::{multi_start_select, write_trace_csv, FixedPointOptions, FrozenProblem};
use occmfg::oracle::{dp_solve, dp_value_at_zero};
use occmfg::sim::{chaos_distance, simulate_population, write_summaries_csv, PopulationSummary};
use occmfg::verify::{certify, certify_at, CertificationReport, CertifyOptions};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::io::{read_exit, read_flow, write_json, write_tensor};
use crate::registry::{lookup, ProblemFlags};
use crate::table::TabulatedProblem;

pub struct Resolved {
    pub name: String,
    pub spec: ProblemSpec,
    pub grid: Grid,
    pub flags: ProblemFlags,
}

/// Looks the problem up in the registry, falling back to a tabulated file.
/// A file fixes its own grid.
pub fn resolve_problem(cfg: &RunConfig) -> Result<Resolved, CliError> {
    let name = cfg.problem.clone().ok_or_else(|| CliError::Config {
        key: "problem".into(),
        message: "no problem given (use --problem or the config key)".into(),
    })?;
    if let Some(entry) = lookup(&name) {
        let g = cfg.grid;
        let grid = entry.grid(g.t_count, g.x_count, g.a_count)?;
        let spec = entry.build(&grid)?;
        return Ok(Resolved {
            name,
            spec,
            grid,
            flags: entry.flags,
        });
    }
    let path = Path::new(&name);
    if !path.is_file() {
        return Err(CliError::Config {
            key: "problem".into(),
            message: format!("'{name}' is neither a registry problem nor a readable file"),
        });
    }
    let table = TabulatedProblem::parse(&fs::read_to_string(path)?, &name)?;
    let spec = table.to_spec()?;
    let flags = ProblemFlags {
        mean_field: spec.running_kernel.is_some() || spec.exit_kernel.is_some() || !spec.dynamics_measure_independent(),
        ..Default::default()
    };
    Ok(Resolved {
        name,
        grid: table.grid()?,
        spec,
        flags,
    })
}

/// Field in which single-agent commands freeze a population-dependent
/// problem: everybody stops at time zero.
fn stop_now_moments(r: &Resolved) -> Result<MomentVector, CliError> {
    let (mu, m) = stop_immediately(&r.spec, &r.grid);
    Ok(moment_of(&m, &mu, &r.spec, &r.grid)?)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn grid_json(g: &Grid) -> Value {
    json!({"t_count": g.t_count, "x_count": g.x_count(), "a_count": g.a_count()})
}

fn write_measures(dir: &Path, format: Format, mu: &ExitMeasure, m: &OccupationFlow) -> Result<(), CliError> {
    write_tensor(dir, "m", format, &m.values.clone().into_dyn())?;
    write_tensor(dir, "mu", format, &mu.values.clone().into_dyn())?;
    Ok(())
}

fn finish(dir: &Path, summary: Value) -> Result<Value, CliError> {
    write_json(dir, "summary.json", &summary)?;
    Ok(summary)
}

pub fn solve_single(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = resolve_problem(cfg)?;
    let dir = out_dir(cfg)?;
    let frozen = FrozenProblem::at_moments(&r.spec, &r.grid, stop_now_moments(&r)?)?;
    let br = frozen.solve(&r.grid)?;
    write_measures(&dir, cfg.output.format, &br.mu, &br.m)?;
    finish(
        &dir,
        json!({
            "command": "solve-single",
            "problem": r.name,
            "grid": grid_json(&r.grid),
            "field": "stop-now",
            "value": br.value,
            "lp_rows": frozen.lp.n_rows(),
            "lp_cols": frozen.lp.n_vars(),
        }),
    )
}

pub fn dp(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = resolve_problem(cfg)?;
    let dir = out_dir(cfg)?;
    let moments = stop_now_moments(&r)?;
    let trans = assemble_transition(&r.spec, &r.grid, &moments)?;
    let vf = dp_solve(&r.spec, &r.grid, &trans, &moments)?;
    match cfg.output.format {
        Format::Csv => {
            write_tensor(&dir, "v", Format::Csv, &vf.v.clone().into_dyn())?;
            write_tensor(&dir, "contact", Format::Csv, &vf.contact.mapv(|c| c as u8 as f64).into_dyn())?;
            write_tensor(&dir, "argmax", Format::Csv, &vf.argmax_action.mapv(|j| j as f64).into_dyn())?;
        }
        Format::Json => {
            write_json(&dir, "value_function.json", &vf)?;
        }
    }
    finish(
        &dir,
        json!({
            "command": "dp",
            "problem": r.name,
            "grid": grid_json(&r.grid),
            "field": "stop-now",
            "value": dp_value_at_zero(&vf, &r.spec),
            "contact_nodes": vf.contact.iter().filter(|c| **c).count(),
        }),
    )
}

fn fixed_point_options(cfg: &RunConfig) -> FixedPointOptions {
    FixedPointOptions {
        damping: cfg.mfg.damping,
        tol: cfg.mfg.tol,
        max_iter: cfg.mfg.max_iter,
    }
}

pub fn solve_mfg(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = resolve_problem(cfg)?;
    let dir = out_dir(cfg)?;
    let res = multi_start_select(&r.spec, &r.grid, cfg.mfg.n_starts, cfg.mfg.seed, fixed_point_options(cfg))?;
    let eq = &res.best;
    write_measures(&dir, cfg.output.format, &eq.mu_star, &eq.m_star)?;
    match cfg.output.format {
        Format::Csv => write_trace_csv(&eq.trace, fs::File::create(dir.join("trace.csv"))?)?,
        Format::Json => {
            write_json(&dir, "trace.json", &eq.trace)?;
        }
    }
    finish(
        &dir,
        json!({
            "command": "solve-mfg",
            "problem": r.name,
            "grid": grid_json(&r.grid),
            "field": "self",
            "nash_value": eq.nash_value,
            "exploitability": eq.exploitability,
            "converged": eq.converged,
            "iterations": eq.iterations,
            "best_start": res.best_start,
            "spread": res.spread,
            "starts": res.starts,
            "options": fixed_point_options(cfg),
        }),
    )
}

/// Certifies the measures in the output directory. Pairs from
/// `solve-single` are checked in the field they were solved in; anything
/// else is checked as an equilibrium candidate in its own field.
pub fn verify(cfg: &RunConfig) -> Result<(Value, CertificationReport), CliError> {
    let r = resolve_problem(cfg)?;
    let dir = PathBuf::from(&cfg.output.dir);
    let g = &r.grid;
    let m = OccupationFlow::new(read_flow(&dir, (g.slices(), g.x_count(), g.a_count()))?);
    let mu = ExitMeasure::new(read_exit(&dir, (g.t_count, g.x_count()))?);
    let field = fs::read_to_string(dir.join("summary.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<Value>(&t).ok())
        .and_then(|v| v.get("field").and_then(Value::as_str).map(str::to_owned))
        .unwrap_or_else(|| "self".into());
    let equilibrium = field != "stop-now" && r.flags.mean_field;
    let mut opts = CertifyOptions {
        convex_control: r.flags.convex_control,
        ..Default::default()
    };
    if equilibrium {
        // an equilibrium is only as sharp as the fixed-point tolerance
        opts.contact_tol = opts.contact_tol.max(cfg.mfg.tol);
    }
    let report = if field == "stop-now" {
        certify_at(&r.spec, g, &stop_now_moments(&r)?, &m, &mu, opts)?
    } else {
        certify(&r.spec, g, &m, &mu, opts)?
    };
    write_json(&dir, "report.json", &report)?;
    let summary = json!({
        "command": "verify",
        "problem": r.name,
        "field": field,
        "contact_tol": opts.contact_tol,
        "pass": report.pass,
        "checks": report.checks,
    });
    Ok((summary, report))
}

#[derive(Debug, Serialize)]
struct SizeSummary {
    n_agents: usize,
    median_chaos_distance: f64,
    mean_payoff: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Simulates finite populations playing the mean-field optimum (an
/// equilibrium for population-dependent problems) and measures their
/// distance to it. Replicate `r` uses seed `mfg.seed + r`.
pub fn simulate(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = resolve_problem(cfg)?;
    let dir = out_dir(cfg)?;
    let (mu_star, m_star, reference) = if r.flags.mean_field {
        let res = multi_start_select(&r.spec, &r.grid, cfg.mfg.n_starts, cfg.mfg.seed, fixed_point_options(cfg))?;
        (res.best.mu_star, res.best.m_star, res.best.nash_value)
    } else {
        let br = FrozenProblem::at_moments(&r.spec, &r.grid, stop_now_moments(&r)?)?.solve(&r.grid)?;
        (br.mu, br.m, br.value)
    };
    let moments = moment_of(&m_star, &mu_star, &r.spec, &r.grid)?;
    let trans = assemble_transition(&r.spec, &r.grid, &moments)?;
    let policy = FeedbackPolicy::from_measures(&mu_star, &m_star);
    let mut rows = Vec::new();
    let mut sizes = Vec::new();
    for &n in &cfg.simulate.n_agents {
        let mut chaos = Vec::new();
        let mut payoff = 0.0;
        for rep in 0..cfg.simulate.replicates {
            let seed = cfg.mfg.seed + rep as u64;
            let run = simulate_population(&r.spec, &r.grid, &trans, &moments, &policy, n, seed)?;
            let d = chaos_distance(&run, &m_star, &mu_star)?;
            chaos.push(d);
            payoff += run.payoff_mean;
            rows.push(PopulationSummary {
                n_agents: n,
                seed,
                payoff_mean: run.payoff_mean,
                payoff_se: run.payoff_se,
                chaos_distance: d,
            });
        }
        sizes.push(SizeSummary {
            n_agents: n,
            median_chaos_distance: median(chaos),
            mean_payoff: payoff / cfg.simulate.replicates as f64,
        });
    }
    match cfg.output.format {
        Format::Csv => write_summaries_csv(&rows, fs::File::create(dir.join("populations.csv"))?)?,
        Format::Json => {
            write_json(&dir, "populations.json", &rows)?;
        }
    }
    finish(
        &dir,
        json!({
            "command": "simulate",
            "problem": r.name,
            "grid": grid_json(&r.grid),
            "reference_value": reference,
            "sizes": sizes,
        }),
    )
}

pub fn export_lp(cfg: &RunConfig) -> Result<Value, CliError> {
    let r = resolve_problem(cfg)?;
    let dir = out_dir(cfg)?;
    let moments = stop_now_moments(&r)?;
    let trans = assemble_transition(&r.spec, &r.grid, &moments)?;
    let lp = build_occupation_lp(&r.spec, &r.grid, &trans, &moments)?;
    let mut file = std::io::BufWriter::new(fs::File::create(dir.join("problem.mps"))?);
    lp.write_mps(&r.name, &mut file)?;
    std::io::Write::flush(&mut file)?;
    finish(
        &dir,
        json!({
            "command": "export-lp",
            "problem": r.name,
            "grid": grid_json(&r.grid),
            "field": "stop-now",
            "rows": lp.n_rows(),
            "cols": lp.n_vars(),
            "nonzeros": lp.matrix.nnz(),
        }),
    )
}
