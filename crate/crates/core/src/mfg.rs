//! Mean-field layer: freeze a candidate pair, compute a best response by
//! linear programming, and search for a fixed point by damped averaging.

use std::io::Write;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{assemble_transition, push_forward, TransitionModel};
use crate::domain::{
    moment_of, stop_immediately, ExitMeasure, FeedbackPolicy, Grid, MomentVector, OccupationFlow, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::lp::{build_occupation_lp, extract_measures, solve_default, LinearProgram, LpStatus};

/// Candidates must satisfy their own constraints to this accuracy.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Consecutive non-improving iterations before the damping is halved.
pub const HALVE_AFTER: usize = 5;

/// Relative decrease of the best exploitability that counts as progress.
pub const IMPROVEMENT: f64 = 1e-2;

const MAX_REPROJECTIONS: usize = 200;

/// `Gamma[frozen](mu, m)`: running reward on the flow plus exit reward on
/// the exit measure, coefficients evaluated at `moments`.
pub fn payoff(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector, mu: &ExitMeasure, m: &OccupationFlow) -> f64 {
    let mut total = 0.0;
    for ((k, i, j), w) in m.values.indexed_iter() {
        if *w != 0.0 {
            total += w * spec.running_at(grid, moments, k, i, j) * grid.dt;
        }
    }
    for ((k, i), w) in mu.values.indexed_iter() {
        if *w != 0.0 {
            total += w * spec.exit_at(grid, moments, k, i);
        }
    }
    total
}

/// The problem frozen at a candidate: its moments, chain and program.
#[derive(Clone, Debug)]
pub struct FrozenProblem {
    pub moments: MomentVector,
    pub trans: TransitionModel,
    pub lp: LinearProgram,
}

impl FrozenProblem {
    pub fn new(spec: &ProblemSpec, grid: &Grid, mu_bar: &ExitMeasure, m_bar: &OccupationFlow) -> Result<Self> {
        let moments = moment_of(m_bar, mu_bar, spec, grid)?;
        Self::at_moments(spec, grid, moments)
    }

    pub fn at_moments(spec: &ProblemSpec, grid: &Grid, moments: MomentVector) -> Result<Self> {
        let trans = assemble_transition(spec, grid, &moments)?;
        let lp = build_occupation_lp(spec, grid, &trans, &moments)?;
        Ok(Self { moments, trans, lp })
    }

    pub fn solve(&self, grid: &Grid) -> Result<BestResponse> {
        let sol = solve_default(&self.lp);
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(sol.status));
        }
        let (mu, m) = extract_measures(&self.lp, &sol, grid)?;
        Ok(BestResponse {
            mu,
            m,
            value: sol.value,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub mu: ExitMeasure,
    pub m: OccupationFlow,
    pub value: f64,
}

/// One optimizer of the problem frozen at `(mu_bar, m_bar)`.
pub fn best_response(
    spec: &ProblemSpec,
    grid: &Grid,
    mu_bar: &ExitMeasure,
    m_bar: &OccupationFlow,
) -> Result<BestResponse> {
    FrozenProblem::new(spec, grid, mu_bar, m_bar)?.solve(grid)
}

/// Best-response value against the field of `(mu, m)` minus the value of
/// `(mu, m)` itself. Errors if the pair violates its own constraints.
pub fn exploitability(spec: &ProblemSpec, grid: &Grid, mu: &ExitMeasure, m: &OccupationFlow) -> Result<f64> {
    let frozen = FrozenProblem::new(spec, grid, mu, m)?;
    let residual = frozen.lp.pair_residual(mu, m)?;
    if residual > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual });
    }
    let br = frozen.solve(grid)?;
    Ok(br.value - payoff(spec, grid, &frozen.moments, mu, m))
}

/// `Gamma[mu, m](mu, m)`.
pub fn nash_value(spec: &ProblemSpec, grid: &Grid, mu: &ExitMeasure, m: &OccupationFlow) -> Result<f64> {
    let moments = moment_of(m, mu, spec, grid)?;
    Ok(payoff(spec, grid, &moments, mu, m))
}

/// L1 distance of the moment vectors plus L1 distance of the exit measures.
pub fn iterate_distance(
    spec: &ProblemSpec,
    grid: &Grid,
    a: (&ExitMeasure, &OccupationFlow),
    b: (&ExitMeasure, &OccupationFlow),
) -> Result<f64> {
    let za = moment_of(a.1, a.0, spec, grid)?;
    let zb = moment_of(b.1, b.0, spec, grid)?;
    Ok(za.l1_distance(&zb) + a.0.l1_distance(b.0))
}

/// Makes a pair feasible for its own constraint set when the dynamics
/// depend on the population. The relaxed feedback rule of the pair is
/// re-run through the chain of the pair's field until the field stops
/// moving; for population-independent dynamics the pair is returned as is.
pub fn reproject(
    spec: &ProblemSpec,
    grid: &Grid,
    mu: ExitMeasure,
    m: OccupationFlow,
) -> Result<(ExitMeasure, OccupationFlow)> {
    if spec.dynamics_measure_independent() {
        return Ok((mu, m));
    }
    let policy = FeedbackPolicy::from_measures(&mu, &m);
    let (mut mu, mut m) = (mu, m);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_REPROJECTIONS {
        let frozen = FrozenProblem::new(spec, grid, &mu, &m)?;
        residual = frozen.lp.pair_residual(&mu, &m)?;
        if residual <= FEASIBILITY_TOL {
            return Ok((mu, m));
        }
        (mu, m) = push_forward(&policy, &frozen.trans, &spec.m0, grid);
    }
    Err(Error::Infeasible { residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub exploitability: f64,
    pub br_value: f64,
    pub nash_value: f64,
    /// Distance moved by the damped update; zero on the final record of a
    /// converged run.
    pub distance: f64,
    pub lambda: f64,
}

/// Writes a trace as CSV with a header row.
pub fn write_trace_csv(trace: &[TraceRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in trace {
        w.serialize(rec).map_err(|e| Error::State(format!("trace export failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::State(format!("trace export failed: {e}")))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumResult {
    pub mu_star: ExitMeasure,
    pub m_star: OccupationFlow,
    pub nash_value: f64,
    pub exploitability: f64,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    /// Iterations performed (length of the trace).
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

/// Damped best-response iteration
/// `x_{n+1} = (1 - lambda) x_n + lambda BR(x_n)`.
///
/// Without `init` the search starts from the best response to the field in
/// which everybody stops at once. Stops when the exploitability reaches
/// `tol`, when an update moves less than `tol`, or after `max_iter`
/// iterations, and returns the iterate with the lowest exploitability (the
/// final best response is scored as one more candidate). The
/// damping is halved whenever `HALVE_AFTER` consecutive iterations fail to
/// improve on the best exploitability seen.
pub fn fixed_point_solve(
    spec: &ProblemSpec,
    grid: &Grid,
    opts: FixedPointOptions,
    init: Option<(ExitMeasure, OccupationFlow)>,
) -> Result<EquilibriumResult> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::Config("max_iter must be >= 1".into()));
    }
    spec.validate(grid)?;

    let (mu, m) = match init {
        Some((mu, m)) => {
            grid.check_exit_shape(&mu)?;
            grid.check_flow_shape(&m)?;
            (mu, m)
        }
        None => {
            let (mu0, m0) = stop_immediately(spec, grid);
            let br = best_response(spec, grid, &mu0, &m0)?;
            (br.mu, br.m)
        }
    };
    let (mut mu, mut m) = reproject(spec, grid, mu, m)?;

    let mut lambda = opts.damping;
    let mut trace = Vec::new();
    let mut best: Option<(f64, f64, ExitMeasure, OccupationFlow)> = None;
    let mut progress_ref = f64::INFINITY;
    let mut stall = 0usize;
    let mut last_br = None;
    let mut converged = false;

    for iter in 1..=opts.max_iter {
        let frozen = FrozenProblem::new(spec, grid, &mu, &m)?;
        let residual = frozen.lp.pair_residual(&mu, &m)?;
        if residual > FEASIBILITY_TOL {
            return Err(Error::Infeasible { residual });
        }
        let br = frozen.solve(grid)?;
        let own = payoff(spec, grid, &frozen.moments, &mu, &m);
        let expl = br.value - own;

        if best.as_ref().is_none_or(|(e, ..)| expl < *e) {
            best = Some((expl, own, mu.clone(), m.clone()));
        }
        if !progress_ref.is_finite() || expl < progress_ref - IMPROVEMENT * progress_ref.abs() {
            progress_ref = expl;
            stall = 0;
        } else {
            stall += 1;
            if stall >= HALVE_AFTER {
                lambda *= 0.5;
                stall = 0;
                debug!("iteration {iter}: no progress for {HALVE_AFTER} iterations, damping now {lambda}");
            }
        }

        if expl <= opts.tol {
            trace.push(TraceRecord {
                iter,
                exploitability: expl,
                br_value: br.value,
                nash_value: own,
                distance: 0.0,
                lambda,
            });
            converged = true;
            last_br = Some(br);
            break;
        }

        let next_mu = mu.blend(&br.mu, lambda);
        let next_m = m.blend(&br.m, lambda);
        let (next_mu, next_m) = reproject(spec, grid, next_mu, next_m)?;
        let distance = iterate_distance(spec, grid, (&next_mu, &next_m), (&mu, &m))?;
        trace.push(TraceRecord {
            iter,
            exploitability: expl,
            br_value: br.value,
            nash_value: own,
            distance,
            lambda,
        });
        last_br = Some(br);
        if distance <= opts.tol {
            break;
        }
        mu = next_mu;
        m = next_m;
    }

    let (mut exploitability, mut nash_value, mut mu_star, mut m_star) = best.expect("at least one iteration ran");
    // Averaged iterates keep a geometrically small weight on the starting
    // point; the last best response is often the exact equilibrium vertex.
    if let Some(br) = last_br {
        let frozen = FrozenProblem::new(spec, grid, &br.mu, &br.m)?;
        if frozen.lp.pair_residual(&br.mu, &br.m)? <= FEASIBILITY_TOL {
            let own = payoff(spec, grid, &frozen.moments, &br.mu, &br.m);
            let expl = frozen.solve(grid)?.value - own;
            if expl <= exploitability {
                exploitability = expl;
                nash_value = own;
                mu_star = br.mu;
                m_star = br.m;
                converged |= expl <= opts.tol;
            }
        }
    }
    if !converged {
        warn!(
            "fixed-point search stopped after {} iterations with exploitability {exploitability:e}",
            trace.len()
        );
    }
    Ok(EquilibriumResult {
        mu_star,
        m_star,
        nash_value,
        exploitability,
        iterations: trace.len(),
        trace,
        converged,
    })
}

/// A feasible pair generated by a random relaxed feedback rule: at every
/// node a random stopping probability and random action weights.
pub fn random_feasible_candidate(
    spec: &ProblemSpec,
    grid: &Grid,
    rng: &mut impl Rng,
) -> Result<(ExitMeasure, OccupationFlow)> {
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    let mut policy = FeedbackPolicy {
        stop: ndarray::Array2::zeros((grid.t_count, n)),
        actions: ndarray::Array3::zeros((s, n, na)),
    };
    let stop_scale: f64 = rng.random_range(0.0..0.5);
    for v in policy.stop.iter_mut() {
        *v = stop_scale * rng.random::<f64>();
    }
    for k in 0..s {
        for i in 0..n {
            let w: Vec<f64> = (0..na).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = w.iter().sum();
            for (j, wj) in w.iter().enumerate() {
                policy.actions[[k, i, j]] = wj / total;
            }
        }
    }
    let zero = MomentVector::zeros(s, spec.dim);
    let trans = assemble_transition(spec, grid, &zero)?;
    let (mu, m) = push_forward(&policy, &trans, &spec.m0, grid);
    reproject(spec, grid, mu, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StartSummary {
    pub start: usize,
    pub converged: bool,
    pub nash_value: f64,
    pub exploitability: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiStartResult {
    /// Converged run with the largest Nash value.
    pub best: EquilibriumResult,
    pub best_start: usize,
    /// Max minus min Nash value over converged runs.
    pub spread: f64,
    pub starts: Vec<StartSummary>,
}

/// Runs the fixed-point search from `n_starts` initializations (the default
/// one, then random feasible pairs seeded by `(seed, start)`) and keeps the
/// converged run with the largest Nash value.
pub fn multi_start_select(
    spec: &ProblemSpec,
    grid: &Grid,
    n_starts: usize,
    seed: u64,
    opts: FixedPointOptions,
) -> Result<MultiStartResult> {
    if n_starts == 0 {
        return Err(Error::Config("n_starts must be >= 1".into()));
    }
    let runs: Vec<Result<EquilibriumResult>> = (0..n_starts)
        .into_par_iter()
        .map(|start| {
            let init = if start == 0 {
                None
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(start as u64);
                Some(random_feasible_candidate(spec, grid, &mut rng)?)
            };
            fixed_point_solve(spec, grid, opts, init)
        })
        .collect();

    let mut starts = Vec::with_capacity(n_starts);
    let mut results = Vec::with_capacity(n_starts);
    for (start, run) in runs.into_iter().enumerate() {
        let run = run?;
        starts.push(StartSummary {
            start,
            converged: run.converged,
            nash_value: run.nash_value,
            exploitability: run.exploitability,
            iterations: run.iterations,
        });
        results.push(run);
    }
    let converged: Vec<usize> = (0..n_starts).filter(|&s| results[s].converged).collect();
    let Some(&first) = converged.first() else {
        let best_exploitability = results.iter().map(|r| r.exploitability).fold(f64::INFINITY, f64::min);
        return Err(Error::NoConvergedRun {
            n_starts,
            best_exploitability,
        });
    };
    let mut best_start = first;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &s in &converged {
        let v = results[s].nash_value;
        lo = lo.min(v);
        hi = hi.max(v);
        if v > results[best_start].nash_value {
            best_start = s;
        }
    }
    Ok(MultiStartResult {
        best: results.swap_remove(best_start),
        best_start,
        spread: hi - lo,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryMode;
    use crate::oracle::{dp_solve, dp_value_at_zero};

    fn grid() -> Grid {
        Grid::uniform(1.0, 16, 0.0, 1.0, 16, vec![-0.3, 0.0, 0.3]).unwrap()
    }

    fn independent(g: &Grid) -> ProblemSpec {
        ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_from_density(g, |x| x * (1.0 - x)).unwrap())
            .with_drift(|_, _, _, a| a)
            .with_volatility(|_, _, _, _| 0.1)
            .with_running_reward(|_, x, _, a| x - a * a)
            .with_exit_reward(|_, x, _| (0.5 - x).max(0.0))
    }

    /// Running reward decreasing in the mass near x = 0.7.
    fn congestion(g: &Grid, kappa: f64) -> ProblemSpec {
        ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_from_density(g, |x| x * (1.0 - x)).unwrap())
            .with_drift(|_, _, _, a| a)
            .with_volatility(|_, _, _, _| 0.1)
            .with_running_kernel(|_, x| vec![(-((x - 0.7) / 0.15).powi(2)).exp()])
            .with_running_reward(move |_, x, z, a| {
                let f1 = (-((x - 0.7) / 0.15).powi(2)).exp();
                f1 * (1.0 - kappa * z[0]) - 0.5 * a * a
            })
            .with_exit_reward(|_, x, _| 0.2 * x)
    }

    fn random_pair(spec: &ProblemSpec, g: &Grid, seed: u64) -> (ExitMeasure, OccupationFlow) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_feasible_candidate(spec, g, &mut rng).unwrap()
    }

    #[test]
    fn independent_best_response_ignores_the_field() {
        let g = grid();
        let spec = independent(&g);
        let (mu1, m1) = random_pair(&spec, &g, 1);
        let (mu2, m2) = random_pair(&spec, &g, 2);
        let a = best_response(&spec, &g, &mu1, &m1).unwrap();
        let b = best_response(&spec, &g, &mu2, &m2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_response_dominates_feasible_candidates() {
        let g = grid();
        let spec = congestion(&g, 2.0);
        for seed in 0..4 {
            let (mu, m) = random_pair(&spec, &g, seed);
            let e = exploitability(&spec, &g, &mu, &m).unwrap();
            assert!(e >= -1e-9, "seed {seed}: {e}");
            assert!(e > 1e-6, "random pair should be exploitable");
        }
    }

    #[test]
    fn infeasible_candidate_is_rejected() {
        let g = grid();
        let spec = independent(&g);
        let (mu, mut m) = random_pair(&spec, &g, 3);
        m.values[[2, 5, 1]] += 1e-3;
        assert!(matches!(exploitability(&spec, &g, &mu, &m), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn independent_problem_converges_in_one_iteration() {
        let g = grid();
        let spec = independent(&g);
        let res = fixed_point_solve(&spec, &g, FixedPointOptions::default(), None).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert!(res.exploitability.abs() <= 1e-9);
        let z = MomentVector::zeros(g.slices(), 1);
        let trans = assemble_transition(&spec, &g, &z).unwrap();
        let vf = dp_solve(&spec, &g, &trans, &z).unwrap();
        assert!((res.nash_value - dp_value_at_zero(&vf, &spec)).abs() < 1e-9);
    }

    #[test]
    fn optimal_pair_has_zero_exploitability_and_suboptimal_is_positive() {
        let g = grid();
        let spec = independent(&g);
        let (mu0, m0) = stop_immediately(&spec, &g);
        let br = best_response(&spec, &g, &mu0, &m0).unwrap();
        assert!(exploitability(&spec, &g, &br.mu, &br.m).unwrap().abs() <= 1e-9);
        // optimal vertex of a perturbed objective
        let other = independent(&g).with_exit_reward(|_, x, _| (x - 0.5).max(0.0));
        let sub = best_response(&other, &g, &mu0, &m0).unwrap();
        assert!(exploitability(&spec, &g, &sub.mu, &sub.m).unwrap() > 1e-6);
    }

    #[test]
    fn congestion_fixed_point_and_uniqueness() {
        let g = grid();
        let spec = congestion(&g, 0.5);
        let opts = FixedPointOptions {
            tol: 1e-7,
            ..Default::default()
        };
        let res = multi_start_select(&spec, &g, 3, 7, opts).unwrap();
        assert!(res.best.converged);
        assert!(res.starts.iter().all(|s| s.converged));
        assert!(res.spread <= 1e-5, "spread {}", res.spread);
        let e = exploitability(&spec, &g, &res.best.mu_star, &res.best.m_star).unwrap();
        assert!(e <= 1e-7);
        res.best.mu_star.validate().unwrap();
        res.best.m_star.validate().unwrap();
    }

    #[test]
    fn single_start_matches_direct_solve() {
        let g = grid();
        let spec = congestion(&g, 0.5);
        let opts = FixedPointOptions::default();
        let direct = fixed_point_solve(&spec, &g, opts, None).unwrap();
        let multi = multi_start_select(&spec, &g, 1, 0, opts).unwrap();
        assert_eq!(direct, multi.best);
    }

    #[test]
    fn undamped_strong_congestion_oscillates_and_keeps_best_iterate() {
        let g = grid();
        let spec = congestion(&g, 2.0);
        let opts = FixedPointOptions {
            damping: 1.0,
            tol: 1e-9,
            max_iter: 25,
        };
        let res = fixed_point_solve(&spec, &g, opts, None).unwrap();
        let e: Vec<f64> = res.trace.iter().map(|r| r.exploitability).collect();
        assert!(e.windows(2).any(|w| w[1] > w[0]), "expected a non-monotone trace: {e:?}");
        let min = e.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(res.exploitability <= min);
        let again = exploitability(&spec, &g, &res.mu_star, &res.m_star).unwrap();
        assert!((again - res.exploitability).abs() < 1e-12);
    }

    #[test]
    fn measure_dependent_dynamics_stay_feasible() {
        let g = grid();
        // drift pushed away from the crowd's mean position
        let spec = independent(&g)
            .with_drift_kernel(|_, x| vec![x])
            .with_drift(|_, x, z, a| a + 0.1 * (x - z[0]))
            .with_boundary(BoundaryMode::Attainable);
        let opts = FixedPointOptions {
            max_iter: 30,
            ..Default::default()
        };
        let res = fixed_point_solve(&spec, &g, opts, None).unwrap();
        let frozen = FrozenProblem::new(&spec, &g, &res.mu_star, &res.m_star).unwrap();
        assert!(frozen.lp.pair_residual(&res.mu_star, &res.m_star).unwrap() <= FEASIBILITY_TOL);
        assert!(res.exploitability >= -1e-9);
    }

    #[test]
    fn damping_is_kept_while_exploitability_keeps_falling() {
        let g = Grid::uniform(1.0, 30, 0.0, 1.0, 30, vec![-0.4, 0.0, 0.4]).unwrap();
        let spec = congestion(&g, 0.5);
        let opts = FixedPointOptions {
            tol: 1e-12,
            max_iter: 8,
            ..Default::default()
        };
        let res = fixed_point_solve(&spec, &g, opts, None).unwrap();
        assert!(res.trace.len() >= HALVE_AFTER + 1);
        for w in res.trace.windows(2) {
            assert!(w[1].exploitability < 0.99 * w[0].exploitability);
        }
        assert!(res.trace.iter().all(|r| r.lambda == 0.5));
    }

    #[test]
    fn trace_exports_as_csv() {
        let trace = vec![TraceRecord {
            iter: 1,
            exploitability: 0.5,
            br_value: 1.0,
            nash_value: 0.5,
            distance: 0.25,
            lambda: 0.5,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "iter,exploitability,br_value,nash_value,distance,lambda");
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn bad_options_are_rejected() {
        let g = grid();
        let spec = independent(&g);
        for damping in [0.0, 1.5] {
            let opts = FixedPointOptions {
                damping,
                ..Default::default()
            };
            assert!(matches!(fixed_point_solve(&spec, &g, opts, None), Err(Error::Config(_))));
        }
    }
}
