//! N-player Monte Carlo: independent agents follow a feedback rule through
//! the chain of a frozen field; their empirical occupation and exit
//! measures are compared with the mean-field pair.
//!
//! Agent `a` draws from its own stream `(seed, a)` of a counter-based
//! generator, so results do not depend on thread count or scheduling.

use std::io::Write;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::TransitionModel;
use crate::domain::{ExitMeasure, FeedbackPolicy, Grid, MomentVector, OccupationFlow, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationRun {
    pub n_agents: usize,
    pub seed: u64,
    pub empirical_m: OccupationFlow,
    pub empirical_mu: ExitMeasure,
    pub payoff_mean: f64,
    /// Standard error of the mean payoff.
    pub payoff_se: f64,
}

struct AgentPath {
    /// `(k, i, j)` per slice the agent was alive.
    visits: Vec<(u32, u32, u32)>,
    exit: (usize, usize),
    payoff: f64,
}

fn sample_index(weights: impl Iterator<Item = f64>, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    let mut last = None;
    for (j, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(j);
            if u < acc {
                return Some(j);
            }
        }
    }
    // round-off: u landed above the accumulated total
    last
}

#[allow(clippy::too_many_arguments)]
fn simulate_agent(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    policy: &FeedbackPolicy,
    cdf_m0: &[f64],
    seed: u64,
    agent: usize,
) -> AgentPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64);
    let u: f64 = rng.random();
    let mut i = cdf_m0.partition_point(|c| *c <= u).min(cdf_m0.len() - 1);
    let mut visits = Vec::new();
    let mut payoff = 0.0;
    let n_actions = grid.a_count();
    for k in 0..grid.slices() {
        let u_stop: f64 = rng.random();
        if trans.boundary[i] || u_stop < policy.stop[[k, i]] {
            payoff += spec.exit_at(grid, moments, k, i);
            return AgentPath {
                visits,
                exit: (k, i),
                payoff,
            };
        }
        let u_act: f64 = rng.random();
        let j = sample_index((0..n_actions).map(|j| policy.actions[[k, i, j]]), u_act).unwrap_or(0);
        visits.push((k as u32, i as u32, j as u32));
        payoff += spec.running_at(grid, moments, k, i, j) * grid.dt;
        let u_move: f64 = rng.random();
        let down = trans.p_down[[k, i, j]];
        let up = trans.p_up[[k, i, j]];
        if u_move < down {
            i -= 1;
        } else if u_move >= 1.0 - up {
            i += 1;
        }
    }
    let k = grid.slices();
    payoff += spec.exit_at(grid, moments, k, i);
    AgentPath {
        visits,
        exit: (k, i),
        payoff,
    }
}

/// Simulates `n_agents` independent agents. Initial states are drawn from
/// `m0`, exits are forced on the boundary and at the horizon, and rewards
/// are evaluated in the frozen field `moments`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_population(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    policy: &FeedbackPolicy,
    n_agents: usize,
    seed: u64,
) -> Result<PopulationRun> {
    if n_agents == 0 {
        return Err(Error::Config("n_agents must be >= 1".into()));
    }
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    if policy.stop.dim() != (grid.t_count, n) || policy.actions.dim() != (s, n, na) {
        return Err(Error::Shape("feedback policy does not match the grid".into()));
    }
    if trans.p_stay.dim() != (s, n, na) {
        return Err(Error::Shape("transition model does not match the grid".into()));
    }
    if spec.m0.len() != n {
        return Err(Error::Shape("m0 length differs from the state grid".into()));
    }
    let mut cdf_m0 = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in &spec.m0 {
        acc += w;
        cdf_m0.push(acc);
    }

    let paths: Vec<AgentPath> = (0..n_agents)
        .into_par_iter()
        .map(|a| simulate_agent(spec, grid, trans, moments, policy, &cdf_m0, seed, a))
        .collect();

    let mut m_counts = Array3::<u64>::zeros((s, n, na));
    let mut mu_counts = Array2::<u64>::zeros((grid.t_count, n));
    let mut sum = 0.0;
    for p in &paths {
        for &(k, i, j) in &p.visits {
            m_counts[[k as usize, i as usize, j as usize]] += 1;
        }
        mu_counts[p.exit] += 1;
        sum += p.payoff;
    }
    let nf = n_agents as f64;
    let mean = sum / nf;
    let var = if n_agents > 1 {
        paths.iter().map(|p| (p.payoff - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    Ok(PopulationRun {
        n_agents,
        seed,
        empirical_m: OccupationFlow::new(m_counts.mapv(|c| c as f64 / nf)),
        empirical_mu: ExitMeasure::new(mu_counts.mapv(|c| c as f64 / nf)),
        payoff_mean: mean,
        payoff_se: (var / nf).sqrt(),
    })
}

/// L1 distance between the empirical and mean-field measures (flow and
/// exit tensors stacked) divided by the number of tensor entries.
pub fn chaos_distance(run: &PopulationRun, m_star: &OccupationFlow, mu_star: &ExitMeasure) -> Result<f64> {
    if run.empirical_m.values.dim() != m_star.values.dim() || run.empirical_mu.values.dim() != mu_star.values.dim() {
        return Err(Error::Shape("empirical and mean-field measures differ in shape".into()));
    }
    let count = m_star.values.len() + mu_star.values.len();
    Ok((run.empirical_m.l1_distance(m_star) + run.empirical_mu.l1_distance(mu_star)) / count as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub n_agents: usize,
    pub seed: u64,
    pub payoff_mean: f64,
    pub payoff_se: f64,
    pub chaos_distance: f64,
}

pub fn write_summaries_csv(rows: &[PopulationSummary], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::State(format!("summary export failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::State(format!("summary export failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{assemble_transition, push_forward};
    use crate::domain::BoundaryMode;

    fn setup() -> (ProblemSpec, Grid, TransitionModel, MomentVector) {
        let g = Grid::uniform(1.0, 11, 0.0, 1.0, 11, vec![-0.2, 0.2]).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_from_density(&g, |x| x * (1.0 - x)).unwrap())
            .with_drift(|_, _, _, a| a)
            .with_volatility(|_, _, _, _| 0.15)
            .with_running_reward(|_, x, _, _| x)
            .with_exit_reward(|_, x, _| 1.0 - x);
        let z = MomentVector::zeros(g.slices(), 1);
        let tm = assemble_transition(&spec, &g, &z).unwrap();
        (spec, g, tm, z)
    }

    fn uniform_policy(g: &Grid, stop: f64) -> FeedbackPolicy {
        FeedbackPolicy {
            stop: Array2::from_elem((g.t_count, g.x_count()), stop),
            actions: Array3::from_elem((g.slices(), g.x_count(), g.a_count()), 1.0 / g.a_count() as f64),
        }
    }

    #[test]
    fn stop_immediately_draws_m0() {
        let (spec, g, tm, z) = setup();
        let run = simulate_population(&spec, &g, &tm, &z, &uniform_policy(&g, 1.0), 2000, 3).unwrap();
        assert!(run.empirical_m.values.iter().all(|v| *v == 0.0));
        assert!((run.empirical_mu.total() - 1.0).abs() < 1e-12);
        assert!(run.empirical_mu.values.row(1).iter().all(|v| *v == 0.0));
        for i in 0..g.x_count() {
            assert!((run.empirical_mu.values[[0, i]] - spec.m0[i]).abs() < 0.05);
        }
    }

    #[test]
    fn single_frozen_agent_exits_at_horizon() {
        let g = Grid::uniform(1.0, 6, 0.0, 1.0, 6, vec![0.0]).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g, 0.4))
            .with_boundary(BoundaryMode::Unattainable)
            .with_running_reward(|_, _, _, _| 1.0);
        let z = MomentVector::zeros(g.slices(), 1);
        let tm = assemble_transition(&spec, &g, &z).unwrap();
        let run = simulate_population(&spec, &g, &tm, &z, &uniform_policy(&g, 0.0), 1, 9).unwrap();
        let i0 = spec.m0.iter().position(|w| *w == 1.0).unwrap();
        assert_eq!(run.empirical_mu.values[[g.slices(), i0]], 1.0);
        for k in 0..g.slices() {
            assert_eq!(run.empirical_m.values[[k, i0, 0]], 1.0);
        }
        assert!((run.payoff_mean - 1.0).abs() < 1e-12);
        assert_eq!(run.payoff_se, 0.0);
    }

    #[test]
    fn runs_are_reproducible_and_seed_sensitive() {
        let (spec, g, tm, z) = setup();
        let p = uniform_policy(&g, 0.1);
        let a = simulate_population(&spec, &g, &tm, &z, &p, 500, 11).unwrap();
        let b = simulate_population(&spec, &g, &tm, &z, &p, 500, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_population(&spec, &g, &tm, &z, &p, 500, 12).unwrap();
        assert_ne!(a.empirical_mu, c.empirical_mu);
        // one agent's stream does not depend on how many agents run
        let one = simulate_population(&spec, &g, &tm, &z, &p, 1, 11).unwrap();
        let two = simulate_population(&spec, &g, &tm, &z, &p, 2, 11).unwrap();
        let first_exit = one.empirical_mu.values.indexed_iter().find(|(_, v)| **v > 0.0).unwrap().0;
        assert!(two.empirical_mu.values[first_exit] >= 0.5);
    }

    #[test]
    fn empirical_measures_satisfy_invariants() {
        let (spec, g, tm, z) = setup();
        let run = simulate_population(&spec, &g, &tm, &z, &uniform_policy(&g, 0.05), 3000, 5).unwrap();
        run.empirical_mu.validate().unwrap();
        run.empirical_m.validate().unwrap();
    }

    #[test]
    fn chaos_distance_extremes() {
        let (spec, g, tm, z) = setup();
        let p = uniform_policy(&g, 0.2);
        let run = simulate_population(&spec, &g, &tm, &z, &p, 100, 1).unwrap();
        assert_eq!(chaos_distance(&run, &run.empirical_m, &run.empirical_mu).unwrap(), 0.0);
        // disjoint point masses with no flow
        let mut a = ExitMeasure::zeros(&g);
        let mut b = ExitMeasure::zeros(&g);
        a.values[[0, 1]] = 1.0;
        b.values[[0, 2]] = 1.0;
        let zero = OccupationFlow::zeros(&g);
        let run = PopulationRun {
            n_agents: 1,
            seed: 0,
            empirical_m: zero.clone(),
            empirical_mu: a,
            payoff_mean: 0.0,
            payoff_se: 0.0,
        };
        let count = (zero.values.len() + b.values.len()) as f64;
        assert!((chaos_distance(&run, &zero, &b).unwrap() - 2.0 / count).abs() < 1e-15);
    }

    #[test]
    fn empirical_mean_tracks_push_forward() {
        let (spec, g, tm, z) = setup();
        let p = uniform_policy(&g, 0.1);
        let (mu, m) = push_forward(&p, &tm, &spec.m0, &g);
        let small = simulate_population(&spec, &g, &tm, &z, &p, 200, 2).unwrap();
        let large = simulate_population(&spec, &g, &tm, &z, &p, 20000, 2).unwrap();
        assert!(chaos_distance(&large, &m, &mu).unwrap() < chaos_distance(&small, &m, &mu).unwrap());
    }

    #[test]
    fn summaries_export_with_header() {
        let rows = [PopulationSummary {
            n_agents: 10,
            seed: 1,
            payoff_mean: 0.5,
            payoff_se: 0.1,
            chaos_distance: 0.01,
        }];
        let mut buf = Vec::new();
        write_summaries_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_agents,seed,payoff_mean,payoff_se,chaos_distance\n"));
    }
}
