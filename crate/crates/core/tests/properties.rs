use ndarray::{Array2, Array3};
use occmfg::chain::{assemble_transition, push_forward};
use occmfg::domain::{mass_profile, BoundaryMode, FeedbackPolicy, Grid, MomentVector, ProblemSpec};
use occmfg::lp::{build_occupation_lp, extract_measures, solve_default, LpStatus};
use occmfg::oracle::{dp_solve, dp_value_at_zero, feedback_policy_with_actions};
use occmfg::sim::simulate_population;
use proptest::prelude::*;

fn problem(sigma: f64, drift: f64, shift: f64) -> (ProblemSpec, Grid) {
    let grid = Grid::uniform(1.0, 13, 0.0, 1.0, 13, vec![-1.0, 0.0, 1.0]).unwrap();
    let m0 = ProblemSpec::m0_from_density(&grid, |x| 1.0 + x).unwrap();
    let spec = ProblemSpec::new(1.0, 0.0, 1.0, m0)
        .with_drift(move |_, _, _, a| drift * a)
        .with_volatility(move |_, _, _, _| sigma)
        .with_running_reward(|t, x, _, a| (3.0 * x + t).sin() - 0.3 * a * a)
        .with_exit_reward(move |t, x, _| shift + (x - 0.4).abs() - 0.2 * t);
    (spec, grid)
}

fn random_policy(grid: &Grid, stop: &[f64], weights: &[f64]) -> FeedbackPolicy {
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    let mut p = FeedbackPolicy {
        stop: Array2::zeros((grid.t_count, n)),
        actions: Array3::zeros((s, n, na)),
    };
    for (idx, v) in p.stop.iter_mut().enumerate() {
        *v = stop[idx % stop.len()];
    }
    for k in 0..s {
        for i in 0..n {
            let w: Vec<f64> = (0..na).map(|j| weights[(k * n * na + i * na + j) % weights.len()] + 1e-3).collect();
            let total: f64 = w.iter().sum();
            for j in 0..na {
                p.actions[[k, i, j]] = w[j] / total;
            }
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Forward-simulated measures of any feedback rule are feasible, carry
    /// unit exit mass and stay subprobabilities; their score never beats the
    /// optimum.
    #[test]
    fn pushed_forward_policies_are_admissible(
        sigma in 0.02f64..0.2,
        drift in 0.0f64..0.5,
        stop in proptest::collection::vec(0.0f64..1.0, 1..20),
        weights in proptest::collection::vec(0.0f64..1.0, 1..30),
    ) {
        let (spec, grid) = problem(sigma, drift, 0.0);
        let z = MomentVector::zeros(grid.slices(), 1);
        let tm = assemble_transition(&spec, &grid, &z).unwrap();
        let lp = build_occupation_lp(&spec, &grid, &tm, &z).unwrap();
        let (mu, m) = push_forward(&random_policy(&grid, &stop, &weights), &tm, &spec.m0, &grid);
        prop_assert!(lp.pair_residual(&mu, &m).unwrap() <= 1e-9);
        prop_assert!((mu.total() - 1.0).abs() <= 1e-9);
        for k in 0..grid.slices() {
            prop_assert!(m.slice_mass(k) <= 1.0 + 1e-9);
        }
        for e in mass_profile(&m, &mu) {
            prop_assert!((e.remaining + e.exited - 1.0).abs() <= 1e-9);
        }
        let (v, _) = lp.pack(&mu, &m).unwrap();
        let sol = solve_default(&lp);
        prop_assert!(lp.value_of(&v) <= sol.value + 1e-9);
    }

    /// Summing every balance row gives total exit mass one for any feasible
    /// point; checked on the optimum through the column sums of the matrix.
    #[test]
    fn balance_rows_sum_to_unit_exit_mass(sigma in 0.02f64..0.2, drift in 0.0f64..0.5) {
        let (spec, grid) = problem(sigma, drift, 0.0);
        let z = MomentVector::zeros(grid.slices(), 1);
        let tm = assemble_transition(&spec, &grid, &z).unwrap();
        let lp = build_occupation_lp(&spec, &grid, &tm, &z).unwrap();
        // column sums: occupation columns cancel, exit columns contribute one
        for (c, slot) in lp.vars.iter().enumerate() {
            let sum: f64 = lp.matrix.column(c).map(|(_, v)| v).sum();
            match slot {
                occmfg::lp::VarSlot::Exit { .. } => prop_assert!((sum - 1.0).abs() < 1e-12),
                _ => prop_assert!(sum.abs() < 1e-12),
            }
        }
        prop_assert!((lp.rhs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    /// Raising the exit reward pointwise never lowers the optimum, and the
    /// two solution methods agree throughout.
    #[test]
    fn optimum_is_monotone_in_exit_reward(sigma in 0.02f64..0.2, drift in 0.0f64..0.5, bump in 0.0f64..0.3) {
        let values: Vec<(f64, f64)> = [0.0, bump].iter().map(|&shift| {
            let (spec, grid) = problem(sigma, drift, 0.0);
            let spec = spec.with_exit_reward(move |t, x, _| (x - 0.4).abs() - 0.2 * t + shift * x * x);
            let z = MomentVector::zeros(grid.slices(), 1);
            let tm = assemble_transition(&spec, &grid, &z).unwrap();
            let lp = build_occupation_lp(&spec, &grid, &tm, &z).unwrap();
            let sol = solve_default(&lp);
            let vf = dp_solve(&spec, &grid, &tm, &z).unwrap();
            (sol.value, dp_value_at_zero(&vf, &spec))
        }).collect();
        prop_assert!(values[1].0 >= values[0].0 - 1e-9);
        for (lp, dp) in values {
            prop_assert!((lp - dp).abs() <= 1e-6 * (1.0 + dp.abs()));
        }
    }
}

#[test]
fn hand_sized_programs() {
    // two time nodes, one interior node, one action, frozen chain
    let grid = Grid::uniform(1.0, 2, 0.0, 1.0, 3, vec![0.0]).unwrap();
    let late = ProblemSpec::new(1.0, 0.0, 1.0, vec![0.0, 1.0, 0.0])
        .with_boundary(BoundaryMode::Unattainable)
        .with_exit_reward(|t, _, _| if t > 0.5 { 1.0 } else { 0.0 });
    let early = late.clone().with_exit_reward(|t, _, _| if t > 0.5 { 0.0 } else { 1.0 });
    let zero = late.clone();
    let z = MomentVector::zeros(1, 1);
    for (spec, stop_at) in [(&late, 1usize), (&early, 0usize)] {
        let tm = assemble_transition(spec, &grid, &z).unwrap();
        let lp = build_occupation_lp(spec, &grid, &tm, &z).unwrap();
        assert_eq!(lp.n_vars(), 3);
        let sol = solve_default(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        let (mu, m) = extract_measures(&lp, &sol, &grid).unwrap();
        assert_eq!(mu.values[[stop_at, 1]], 1.0);
        assert_eq!(m.values[[0, 1, 0]], if stop_at == 1 { 1.0 } else { 0.0 });
    }
    // zero rewards: every feasible point scores zero
    let zero = zero.with_exit_reward(|_, _, _| 0.0);
    let tm = assemble_transition(&zero, &grid, &z).unwrap();
    let lp = build_occupation_lp(&zero, &grid, &tm, &z).unwrap();
    assert!(lp.objective.iter().all(|c| *c == 0.0));
}

#[test]
fn greedy_policy_matches_value_by_monte_carlo() {
    let (spec, grid) = problem(0.12, 0.3, 0.0);
    let z = MomentVector::zeros(grid.slices(), 1);
    let tm = assemble_transition(&spec, &grid, &z).unwrap();
    let vf = dp_solve(&spec, &grid, &tm, &z).unwrap();
    let value = dp_value_at_zero(&vf, &spec);
    let policy = feedback_policy_with_actions(&vf, grid.a_count());
    let run = simulate_population(&spec, &grid, &tm, &z, &policy, 100_000, 2024).unwrap();
    let err = (run.payoff_mean - value).abs();
    assert!(err <= 3.0 * run.payoff_se, "mean {} value {value} se {}", run.payoff_mean, run.payoff_se);
}

#[test]
fn attainable_boundary_sends_mass_out() {
    let grid = Grid::uniform(1.0, 21, 0.0, 1.0, 7, vec![0.0]).unwrap();
    let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&grid, 0.5))
        .with_volatility(|_, _, _, _| 0.15)
        .with_running_reward(|_, _, _, _| 1.0);
    let z = MomentVector::zeros(grid.slices(), 1);
    let tm = assemble_transition(&spec, &grid, &z).unwrap();
    let lp = build_occupation_lp(&spec, &grid, &tm, &z).unwrap();
    let sol = solve_default(&lp);
    let (mu, m) = extract_measures(&lp, &sol, &grid).unwrap();
    let boundary: f64 = (0..grid.t_count).map(|k| mu.values[[k, 0]] + mu.values[[k, 6]]).sum();
    assert!(boundary > 0.0);
    assert!((mu.total() - 1.0).abs() < 1e-9);
    assert!(m.values.iter().all(|v| *v >= 0.0));
}
