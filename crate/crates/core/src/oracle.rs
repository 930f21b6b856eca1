//! Backward induction for the discrete stopping/control problem on the
//! chain: the discrete variational inequality
//! `v = max(g, max_j f dt + E[v_next])` with `v = g` at the horizon and on
//! the boundary. Its value at time zero is the strong-formulation value and
//! serves as the independent check on the linear program.

use ndarray::Array2;
use serde::Serialize;

use crate::chain::TransitionModel;
use crate::domain::{FeedbackPolicy, Grid, MomentVector, ProblemSpec};
use crate::error::{Error, Result};

/// Relative tolerance deciding whether `v` touches the obstacle.
pub const CONTACT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueFunction {
    /// `(t_count, x_count)`.
    pub v: Array2<f64>,
    /// Exit reward `g` at the frozen moments, same shape as `v`.
    pub obstacle: Array2<f64>,
    /// `v - g <= CONTACT_TOL * (1 + |v|)`.
    pub contact: Array2<bool>,
    /// Smallest maximizing action per `(slice, node)`; zero on the boundary.
    pub argmax_action: Array2<usize>,
}

/// Nodes where `v - g <= tol (1 + |v|)`.
pub fn contact_set(v: &Array2<f64>, obstacle: &Array2<f64>, tol: f64) -> Array2<bool> {
    ndarray::Zip::from(v).and(obstacle).map_collect(|&a, &b| a - b <= tol * (1.0 + a.abs()))
}

pub fn dp_solve(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
) -> Result<ValueFunction> {
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    if trans.p_stay.dim() != (s, n, na) {
        return Err(Error::Shape("transition model does not match the grid".into()));
    }
    if moments.slices() != s {
        return Err(Error::Shape("moment vector does not match the grid".into()));
    }
    let mut obstacle = Array2::zeros((grid.t_count, n));
    for k in 0..grid.t_count {
        for i in 0..n {
            obstacle[[k, i]] = spec.exit_at(grid, moments, k, i);
        }
    }
    let mut v = obstacle.clone();
    let mut argmax_action = Array2::zeros((s, n));
    for k in (0..s).rev() {
        let next: Vec<f64> = v.row(k + 1).to_vec();
        for i in grid.interior() {
            let mut best = f64::NEG_INFINITY;
            let mut best_j = 0;
            for j in 0..na {
                let q = spec.running_at(grid, moments, k, i, j) * grid.dt + trans.expect(k, i, j, &next);
                if q > best {
                    best = q;
                    best_j = j;
                }
            }
            argmax_action[[k, i]] = best_j;
            v[[k, i]] = best.max(obstacle[[k, i]]);
        }
    }
    let contact = contact_set(&v, &obstacle, CONTACT_TOL);
    Ok(ValueFunction {
        v,
        obstacle,
        contact,
        argmax_action,
    })
}

/// `sum_i v[0, i] * m0[i]`.
pub fn dp_value_at_zero(vf: &ValueFunction, spec: &ProblemSpec) -> f64 {
    vf.v.row(0).iter().zip(&spec.m0).map(|(v, w)| v * w).sum()
}

/// Stop on the contact set, otherwise play the maximizing action.
pub fn feedback_policy(vf: &ValueFunction) -> FeedbackPolicy {
    let a_count = 1 + vf.argmax_action.iter().copied().max().unwrap_or(0);
    feedback_policy_with_actions(vf, a_count)
}

/// As [`feedback_policy`] with an explicit action count.
pub fn feedback_policy_with_actions(vf: &ValueFunction, a_count: usize) -> FeedbackPolicy {
    FeedbackPolicy::deterministic(&vf.contact, &vf.argmax_action, a_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{assemble_transition, push_forward};
    use crate::domain::BoundaryMode;

    fn grid() -> Grid {
        Grid::uniform(1.0, 11, 0.0, 1.0, 11, vec![-0.2, 0.0, 0.2]).unwrap()
    }

    fn solve(spec: &ProblemSpec, grid: &Grid) -> (ValueFunction, TransitionModel) {
        let z = MomentVector::zeros(grid.slices(), spec.dim);
        let tm = assemble_transition(spec, grid, &z).unwrap();
        (dp_solve(spec, grid, &tm, &z).unwrap(), tm)
    }

    #[test]
    fn constant_obstacle_without_reward() {
        let g = grid();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g, 0.5))
            .with_volatility(|_, _, _, _| 0.1)
            .with_exit_reward(|_, _, _| 2.5);
        let (vf, _) = solve(&spec, &g);
        assert!(vf.v.iter().all(|v| *v == 2.5));
        assert!(vf.contact.iter().all(|c| *c));
        assert_eq!(dp_value_at_zero(&vf, &spec), 2.5);
        let p = feedback_policy_with_actions(&vf, 3);
        assert!(p.stop.iter().all(|s| *s == 1.0));
    }

    #[test]
    fn running_reward_accrues_linearly() {
        let g = grid();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g, 0.5))
            .with_boundary(BoundaryMode::Unattainable)
            .with_running_reward(|_, _, _, _| 1.0);
        let (vf, _) = solve(&spec, &g);
        for k in 0..g.t_count {
            for i in g.interior() {
                let want = (g.t_count - 1 - k) as f64 * g.dt;
                assert!((vf.v[[k, i]] - want).abs() < 1e-12);
                assert_eq!(vf.contact[[k, i]], k == g.t_count - 1);
            }
        }
    }

    #[test]
    fn martingale_obstacle_is_harmonic() {
        let g1 = Grid::uniform(1.0, 11, 0.0, 1.0, 11, vec![0.0]).unwrap();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g1, 0.5))
            .with_volatility(|_, _, _, _| 0.1)
            .with_exit_reward(|_, x, _| x);
        let (vf, _) = solve(&spec, &g1);
        for k in 0..g1.t_count {
            for i in 0..g1.x_count() {
                assert!((vf.v[[k, i]] - g1.x_nodes[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn obstacle_holds_and_ties_pick_lowest_action() {
        let g = grid();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g, 0.5))
            .with_volatility(|_, _, _, _| 0.1)
            .with_exit_reward(|t, x, _| (0.5 - x).max(0.0) - 0.1 * t);
        let (vf, _) = solve(&spec, &g);
        assert!(vf.v.iter().zip(vf.obstacle.iter()).all(|(v, o)| *v >= o - 1e-12));
        // drift is zero for every action, so all actions tie
        assert!(vf.argmax_action.iter().all(|j| *j == 0));
        let (again, _) = solve(&spec, &g);
        assert_eq!(vf.argmax_action, again.argmax_action);
    }

    #[test]
    fn monotone_in_rewards() {
        let g = grid();
        let base = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_point_mass(&g, 0.4))
            .with_drift(|_, _, _, a| a)
            .with_volatility(|_, _, _, _| 0.15)
            .with_running_reward(|_, x, _, a| x - a * a)
            .with_exit_reward(|_, x, _| (x - 0.3).abs());
        let raised = base.clone().with_exit_reward(|_, x, _| (x - 0.3).abs() + 0.05 * x);
        let (a, _) = solve(&base, &g);
        let (b, _) = solve(&raised, &g);
        assert!(a.v.iter().zip(b.v.iter()).all(|(x, y)| y >= x));
    }

    #[test]
    fn greedy_policy_reproduces_value_exactly() {
        let g = grid();
        let spec = ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_from_density(&g, |x| x * (1.0 - x)).unwrap())
            .with_drift(|_, _, _, a| a)
            .with_volatility(|_, _, _, _| 0.15)
            .with_running_reward(|_, x, _, a| 0.5 * x - a * a)
            .with_exit_reward(|t, x, _| (0.6 - x).max(0.0) * (1.0 - 0.5 * t));
        let (vf, tm) = solve(&spec, &g);
        let policy = feedback_policy_with_actions(&vf, g.a_count());
        let (mu, m) = push_forward(&policy, &tm, &spec.m0, &g);
        let z = MomentVector::zeros(g.slices(), 1);
        let mut score = 0.0;
        for ((k, i, j), w) in m.values.indexed_iter() {
            score += w * spec.running_at(&g, &z, k, i, j) * g.dt;
        }
        for ((k, i), w) in mu.values.indexed_iter() {
            score += w * spec.exit_at(&g, &z, k, i);
        }
        assert!((score - dp_value_at_zero(&vf, &spec)).abs() < 1e-12);
    }
}
