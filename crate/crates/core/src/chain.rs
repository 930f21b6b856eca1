//! Upwind Markov-chain approximation of the controlled diffusion
//! `dX = b dt + sigma dW` on the state grid.
//!
//! From an interior node the chain moves one cell up with probability
//! `dt * (sigma^2 / (2 dx^2) + b+ / dx)`, one cell down with probability
//! `dt * (sigma^2 / (2 dx^2) + b- / dx)` and stays otherwise. Boundary nodes
//! absorb: mass arriving there exits at once.

use ndarray::{Array2, Array3};

use crate::domain::{BoundaryMode, ExitMeasure, FeedbackPolicy, Grid, MomentVector, OccupationFlow, ProblemSpec};
use crate::error::{Error, Result};

/// Row-stochastic one-step transitions per `(slice, node, action)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    pub p_stay: Array3<f64>,
    pub p_up: Array3<f64>,
    pub p_down: Array3<f64>,
    pub boundary: Vec<bool>,
}

impl TransitionModel {
    pub fn slices(&self) -> usize {
        self.p_stay.dim().0
    }

    /// Nonzero `(target node, probability)` pairs from `(k, i, j)`, in
    /// ascending target order.
    pub fn targets(&self, k: usize, i: usize, j: usize) -> impl Iterator<Item = (usize, f64)> {
        let down = self.p_down[[k, i, j]];
        let stay = self.p_stay[[k, i, j]];
        let up = self.p_up[[k, i, j]];
        [(i.wrapping_sub(1), down), (i, stay), (i + 1, up)]
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
    }

    /// `sum_next p(next) * values[next]`.
    pub fn expect(&self, k: usize, i: usize, j: usize, values: &[f64]) -> f64 {
        self.p_down[[k, i, j]] * values[i - 1] + self.p_stay[[k, i, j]] * values[i] + self.p_up[[k, i, j]] * values[i + 1]
    }

    /// True when some interior transition at slice `k` can land on the
    /// boundary node `b`.
    pub fn boundary_reachable(&self, k: usize, b: usize) -> bool {
        let (_, n, na) = self.p_stay.dim();
        if b == 0 {
            (0..na).any(|j| self.p_down[[k, 1, j]] > 0.0)
        } else if b == n - 1 {
            (0..na).any(|j| self.p_up[[k, n - 2, j]] > 0.0)
        } else {
            false
        }
    }
}

/// Outcome of the stability check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflReport {
    pub passed: bool,
    /// Largest `dt * (sigma^2/dx^2 + |b|/dx)` over sampled points.
    pub max_lhs: f64,
    /// `1 - max_lhs`.
    pub margin: f64,
    /// Location of the largest left-hand side, if any point was sampled.
    pub worst: Option<(usize, usize, usize)>,
}

fn sample(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector, k: usize, i: usize, j: usize) -> (f64, f64) {
    let t = grid.time(k);
    let x = grid.x_nodes[i];
    let a = grid.a_nodes[j];
    let b = (spec.drift)(t, x, moments.drift_row(k), a);
    let s = (spec.volatility)(t, x, moments.volatility_row(k), a);
    (b, s)
}

fn check_moment_shape(grid: &Grid, moments: &MomentVector) -> Result<()> {
    if moments.slices() != grid.slices() {
        return Err(Error::Shape(format!(
            "moment vector covers {} slices, grid has {}",
            moments.slices(),
            grid.slices()
        )));
    }
    Ok(())
}

pub fn cfl_check(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector) -> CflReport {
    let mut max_lhs = 0.0_f64;
    let mut worst = None;
    let inv_dx = 1.0 / grid.dx;
    for k in 0..grid.slices().min(moments.slices()) {
        for i in grid.interior() {
            for j in 0..grid.a_count() {
                let (b, s) = sample(spec, grid, moments, k, i, j);
                let lhs = grid.dt * (s * s * inv_dx * inv_dx + b.abs() * inv_dx);
                let lhs = if lhs.is_nan() { f64::INFINITY } else { lhs };
                if worst.is_none() || lhs > max_lhs {
                    max_lhs = lhs;
                    worst = Some((k, i, j));
                }
            }
        }
    }
    CflReport {
        passed: max_lhs <= 1.0,
        max_lhs,
        margin: 1.0 - max_lhs,
        worst,
    }
}

pub fn assemble_transition(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector) -> Result<TransitionModel> {
    check_moment_shape(grid, moments)?;
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    let mut p_stay = Array3::zeros((s, n, na));
    let mut p_up = Array3::zeros((s, n, na));
    let mut p_down = Array3::zeros((s, n, na));
    let half_inv_dx2 = 0.5 / (grid.dx * grid.dx);
    let inv_dx = 1.0 / grid.dx;
    for k in 0..s {
        for i in grid.interior() {
            for j in 0..na {
                let (b, sigma) = sample(spec, grid, moments, k, i, j);
                if !b.is_finite() || !sigma.is_finite() {
                    return Err(Error::Config(format!(
                        "non-finite coefficient at slice {k}, node {i}, action {j}"
                    )));
                }
                if sigma < 0.0 {
                    return Err(Error::Config(format!(
                        "negative volatility {sigma} at slice {k}, node {i}, action {j}"
                    )));
                }
                if spec.boundary == BoundaryMode::Attainable && sigma <= 0.0 {
                    return Err(Error::Config(format!(
                        "attainable boundary needs positive volatility; slice {k}, node {i}, action {j} has {sigma}"
                    )));
                }
                let diff = sigma * sigma * half_inv_dx2;
                let up = grid.dt * (diff + b.max(0.0) * inv_dx);
                let down = grid.dt * (diff + (-b).max(0.0) * inv_dx);
                let lhs = up + down;
                if lhs > 1.0 {
                    return Err(Error::Cfl { k, i, j, lhs });
                }
                if spec.boundary == BoundaryMode::Unattainable
                    && ((i == 1 && down > 0.0) || (i == n - 2 && up > 0.0))
                {
                    return Err(Error::BoundaryReachable { k, i, j });
                }
                p_up[[k, i, j]] = up;
                p_down[[k, i, j]] = down;
                p_stay[[k, i, j]] = 1.0 - up - down;
            }
        }
    }
    Ok(TransitionModel {
        p_stay,
        p_up,
        p_down,
        boundary: (0..n).map(|i| grid.is_boundary(i)).collect(),
    })
}

/// Forward evolution of the initial law under a feedback policy. The
/// resulting pair satisfies the flow-balance constraints of the chain
/// exactly (up to round-off).
pub fn push_forward(
    policy: &FeedbackPolicy,
    trans: &TransitionModel,
    m0: &[f64],
    grid: &Grid,
) -> (ExitMeasure, OccupationFlow) {
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    let mut mu = Array2::zeros((grid.t_count, n));
    let mut m = Array3::zeros((s, n, na));
    let mut present = m0.to_vec();
    for k in 0..s {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let w = present[i];
            if w == 0.0 {
                continue;
            }
            if trans.boundary[i] {
                mu[[k, i]] += w;
                continue;
            }
            let stop = policy.stop[[k, i]].clamp(0.0, 1.0);
            mu[[k, i]] += w * stop;
            let cont = w * (1.0 - stop);
            if cont == 0.0 {
                continue;
            }
            for j in 0..na {
                let mass = cont * policy.actions[[k, i, j]];
                if mass == 0.0 {
                    continue;
                }
                m[[k, i, j]] += mass;
                for (target, p) in trans.targets(k, i, j) {
                    next[target] += mass * p;
                }
            }
        }
        present = next;
    }
    for i in 0..n {
        mu[[s, i]] += present[i];
    }
    (ExitMeasure::new(mu), OccupationFlow::new(m))
}
