//! Grids, problem coefficients and the discrete measure objects shared by
//! every solver layer.
//!
//! Conventions used throughout the crate:
//!
//! * time nodes `t_k = k * dt` for `k = 0..t_count`; the last node is the
//!   horizon `T`. There are `t_count - 1` time slices.
//! * the occupation flow `m[k, i, j]` lives on slices `k = 0..t_count-1`
//!   and records the mass alive at node `x_i` during `[t_k, t_k + dt)`
//!   that plays action `a_j`. Boundary nodes never carry occupation mass.
//! * the exit measure `mu[k, i]` lives on all time nodes and records the
//!   mass leaving the game at `(t_k, x_i)`, either by stopping, by hitting
//!   the boundary, or by reaching the horizon.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the per-slice subprobability bound and on unit exit mass.
pub const MASS_TOL: f64 = 1e-9;

/// Uniform space-time grid with a finite action set.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub t_count: usize,
    pub dt: f64,
    pub horizon: f64,
    pub x_nodes: Vec<f64>,
    pub dx: f64,
    pub a_nodes: Vec<f64>,
}

impl Grid {
    pub fn uniform(
        horizon: f64,
        t_count: usize,
        x_lo: f64,
        x_hi: f64,
        x_count: usize,
        a_nodes: Vec<f64>,
    ) -> Result<Self> {
        if t_count < 2 {
            return Err(Error::Config(format!("t_count must be >= 2, got {t_count}")));
        }
        if x_count < 3 {
            return Err(Error::Config(format!("x_count must be >= 3, got {x_count}")));
        }
        if a_nodes.is_empty() {
            return Err(Error::Config("action set must be nonempty".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Config(format!("need x_lo < x_hi, got [{x_lo}, {x_hi}]")));
        }
        if a_nodes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("action nodes must be finite".into()));
        }
        let dx = (x_hi - x_lo) / (x_count - 1) as f64;
        let mut x_nodes: Vec<f64> = (0..x_count).map(|i| x_lo + i as f64 * dx).collect();
        x_nodes[x_count - 1] = x_hi;
        Ok(Self {
            t_count,
            dt: horizon / (t_count - 1) as f64,
            horizon,
            x_nodes,
            dx,
            a_nodes,
        })
    }

    /// `count` equally spaced actions covering `[lo, hi]`; a single action
    /// sits at the midpoint.
    pub fn uniform_actions(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..count)
                .map(|j| lo + (hi - lo) * j as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    /// Number of time slices (`t_count - 1`).
    pub fn slices(&self) -> usize {
        self.t_count - 1
    }

    pub fn x_count(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn a_count(&self) -> usize {
        self.a_nodes.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.t_count {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.x_nodes.len()
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.x_nodes.len() - 1
    }

    pub fn x_lo(&self) -> f64 {
        self.x_nodes[0]
    }

    pub fn x_hi(&self) -> f64 {
        self.x_nodes[self.x_nodes.len() - 1]
    }

    pub(crate) fn check_flow_shape(&self, m: &OccupationFlow) -> Result<()> {
        let want = (self.slices(), self.x_count(), self.a_count());
        if m.values.dim() != want {
            return Err(Error::Shape(format!(
                "occupation flow has shape {:?}, grid expects {:?}",
                m.values.dim(),
                want
            )));
        }
        Ok(())
    }

    pub(crate) fn check_exit_shape(&self, mu: &ExitMeasure) -> Result<()> {
        let want = (self.t_count, self.x_count());
        if mu.values.dim() != want {
            return Err(Error::Shape(format!(
                "exit measure has shape {:?}, grid expects {:?}",
                mu.values.dim(),
                want
            )));
        }
        Ok(())
    }
}

/// Whether the boundary of the state domain may be reached by the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// The dynamics never reach the boundary before the horizon.
    Unattainable,
    /// The boundary can be hit; volatility must stay bounded away from zero.
    Attainable,
}

/// `(t, x, z, a) -> value` for drift, volatility and running reward.
pub type CoefficientFn = Arc<dyn Fn(f64, f64, &[f64], f64) -> f64 + Send + Sync>;
/// `(t, x, w) -> value` for the exit reward.
pub type ExitRewardFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
/// `(t, x) -> R^d` moment kernel.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// Coefficients of a mixed stopping/control problem whose dependence on the
/// population enters only through finitely many moments of the occupation
/// flow (drift, volatility, running reward) and of the exit measure (exit
/// reward).
///
/// A kernel left as `None` is identically zero.
#[derive(Clone)]
pub struct ProblemSpec {
    pub horizon: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub dim: usize,
    pub drift: CoefficientFn,
    pub volatility: CoefficientFn,
    pub running_reward: CoefficientFn,
    pub exit_reward: ExitRewardFn,
    pub drift_kernel: Option<KernelFn>,
    pub volatility_kernel: Option<KernelFn>,
    pub running_kernel: Option<KernelFn>,
    pub exit_kernel: Option<KernelFn>,
    /// Initial law as weights on every state node (zero on the boundary).
    pub m0: Vec<f64>,
    pub boundary: BoundaryMode,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("horizon", &self.horizon)
            .field("x_lo", &self.x_lo)
            .field("x_hi", &self.x_hi)
            .field("dim", &self.dim)
            .field("m0", &self.m0)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// A problem with zero coefficients, one moment dimension and no
    /// population dependence. Use the `with_*` methods to fill it in.
    pub fn new(horizon: f64, x_lo: f64, x_hi: f64, m0: Vec<f64>) -> Self {
        Self {
            horizon,
            x_lo,
            x_hi,
            dim: 1,
            drift: Arc::new(|_, _, _, _| 0.0),
            volatility: Arc::new(|_, _, _, _| 0.0),
            running_reward: Arc::new(|_, _, _, _| 0.0),
            exit_reward: Arc::new(|_, _, _| 0.0),
            drift_kernel: None,
            volatility_kernel: None,
            running_kernel: None,
            exit_kernel: None,
            m0,
            boundary: BoundaryMode::Attainable,
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_boundary(mut self, mode: BoundaryMode) -> Self {
        self.boundary = mode;
        self
    }

    pub fn with_drift(
        mut self,
        f: impl Fn(f64, f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.drift = Arc::new(f);
        self
    }

    pub fn with_volatility(
        mut self,
        f: impl Fn(f64, f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.volatility = Arc::new(f);
        self
    }

    pub fn with_running_reward(
        mut self,
        f: impl Fn(f64, f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.running_reward = Arc::new(f);
        self
    }

    pub fn with_exit_reward(
        mut self,
        f: impl Fn(f64, f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exit_reward = Arc::new(f);
        self
    }

    pub fn with_drift_kernel(mut self, h: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.drift_kernel = Some(Arc::new(h));
        self
    }

    pub fn with_volatility_kernel(
        mut self,
        h: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.volatility_kernel = Some(Arc::new(h));
        self
    }

    pub fn with_running_kernel(
        mut self,
        h: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.running_kernel = Some(Arc::new(h));
        self
    }

    pub fn with_exit_kernel(mut self, h: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.exit_kernel = Some(Arc::new(h));
        self
    }

    /// True when the drift and volatility ignore the population, so every
    /// frozen constraint set coincides.
    pub fn dynamics_measure_independent(&self) -> bool {
        self.drift_kernel.is_none() && self.volatility_kernel.is_none()
    }

    /// Initial weights proportional to `density` on interior nodes.
    pub fn m0_from_density(grid: &Grid, density: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mut w = vec![0.0; grid.x_count()];
        for i in grid.interior() {
            w[i] = density(grid.x_nodes[i]).max(0.0);
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Config("initial density has no interior mass".into()));
        }
        w.iter_mut().for_each(|v| *v /= total);
        Ok(w)
    }

    /// Unit mass on the interior node closest to `x`.
    pub fn m0_point_mass(grid: &Grid, x: f64) -> Vec<f64> {
        let mut best = grid.interior().start;
        for i in grid.interior() {
            if (grid.x_nodes[i] - x).abs() < (grid.x_nodes[best] - x).abs() {
                best = i;
            }
        }
        let mut w = vec![0.0; grid.x_count()];
        w[best] = 1.0;
        w
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if ((grid.horizon - self.horizon) / self.horizon).abs() > 1e-12 {
            return Err(Error::Shape(format!(
                "grid horizon {} differs from problem horizon {}",
                grid.horizon, self.horizon
            )));
        }
        let span = (self.x_hi - self.x_lo).abs().max(1.0);
        if (grid.x_lo() - self.x_lo).abs() > 1e-12 * span || (grid.x_hi() - self.x_hi).abs() > 1e-12 * span {
            return Err(Error::Shape("grid does not cover the problem domain".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("moment dimension must be >= 1".into()));
        }
        if self.m0.len() != grid.x_count() {
            return Err(Error::Shape(format!(
                "m0 has {} weights, grid has {} state nodes",
                self.m0.len(),
                grid.x_count()
            )));
        }
        if self.m0.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("m0 weights must be finite and nonnegative".into()));
        }
        let total: f64 = self.m0.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("m0 weights sum to {total}, expected 1")));
        }
        let n = grid.x_count();
        if self.m0[0] != 0.0 || self.m0[n - 1] != 0.0 {
            return Err(Error::Config("m0 must put no weight on boundary nodes".into()));
        }
        for (name, kernel) in self.kernels() {
            let Some(h) = kernel else { continue };
            for k in 0..grid.t_count {
                for &x in &grid.x_nodes {
                    let v = h(grid.time(k), x);
                    if v.len() != self.dim {
                        return Err(Error::Shape(format!(
                            "{name} kernel returns {} components, expected {}",
                            v.len(),
                            self.dim
                        )));
                    }
                    if v.iter().any(|c| !c.is_finite()) {
                        return Err(Error::Config(format!("{name} kernel is not finite at t={}, x={x}", grid.time(k))));
                    }
                }
            }
        }
        Ok(())
    }

    fn kernels(&self) -> [(&'static str, &Option<KernelFn>); 4] {
        [
            ("drift", &self.drift_kernel),
            ("volatility", &self.volatility_kernel),
            ("running", &self.running_kernel),
            ("exit", &self.exit_kernel),
        ]
    }

    pub fn running_at(&self, grid: &Grid, moments: &MomentVector, k: usize, i: usize, j: usize) -> f64 {
        (self.running_reward)(grid.time(k), grid.x_nodes[i], moments.running_row(k), grid.a_nodes[j])
    }

    pub fn exit_at(&self, grid: &Grid, moments: &MomentVector, k: usize, i: usize) -> f64 {
        (self.exit_reward)(grid.time(k), grid.x_nodes[i], &moments.exit)
    }
}

/// Occupation flow `m[k, i, j]`: nonnegative mass per slice, state node
/// and action node.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationFlow {
    pub values: Array3<f64>,
}

impl OccupationFlow {
    pub fn new(values: Array3<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(Array3::zeros((grid.slices(), grid.x_count(), grid.a_count())))
    }

    pub fn slice_mass(&self, k: usize) -> f64 {
        self.values.index_axis(Axis(0), k).sum()
    }

    /// `(1 - lambda) * self + lambda * other`.
    pub fn blend(&self, other: &Self, lambda: f64) -> Self {
        Self::new(&self.values * (1.0 - lambda) + &other.values * lambda)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Entries nonnegative and every slice a subprobability.
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::State(format!("occupation flow has negative entry {v}")));
        }
        for k in 0..self.values.dim().0 {
            let mass = self.slice_mass(k);
            if mass > 1.0 + MASS_TOL {
                return Err(Error::State(format!("slice {k} carries mass {mass} > 1")));
            }
        }
        Ok(())
    }
}

/// Exit measure `mu[k, i]`: a probability on time nodes times state nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitMeasure {
    pub values: Array2<f64>,
}

impl ExitMeasure {
    pub fn new(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(Array2::zeros((grid.t_count, grid.x_count())))
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn blend(&self, other: &Self, lambda: f64) -> Self {
        Self::new(&self.values * (1.0 - lambda) + &other.values * lambda)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::State(format!("exit measure has negative entry {v}")));
        }
        let total = self.total();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::State(format!("exit measure has total mass {total}, expected 1")));
        }
        Ok(())
    }
}

/// Moments `int h dm_{t_k}` per slice for the three flow kernels and
/// `int h_g dmu` for the exit kernel. Rows are indexed by slice.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub drift: Array2<f64>,
    pub volatility: Array2<f64>,
    pub running: Array2<f64>,
    pub exit: Vec<f64>,
}

impl MomentVector {
    pub fn zeros(slices: usize, dim: usize) -> Self {
        Self {
            drift: Array2::zeros((slices, dim)),
            volatility: Array2::zeros((slices, dim)),
            running: Array2::zeros((slices, dim)),
            exit: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.exit.len()
    }

    pub fn slices(&self) -> usize {
        self.drift.nrows()
    }

    pub fn drift_row(&self, k: usize) -> &[f64] {
        row_slice(&self.drift, k)
    }

    pub fn volatility_row(&self, k: usize) -> &[f64] {
        row_slice(&self.volatility, k)
    }

    pub fn running_row(&self, k: usize) -> &[f64] {
        row_slice(&self.running, k)
    }

    /// L1 distance over all stacked components.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let flows = [
            (&self.drift, &other.drift),
            (&self.volatility, &other.volatility),
            (&self.running, &other.running),
        ];
        let mut d: f64 = flows
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(a, b)| (a - b).abs())
            .sum();
        d += self.exit.iter().zip(&other.exit).map(|(a, b)| (a - b).abs()).sum::<f64>();
        d
    }
}

fn row_slice(a: &Array2<f64>, k: usize) -> &[f64] {
    let d = a.ncols();
    &a.as_slice().expect("moment arrays are standard layout")[k * d..(k + 1) * d]
}

/// Integrates every moment kernel of `spec` against `(mu, m)`.
pub fn moment_of(
    m: &OccupationFlow,
    mu: &ExitMeasure,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<MomentVector> {
    grid.check_flow_shape(m)?;
    grid.check_exit_shape(mu)?;
    let d = spec.dim;
    let slices = grid.slices();
    let mut out = MomentVector::zeros(slices, d);
    let state_mass = m.values.sum_axis(Axis(2));

    let flow_targets: [(&Option<KernelFn>, &mut Array2<f64>); 3] = [
        (&spec.drift_kernel, &mut out.drift),
        (&spec.volatility_kernel, &mut out.volatility),
        (&spec.running_kernel, &mut out.running),
    ];
    for (kernel, target) in flow_targets {
        let Some(h) = kernel else { continue };
        for k in 0..slices {
            let t = grid.time(k);
            for (i, &x) in grid.x_nodes.iter().enumerate() {
                let w = state_mass[[k, i]];
                if w == 0.0 {
                    continue;
                }
                let hv = h(t, x);
                if hv.len() != d {
                    return Err(Error::Shape(format!("kernel returned {} components, expected {d}", hv.len())));
                }
                for (l, c) in hv.iter().enumerate() {
                    target[[k, l]] += c * w;
                }
            }
        }
    }
    if let Some(h) = &spec.exit_kernel {
        for k in 0..grid.t_count {
            let t = grid.time(k);
            for (i, &x) in grid.x_nodes.iter().enumerate() {
                let w = mu.values[[k, i]];
                if w == 0.0 {
                    continue;
                }
                let hv = h(t, x);
                if hv.len() != d {
                    return Err(Error::Shape(format!("kernel returned {} components, expected {d}", hv.len())));
                }
                for (l, c) in hv.iter().enumerate() {
                    out.exit[l] += c * w;
                }
            }
        }
    }
    Ok(out)
}

/// Per-node action distribution obtained by disintegrating an occupation
/// flow against its state marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlKernel {
    pub probs: Array3<f64>,
    pub mass: Array2<f64>,
    /// False where the node carries no mass; `probs` is uniform there.
    pub supported: Array2<bool>,
}

impl ControlKernel {
    /// `probs * mass`, which reproduces the disintegrated flow.
    pub fn reconstruct(&self) -> OccupationFlow {
        let (s, n, na) = self.probs.dim();
        let mut out = Array3::zeros((s, n, na));
        for ((k, i, j), v) in out.indexed_iter_mut() {
            *v = self.probs[[k, i, j]] * self.mass[[k, i]];
        }
        OccupationFlow::new(out)
    }
}

pub fn disintegrate(m: &OccupationFlow) -> ControlKernel {
    let (s, n, na) = m.values.dim();
    let mass = m.values.sum_axis(Axis(2));
    let mut probs = Array3::zeros((s, n, na));
    let mut supported = Array2::from_elem((s, n), false);
    for k in 0..s {
        for i in 0..n {
            let total = mass[[k, i]];
            if total > 0.0 {
                supported[[k, i]] = true;
                for j in 0..na {
                    probs[[k, i, j]] = m.values[[k, i, j]] / total;
                }
            } else {
                for j in 0..na {
                    probs[[k, i, j]] = 1.0 / na as f64;
                }
            }
        }
    }
    ControlKernel { probs, mass, supported }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassProfileEntry {
    pub k: usize,
    /// Mass still in the game during slice `k` (zero at the horizon node).
    pub remaining: f64,
    /// Mass that has exited at time nodes `0..=k`.
    pub exited: f64,
}

/// Remaining versus cumulatively exited mass per time node. For any
/// constraint-feasible pair the two add up to one at every node.
pub fn mass_profile(m: &OccupationFlow, mu: &ExitMeasure) -> Vec<MassProfileEntry> {
    let slices = m.values.dim().0;
    let mut exited = 0.0;
    (0..mu.values.nrows())
        .map(|k| {
            exited += mu.values.index_axis(Axis(0), k).sum();
            let remaining = if k < slices { m.slice_mass(k) } else { 0.0 };
            MassProfileEntry { k, remaining, exited }
        })
        .collect()
}

/// The pair where every agent stops at time zero; it belongs to every
/// constraint set.
pub fn stop_immediately(spec: &ProblemSpec, grid: &Grid) -> (ExitMeasure, OccupationFlow) {
    let mut mu = ExitMeasure::zeros(grid);
    for (i, w) in spec.m0.iter().enumerate() {
        mu.values[[0, i]] = *w;
    }
    (mu, OccupationFlow::zeros(grid))
}

/// Markov feedback rule: a stopping probability per `(k, i)` and an action
/// distribution per `(k, i)` for agents that continue.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackPolicy {
    /// Shape `(t_count, x_count)`. Ignored at the horizon and on the
    /// boundary, where exit is forced.
    pub stop: Array2<f64>,
    /// Shape `(slices, x_count, a_count)`, rows sum to one.
    pub actions: Array3<f64>,
}

impl FeedbackPolicy {
    pub fn deterministic(stop: &Array2<bool>, action: &Array2<usize>, a_count: usize) -> Self {
        let (s, n) = action.dim();
        let mut actions = Array3::zeros((s, n, a_count));
        for ((k, i), &j) in action.indexed_iter() {
            actions[[k, i, j]] = 1.0;
        }
        Self {
            stop: stop.mapv(|b| if b { 1.0 } else { 0.0 }),
            actions,
        }
    }

    /// Relaxed policy induced by a measure pair: the stopping probability
    /// is the exiting share of the mass present at the node and actions
    /// follow the disintegration. Nodes without mass stop.
    pub fn from_measures(mu: &ExitMeasure, m: &OccupationFlow) -> Self {
        let kernel = disintegrate(m);
        let (t_count, n) = mu.values.dim();
        let slices = m.values.dim().0;
        let mut stop = Array2::from_elem((t_count, n), 1.0);
        for k in 0..slices {
            for i in 0..n {
                let present = mu.values[[k, i]] + kernel.mass[[k, i]];
                if present > 0.0 {
                    stop[[k, i]] = mu.values[[k, i]] / present;
                }
            }
        }
        Self {
            stop,
            actions: kernel.probs,
        }
    }
}
