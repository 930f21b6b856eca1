//! Post-solve certification: numerical residuals for the identities a
//! solution must satisfy (flow balance, conservation, equality of the
//! linear-programming and dynamic-programming values, the mixed-solution
//! relations on the contact and continuation sets, and recovery of a strict
//! control from a relaxed one).

use log::warn;
use ndarray::Array3;
use serde::Serialize;

use crate::chain::{assemble_transition, push_forward, TransitionModel};
use crate::domain::{
    disintegrate, moment_of, ExitMeasure, FeedbackPolicy, Grid, MomentVector, OccupationFlow, ProblemSpec, MASS_TOL,
};
use crate::error::Result;
use crate::lp::{build_occupation_lp, solve_default, LinearProgram, LpStatus};
use crate::mfg::payoff;
use crate::oracle::{contact_set, dp_solve, dp_value_at_zero, ValueFunction, CONTACT_TOL};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const VALUE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tol,
            pass: residual <= tol,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    /// Sorted by name.
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl CertificationReport {
    pub fn from_checks(mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, pass }
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `max |A v - rhs|` of the pair, including mass on entries the program
/// has no variable for and negative entries.
pub fn check_constraint_residual(m: &OccupationFlow, mu: &ExitMeasure, lp: &LinearProgram) -> Result<CheckResult> {
    Ok(CheckResult::new("constraint_residual", lp.pair_residual(mu, m)?, RESIDUAL_TOL))
}

/// Unit exit mass and per-slice subprobability.
pub fn check_conservation(m: &OccupationFlow, mu: &ExitMeasure) -> Vec<CheckResult> {
    let exit = CheckResult::new("exit_mass", (mu.total() - 1.0).abs(), MASS_TOL);
    let worst = (0..m.values.dim().0).map(|k| m.slice_mass(k)).fold(0.0_f64, f64::max);
    let sub = CheckResult::new("subprobability", (worst - 1.0).max(0.0), MASS_TOL);
    let neg = m
        .values
        .iter()
        .chain(mu.values.iter())
        .fold(0.0_f64, |acc, v| acc.max(-v));
    vec![exit, sub, CheckResult::new("nonnegativity", neg, 1e-10)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueGap {
    pub lp_value: f64,
    pub dp_value: f64,
    pub gap: f64,
}

/// Solves the frozen problem by both methods and compares the values.
pub fn value_gap(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector) -> Result<ValueGap> {
    let trans = assemble_transition(spec, grid, moments)?;
    let lp = build_occupation_lp(spec, grid, &trans, moments)?;
    let sol = solve_default(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(crate::Error::Solver(sol.status));
    }
    let vf = dp_solve(spec, grid, &trans, moments)?;
    let dp_value = dp_value_at_zero(&vf, spec);
    Ok(ValueGap {
        lp_value: sol.value,
        dp_value,
        gap: (sol.value - dp_value).abs(),
    })
}

pub fn check_value_equivalence(spec: &ProblemSpec, grid: &Grid, moments: &MomentVector) -> Result<CheckResult> {
    let g = value_gap(spec, grid, moments)?;
    Ok(CheckResult::new("value_equivalence", g.gap, VALUE_TOL * (1.0 + g.dp_value.abs()))
        .with_note(format!("lp {:.12e}, dp {:.12e}", g.lp_value, g.dp_value)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedResiduals {
    /// Flow on the contact set weighted by its one-step loss against `g`.
    pub contact: f64,
    /// Flow on the continuation set weighted by the one-step drift of `v`.
    pub continuation: f64,
    /// Exit mass on interior continuation nodes before the horizon.
    pub exit_in_continuation: f64,
}

/// Discrete form of the relations satisfied by an optimal pair and the value
/// function: on the contact set `S`, `sum m (f dt + E v_next - g) = 0`; on
/// the continuation set `C`, `sum m (f dt + E v_next - v) = 0`; and no exit
/// happens in `C`. The generator terms are written per step (multiplied by
/// `dt`), matching the scaling of the objective.
///
/// On `S` the continuum relation applies the generator to `g`, which agrees
/// with `v` there. On the chain a step from a contact node can land in `C`,
/// where `v_next > g_next`, so the generator is applied to `v`: mass that
/// continues from a contact node where continuing is optimal contributes
/// nothing.
pub fn mixed_residuals(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    vf: &ValueFunction,
    m: &OccupationFlow,
    mu: &ExitMeasure,
) -> MixedResiduals {
    let mut contact = 0.0;
    let mut continuation = 0.0;
    for k in 0..grid.slices() {
        let v_next: Vec<f64> = vf.v.row(k + 1).to_vec();
        for i in grid.interior() {
            for j in 0..grid.a_count() {
                let w = m.values[[k, i, j]];
                if w == 0.0 {
                    continue;
                }
                let f = spec.running_at(grid, moments, k, i, j) * grid.dt;
                if vf.contact[[k, i]] {
                    contact += w * (f + trans.expect(k, i, j, &v_next) - vf.obstacle[[k, i]]);
                } else {
                    continuation += w * (f + trans.expect(k, i, j, &v_next) - vf.v[[k, i]]);
                }
            }
        }
    }
    let mut exit_in_continuation = 0.0;
    for k in 0..grid.slices() {
        for i in grid.interior() {
            if !vf.contact[[k, i]] {
                exit_in_continuation += mu.values[[k, i]];
            }
        }
    }
    MixedResiduals {
        contact: contact.abs(),
        continuation: continuation.abs(),
        exit_in_continuation,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn check_mixed_solution(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    vf: &ValueFunction,
    m: &OccupationFlow,
    mu: &ExitMeasure,
) -> Vec<CheckResult> {
    let r = mixed_residuals(spec, grid, trans, moments, vf, m, mu);
    let value = dp_value_at_zero(vf, spec);
    let tol = VALUE_TOL * (1.0 + value.abs());
    let contact_scale = CONTACT_TOL * (1.0 + vf.v.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    if contact_scale > tol {
        warn!("contact tolerance {contact_scale:e} exceeds the residual tolerance {tol:e}; contact set may be misread");
    }
    vec![
        CheckResult::new("mixed_contact", r.contact, tol),
        CheckResult::new("mixed_continuation", r.continuation, tol),
        CheckResult::new("mixed_exit_in_continuation", r.exit_in_continuation, VALUE_TOL),
    ]
}

/// Replaces the action mix at every node by one grid action whose drift and
/// squared volatility are closest to the mix averages (ties: larger running
/// reward, then lower index). Stopping probabilities are kept.
pub fn purify(
    spec: &ProblemSpec,
    grid: &Grid,
    moments: &MomentVector,
    m: &OccupationFlow,
    mu: &ExitMeasure,
) -> FeedbackPolicy {
    let relaxed = FeedbackPolicy::from_measures(mu, m);
    let kernel = disintegrate(m);
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    let mut actions = Array3::zeros((s, n, na));
    for k in 0..s {
        let t = grid.time(k);
        for i in 0..n {
            let x = grid.x_nodes[i];
            let coef: Vec<(f64, f64, f64)> = (0..na)
                .map(|j| {
                    let a = grid.a_nodes[j];
                    let b = (spec.drift)(t, x, moments.drift_row(k), a);
                    let sg = (spec.volatility)(t, x, moments.volatility_row(k), a);
                    let f = (spec.running_reward)(t, x, moments.running_row(k), a);
                    (b, sg * sg, f)
                })
                .collect();
            let (mut b_bar, mut s_bar) = (0.0, 0.0);
            for (j, c) in coef.iter().enumerate() {
                b_bar += kernel.probs[[k, i, j]] * c.0;
                s_bar += kernel.probs[[k, i, j]] * c.1;
            }
            let mut best = 0;
            let mut best_key = (f64::INFINITY, f64::NEG_INFINITY);
            for (j, c) in coef.iter().enumerate() {
                let dist = (c.0 - b_bar).powi(2) + (c.1 - s_bar).powi(2);
                let scale = 1e-14 * (1.0 + b_bar.abs() + s_bar.abs());
                let closer = dist < best_key.0 - scale;
                let tied = (dist - best_key.0).abs() <= scale;
                if closer || (tied && c.2 > best_key.1) {
                    best = j;
                    best_key = (dist, c.2);
                }
            }
            actions[[k, i, best]] = 1.0;
        }
    }
    FeedbackPolicy {
        stop: relaxed.stop,
        actions,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrictControlOutcome {
    pub relaxed_value: f64,
    pub pure_value: f64,
}

/// Re-scores the purified policy in the chain of the frozen field.
pub fn strict_control_values(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    m: &OccupationFlow,
    mu: &ExitMeasure,
) -> StrictControlOutcome {
    let policy = purify(spec, grid, moments, m, mu);
    let (mu_p, m_p) = push_forward(&policy, trans, &spec.m0, grid);
    StrictControlOutcome {
        relaxed_value: payoff(spec, grid, moments, mu, m),
        pure_value: payoff(spec, grid, moments, &mu_p, &m_p),
    }
}

/// Passes iff the purified policy does at least as well as the relaxed one
/// up to `1e-6 (1 + |value|)`. Only meaningful when the set of attainable
/// (drift, squared volatility, reward) triples is convex; without that
/// assertion the check is skipped.
pub fn check_strict_control(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
    m: &OccupationFlow,
    mu: &ExitMeasure,
    convex: bool,
) -> CheckResult {
    if !convex {
        return CheckResult::new("strict_control", 0.0, VALUE_TOL)
            .with_note("skipped: convexity of the attainable coefficient set not asserted");
    }
    let o = strict_control_values(spec, grid, trans, moments, m, mu);
    let shortfall = (o.relaxed_value - o.pure_value).max(0.0);
    CheckResult::new("strict_control", shortfall, VALUE_TOL * (1.0 + o.relaxed_value.abs()))
        .with_note(format!("relaxed {:.12e}, pure {:.12e}", o.relaxed_value, o.pure_value))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertifyOptions {
    /// Caller asserts convexity of the attainable coefficient set.
    pub convex_control: bool,
    /// Relative tolerance defining the contact set for the mixed-solution
    /// checks. An approximate equilibrium mixes on nodes where it is only
    /// nearly indifferent, so it should be certified with a tolerance
    /// matching its accuracy.
    pub contact_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            convex_control: false,
            contact_tol: CONTACT_TOL,
        }
    }
}

/// Runs every check on a pair, freezing the field at the pair itself. For a
/// single-agent problem the field is irrelevant; for a mean-field problem
/// this certifies an equilibrium candidate.
pub fn certify(
    spec: &ProblemSpec,
    grid: &Grid,
    m: &OccupationFlow,
    mu: &ExitMeasure,
    opts: CertifyOptions,
) -> Result<CertificationReport> {
    grid.check_flow_shape(m)?;
    grid.check_exit_shape(mu)?;
    let moments = moment_of(m, mu, spec, grid)?;
    certify_at(spec, grid, &moments, m, mu, opts)
}

/// As [`certify`] with the field frozen at explicit moments.
pub fn certify_at(
    spec: &ProblemSpec,
    grid: &Grid,
    moments: &MomentVector,
    m: &OccupationFlow,
    mu: &ExitMeasure,
    opts: CertifyOptions,
) -> Result<CertificationReport> {
    let trans = assemble_transition(spec, grid, moments)?;
    let lp = build_occupation_lp(spec, grid, &trans, moments)?;
    let mut vf = dp_solve(spec, grid, &trans, moments)?;
    if opts.contact_tol != CONTACT_TOL {
        vf.contact = contact_set(&vf.v, &vf.obstacle, opts.contact_tol);
    }
    let dp_value = dp_value_at_zero(&vf, spec);
    let sol = solve_default(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(crate::Error::Solver(sol.status));
    }

    let mut checks = vec![check_constraint_residual(m, mu, &lp)?];
    checks.extend(check_conservation(m, mu));
    checks.push(
        CheckResult::new("value_equivalence", (sol.value - dp_value).abs(), VALUE_TOL * (1.0 + dp_value.abs()))
            .with_note(format!("lp {:.12e}, dp {:.12e}", sol.value, dp_value)),
    );
    let own = payoff(spec, grid, moments, mu, m);
    checks.push(
        CheckResult::new("optimality_gap", (dp_value - own).max(0.0), VALUE_TOL * (1.0 + dp_value.abs()))
            .with_note(format!("candidate {own:.12e}, optimum {dp_value:.12e}")),
    );
    checks.extend(check_mixed_solution(spec, grid, &trans, moments, &vf, m, mu));
    checks.push(check_strict_control(spec, grid, &trans, moments, m, mu, opts.convex_control));
    Ok(CertificationReport::from_checks(checks))
}
