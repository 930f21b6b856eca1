//! Revised primal simplex for `max c.v  s.t.  A v = b, v >= 0`.
//!
//! The basis inverse is kept explicitly (dense, column-major) and updated
//! by elementary row operations after each pivot; duals are updated from
//! the pivot row. Pricing is Dantzig's largest reduced cost with lowest
//! index tie-break. After a run of degenerate pivots the solver falls back
//! to Bland's rule, which cannot cycle, until the objective moves again.
//! Rows without a unit column get an artificial variable and a phase-one
//! pass minimizing the artificial mass.

use log::warn;

use super::{LinearProgram, LpSolution, LpStatus};

const PIVOT_TOL: f64 = 1e-9;
const REFRESH_EVERY: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n_struct: usize,
    row_sign: Vec<f64>,
    b: Vec<f64>,
    /// Row of each artificial variable, indexed by `var - n_struct`.
    art_row: Vec<usize>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    y: Vec<f64>,
    cost: Vec<f64>,
    phase_two: bool,
    tol: f64,
    iterations: usize,
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted { degenerate: bool },
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, tol: f64) -> Self {
        let m = lp.rhs.len();
        let n_struct = lp.objective.len();
        let row_sign: Vec<f64> = lp.rhs.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = lp.rhs.iter().zip(&row_sign).map(|(v, s)| v * s).collect();

        // crash basis: a column whose only entry is positive (after the sign
        // flip) serves as the slack of its row
        let mut basis = vec![usize::MAX; m];
        let mut pivot_val = vec![1.0; m];
        for j in 0..n_struct {
            let mut entries = lp.matrix.column(j);
            let (Some((r, v)), None) = (entries.next(), entries.next()) else {
                continue;
            };
            let v = v * row_sign[r];
            if v > 0.0 && basis[r] == usize::MAX {
                basis[r] = j;
                pivot_val[r] = v;
            }
        }
        let mut art_row = Vec::new();
        for (r, slot) in basis.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = n_struct + art_row.len();
                art_row.push(r);
            }
        }
        let n_total = n_struct + art_row.len();
        let mut position = vec![None; n_total];
        for (r, &v) in basis.iter().enumerate() {
            position[v] = Some(r);
        }
        let mut binv = vec![0.0; m * m];
        let mut xb = vec![0.0; m];
        for r in 0..m {
            binv[r * m + r] = 1.0 / pivot_val[r];
            xb[r] = b[r] / pivot_val[r];
        }
        let phase_two = art_row.is_empty();
        let mut s = Self {
            lp,
            m,
            n_struct,
            row_sign,
            b,
            art_row,
            basis,
            position,
            binv,
            xb,
            y: vec![0.0; m],
            cost: vec![0.0; n_total],
            phase_two,
            tol,
            iterations: 0,
            alpha: vec![0.0; m],
            alpha_nz: Vec::with_capacity(m),
        };
        s.set_phase_costs();
        s
    }

    fn n_total(&self) -> usize {
        self.n_struct + self.art_row.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_struct
    }

    fn set_phase_costs(&mut self) {
        let n = self.n_struct;
        for j in 0..self.n_total() {
            self.cost[j] = if self.phase_two {
                if j < n {
                    self.lp.objective[j]
                } else {
                    0.0
                }
            } else if j < n {
                0.0
            } else {
                -1.0
            };
        }
        self.refresh_duals();
    }

    /// Calls `f(row, value)` for each entry of column `j` after row signs.
    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n_struct {
            for (r, v) in self.lp.matrix.column(j) {
                f(r, v * self.row_sign[r]);
            }
        } else {
            f(self.art_row[j - self.n_struct], 1.0);
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        self.for_column(j, |r, v| d -= self.y[r] * v);
        d
    }

    fn refresh_duals(&mut self) {
        let m = self.m;
        for c in 0..m {
            let col = &self.binv[c * m..(c + 1) * m];
            self.y[c] = self.basis.iter().zip(col).map(|(&v, &bi)| self.cost[v] * bi).sum();
        }
    }

    fn refresh_primal(&mut self) {
        let m = self.m;
        self.xb.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..m {
            let bc = self.b[c];
            if bc == 0.0 {
                continue;
            }
            let col = &self.binv[c * m..(c + 1) * m];
            for (x, bi) in self.xb.iter_mut().zip(col) {
                *x += bi * bc;
            }
        }
    }

    /// `max |B x_B - b|`, computed from the columns directly.
    fn basis_residual(&self) -> f64 {
        let mut r = self.b.iter().map(|v| -v).collect::<Vec<_>>();
        for (pos, &v) in self.basis.iter().enumerate() {
            let x = self.xb[pos];
            if x != 0.0 {
                self.for_column(v, |row, a| r[row] += a * x);
            }
        }
        r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Rebuilds the basis inverse from scratch by Gauss-Jordan elimination.
    fn reinvert(&mut self) -> bool {
        let m = self.m;
        // row-major working copy of B augmented with the identity
        let mut a = vec![0.0; m * m];
        for (pos, &v) in self.basis.iter().enumerate() {
            self.for_column(v, |row, val| a[row * m + pos] = val);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (mut piv_row, mut piv_abs) = (col, 0.0);
            for row in col..m {
                let v = a[row * m + col].abs();
                if v > piv_abs {
                    piv_abs = v;
                    piv_row = row;
                }
            }
            if piv_abs < 1e-14 {
                return false;
            }
            if piv_row != col {
                for c in 0..m {
                    a.swap(piv_row * m + c, col * m + c);
                    inv.swap(piv_row * m + c, col * m + c);
                }
            }
            let p = a[col * m + col];
            for c in 0..m {
                a[col * m + c] /= p;
                inv[col * m + c] /= p;
            }
            for row in 0..m {
                if row == col {
                    continue;
                }
                let f = a[row * m + col];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    a[row * m + c] -= f * a[col * m + c];
                    inv[row * m + c] -= f * inv[col * m + c];
                }
            }
        }
        // inv is B^{-1} row-major: inv[pos * m + row]; store column-major
        for pos in 0..m {
            for row in 0..m {
                self.binv[row * m + pos] = inv[pos * m + row];
            }
        }
        self.refresh_primal();
        self.refresh_duals();
        true
    }

    fn eligible(&self, j: usize) -> bool {
        self.position[j].is_none() && !(self.phase_two && self.is_artificial(j))
    }

    fn price(&self, rule: Rule) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n_total() {
            if !self.eligible(j) {
                continue;
            }
            let d = self.reduced_cost(j);
            if d <= self.tol {
                continue;
            }
            match rule {
                Rule::Bland => return Some((j, d)),
                Rule::Dantzig => {
                    if best.is_none_or(|(_, bd)| d > bd) {
                        best = Some((j, d));
                    }
                }
            }
        }
        best
    }

    fn ftran(&mut self, j: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        let mut entries = Vec::with_capacity(4);
        self.for_column(j, |r, v| entries.push((r, v)));
        for (r, v) in entries {
            let col = &self.binv[r * m..(r + 1) * m];
            for (a, bi) in self.alpha.iter_mut().zip(col) {
                *a += v * bi;
            }
        }
        self.alpha_nz.clear();
        for (i, a) in self.alpha.iter_mut().enumerate() {
            if a.abs() <= 1e-14 {
                *a = 0.0;
            } else {
                self.alpha_nz.push(i);
            }
        }
    }

    fn ratio_test(&self, rule: Rule) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &i in &self.alpha_nz {
            let a = self.alpha[i];
            let basic = self.basis[i];
            let ratio = if a > PIVOT_TOL {
                self.xb[i].max(0.0) / a
            } else if a < -PIVOT_TOL && self.phase_two && self.is_artificial(basic) {
                // artificials are pinned at zero in phase two
                0.0
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    let slack = 1e-12 * (1.0 + br.abs());
                    if ratio < br - slack {
                        true
                    } else if ratio <= br + slack {
                        match rule {
                            Rule::Bland => basic < self.basis[bi],
                            Rule::Dantzig => {
                                let (cur_art, best_art) = (self.is_artificial(basic), self.is_artificial(self.basis[bi]));
                                if cur_art != best_art {
                                    cur_art
                                } else {
                                    a.abs() > self.alpha[bi].abs()
                                }
                            }
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best
    }

    fn pivot(&mut self, q: usize, r: usize, theta: f64, d_q: f64) {
        let m = self.m;
        let piv = self.alpha[r];
        for &i in &self.alpha_nz {
            if i != r {
                self.xb[i] -= theta * self.alpha[i];
                if self.xb[i].abs() < 1e-13 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[r] = theta;

        let dual_step = d_q / piv;
        for c in 0..m {
            let v = self.binv[c * m + r];
            if v == 0.0 {
                continue;
            }
            self.y[c] += dual_step * v;
            let f = v / piv;
            let col = &mut self.binv[c * m..(c + 1) * m];
            for &i in &self.alpha_nz {
                if i != r {
                    col[i] -= self.alpha[i] * f;
                }
            }
            col[r] = f;
        }

        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;
    }

    fn step(&mut self, rule: Rule) -> Step {
        let Some((q, d_q)) = self.price(rule) else {
            return Step::Optimal;
        };
        self.ftran(q);
        let Some((r, theta)) = self.ratio_test(rule) else {
            return Step::Unbounded;
        };
        self.pivot(q, r, theta, d_q);
        self.iterations += 1;
        Step::Pivoted {
            degenerate: theta * d_q <= 1e-14,
        }
    }

    /// Runs the current phase to completion.
    fn run_phase(&mut self, max_iters: usize) -> LpStatus {
        let stall_limit = 50.max(self.m / 4);
        let mut rule = Rule::Dantzig;
        let mut degenerate_run = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if self.iterations >= max_iters {
                return LpStatus::IterationLimit;
            }
            match self.step(rule) {
                Step::Optimal => {
                    // confirm with freshly computed duals before stopping
                    self.refresh_primal();
                    self.refresh_duals();
                    if self.basis_residual() > 1e-9 * (1.0 + self.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()))) {
                        self.reinvert();
                    }
                    if self.price(Rule::Bland).is_none() {
                        return LpStatus::Optimal;
                    }
                }
                Step::Unbounded => return LpStatus::Unbounded,
                Step::Pivoted { degenerate } => {
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run >= stall_limit {
                            rule = Rule::Bland;
                        }
                    } else {
                        degenerate_run = 0;
                        rule = Rule::Dantzig;
                    }
                    since_refresh += 1;
                    if since_refresh >= REFRESH_EVERY {
                        since_refresh = 0;
                        self.refresh_primal();
                        self.refresh_duals();
                    }
                }
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_struct];
        for (pos, &var) in self.basis.iter().enumerate() {
            if var < self.n_struct {
                v[var] = self.xb[pos];
            }
        }
        v
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(v, _)| self.is_artificial(**v))
            .map(|(_, x)| x.abs())
            .sum()
    }
}

/// Solves `lp` to optimality (maximization). Infeasibility, unboundedness
/// and the iteration limit are reported through the status, never as a
/// panic; the returned point is the last basis visited.
pub fn solve_lp(lp: &LinearProgram, tol: f64, max_iters: usize) -> LpSolution {
    let mut s = Simplex::new(lp, tol);
    let feas_tol = 1e-9 * (1.0 + s.b.iter().fold(0.0_f64, |a, v| a.max(v.abs())));

    let mut status = LpStatus::Optimal;
    if !s.phase_two {
        status = s.run_phase(max_iters);
        if status == LpStatus::Optimal && s.artificial_mass() > feas_tol {
            status = LpStatus::Infeasible;
        }
        if status == LpStatus::Optimal {
            s.phase_two = true;
            s.set_phase_costs();
        }
    }
    if s.phase_two && status == LpStatus::Optimal {
        status = s.run_phase(max_iters);
    }
    if status == LpStatus::IterationLimit {
        warn!(
            "simplex hit the iteration limit ({max_iters}) on a {}x{} program; returning the last basis",
            s.m, s.n_struct
        );
    }

    let primal = s.primal();
    let value = lp.objective.iter().zip(&primal).map(|(c, v)| c * v).sum();
    let dual = s.y.iter().zip(&s.row_sign).map(|(y, sg)| y * sg).collect();
    LpSolution {
        status,
        value,
        primal,
        dual,
        iterations: s.iterations,
    }
}
