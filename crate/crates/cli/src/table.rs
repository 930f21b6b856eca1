//! Tabulated problem files: coefficients sampled on the grid, with affine
//! dependence on the moments.
//!
//! Layout (whitespace-separated numbers; blank lines and lines starting with
//! `#` are ignored; `S = t_count - 1` slices):
//!
//! ```text
//! d t_count x_count a_count
//! horizon x_lo x_hi boundary            boundary: 0 attainable, 1 unattainable
//! a_0 .. a_{A-1}                        action nodes
//! m0_0 .. m0_{X-1}                      initial weights on state nodes
//! drift:       (d+1) blocks of S*X rows of A numbers
//! volatility:  (d+1) blocks of S*X rows of A numbers
//! running:     (d+1) blocks of S*X rows of A numbers
//! exit:        (d+1) blocks of t_count rows of X numbers
//! kernels:     drift, volatility, running, exit; each t_count*X rows of d numbers
//! ```
//!
//! Block 0 of a coefficient is its value at zero moments; block `l` is the
//! coefficient of moment component `l`, so for instance
//! `b(t_k, x_i, z, a_j) = B0[k*X + i][j] + sum_l z_l Bl[k*X + i][j]`.
//! Kernel row `k*X + i` holds `h(t_k, x_i)`. An all-zero kernel table means
//! the coefficient ignores the population.

use std::sync::Arc;

use ndarray::{Array3, Array4};
use occmfg::domain::{BoundaryMode, Grid, MomentVector, ProblemSpec};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedProblem {
    pub dim: usize,
    pub t_count: usize,
    pub horizon: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_count: usize,
    pub boundary: BoundaryMode,
    pub actions: Vec<f64>,
    pub m0: Vec<f64>,
    /// `(d+1, slices, x, a)` each.
    pub drift: Array4<f64>,
    pub volatility: Array4<f64>,
    pub running: Array4<f64>,
    /// `(d+1, t_count, x)`.
    pub exit: Array3<f64>,
    /// `(4, t_count, x, d)`: drift, volatility, running, exit kernels.
    pub kernels: Array4<f64>,
}

fn nearest(v: f64, lo: f64, step: f64, count: usize) -> usize {
    (((v - lo) / step).round().max(0.0) as usize).min(count - 1)
}

fn nearest_action(actions: &[f64], a: f64) -> usize {
    let mut best = 0;
    for (j, &x) in actions.iter().enumerate() {
        if (x - a).abs() < (actions[best] - a).abs() {
            best = j;
        }
    }
    best
}

impl TabulatedProblem {
    /// Samples a problem whose coefficients ignore the population.
    pub fn sample(spec: &ProblemSpec, grid: &Grid) -> Result<Self, CliError> {
        if spec.drift_kernel.is_some()
            || spec.volatility_kernel.is_some()
            || spec.running_kernel.is_some()
            || spec.exit_kernel.is_some()
        {
            return Err(CliError::Usage(
                "only problems without population dependence can be sampled".into(),
            ));
        }
        spec.validate(grid)?;
        let (t, s, n, na, d) = (grid.t_count, grid.slices(), grid.x_count(), grid.a_count(), spec.dim);
        let z = MomentVector::zeros(s, d);
        let mut drift = Array4::zeros((d + 1, s, n, na));
        let mut volatility = Array4::zeros((d + 1, s, n, na));
        let mut running = Array4::zeros((d + 1, s, n, na));
        for k in 0..s {
            for i in 0..n {
                for j in 0..na {
                    let (tk, x, a) = (grid.time(k), grid.x_nodes[i], grid.a_nodes[j]);
                    drift[[0, k, i, j]] = (spec.drift)(tk, x, z.drift_row(k), a);
                    volatility[[0, k, i, j]] = (spec.volatility)(tk, x, z.volatility_row(k), a);
                    running[[0, k, i, j]] = spec.running_at(grid, &z, k, i, j);
                }
            }
        }
        let mut exit = Array3::zeros((d + 1, t, n));
        for k in 0..t {
            for i in 0..n {
                exit[[0, k, i]] = spec.exit_at(grid, &z, k, i);
            }
        }
        Ok(Self {
            dim: d,
            t_count: t,
            horizon: grid.horizon,
            x_lo: grid.x_lo(),
            x_hi: grid.x_hi(),
            x_count: n,
            boundary: spec.boundary,
            actions: grid.a_nodes.clone(),
            m0: spec.m0.clone(),
            drift,
            volatility,
            running,
            exit,
            kernels: Array4::zeros((4, t, n, d)),
        })
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::uniform(self.horizon, self.t_count, self.x_lo, self.x_hi, self.x_count, self.actions.clone())?)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        let grid = self.grid()?;
        let (dt, dx, x_lo, n, s, t) = (grid.dt, grid.dx, self.x_lo, self.x_count, grid.slices(), self.t_count);
        let actions = Arc::new(self.actions.clone());

        let coefficient = |table: &Array4<f64>| {
            let table = Arc::new(table.clone());
            let actions = actions.clone();
            move |tk: f64, x: f64, z: &[f64], a: f64| {
                let (k, i, j) = (nearest(tk, 0.0, dt, s), nearest(x, x_lo, dx, n), nearest_action(&actions, a));
                let mut v = table[[0, k, i, j]];
                for (l, zl) in z.iter().enumerate() {
                    v += zl * table[[l + 1, k, i, j]];
                }
                v
            }
        };
        let exit = Arc::new(self.exit.clone());
        let exit_reward = move |tk: f64, x: f64, w: &[f64]| {
            let (k, i) = (nearest(tk, 0.0, dt, t), nearest(x, x_lo, dx, n));
            let mut v = exit[[0, k, i]];
            for (l, wl) in w.iter().enumerate() {
                v += wl * exit[[l + 1, k, i]];
            }
            v
        };
        let kernel = |which: usize| {
            let table = self.kernels.index_axis(ndarray::Axis(0), which).to_owned();
            if table.iter().all(|v| *v == 0.0) {
                return None;
            }
            Some(move |tk: f64, x: f64| {
                let (k, i) = (nearest(tk, 0.0, dt, t), nearest(x, x_lo, dx, n));
                table.slice(ndarray::s![k, i, ..]).to_vec()
            })
        };

        let mut spec = ProblemSpec::new(self.horizon, self.x_lo, self.x_hi, self.m0.clone())
            .with_dim(self.dim)
            .with_boundary(self.boundary)
            .with_drift(coefficient(&self.drift))
            .with_volatility(coefficient(&self.volatility))
            .with_running_reward(coefficient(&self.running))
            .with_exit_reward(exit_reward);
        if let Some(h) = kernel(0) {
            spec = spec.with_drift_kernel(h);
        }
        if let Some(h) = kernel(1) {
            spec = spec.with_volatility_kernel(h);
        }
        if let Some(h) = kernel(2) {
            spec = spec.with_running_kernel(h);
        }
        if let Some(h) = kernel(3) {
            spec = spec.with_exit_kernel(h);
        }
        spec.validate(&grid)?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, vals: &mut dyn Iterator<Item = f64>| {
            let line: Vec<String> = vals.map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        };
        let (d, t, n, na, s) = (self.dim, self.t_count, self.x_count, self.actions.len(), self.t_count - 1);
        out.push_str("# d t_count x_count a_count\n");
        out.push_str(&format!("{d} {t} {n} {na}\n"));
        out.push_str("# horizon x_lo x_hi boundary\n");
        let b = match self.boundary {
            BoundaryMode::Attainable => 0,
            BoundaryMode::Unattainable => 1,
        };
        out.push_str(&format!("{:e} {:e} {:e} {b}\n", self.horizon, self.x_lo, self.x_hi));
        out.push_str("# actions\n");
        row(&mut out, &mut self.actions.iter().copied());
        out.push_str("# m0\n");
        row(&mut out, &mut self.m0.iter().copied());
        for (name, table) in [("drift", &self.drift), ("volatility", &self.volatility), ("running", &self.running)] {
            for l in 0..=d {
                out.push_str(&format!("# {name} block {l}\n"));
                for k in 0..s {
                    for i in 0..n {
                        row(&mut out, &mut (0..na).map(|j| table[[l, k, i, j]]));
                    }
                }
            }
        }
        for l in 0..=d {
            out.push_str(&format!("# exit block {l}\n"));
            for k in 0..t {
                row(&mut out, &mut (0..n).map(|i| self.exit[[l, k, i]]));
            }
        }
        for (w, name) in ["drift", "volatility", "running", "exit"].iter().enumerate() {
            out.push_str(&format!("# {name} kernel\n"));
            for k in 0..t {
                for i in 0..n {
                    row(&mut out, &mut (0..d).map(|l| self.kernels[[w, k, i, l]]));
                }
            }
        }
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| CliError::Format {
                path: path.into(),
                message: format!("line {}: {e}", no + 1),
            })?;
            rows.push((no + 1, vals));
        }
        let mut cursor = Rows { rows: rows.into_iter(), path };
        let header = cursor.next(4, "header")?;
        let as_count = |v: f64, what: &str| -> Result<usize, CliError> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(cursor_err(path, format!("{what} must be a nonnegative integer, got {v}")))
            }
        };
        let d = as_count(header[0], "d")?;
        let t = as_count(header[1], "t_count")?;
        let n = as_count(header[2], "x_count")?;
        let na = as_count(header[3], "a_count")?;
        if d == 0 || t < 2 || n < 3 || na == 0 {
            return Err(cursor_err(path, "header needs d >= 1, t_count >= 2, x_count >= 3, a_count >= 1".into()));
        }
        let s = t - 1;
        let dom = cursor.next(4, "domain")?;
        let boundary = match dom[3] {
            0.0 => BoundaryMode::Attainable,
            1.0 => BoundaryMode::Unattainable,
            v => return Err(cursor_err(path, format!("boundary flag must be 0 or 1, got {v}"))),
        };
        let actions = cursor.next(na, "actions")?;
        let m0 = cursor.next(n, "m0")?;
        let mut coefficient = |name: &str| -> Result<Array4<f64>, CliError> {
            let mut table = Array4::zeros((d + 1, s, n, na));
            for l in 0..=d {
                for k in 0..s {
                    for i in 0..n {
                        for (j, v) in cursor.next(na, name)?.into_iter().enumerate() {
                            table[[l, k, i, j]] = v;
                        }
                    }
                }
            }
            Ok(table)
        };
        let drift = coefficient("drift")?;
        let volatility = coefficient("volatility")?;
        let running = coefficient("running")?;
        let mut exit = Array3::zeros((d + 1, t, n));
        for l in 0..=d {
            for k in 0..t {
                for (i, v) in cursor.next(n, "exit")?.into_iter().enumerate() {
                    exit[[l, k, i]] = v;
                }
            }
        }
        let mut kernels = Array4::zeros((4, t, n, d));
        for w in 0..4 {
            for k in 0..t {
                for i in 0..n {
                    for (l, v) in cursor.next(d, "kernel")?.into_iter().enumerate() {
                        kernels[[w, k, i, l]] = v;
                    }
                }
            }
        }
        if let Some((line, _)) = cursor.rows.next() {
            return Err(cursor_err(path, format!("unexpected data at line {line}")));
        }
        Ok(Self {
            dim: d,
            t_count: t,
            horizon: dom[0],
            x_lo: dom[1],
            x_hi: dom[2],
            x_count: n,
            boundary,
            actions,
            m0,
            drift,
            volatility,
            running,
            exit,
            kernels,
        })
    }
}

fn cursor_err(path: &str, message: String) -> CliError {
    CliError::Format {
        path: path.into(),
        message,
    }
}

struct Rows<'a> {
    rows: std::vec::IntoIter<(usize, Vec<f64>)>,
    path: &'a str,
}

impl Rows<'_> {
    fn next(&mut self, len: usize, what: &str) -> Result<Vec<f64>, CliError> {
        match self.rows.next() {
            None => Err(cursor_err(self.path, format!("file ends before the {what} rows are complete"))),
            Some((line, vals)) if vals.len() != len => Err(cursor_err(
                self.path,
                format!("line {line}: {what} row has {} numbers, expected {len}", vals.len()),
            )),
            Some((_, vals)) => Ok(vals),
        }
    }
}
