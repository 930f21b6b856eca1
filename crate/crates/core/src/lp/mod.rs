//! Linear programs in equality standard form and the occupation-measure
//! program of a frozen mean-field term.
//!
//! The occupation program has one flow-balance row per time node and state
//! node: mass present at `(k, i)` either exits there (`mu[k, i]`) or
//! continues under some action (`m[k, i, j]`), and mass present at `k >= 1`
//! is exactly what the chain carried over from slice `k - 1`. Boundary
//! nodes carry no occupation variables, so mass arriving there exits. Rows
//! and exit variables on boundary nodes that no transition can reach are
//! dropped.

mod simplex;

use std::io::{self, Write};

use ndarray::{Array2, Array3};
use serde::Serialize;

use crate::chain::TransitionModel;
use crate::domain::{ExitMeasure, Grid, MomentVector, OccupationFlow, ProblemSpec};
use crate::error::{Error, Result};

pub use simplex::solve_lp;

/// Default optimality tolerance on reduced costs.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Values in `[-CLIP_TOL, 0)` are treated as round-off when measures are
/// read back from a primal vector.
pub const CLIP_TOL: f64 = 1e-10;

/// Compressed sparse column matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub col_start: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-column `(row, value)` lists; zero values are dropped.
    pub fn from_columns(rows: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut col_start = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_start.push(0);
        for (j, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if r >= rows {
                    return Err(Error::Shape(format!("column {j} has entry in row {r} >= {rows}")));
                }
                if !v.is_finite() {
                    return Err(Error::Config(format!("column {j} has non-finite entry")));
                }
                if v != 0.0 {
                    row_idx.push(r);
                    vals.push(v);
                }
            }
            col_start.push(row_idx.len());
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            col_start,
            row_idx,
            vals,
        })
    }

    /// Builds from a dense row-major matrix.
    pub fn from_dense(a: &[Vec<f64>]) -> Result<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if a.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged dense matrix".into()));
        }
        let columns: Vec<Vec<(usize, f64)>> = (0..cols)
            .map(|j| (0..rows).map(|i| (i, a[i][j])).collect())
            .collect();
        Self::from_columns(rows, &columns)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_start[j]..self.col_start[j + 1];
        self.row_idx[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, x) in v.iter().enumerate() {
            if *x != 0.0 {
                for (r, a) in self.column(j) {
                    out[r] += a * x;
                }
            }
        }
        out
    }
}

/// What a column of an occupation program stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarSlot {
    Occupation { k: usize, i: usize, j: usize },
    Exit { k: usize, i: usize },
    Plain(usize),
}

/// Index maps between measure entries and program columns and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationLayout {
    pub m_index: Array3<Option<usize>>,
    pub mu_index: Array2<Option<usize>>,
    pub row_index: Array2<Option<usize>>,
}

/// `max objective . v  s.t.  matrix v = rhs, v >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub vars: Vec<VarSlot>,
    /// `(k, i)` of each balance row, when the program is an occupation LP.
    pub row_labels: Vec<Option<(usize, usize)>>,
    pub layout: Option<OccupationLayout>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, matrix: SparseMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.cols != objective.len() || matrix.rows != rhs.len() {
            return Err(Error::Shape(format!(
                "{}x{} matrix with {} costs and {} right-hand sides",
                matrix.rows,
                matrix.cols,
                objective.len(),
                rhs.len()
            )));
        }
        if objective.iter().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::Config("program data must be finite".into()));
        }
        Ok(Self {
            vars: (0..objective.len()).map(VarSlot::Plain).collect(),
            row_labels: vec![None; rhs.len()],
            objective,
            matrix,
            rhs,
            layout: None,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    /// `max_r |(A v - b)_r|`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        self.matrix
            .mul_vec(v)
            .iter()
            .zip(&self.rhs)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn value_of(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Maps a measure pair to a column vector. The second component is the
    /// mass sitting on entries the program has no column for; a pair with
    /// such mass cannot satisfy the constraints.
    pub fn pack(&self, mu: &ExitMeasure, m: &OccupationFlow) -> Result<(Vec<f64>, f64)> {
        let layout = self
            .layout
            .as_ref()
            .ok_or_else(|| Error::State("program has no occupation layout".into()))?;
        if layout.m_index.dim() != m.values.dim() || layout.mu_index.dim() != mu.values.dim() {
            return Err(Error::Shape("measure shapes do not match the program".into()));
        }
        let mut v = vec![0.0; self.n_vars()];
        let mut stray = 0.0;
        for (idx, val) in layout.m_index.iter().zip(m.values.iter()) {
            match idx {
                Some(c) => v[*c] = *val,
                None => stray += val.abs(),
            }
        }
        for (idx, val) in layout.mu_index.iter().zip(mu.values.iter()) {
            match idx {
                Some(c) => v[*c] = *val,
                None => stray += val.abs(),
            }
        }
        Ok((v, stray))
    }

    /// Constraint residual of a measure pair, counting unrepresented mass.
    pub fn pair_residual(&self, mu: &ExitMeasure, m: &OccupationFlow) -> Result<f64> {
        let (v, stray) = self.pack(mu, m)?;
        let neg = v.iter().fold(0.0_f64, |acc, x| acc.max(-x));
        Ok(self.residual(&v).max(stray).max(neg))
    }

    /// Writes the program in free MPS format (whitespace separated fields,
    /// so names may exceed eight characters).
    pub fn write_mps(&self, name: &str, out: &mut impl Write) -> io::Result<()> {
        let col_names: Vec<String> = self
            .vars
            .iter()
            .map(|s| match s {
                VarSlot::Occupation { k, i, j } => format!("m_{k}_{i}_{j}"),
                VarSlot::Exit { k, i } => format!("mu_{k}_{i}"),
                VarSlot::Plain(c) => format!("x_{c}"),
            })
            .collect();
        let row_names: Vec<String> = self
            .row_labels
            .iter()
            .enumerate()
            .map(|(r, l)| match l {
                Some((k, i)) => format!("bal_{k}_{i}"),
                None => format!("r_{r}"),
            })
            .collect();
        writeln!(out, "NAME          {name}")?;
        writeln!(out, "OBJSENSE")?;
        writeln!(out, "    MAX")?;
        writeln!(out, "ROWS")?;
        writeln!(out, " N  obj")?;
        for r in &row_names {
            writeln!(out, " E  {r}")?;
        }
        writeln!(out, "COLUMNS")?;
        for (j, cname) in col_names.iter().enumerate() {
            if self.objective[j] != 0.0 {
                writeln!(out, "    {cname:<16} {:<16} {:.17e}", "obj", self.objective[j])?;
            }
            for (r, v) in self.matrix.column(j) {
                writeln!(out, "    {cname:<16} {:<16} {v:.17e}", row_names[r])?;
            }
        }
        writeln!(out, "RHS")?;
        for (r, v) in self.rhs.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "    {:<16} {:<16} {v:.17e}", "rhs", row_names[r])?;
            }
        }
        writeln!(out, "ENDATA")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    /// One multiplier per row, in the sign convention of the original rows.
    pub dual: Vec<f64>,
    pub iterations: usize,
}

/// Iteration cap used when callers do not supply one.
pub fn default_max_iters(lp: &LinearProgram) -> usize {
    10 * (lp.n_rows() + lp.n_vars())
}

/// Solves with the default tolerance and iteration cap.
pub fn solve_default(lp: &LinearProgram) -> LpSolution {
    solve_lp(lp, DEFAULT_TOL, default_max_iters(lp))
}

/// The occupation program of the frozen problem: rewards and dynamics
/// evaluated at `moments`, transitions from `trans`.
pub fn build_occupation_lp(
    spec: &ProblemSpec,
    grid: &Grid,
    trans: &TransitionModel,
    moments: &MomentVector,
) -> Result<LinearProgram> {
    let (s, n, na) = (grid.slices(), grid.x_count(), grid.a_count());
    if trans.p_stay.dim() != (s, n, na) {
        return Err(Error::Shape(format!(
            "transition model has shape {:?}, grid expects {:?}",
            trans.p_stay.dim(),
            (s, n, na)
        )));
    }
    if moments.slices() != s || moments.dim() != spec.dim {
        return Err(Error::Shape("moment vector does not match grid and problem".into()));
    }
    if spec.m0.len() != n {
        return Err(Error::Shape("m0 length differs from the state grid".into()));
    }

    // rows
    let mut row_index = Array2::from_elem((grid.t_count, n), None);
    let mut row_labels = Vec::new();
    for k in 0..grid.t_count {
        for i in 0..n {
            let keep = if grid.is_boundary(i) {
                k >= 1 && trans.boundary_reachable(k - 1, i)
            } else {
                true
            };
            if keep {
                row_index[[k, i]] = Some(row_labels.len());
                row_labels.push(Some((k, i)));
            }
        }
    }
    let n_rows = row_labels.len();
    let mut rhs = vec![0.0; n_rows];
    for i in 0..n {
        match row_index[[0, i]] {
            Some(r) => rhs[r] = spec.m0[i],
            None if spec.m0[i] != 0.0 => {
                return Err(Error::Config("m0 must put no weight on boundary nodes".into()));
            }
            None => {}
        }
    }

    // columns
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut objective = Vec::new();
    let mut vars = Vec::new();
    let mut m_index = Array3::from_elem((s, n, na), None);
    let mut mu_index = Array2::from_elem((grid.t_count, n), None);
    for k in 0..grid.t_count {
        for i in 0..n {
            let Some(row) = row_index[[k, i]] else { continue };
            if k < s && !grid.is_boundary(i) {
                for j in 0..na {
                    let mut col = vec![(row, 1.0)];
                    for (target, p) in trans.targets(k, i, j) {
                        let Some(next) = row_index[[k + 1, target]] else {
                            return Err(Error::State(format!(
                                "transition from ({k}, {i}) reaches pruned node {target}"
                            )));
                        };
                        col.push((next, -p));
                    }
                    let f = spec.running_at(grid, moments, k, i, j);
                    if !f.is_finite() {
                        return Err(Error::Config(format!("running reward not finite at ({k}, {i}, {j})")));
                    }
                    m_index[[k, i, j]] = Some(columns.len());
                    columns.push(col);
                    objective.push(f * grid.dt);
                    vars.push(VarSlot::Occupation { k, i, j });
                }
            }
            let g = spec.exit_at(grid, moments, k, i);
            if !g.is_finite() {
                return Err(Error::Config(format!("exit reward not finite at ({k}, {i})")));
            }
            mu_index[[k, i]] = Some(columns.len());
            columns.push(vec![(row, 1.0)]);
            objective.push(g);
            vars.push(VarSlot::Exit { k, i });
        }
    }
    let matrix = SparseMatrix::from_columns(n_rows, &columns)?;
    Ok(LinearProgram {
        objective,
        matrix,
        rhs,
        vars,
        row_labels,
        layout: Some(OccupationLayout {
            m_index,
            mu_index,
            row_index,
        }),
    })
}

/// Reads the measure pair back from an optimal primal vector.
pub fn extract_measures(lp: &LinearProgram, sol: &LpSolution, grid: &Grid) -> Result<(ExitMeasure, OccupationFlow)> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    if sol.primal.len() != lp.n_vars() {
        return Err(Error::Shape("primal vector length differs from the program".into()));
    }
    let mut mu = ExitMeasure::zeros(grid);
    let mut m = OccupationFlow::zeros(grid);
    for (slot, &v) in lp.vars.iter().zip(&sol.primal) {
        if v < -CLIP_TOL {
            return Err(Error::State(format!("primal entry {v} is negative beyond round-off")));
        }
        let v = v.max(0.0);
        match *slot {
            VarSlot::Occupation { k, i, j } => m.values[[k, i, j]] = v,
            VarSlot::Exit { k, i } => mu.values[[k, i]] = v,
            VarSlot::Plain(_) => return Err(Error::State("program is not an occupation program".into())),
        }
    }
    Ok((mu, m))
}
