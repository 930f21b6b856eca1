use crate::lp::LpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "CFL condition violated at slice {k}, node {i}, action {j}: \
         dt*(sigma^2/dx^2 + |b|/dx) = {lhs} > 1"
    )]
    Cfl { k: usize, i: usize, j: usize, lhs: f64 },

    #[error(
        "boundary marked unattainable but slice {k}, node {i}, action {j} \
         moves mass onto a boundary node"
    )]
    BoundaryReachable { k: usize, i: usize, j: usize },

    #[error("invalid solver state: {0}")]
    State(String),

    #[error("candidate is not feasible for its own constraint set (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("linear program finished with status {0:?}")]
    Solver(LpStatus),

    #[error("none of {n_starts} fixed-point runs converged (best exploitability {best_exploitability:e})")]
    NoConvergedRun {
        n_starts: usize,
        best_exploitability: f64,
    },
}
