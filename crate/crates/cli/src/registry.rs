//! Built-in parameterized problem families.

use occmfg::domain::{BoundaryMode, Grid, ProblemSpec};
use occmfg::Result;
use serde::Serialize;

/// Structural facts a problem asserts about itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProblemFlags {
    /// Volatility ignores the action, drift is affine and the running
    /// reward concave in it, so the attainable coefficient set is convex.
    pub convex_control: bool,
    /// Rewards take the multiplicative form `f1 f2(<f1, m>) + f3`,
    /// `g1 g2(<g1, mu>) + g3` with `f2`, `g2` non-increasing.
    pub anti_monotone: bool,
    /// Some coefficient depends on the population.
    pub mean_field: bool,
}

pub struct ProblemEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub flags: ProblemFlags,
    pub horizon: f64,
    pub x_range: (f64, f64),
    pub a_range: (f64, f64),
    build: fn(&Grid) -> Result<ProblemSpec>,
}

impl ProblemEntry {
    pub fn grid(&self, t_count: usize, x_count: usize, a_count: usize) -> Result<Grid> {
        Grid::uniform(
            self.horizon,
            t_count,
            self.x_range.0,
            self.x_range.1,
            x_count,
            Grid::uniform_actions(self.a_range.0, self.a_range.1, a_count),
        )
    }

    pub fn build(&self, grid: &Grid) -> Result<ProblemSpec> {
        let spec = (self.build)(grid)?;
        spec.validate(grid)?;
        Ok(spec)
    }
}

/// Coupling strength of the congestion problem.
pub const CONGESTION_KAPPA: f64 = 0.5;
/// Coupling strength of the crowd-exit problem.
pub const CROWD_EXIT_KAPPA: f64 = 0.45;

fn bump(x: f64) -> f64 {
    (-((x - 0.7) / 0.15).powi(2)).exp()
}

fn hump(grid: &Grid) -> Result<Vec<f64>> {
    ProblemSpec::m0_from_density(grid, |x| x * (1.0 - x))
}

fn stop_now(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_drift(|_, _, _, a| a)
        .with_volatility(|_, _, _, _| 0.1)
        .with_exit_reward(|_, _, _| 1.0))
}

fn never_stop(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_boundary(BoundaryMode::Unattainable)
        .with_running_reward(|_, _, _, _| 1.0))
}

fn martingale(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_volatility(|_, _, _, _| 0.1)
        .with_exit_reward(|_, x, _| x))
}

fn american_put_like(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_volatility(|_, _, _, _| 0.15)
        .with_running_reward(|_, _, _, _| -0.01)
        .with_exit_reward(|_, x, _| (0.5 - x).max(0.0)))
}

fn targeted_exit(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, ProblemSpec::m0_from_density(grid, |x| (-((x - 0.3) / 0.1).powi(2)).exp())?)
        .with_drift(|_, _, _, a| a)
        .with_volatility(|_, _, _, _| 0.1)
        .with_running_reward(|_, x, _, a| 0.2 * x - 0.5 * a * a)
        .with_exit_reward(|t, x, _| 0.6 * x - 0.1 * t))
}

fn congestion_mfg(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_drift(|_, _, _, a| a)
        .with_volatility(|_, _, _, _| 0.1)
        .with_running_kernel(|_, x| vec![bump(x)])
        .with_running_reward(|_, x, z, a| bump(x) * (1.0 - CONGESTION_KAPPA * z[0]) - 0.5 * a * a)
        .with_exit_reward(|_, x, _| 0.2 * x))
}

fn crowd_exit_mfg(grid: &Grid) -> Result<ProblemSpec> {
    Ok(ProblemSpec::new(1.0, 0.0, 1.0, hump(grid)?)
        .with_drift(|_, _, _, a| a)
        .with_volatility(|_, _, _, _| 0.1)
        .with_running_reward(|_, x, _, a| 0.8 * x - 0.5 * a * a)
        .with_exit_kernel(|t, _| vec![1.0 - t])
        .with_exit_reward(|t, x, w| (1.0 - t) * (1.0 - CROWD_EXIT_KAPPA * w[0]) + 0.2 * x))
}

/// Every built-in problem, in a fixed order.
pub fn registry_problems() -> Vec<ProblemEntry> {
    let unit = (0.0, 1.0);
    let convex = ProblemFlags {
        convex_control: true,
        ..Default::default()
    };
    vec![
        ProblemEntry {
            name: "stop-now",
            summary: "exit reward 1, no running reward: every rule is worth 1",
            flags: convex,
            horizon: 1.0,
            x_range: unit,
            a_range: (-0.4, 0.4),
            build: stop_now,
        },
        ProblemEntry {
            name: "never-stop",
            summary: "running reward 1, no exit reward, frozen state: worth the horizon",
            flags: convex,
            horizon: 1.0,
            x_range: unit,
            a_range: (0.0, 0.0),
            build: never_stop,
        },
        ProblemEntry {
            name: "martingale",
            summary: "driftless diffusion paid its position on exit: worth the initial mean",
            flags: convex,
            horizon: 1.0,
            x_range: unit,
            a_range: (0.0, 0.0),
            build: martingale,
        },
        ProblemEntry {
            name: "american-put-like",
            summary: "driftless diffusion with put payoff (0.5 - x)+ and a small holding cost",
            flags: convex,
            horizon: 1.0,
            x_range: unit,
            a_range: (0.0, 0.0),
            build: american_put_like,
        },
        ProblemEntry {
            name: "targeted-exit",
            summary: "quadratic-cost drift control toward a linear exit reward",
            flags: convex,
            horizon: 1.0,
            x_range: unit,
            a_range: (-0.4, 0.4),
            build: targeted_exit,
        },
        ProblemEntry {
            name: "congestion-mfg",
            summary: "reward near x = 0.7 shrinks with the crowd occupying it",
            flags: ProblemFlags {
                convex_control: true,
                anti_monotone: true,
                mean_field: true,
            },
            horizon: 1.0,
            x_range: unit,
            a_range: (-0.4, 0.4),
            build: congestion_mfg,
        },
        ProblemEntry {
            name: "crowd-exit-mfg",
            summary: "early withdrawal pays less the more of the crowd withdraws early",
            flags: ProblemFlags {
                convex_control: true,
                anti_monotone: true,
                mean_field: true,
            },
            horizon: 1.0,
            x_range: unit,
            a_range: (-0.4, 0.4),
            build: crowd_exit_mfg,
        },
    ]
}

pub fn lookup(name: &str) -> Option<ProblemEntry> {
    registry_problems().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use occmfg::chain::cfl_check;
    use occmfg::domain::MomentVector;

    #[test]
    fn names_are_unique_and_plentiful() {
        let names: Vec<_> = registry_problems().iter().map(|p| p.name).collect();
        assert!(names.len() >= 6);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(lookup("congestion-mfg").is_some());
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn every_problem_builds_and_passes_cfl_at_default_grid() {
        for p in registry_problems() {
            let grid = p.grid(30, 30, 3).unwrap();
            let spec = p.build(&grid).unwrap();
            let z = MomentVector::zeros(grid.slices(), spec.dim);
            let report = cfl_check(&spec, &grid, &z);
            assert!(report.passed, "{} fails cfl: {report:?}", p.name);
            assert_eq!(p.flags.mean_field, spec.running_kernel.is_some() || spec.exit_kernel.is_some() || !spec.dynamics_measure_independent());
        }
    }

    #[test]
    fn anti_monotone_problems_have_multiplicative_form() {
        // f(z) - f(0) = -kappa f1 z and the kernel is f1 itself
        let p = lookup("congestion-mfg").unwrap();
        let grid = p.grid(5, 7, 3).unwrap();
        let spec = p.build(&grid).unwrap();
        let h = spec.running_kernel.clone().unwrap();
        for &x in &grid.x_nodes {
            for &a in &grid.a_nodes {
                let f1 = h(0.0, x)[0];
                let lo = (spec.running_reward)(0.0, x, &[0.0], a);
                let hi = (spec.running_reward)(0.0, x, &[0.8], a);
                assert!((hi - lo + CONGESTION_KAPPA * 0.8 * f1).abs() < 1e-12);
                assert!(hi <= lo);
            }
        }
        let p = lookup("crowd-exit-mfg").unwrap();
        let spec = p.build(&grid).unwrap();
        let h = spec.exit_kernel.clone().unwrap();
        for k in 0..grid.t_count {
            for &x in &grid.x_nodes {
                let t = grid.time(k);
                let g1 = h(t, x)[0];
                let d = (spec.exit_reward)(t, x, &[0.6]) - (spec.exit_reward)(t, x, &[0.0]);
                assert!((d + CROWD_EXIT_KAPPA * 0.6 * g1).abs() < 1e-12);
                assert!(g1 >= 0.0);
            }
        }
    }
}
