//! Run configuration: a TOML document whose sections mirror the command-line
//! flags. Every key is optional.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_count: usize,
    pub x_count: usize,
    pub a_count: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_count: 30,
            x_count: 30,
            a_count: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfgConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for MfgConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-6,
            max_iter: 200,
            n_starts: 3,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Population sizes to simulate.
    pub n_agents: Vec<usize>,
    /// Independent seeds per population size.
    pub replicates: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_agents: vec![100, 1000, 10000],
            replicates: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            format: Format::Csv,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Registry name or path to a tabulated problem file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    pub grid: GridConfig,
    pub mfg: MfgConfig,
    pub simulate: SimulateConfig,
    pub output: OutputConfig,
}

fn range(key: &str, ok: bool, constraint: &str, got: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config {
            key: key.into(),
            message: format!("must be {constraint}, got {got}"),
        })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        range("grid.t_count", g.t_count >= 2, ">= 2", g.t_count)?;
        range("grid.x_count", g.x_count >= 3, ">= 3", g.x_count)?;
        range("grid.a_count", g.a_count >= 1, ">= 1", g.a_count)?;
        let m = &self.mfg;
        range("mfg.damping", m.damping > 0.0 && m.damping <= 1.0, "in (0, 1]", m.damping)?;
        range("mfg.tol", m.tol > 0.0 && m.tol.is_finite(), "> 0", m.tol)?;
        range("mfg.max_iter", m.max_iter >= 1, ">= 1", m.max_iter)?;
        range("mfg.n_starts", m.n_starts >= 1, ">= 1", m.n_starts)?;
        // TOML integers are signed
        range("mfg.seed", m.seed <= i64::MAX as u64, "<= 2^63 - 1", m.seed)?;
        let s = &self.simulate;
        range(
            "simulate.n_agents",
            !s.n_agents.is_empty() && s.n_agents.iter().all(|n| *n >= 1),
            "a nonempty list of positive sizes",
            format!("{:?}", s.n_agents),
        )?;
        range("simulate.replicates", s.replicates >= 1, ">= 1", s.replicates)?;
        range("output.dir", !self.output.dir.is_empty(), "nonempty", "\"\"")?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}

/// Parses and validates a configuration document; missing keys take their
/// defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
        key: "config".into(),
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.mfg.damping, 0.5);
        assert_eq!(cfg.mfg.tol, 1e-6);
        assert_eq!(cfg.mfg.n_starts, 3);
        assert_eq!(cfg.mfg.seed, 42);
    }

    #[test]
    fn range_errors_name_the_key() {
        let err = parse_config("[mfg]\ndamping = 0.0\n").unwrap_err().to_string();
        assert!(err.contains("mfg.damping") && err.contains("(0, 1]"), "{err}");
        let err = parse_config("[grid]\nx_count = 2\n").unwrap_err().to_string();
        assert!(err.contains("grid.x_count"), "{err}");
        let err = parse_config("[mfg]\ntol = -1.0\n").unwrap_err().to_string();
        assert!(err.contains("mfg.tol"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = parse_config("[mfg]\ndampng = 0.3\n").unwrap_err().to_string();
        assert!(err.contains("dampng"), "{err}");
        let err = parse_config("colour = 1\n").unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = parse_config("problem = \"martingale\"\n[grid]\nt_count = 11\n[output]\nformat = \"json\"\n").unwrap();
        assert_eq!(cfg.problem.as_deref(), Some("martingale"));
        assert_eq!(cfg.grid.t_count, 11);
        assert_eq!(cfg.grid.x_count, 30);
        assert_eq!(cfg.output.format, Format::Json);
        assert_eq!(cfg.mfg, MfgConfig::default());
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            problem in proptest::option::of("[a-z-]{1,12}"),
            t in 2usize..200, x in 3usize..200, a in 1usize..9,
            damping in 1e-6f64..=1.0, tol in 1e-12f64..1.0,
            max_iter in 1usize..10_000, n_starts in 1usize..16, seed in 0u64..=i64::MAX as u64,
            n_agents in proptest::collection::vec(1usize..100_000, 1..5), replicates in 1usize..50,
            dir in "[a-z/._]{1,20}", json in any::<bool>(),
        ) {
            let cfg = RunConfig {
                problem,
                grid: GridConfig { t_count: t, x_count: x, a_count: a },
                mfg: MfgConfig { damping, tol, max_iter, n_starts, seed },
                simulate: SimulateConfig { n_agents, replicates },
                output: OutputConfig { dir, format: if json { Format::Json } else { Format::Csv } },
            };
            prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
        }
    }
}
