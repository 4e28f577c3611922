//! Run configuration: a single human-editable TOML file with exact integer
//! parameters, validated against the local-setup invariants before any
//! suite executes.

use serde::Deserialize;
use zeta_core::report::SuiteParams;
use zeta_core::ring::{Case, LocalConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub p: u64,
    pub n: u32,
    #[serde(default = "default_cases")]
    pub cases: Vec<String>,
    #[serde(default = "default_lmax")]
    pub l_max: u32,
    #[serde(default = "default_mmax")]
    pub m_max: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
}

fn default_cases() -> Vec<String> {
    vec!["inert".into(), "ramified".into(), "split".into()]
}
fn default_lmax() -> u32 {
    3
}
fn default_mmax() -> u32 {
    3
}
fn default_seed() -> u64 {
    20260809
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(default)]
    pub exhaustive_support: bool,
    #[serde(default = "default_zeta_mode")]
    pub zeta_mode: String,
}

fn default_zeta_mode() -> String {
    "both".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default = "default_budget")]
    pub max_orbit_nodes: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            max_orbit_nodes: default_budget(),
        }
    }
}

fn default_budget() -> usize {
    50_000_000
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default)]
    pub cache_dir: Option<String>,
    #[serde(default)]
    pub report: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub modes: ModesSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid local setup: {0}")]
    Setup(#[from] zeta_core::ring::RingError),
    #[error("unknown case name {0:?} (expected inert, ramified or split)")]
    BadCase(String),
    #[error("unknown zeta mode {0:?} (expected model, abstract or both)")]
    BadZetaMode(String),
    #[error("level n must be at least 1")]
    BadLevel,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_config() -> RunConfig {
        toml::from_str(
            r#"
[run]
p = 3
n = 2
"#,
        )
        .unwrap()
    }

    pub fn cases(&self) -> Result<Vec<Case>, ConfigError> {
        self.run
            .cases
            .iter()
            .map(|s| match s.as_str() {
                "inert" => Ok(Case::Inert),
                "ramified" => Ok(Case::Ramified),
                "split" => Ok(Case::Split),
                other => Err(ConfigError::BadCase(other.to_string())),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.run.n == 0 {
            return Err(ConfigError::BadLevel);
        }
        if !matches!(self.modes.zeta_mode.as_str(), "model" | "abstract" | "both") {
            return Err(ConfigError::BadZetaMode(self.modes.zeta_mode.clone()));
        }
        // every requested case must form a valid local configuration; in
        // particular p = 2 is rejected here with the odd-prime message
        for case in self.cases()? {
            LocalConfig::default_for(
                self.run.p,
                zeta_core::ring::working_precision(self.run.n, self.run.m_max, self.run.l_max),
                case,
            )?;
        }
        Ok(())
    }

    pub fn suite_params(&self) -> Result<SuiteParams, ConfigError> {
        Ok(SuiteParams {
            p: self.run.p,
            n: self.run.n,
            cases: self.cases()?,
            l_max: self.run.l_max,
            m_max: self.run.m_max,
            exhaustive_support: self.modes.exhaustive_support,
            zeta_model: matches!(self.modes.zeta_mode.as_str(), "model" | "both"),
            seed: self.run.seed,
            budget: self.budget.max_orbit_nodes,
        })
    }

    /// Canonical echo of the configuration for the report header.
    pub fn echo(&self) -> String {
        format!(
            "p={} n={} cases={:?} l_max={} m_max={} seed={} exhaustive_support={} zeta_mode={}",
            self.run.p,
            self.run.n,
            self.run.cases,
            self.run.l_max,
            self.run.m_max,
            self.run.seed,
            self.modes.exhaustive_support,
            self.modes.zeta_mode
        )
    }
}
