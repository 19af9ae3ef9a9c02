//! Run configuration file: TOML with one table per component. Every key is
//! optional; unknown keys are rejected.

use std::path::Path;

use affloop_core::catalog::{load_catalog, seed_catalog, Catalog};
use affloop_core::engine::{ControllerConfig, CorrelationConfig, EstimatorConfig};
use affloop_core::features::Baseline;
use affloop_core::sim::{PhaseConfig, PlayerModel, Rates};
use affloop_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::{read, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub player: PlayerModel,
    pub rates: Rates,
    pub phases: PhaseConfig,
    pub estimator: EstimatorConfig,
    pub controller: ControllerConfig,
    pub correlation: CorrelationConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = String::from_utf8(read(path)?)
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> affloop_core::Result<()> {
        self.player.validate()?;
        self.rates.validate()?;
        self.phases.validate()?;
        self.estimator.validate()?;
        self.controller.validate()?;
        self.correlation.validate()?;
        if self.estimator.period_s != self.controller.period_s {
            return Err(Error::Config(format!(
                "estimator.period_s {} and controller.period_s {} must match",
                self.estimator.period_s, self.controller.period_s
            )));
        }
        Ok(())
    }

    /// Applies `--seed` to every seeded component.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.player.seed = s;
            self.phases.seed = s;
            self.correlation.seed = s;
        }
        self
    }
}

/// The default configuration as a config file, for `--help`.
pub fn defaults_toml() -> String {
    toml::to_string(&RunConfig::default()).expect("default config serializes")
}

pub fn load_catalog_arg(path: Option<&Path>) -> CliResult<Catalog> {
    match path {
        None => Ok(seed_catalog()),
        Some(p) => Ok(load_catalog(&read(p)?)?),
    }
}

pub fn write_baseline(b: &Baseline) -> String {
    toml::to_string(b).expect("baseline serializes")
}

pub fn read_baseline(path: &Path) -> CliResult<Baseline> {
    let text = String::from_utf8(read(path)?).map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
    let b: Baseline =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    b.validate()?;
    Ok(b)
}
