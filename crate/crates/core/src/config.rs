//! Run configuration: one TOML document with a section per subsystem.
//!
//! ```toml
//! [hand]           # HandModel
//! [stick]          # StickModel
//! [contact]        # ContactParams
//! [task]           # TaskConfig (includes [task.sensor], [task.reference])
//! [randomization]  # RandomizationSpec; ±10 % around the nominal model when absent
//! [reward]         # RewardWeights
//! [sampler]        # initial-state SamplerConfig
//! [train]          # TrainConfig
//! ```
//!
//! Every section is optional and falls back to its defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::initial_states::SamplerConfig;
use crate::env::randomization::RandomizationSpec;
use crate::env::reward::RewardWeights;
use crate::env::task::TaskConfig;
use crate::error::Result;
use crate::hand::dynamics::World;
use crate::hand::model::{HandModel, StickModel};
use crate::learning::TrainConfig;
use crate::tactile::contact::ContactParams;

/// Relative spread of the default randomization distributions.
pub const DEFAULT_SPREAD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub hand: HandModel,
    pub stick: StickModel,
    pub contact: ContactParams,
    pub task: TaskConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub randomization: Option<RandomizationSpec>,
    pub reward: RewardWeights,
    pub sampler: SamplerConfig,
    pub train: TrainConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.hand.validate()?;
        self.stick.validate()?;
        self.task.validate()?;
        self.train.validate()?;
        if let Some(r) = &self.randomization {
            r.validate()?;
        }
        Ok(())
    }

    pub fn world(&self) -> Result<World> {
        World::new(self.hand.clone(), self.stick.clone(), self.contact.clone())
    }

    pub fn randomization(&self) -> RandomizationSpec {
        self.randomization.clone().unwrap_or_else(|| RandomizationSpec::around(&self.hand, &self.stick, DEFAULT_SPREAD))
    }

    /// The same configuration with every section spelled out.
    pub fn resolved(&self) -> Self {
        Self { randomization: Some(self.randomization()), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = Config::default().resolved();
        let text = cfg.to_toml().unwrap();
        for section in ["[hand]", "[stick]", "[contact]", "[task]", "[randomization]", "[reward]", "[sampler]", "[train]"] {
            assert!(text.contains(section), "missing {section}");
        }
        assert_eq!(Config::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_sections_override_defaults() {
        let cfg = Config::from_toml("[stick]\nlength = 0.2\nradius = 0.005\nmass = 0.05\nfriction_mu = 0.6\n[train]\nseed = 9\n").unwrap();
        assert_eq!(cfg.stick.length, 0.2);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.gamma, 0.99);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_toml("[train]\ngamma = 1.5\n").is_err());
    }
}
