//! Shared model configuration, loaded from TOML.
//!
//! ```toml
//! [grid]
//! rows = 7
//! cols = 25
//!
//! [fruits]
//! apples = 2
//! pears = 2
//!
//! # the actor's real field of view
//! [actor_fov]
//! half_angle = 45.0
//! range = 8.0
//!
//! # the cone the observer assumes for the actor (defaults to actor_fov)
//! [assumed_fov]
//! half_angle = 45.0
//! range = 8.0
//!
//! # inclusive cell bounds; defaults to all rows, centre seven columns
//! [observer]
//! row_lo = 0
//! row_hi = 6
//! col_lo = 9
//! col_hi = 15
//!
//! [policy]
//! beta = 60.0
//! gamma = 0.95
//! vi_tolerance = 1e-6
//!
//! [filter]
//! likelihood_floor = 1e-12
//! persistence = 1.0
//!
//! [scenario]
//! max_frames = 60
//! suite_seed = 2019
//! ```
//!
//! Every table and key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::PolicyParams;
use crate::world::{FovCone, FruitCounts, GridSpec, ObserverRegion};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSettings {
    /// Lower clamp on action likelihoods before the Bayes update.
    pub likelihood_floor: f64,
    /// Probability that the attributed intention carries over between frames.
    pub persistence: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            likelihood_floor: 1e-12,
            persistence: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSettings {
    pub max_frames: usize,
    pub suite_seed: u64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            max_frames: 60,
            suite_seed: 2019,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub grid: GridSpec,
    pub fruits: FruitCounts,
    pub actor_fov: FovCone,
    pub assumed_fov: Option<FovCone>,
    pub observer: Option<ObserverRegion>,
    pub policy: PolicyParams,
    pub filter: FilterSettings,
    pub scenario: ScenarioSettings,
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ModelConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn region(&self) -> ObserverRegion {
        self.observer
            .unwrap_or_else(|| ObserverRegion::default_for(self.grid))
    }

    pub fn assumed_cone(&self) -> FovCone {
        self.assumed_fov.unwrap_or(self.actor_fov)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        GridSpec::new(self.grid.rows, self.grid.cols).map_err(|e| invalid(e.to_string()))?;
        if self.grid.cell_count() < self.fruits.total() + 1 {
            return Err(invalid(format!(
                "insufficient cells: {} cells for {} fruits and the actor",
                self.grid.cell_count(),
                self.fruits.total()
            )));
        }
        self.actor_fov.validate().map_err(|e| invalid(e.to_string()))?;
        self.assumed_cone()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.region()
            .validate(self.grid)
            .map_err(|e| invalid(e.to_string()))?;
        self.policy.validate().map_err(invalid)?;
        let f = self.filter;
        if !(f.likelihood_floor >= 0.0 && f.likelihood_floor < 1.0) {
            return Err(invalid(format!("likelihood_floor {} not in [0, 1)", f.likelihood_floor)));
        }
        if !(0.0..=1.0).contains(&f.persistence) {
            return Err(invalid(format!("persistence {} not in [0, 1]", f.persistence)));
        }
        if self.scenario.max_frames == 0 {
            return Err(invalid("max_frames must be at least 1".into()));
        }
        Ok(())
    }
}
