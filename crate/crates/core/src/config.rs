//! Engine configuration, read from a single TOML file.
//!
//! ```toml
//! seed = 7
//! threshold = 0.5
//!
//! [gateway]
//! batch_size = 32
//! backend = { kind = "remote", endpoint = "http://localhost:8080" }
//!
//! [rerank]
//! k = 2
//!
//! [aggregation]
//! mode = "hard"
//!
//! [cluster]
//! mode = "consensus"
//! scope = "doc-b"
//! ```
//!
//! Omitted fields take their defaults. The top-level `seed` is the only
//! seed: it overrides `gateway.seed`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::AggregationMode;
use crate::cluster::ClusterMode;
use crate::gateway::GatewayConfig;
use crate::inference::RerankConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationSection {
    pub mode: AggregationMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub mode: ClusterMode,
    /// Document id to restrict ranking to; all documents when absent.
    pub scope: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub seed: u64,
    /// Decision threshold for document verdicts.
    pub threshold: f64,
    pub gateway: GatewayConfig,
    pub rerank: RerankSection,
    pub aggregation: AggregationSection,
    pub cluster: ClusterSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankSection {
    pub k: usize,
    pub always_rerank: bool,
}

impl Default for RerankSection {
    fn default() -> Self {
        let d = RerankConfig::default();
        Self {
            k: d.k,
            always_rerank: d.always_rerank,
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threshold: RerankConfig::default().threshold,
            gateway: GatewayConfig::default(),
            rerank: RerankSection::default(),
            aggregation: AggregationSection::default(),
            cluster: ClusterSection::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError::Invalid(format!("threshold {} is outside [0, 1]", self.threshold)));
        }
        if self.rerank.k == 0 {
            return Err(ConfigError::Invalid("rerank.k must be at least 1".into()));
        }
        self.gateway_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Gateway settings with the engine seed applied.
    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            seed: self.seed,
            ..self.gateway.clone()
        }
    }

    pub fn rerank_config(&self) -> RerankConfig {
        RerankConfig {
            k: self.rerank.k,
            threshold: self.threshold,
            always_rerank: self.rerank.always_rerank,
        }
    }
}
