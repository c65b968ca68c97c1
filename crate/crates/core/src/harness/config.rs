//! Experiment configuration documents (TOML).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelConfig, ChannelError};
use crate::protocol::{BasisWeights, ErrorTestFractions, ProtocolError, ProtocolKind, RunConfig};

/// Protocol names that are reserved but have no runner.
const RESERVED_PROTOCOLS: &[&str] = &["six_state"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("protocol `{0}` is not implemented")]
    NotImplemented(String),
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Structured,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Optional block-wise inversion of the raw key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub block_size: usize,
    #[serde(default = "default_block_reveal")]
    pub reveal_fraction: f64,
}

fn default_block_reveal() -> f64 {
    0.1
}

fn default_z_bias() -> f64 {
    0.5
}

fn default_abort() -> f64 {
    0.11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n_codes: u64,
    pub seed: u64,
    #[serde(default = "default_z_bias")]
    pub z_bias: f64,
    #[serde(default = "default_abort")]
    pub abort_if_tp_above: f64,
    #[serde(default)]
    pub basis_weights: BasisWeights,
    #[serde(default)]
    pub error_test: ErrorTestFractions,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn new(protocol: ProtocolKind, n_codes: u64, seed: u64) -> Self {
        Self {
            protocol,
            n_codes,
            seed,
            z_bias: default_z_bias(),
            abort_if_tp_above: default_abort(),
            basis_weights: BasisWeights::default(),
            error_test: ErrorTestFractions::default(),
            channel: ChannelConfig::default(),
            block: None,
            output: OutputConfig::default(),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            n_codes: self.n_codes,
            z_bias: self.z_bias,
            basis_weights: self.basis_weights,
            channel: self.channel,
            error_test: self.error_test,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.run_config().validate().map_err(protocol_field_error)?;
        if !(0.0..=1.0).contains(&self.abort_if_tp_above) {
            return Err(ConfigError::invalid(
                "abort_if_tp_above",
                format!("must lie in [0, 1], got {}", self.abort_if_tp_above),
            ));
        }
        if let Some(block) = &self.block {
            if block.block_size == 0 {
                return Err(ConfigError::invalid("block.block_size", "must be at least 1"));
            }
            if !(block.reveal_fraction > 0.0 && block.reveal_fraction <= 1.0) {
                return Err(ConfigError::invalid(
                    "block.reveal_fraction",
                    format!("must lie in (0, 1], got {}", block.reveal_fraction),
                ));
            }
        }
        Ok(())
    }
}

fn protocol_field_error(e: ProtocolError) -> ConfigError {
    match e {
        ProtocolError::EmptyRun => ConfigError::invalid("n_codes", "must be at least 1"),
        ProtocolError::InvalidProbability { field, value } => {
            ConfigError::invalid(field, format!("must lie in [0, 1], got {value}"))
        }
        ProtocolError::InvalidWeights(reason) => ConfigError::invalid("basis_weights", reason),
        ProtocolError::Channel(c) => match c {
            ChannelError::InvalidDistribution { field, reason } => ConfigError::invalid(field, reason),
            ChannelError::InvalidLoss(v) => {
                ConfigError::invalid("channel.loss_prob", format!("must lie in [0, 1], got {v}"))
            }
            ChannelError::InvalidBlock => {
                ConfigError::invalid("channel.block_correlated", "must be at least 1")
            }
        },
        other => ConfigError::invalid("config", other.to_string()),
    }
}

/// Parses and validates a config document, filling in defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if let Some(name) = table.get("protocol").and_then(|v| v.as_str()) {
        if RESERVED_PROTOCOLS.contains(&name) {
            return Err(ConfigError::NotImplemented(name.to_string()));
        }
    }
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a config back to a document that [`parse_config`] accepts.
pub fn emit_config(cfg: &ExperimentConfig) -> Result<String, ConfigError> {
    toml::to_string_pretty(cfg).map_err(|e| ConfigError::Parse(e.to_string()))
}
