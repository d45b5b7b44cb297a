//! Per-subcommand configuration files. Every field has a default, so an
//! empty file (or no file) is a valid configuration; `--print-config` shows
//! the resolved values.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scenid::channel_est::WindowConfig;
use scenid::classifier::{TrainConfig, DEFAULT_HIDDEN};
use scenid::pipeline::DatasetSpec;
use scenid::scenario_sim::{SimConfig, MAX_TAPS};
use scenid::sounding::{PeakRule, RelaxConfig};

pub type DatasetConfig = DatasetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub hidden_layers: Vec<usize>,
    pub init_seed: u64,
    pub train: TrainConfig,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            hidden_layers: DEFAULT_HIDDEN.to_vec(),
            init_seed: 0,
            train: TrainConfig::for_ddpdp(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {}

/// Local m-sequence and detection settings for `sound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoundConfig {
    pub register_length: u32,
    /// Feedback polynomial as a bit mask (bit i is the x^i term); `None`
    /// picks the built-in primitive polynomial for the register length.
    pub polynomial: Option<u32>,
    pub initial_state: u32,
    pub peak: PeakRule,
    pub relax: RelaxConfig,
}

impl Default for SoundConfig {
    fn default() -> Self {
        Self {
            register_length: 9,
            polynomial: None,
            initial_state: 1,
            peak: PeakRule::default(),
            relax: RelaxConfig::default(),
        }
    }
}

/// BEM-LS settings for `estimate`. The pilot file holds the transmitted
/// symbols; received sample `n` lines up with pilot symbol `n + pilot_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub taps: usize,
    pub pilot_offset: usize,
    pub window: WindowConfig,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            taps: MAX_TAPS,
            pilot_offset: MAX_TAPS - 1,
            window: WindowConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenario: u8,
    pub samples: usize,
    pub sim: SimConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            scenario: 1,
            samples: 25600,
            sim: SimConfig::default(),
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Reads a TOML config, or the defaults when no path is given. Fields the
/// file leaves out keep the subcommand's defaults, also inside nested
/// tables.
pub fn load<T: DeserializeOwned + Serialize + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let ctx = || format!("parsing config {}", path.display());
    // Typed parse first: it reports errors with line and column.
    toml::from_str::<T>(&text).with_context(ctx)?;
    let user: toml::Table = toml::from_str(&text).with_context(ctx)?;
    let mut table = toml::Table::try_from(T::default()).context("rendering defaults")?;
    merge(&mut table, user);
    table.try_into().with_context(ctx)
}

pub fn to_toml<T: Serialize>(config: &T) -> Result<String> {
    toml::to_string_pretty(config).context("rendering config as TOML")
}
