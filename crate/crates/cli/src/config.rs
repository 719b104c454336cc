//! Run configuration: a TOML file whose every section is optional, with
//! command-line flags layered on top.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xfmr_aging::anfis::AnfisConfig;
use xfmr_aging::dataset::{BadDataPolicy, SplitSpec, SyntheticSpec};
use xfmr_aging::thermal::{ProfileOptions, TransformerParams};

use crate::UsageError;

pub const DEFAULT_HOURS: usize = 8760;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub transformer: TransformerParams,
    pub thermal: ProfileOptions,
    pub dataset: DatasetConfig,
    pub preprocess: PreprocessConfig,
    pub split: SplitSpec,
    pub anfis: AnfisConfig,
    pub mlp: MlpConfig,
    pub rbf: RbfConfig,
    pub sweep: SweepConfig,
}

/// Exactly one of `csv` and `synthetic` may be set. With neither, a default
/// synthetic year is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub csv: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Length of a synthetic series.
    pub hours: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            csv: None,
            synthetic: None,
            hours: DEFAULT_HOURS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub enabled: bool,
    pub z_threshold: f64,
    pub temp_bounds: (f64, f64),
    pub load_bounds: (f64, f64),
    pub max_bad_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let policy = BadDataPolicy::default();
        Self {
            enabled: true,
            z_threshold: policy.z_threshold,
            temp_bounds: policy.temp_bounds,
            load_bounds: policy.load_bounds,
            max_bad_fraction: policy.max_bad_fraction,
        }
    }
}

impl PreprocessConfig {
    pub fn policy(&self) -> BadDataPolicy {
        BadDataPolicy {
            z_threshold: self.z_threshold,
            temp_bounds: self.temp_bounds,
            load_bounds: self.load_bounds,
            max_bad_fraction: self.max_bad_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfConfig {
    /// Training MSE at which growth stops. Unset means
    /// `DEFAULT_GOAL_FRACTION` of the training target variance for `train`;
    /// `compare` always derives it from the ANFIS test MSE.
    pub mse_goal: Option<f64>,
    pub max_neurons: usize,
}

impl RbfConfig {
    pub const DEFAULT_GOAL_FRACTION: f64 = 0.05;
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            mse_goal: None,
            max_neurons: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub c_min: usize,
    pub c_max: usize,
    /// Relative test-MSE gain below which adding a cluster stops paying off.
    pub threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            c_min: 2,
            c_max: 30,
            threshold: 0.05,
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {what} {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("invalid {what} {}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        read_toml(path, "config file")
    }
}

pub fn load_params(path: &Path) -> Result<TransformerParams, UsageError> {
    read_toml(path, "transformer parameter file")
}

/// Parses `--synthetic`: `default`, a comma-separated `key=value` list
/// overriding the defaults, or the path of a TOML file.
pub fn parse_synthetic(arg: &str) -> Result<SyntheticSpec, UsageError> {
    if arg == "default" {
        return Ok(SyntheticSpec::default());
    }
    if !arg.contains('=') {
        return read_toml(Path::new(arg), "synthetic profile");
    }
    let mut doc = String::new();
    for pair in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected key=value in --synthetic, got `{pair}`")))?;
        let (key, value) = (key.trim(), value.trim());
        // anything that is not a number or a boolean is taken as a string
        let literal = if value.parse::<f64>().is_ok() || value == "true" || value == "false" {
            value.to_string()
        } else {
            format!("{value:?}")
        };
        doc.push_str(&format!("{key} = {literal}\n"));
    }
    toml::from_str(&doc).map_err(|e| UsageError(format!("invalid --synthetic `{arg}`: {e}")))
}
