//! Hourly input series, labeled learning datasets and their partitioning.

mod ingest;
mod preprocess;
mod split;
mod synth;

pub use ingest::{ingest_csv, read_series, write_labeled_csv, write_series_csv, IngestOptions};
pub use preprocess::{preprocess, BadDataPolicy, Column, PreprocessReport, Repair};
pub use split::{kfold, split, Fold, SplitSpec};
pub use synth::{synthesize, SyntheticSpec};

use chrono::{NaiveDateTime, TimeDelta};

use crate::error::{Error, Result};
use crate::thermal::{run_profile, LolRecord, ProfileOptions, TransformerParams};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Aligned hourly ambient temperature (°C) and load ratio (per-unit).
///
/// Construction checks equal lengths, uniform one-hour spacing, finite
/// values and non-negative load ratios. Plausibility bounds on temperature
/// are enforced by [`ingest_csv`] and repaired by [`preprocess`], not here.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    timestamps: Vec<NaiveDateTime>,
    ambient_temp: Vec<f64>,
    load_ratio: Vec<f64>,
}

impl HourlySeries {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        ambient_temp: Vec<f64>,
        load_ratio: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != ambient_temp.len() || timestamps.len() != load_ratio.len() {
            return Err(Error::Input(format!(
                "series columns differ in length: {} timestamps, {} temperatures, {} load ratios",
                timestamps.len(),
                ambient_temp.len(),
                load_ratio.len()
            )));
        }
        for (i, pair) in timestamps.windows(2).enumerate() {
            if pair[1] - pair[0] != TimeDelta::hours(1) {
                return Err(Error::Input(format!(
                    "timestamps {} and {} (indices {i}, {}) are not one hour apart",
                    pair[0].format(TIMESTAMP_FORMAT),
                    pair[1].format(TIMESTAMP_FORMAT),
                    i + 1
                )));
            }
        }
        if let Some(i) = ambient_temp.iter().position(|t| !t.is_finite()) {
            return Err(Error::Input(format!("non-finite temperature at index {i}")));
        }
        if let Some(i) = load_ratio.iter().position(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::Input(format!(
                "load ratio at index {i} must be finite and non-negative, got {}",
                load_ratio[i]
            )));
        }
        Ok(Self {
            timestamps,
            ambient_temp,
            load_ratio,
        })
    }

    /// Consecutive hours starting at `start`.
    pub fn from_start(start: NaiveDateTime, ambient_temp: Vec<f64>, load_ratio: Vec<f64>) -> Result<Self> {
        let timestamps = (0..ambient_temp.len())
            .map(|h| start + TimeDelta::hours(h as i64))
            .collect();
        Self::new(timestamps, ambient_temp, load_ratio)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn ambient_temp(&self) -> &[f64] {
        &self.ambient_temp
    }

    pub fn load_ratio(&self) -> &[f64] {
        &self.load_ratio
    }

    /// Interval length in hours. Always one for a valid series.
    pub fn step_hours(&self) -> f64 {
        1.0
    }
}

/// Learning dataset: inputs are (ambient °C, load ratio), targets are the
/// hourly loss of life in percent.
///
/// `rows` holds the index of each row in the dataset it was originally
/// labeled from, so subsets produced by [`split`] and [`kfold`] can be
/// traced back and compared.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub timestamps: Vec<NaiveDateTime>,
    pub inputs: Vec<[f64; 2]>,
    pub targets: Vec<f64>,
    pub rows: Vec<usize>,
}

impl LabeledDataset {
    /// Builds a dataset from raw pairs, with synthetic hourly timestamps.
    pub fn from_pairs(inputs: Vec<[f64; 2]>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Input(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let start = NaiveDateTime::default();
        let n = inputs.len();
        Ok(Self {
            timestamps: (0..n).map(|h| start + TimeDelta::hours(h as i64)).collect(),
            inputs,
            targets,
            rows: (0..n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Rows at the given positions (positions index this dataset, not the
    /// original one).
    pub fn subset(&self, positions: &[usize]) -> Self {
        Self {
            timestamps: positions.iter().map(|&i| self.timestamps[i]).collect(),
            inputs: positions.iter().map(|&i| self.inputs[i]).collect(),
            targets: positions.iter().map(|&i| self.targets[i]).collect(),
            rows: positions.iter().map(|&i| self.rows[i]).collect(),
        }
    }

    /// Stable 64-bit FNV-1a fingerprint of the original row indices, used
    /// to check that several estimators were scored on the same split.
    pub fn rows_fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        for row in &self.rows {
            for byte in (*row as u64).to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(PRIME);
            }
        }
        hash
    }

    pub fn target_variance(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        self.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n
    }
}

/// Labels every hour of `series` with its loss of life from the thermal
/// model. Returns the dataset together with the full thermal records.
pub fn label(
    series: &HourlySeries,
    params: &TransformerParams,
    options: &ProfileOptions,
) -> Result<(LabeledDataset, Vec<LolRecord>)> {
    if series.is_empty() {
        return Err(Error::Input("cannot label an empty series".into()));
    }
    let records = run_profile(series, params, options)?;
    let dataset = LabeledDataset {
        timestamps: series.timestamps().to_vec(),
        inputs: records.iter().map(|r| [r.ambient_temp, r.load_ratio]).collect(),
        targets: records.iter().map(|r| r.lol_percent).collect(),
        rows: (0..records.len()).collect(),
    };
    Ok((dataset, records))
}
