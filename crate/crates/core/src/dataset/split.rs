use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};

const MIN_SPLIT_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub k: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.30,
            k: 5,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.k < 2 {
            return Err(Error::Domain(format!("k must be at least 2, got {}", self.k)));
        }
        Ok(())
    }
}

fn shuffled_positions(len: usize, seed: u64) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..len).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    positions
}

/// Seeded shuffle split into `(train, test)`. The test part holds
/// `round(test_fraction * len)` rows; both parts keep at least one row.
pub fn split(data: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let n = data.len();
    if n < MIN_SPLIT_ROWS {
        return Err(Error::Input(format!(
            "need at least {MIN_SPLIT_ROWS} rows to split, got {n}"
        )));
    }
    let n_test = ((spec.test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let positions = shuffled_positions(n, spec.seed);
    let (test, train) = positions.split_at(n_test);
    Ok((data.subset(train), data.subset(test)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
}

/// `k` train/validation pairs from one seeded shuffle. Validation folds
/// partition the dataset and their sizes differ by at most one.
pub fn kfold(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = data.len();
    if k < 2 {
        return Err(Error::Domain(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Input(format!("k = {k} exceeds dataset length {n}")));
    }
    let positions = shuffled_positions(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let end = start + size;
        let validation = &positions[start..end];
        let train: Vec<usize> = positions[..start].iter().chain(&positions[end..]).copied().collect();
        folds.push(Fold {
            train: data.subset(&train),
            validation: data.subset(validation),
        });
        start = end;
    }
    Ok(folds)
}
