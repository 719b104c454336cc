//! Gaussian radial basis network grown one neuron at a time.
//!
//! Each neuron computes `exp(-‖z - c‖² / (2σ²))` on standardized inputs `z`,
//! with one width `σ` shared by all neurons. The output is a weighted sum of
//! the neurons plus a bias, in raw target units.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Standardizer};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model_io::ModelFile;
use crate::Regressor;

/// Width used while the network has a single neuron, in standardized units.
const SINGLE_NEURON_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfModel {
    pub inputs: Standardizer,
    /// Centers in standardized input units.
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn basis(z: [f64; 2], center: [f64; 2], width: f64) -> f64 {
    let d2 = (z[0] - center[0]).powi(2) + (z[1] - center[1]).powi(2);
    (-d2 / (2.0 * width * width)).exp()
}

impl RbfModel {
    pub fn neurons(&self) -> usize {
        self.centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.centers.len() != self.weights.len() {
            return Err(Error::Corrupt(format!(
                "RBF model has {} centers and {} weights",
                self.centers.len(),
                self.weights.len()
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Corrupt(format!("RBF width must be positive, got {}", self.width)));
        }
        let finite = self.centers.iter().flatten().chain(&self.weights).chain([&self.bias]).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Corrupt("RBF model has non-finite parameters".into()));
        }
        Ok(())
    }
}

impl Regressor for RbfModel {
    fn predict(&self, input: [f64; 2]) -> f64 {
        let z = self.inputs.apply(input);
        self.centers.iter().zip(&self.weights).map(|(&c, w)| w * basis(z, c, self.width)).sum::<f64>() + self.bias
    }
}

impl ModelFile for RbfModel {
    const SCHEMA: &'static str = "xfmr-aging.rbf";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbfStep {
    pub neurons: usize,
    pub width: f64,
    pub train_mse: f64,
    /// The recomputed width fit worse than the previous one, which was kept.
    pub kept_previous_width: bool,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct RbfTraining {
    pub model: RbfModel,
    /// One entry per neuron count, starting at one.
    pub trace: Vec<RbfStep>,
    pub goal_met: bool,
    /// Candidate points passed over because they coincide with a center.
    pub duplicate_skips: usize,
}

/// Mean distance from each center to its nearest other center.
fn mean_nearest_neighbor(centers: &[[f64; 2]]) -> f64 {
    if centers.len() < 2 {
        return SINGLE_NEURON_WIDTH;
    }
    let total: f64 = centers
        .iter()
        .enumerate()
        .map(|(i, a)| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / centers.len() as f64
}

struct Fit {
    weights: Vec<f64>,
    bias: f64,
    residuals: Vec<f64>,
    mse: f64,
    rank_deficient: bool,
}

fn solve(z: &[[f64; 2]], targets: &[f64], centers: &[[f64; 2]], width: f64) -> Result<Fit> {
    let k = centers.len();
    let design = DMatrix::from_fn(z.len(), k + 1, |i, j| if j < k { basis(z[i], centers[j], width) } else { 1.0 });
    let rhs = DVector::from_column_slice(targets);
    let ls = linalg::lstsq(design.clone(), &rhs)?;
    let fitted = &design * &ls.solution;
    let residuals: Vec<f64> = targets.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / z.len() as f64;
    Ok(Fit {
        weights: ls.solution.rows(0, k).iter().copied().collect(),
        bias: ls.solution[k],
        residuals,
        mse,
        rank_deficient: ls.rank_deficient,
    })
}

/// Grows the network until the training MSE reaches `mse_goal` or it has
/// `max_neurons` neurons.
///
/// Each new neuron is centered on the training point with the largest
/// absolute residual; points coinciding with an existing center are passed
/// over. After an insertion the shared width becomes the mean
/// nearest-neighbor distance among centers. If that width fits worse than the
/// previous one, the previous width is kept, so the trace never rises.
/// `seed` orders the scan, which only matters for tied residuals.
pub fn train_rbf(train: &LabeledDataset, mse_goal: f64, max_neurons: usize, seed: u64) -> Result<RbfTraining> {
    check_training_data(&train.inputs, &train.targets)?;
    if !(mse_goal.is_finite() && mse_goal > 0.0) {
        return Err(Error::Input(format!("MSE goal must be positive, got {mse_goal}")));
    }
    if max_neurons == 0 {
        return Err(Error::Input("max_neurons must be at least 1".into()));
    }
    let scaler = Standardizer::fit(&train.inputs)?;
    let z: Vec<[f64; 2]> = train.inputs.iter().map(|&x| scaler.apply(x)).collect();
    let n = z.len() as f64;

    let mut order: Vec<usize> = (0..z.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mean = train.targets.iter().sum::<f64>() / n;
    let mut residuals: Vec<f64> = train.targets.iter().map(|y| y - mean).collect();
    let mut centers: Vec<[f64; 2]> = Vec::new();
    let mut width = SINGLE_NEURON_WIDTH;
    let mut current: Option<Fit> = None;
    let mut trace = Vec::new();
    let mut duplicate_skips = 0;

    while centers.len() < max_neurons {
        if current.as_ref().is_some_and(|f| f.mse <= mse_goal) {
            break;
        }
        let mut candidates = order.clone();
        // stable sort keeps the seeded order among equal residuals
        candidates.sort_by(|&a, &b| residuals[b].abs().total_cmp(&residuals[a].abs()));
        let Some(pick) = candidates.into_iter().find(|&i| {
            let dup = centers.contains(&z[i]);
            duplicate_skips += usize::from(dup);
            !dup
        }) else {
            break;
        };
        centers.push(z[pick]);

        let proposed = mean_nearest_neighbor(&centers);
        let mut fit = solve(&z, &train.targets, &centers, proposed)?;
        let mut kept_previous_width = false;
        if let Some(prev) = &current {
            if fit.mse > prev.mse && proposed != width {
                let fallback = solve(&z, &train.targets, &centers, width)?;
                if fallback.mse < fit.mse {
                    fit = fallback;
                    kept_previous_width = true;
                }
            }
        }
        if !kept_previous_width {
            width = proposed;
        }
        if !fit.mse.is_finite() {
            return Err(Error::Numerical(format!("RBF fit is non-finite with {} neurons", centers.len())));
        }
        trace.push(RbfStep {
            neurons: centers.len(),
            width,
            train_mse: fit.mse,
            kept_previous_width,
            rank_deficient: fit.rank_deficient,
        });
        residuals.clone_from(&fit.residuals);
        current = Some(fit);
    }

    let fit = current.ok_or_else(|| Error::Degenerate("no RBF neuron could be placed".into()))?;
    let goal_met = fit.mse <= mse_goal;
    Ok(RbfTraining {
        model: RbfModel {
            inputs: scaler,
            centers,
            width,
            weights: fit.weights,
            bias: fit.bias,
        },
        trace,
        goal_met,
        duplicate_skips,
    })
}
