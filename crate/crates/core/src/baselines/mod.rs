//! Baseline regressors: a 2-2-1 multilayer perceptron and an incrementally
//! grown radial basis function network.
//!
//! Both standardize inputs with statistics from their own training data, so
//! callers always pass and receive raw units.

mod mlp;
mod rbf;

pub use mlp::{loss_and_gradient, train_mlp, MlpModel, MlpTraining, MlpWeights};
pub use rbf::{train_rbf, RbfModel, RbfStep, RbfTraining};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column affine map to zero mean and unit variance. Constant columns
/// keep a unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 2],
    pub scale: [f64; 2],
}

impl Standardizer {
    pub fn fit(inputs: &[[f64; 2]]) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Input("cannot standardize an empty input set".into()));
        }
        let n = inputs.len() as f64;
        let mut mean = [0.0; 2];
        let mut scale = [0.0; 2];
        for d in 0..2 {
            mean[d] = inputs.iter().map(|x| x[d]).sum::<f64>() / n;
            let var = inputs.iter().map(|x| (x[d] - mean[d]).powi(2)).sum::<f64>() / n;
            scale[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.mean[0]) / self.scale[0], (x[1] - self.mean[1]) / self.scale[1]]
    }
}

fn check_training_data(inputs: &[[f64; 2]], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Input("training data is empty".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Input(format!("{} inputs but {} targets", inputs.len(), targets.len())));
    }
    if inputs.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::Input("training data contains non-finite values".into()));
    }
    Ok(())
}
