//! 2-2-1 perceptron: tanh hidden layer, linear output, full-batch gradient
//! descent on the mean squared error in standardized units.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Standardizer};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model_io::ModelFile;
use crate::Regressor;

const INIT_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    /// `hidden[j][d]` connects input `d` to hidden unit `j`.
    pub hidden: [[f64; 2]; 2],
    pub hidden_bias: [f64; 2],
    pub output: [f64; 2],
    pub output_bias: f64,
}

impl MlpWeights {
    pub const LEN: usize = 9;

    pub fn zeros() -> Self {
        Self::from_slice(&[0.0; Self::LEN])
    }

    /// Order: hidden row-major, hidden bias, output, output bias.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.extend(self.hidden.iter().flatten());
        v.extend(self.hidden_bias);
        v.extend(self.output);
        v.push(self.output_bias);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::LEN, "MLP weight vector must have {} entries", Self::LEN);
        Self {
            hidden: [[v[0], v[1]], [v[2], v[3]]],
            hidden_bias: [v[4], v[5]],
            output: [v[6], v[7]],
            output_bias: v[8],
        }
    }

    fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|w| w.is_finite())
    }

    fn hidden_activations(&self, z: [f64; 2]) -> [f64; 2] {
        let mut h = [0.0; 2];
        for (j, hj) in h.iter_mut().enumerate() {
            *hj = (self.hidden[j][0] * z[0] + self.hidden[j][1] * z[1] + self.hidden_bias[j]).tanh();
        }
        h
    }

    /// Network output in standardized target units.
    pub fn forward(&self, z: [f64; 2]) -> f64 {
        let h = self.hidden_activations(z);
        self.output[0] * h[0] + self.output[1] * h[1] + self.output_bias
    }
}

/// Mean squared error of `weights` on standardized data and its exact
/// gradient with respect to every weight.
#[allow(clippy::needless_range_loop)]
pub fn loss_and_gradient(weights: &MlpWeights, inputs: &[[f64; 2]], targets: &[f64]) -> (f64, MlpWeights) {
    let n = inputs.len() as f64;
    let mut loss = 0.0;
    let mut g = MlpWeights::zeros();
    for (&z, &y) in inputs.iter().zip(targets) {
        let h = weights.hidden_activations(z);
        let err = weights.output[0] * h[0] + weights.output[1] * h[1] + weights.output_bias - y;
        loss += err * err;
        let d_out = 2.0 * err / n;
        g.output_bias += d_out;
        for j in 0..2 {
            g.output[j] += d_out * h[j];
            let d_pre = d_out * weights.output[j] * (1.0 - h[j] * h[j]);
            g.hidden_bias[j] += d_pre;
            g.hidden[j][0] += d_pre * z[0];
            g.hidden[j][1] += d_pre * z[1];
        }
    }
    (loss / n, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpModel {
    pub inputs: Standardizer,
    pub target_mean: f64,
    pub target_scale: f64,
    pub weights: MlpWeights,
}

impl MlpModel {
    pub fn validate(&self) -> Result<()> {
        let scales_ok = self.inputs.scale.iter().chain([&self.target_scale]).all(|s| s.is_finite() && *s > 0.0);
        if !scales_ok || !self.target_mean.is_finite() || !self.weights.is_finite() {
            return Err(Error::Corrupt("MLP model has non-finite weights or non-positive scales".into()));
        }
        Ok(())
    }
}

impl Regressor for MlpModel {
    fn predict(&self, input: [f64; 2]) -> f64 {
        self.weights.forward(self.inputs.apply(input)) * self.target_scale + self.target_mean
    }
}

impl ModelFile for MlpModel {
    const SCHEMA: &'static str = "xfmr-aging.mlp";
}

#[derive(Debug, Clone)]
pub struct MlpTraining {
    pub model: MlpModel,
    /// Training MSE in raw target units after each epoch.
    pub trace: Vec<f64>,
}

/// Trains the 2-2-1 network from seeded uniform weights in [-0.5, 0.5].
pub fn train_mlp(train: &LabeledDataset, epochs: usize, learning_rate: f64, seed: u64) -> Result<MlpTraining> {
    check_training_data(&train.inputs, &train.targets)?;
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(Error::Input(format!("learning rate must be positive, got {learning_rate}")));
    }
    let scaler = Standardizer::fit(&train.inputs)?;
    let n = train.len() as f64;
    let target_mean = train.targets.iter().sum::<f64>() / n;
    let var = train.targets.iter().map(|y| (y - target_mean).powi(2)).sum::<f64>() / n;
    let target_scale = if var > 0.0 { var.sqrt() } else { 1.0 };

    let z: Vec<[f64; 2]> = train.inputs.iter().map(|&x| scaler.apply(x)).collect();
    let t: Vec<f64> = train.targets.iter().map(|y| (y - target_mean) / target_scale).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<f64> = (0..MlpWeights::LEN).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect();
    let mut weights = MlpWeights::from_slice(&init);

    let raw = target_scale * target_scale;
    let mut trace = Vec::with_capacity(epochs);
    let (_, mut grad) = loss_and_gradient(&weights, &z, &t);
    for epoch in 1..=epochs {
        let w: Vec<f64> = weights.to_vec().iter().zip(grad.to_vec()).map(|(w, g)| w - learning_rate * g).collect();
        weights = MlpWeights::from_slice(&w);
        let (loss, g) = loss_and_gradient(&weights, &z, &t);
        if !loss.is_finite() || !weights.is_finite() {
            return Err(Error::Numerical(format!(
                "MLP training diverged at epoch {epoch} (learning rate {learning_rate})"
            )));
        }
        trace.push(loss * raw);
        grad = g;
    }

    Ok(MlpTraining {
        model: MlpModel {
            inputs: scaler,
            target_mean,
            target_scale,
            weights,
        },
        trace,
    })
}
