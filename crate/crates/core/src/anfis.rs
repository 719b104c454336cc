//! First-order Takagi–Sugeno ANFIS with Gaussian memberships.
//!
//! Each rule `j` fires with strength `w_j(x) = Π_d exp(-½((x_d - c_jd)/σ_jd)²)`
//! and proposes the affine output `f_j(x) = Σ_d p_jd x_d + r_j`. The model
//! output is `Σ_j w̄_j f_j` with normalized strengths `w̄_j = w_j / Σ_k w_k`.
//!
//! Training alternates two steps per epoch: a batch least-squares solve for
//! every consequent coefficient with the premises held fixed (the output is
//! linear in them), then one full-batch gradient step on the Gaussian centers
//! and widths with the consequents held fixed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::fcm::{self, FcmConfig, FcmResult};
use crate::linalg;
use crate::metrics;
use crate::model_io::ModelFile;
use crate::Regressor;

/// Smallest admissible Gaussian width, in input units.
pub const WIDTH_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: f64,
    pub width: f64,
}

impl Gaussian {
    pub fn eval(&self, x: f64) -> f64 {
        (-0.5 * self.scaled_sq(x)).exp()
    }

    fn scaled_sq(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        z * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub memberships: Vec<Gaussian>,
    /// Input coefficients followed by the constant term.
    pub consequent: Vec<f64>,
}

impl Rule {
    pub fn output(&self, x: &[f64]) -> f64 {
        let (slopes, bias) = self.consequent.split_at(x.len());
        slopes.iter().zip(x).map(|(p, v)| p * v).sum::<f64>() + bias[0]
    }

    fn scaled_distance(&self, x: &[f64]) -> f64 {
        self.memberships.iter().zip(x).map(|(g, &v)| g.scaled_sq(v)).sum()
    }

    fn strength(&self, x: &[f64]) -> f64 {
        (-0.5 * self.scaled_distance(x)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisModel {
    pub input_dim: usize,
    pub rules: Vec<Rule>,
}

/// A single evaluation, with a flag for inputs so far from every rule that
/// all firing strengths underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub fallback: bool,
}

impl AnfisModel {
    pub fn new(input_dim: usize, rules: Vec<Rule>) -> Result<Self> {
        let model = Self { input_dim, rules };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.rules.is_empty() {
            return Err(Error::Input("ANFIS needs at least one input and one rule".into()));
        }
        for (j, rule) in self.rules.iter().enumerate() {
            if rule.memberships.len() != self.input_dim || rule.consequent.len() != self.input_dim + 1 {
                return Err(Error::Input(format!(
                    "rule {j} has {} memberships and {} consequent terms for input dimension {}",
                    rule.memberships.len(),
                    rule.consequent.len(),
                    self.input_dim
                )));
            }
            if rule.memberships.iter().any(|g| !(g.width > 0.0) || !g.center.is_finite()) {
                return Err(Error::Input(format!("rule {j} has a non-positive width or bad center")));
            }
        }
        Ok(())
    }

    pub fn consequent_len(&self) -> usize {
        self.rules.len() * (self.input_dim + 1)
    }

    /// Normalized firing strengths, or `None` when every strength underflows.
    pub fn normalized_strengths(&self, x: &[f64]) -> Option<Vec<f64>> {
        let w: Vec<f64> = self.rules.iter().map(|r| r.strength(x)).collect();
        let total: f64 = w.iter().sum();
        (total > 0.0).then(|| w.into_iter().map(|v| v / total).collect())
    }

    /// Rule with the smallest width-normalized distance to `x`.
    fn nearest_rule(&self, x: &[f64]) -> usize {
        self.rules
            .iter()
            .map(|r| r.scaled_distance(x))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Prediction {
        match self.normalized_strengths(x) {
            Some(wn) => Prediction {
                value: wn.iter().zip(&self.rules).map(|(w, r)| w * r.output(x)).sum(),
                fallback: false,
            },
            None => Prediction {
                value: self.rules[self.nearest_rule(x)].output(x),
                fallback: true,
            },
        }
    }

    fn design_row(&self, x: &[f64], row: &mut [f64]) -> bool {
        let d = self.input_dim;
        let (weights, fallback) = match self.normalized_strengths(x) {
            Some(wn) => (wn, false),
            None => {
                let mut one_hot = vec![0.0; self.rules.len()];
                one_hot[self.nearest_rule(x)] = 1.0;
                (one_hot, true)
            }
        };
        for (j, w) in weights.iter().enumerate() {
            let block = &mut row[j * (d + 1)..(j + 1) * (d + 1)];
            for (slot, v) in block.iter_mut().zip(x) {
                *slot = w * v;
            }
            block[d] = *w;
        }
        fallback
    }

    fn set_consequents(&mut self, theta: &[f64]) {
        let width = self.input_dim + 1;
        for (rule, chunk) in self.rules.iter_mut().zip(theta.chunks(width)) {
            rule.consequent.copy_from_slice(chunk);
        }
    }

    pub fn consequents(&self) -> Vec<f64> {
        self.rules.iter().flat_map(|r| r.consequent.iter().copied()).collect()
    }
}

impl Regressor for AnfisModel {
    fn predict(&self, input: [f64; 2]) -> f64 {
        self.evaluate(&input).value
    }
}

impl ModelFile for AnfisModel {
    const SCHEMA: &'static str = "xfmr-aging.anfis";
}

/// Notes produced while turning clusters into rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InitReport {
    /// `(rule, dimension)` pairs whose width was raised to [`WIDTH_FLOOR`].
    pub floored_widths: Vec<(usize, usize)>,
    /// Rules whose every width hit the floor (a cluster of identical points).
    pub collapsed_rules: Vec<usize>,
}

/// One rule per cluster. Centers and widths are the membership-weighted
/// (weight `u^m`) mean and standard deviation of the raw inputs in each
/// cluster; consequents start at zero.
///
/// When FCM ran on the same raw inputs the centers coincide with the FCM
/// centers up to its convergence tolerance. Running FCM on rescaled inputs
/// is also supported: only the memberships are used.
pub fn init_from_fcm<const D: usize>(
    fcm: &FcmResult<D>,
    inputs: &[[f64; D]],
) -> Result<(AnfisModel, InitReport)> {
    if fcm.membership.iter().any(|row| row.len() != inputs.len()) {
        return Err(Error::Input(format!(
            "membership matrix covers a different number of points than the {} inputs",
            inputs.len()
        )));
    }
    let mut report = InitReport::default();
    let mut rules = Vec::with_capacity(fcm.membership.len());
    for (j, row) in fcm.membership.iter().enumerate() {
        let weights: Vec<f64> = row.iter().map(|u| u.powf(fcm.fuzzifier)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate(format!("cluster {j} has no membership mass")));
        }
        let mut memberships = Vec::with_capacity(D);
        let mut floored = 0;
        for d in 0..D {
            let mean = weights.iter().zip(inputs).map(|(w, x)| w * x[d]).sum::<f64>() / total;
            let var = weights
                .iter()
                .zip(inputs)
                .map(|(w, x)| w * (x[d] - mean).powi(2))
                .sum::<f64>()
                / total;
            let mut width = var.sqrt();
            if !(width >= WIDTH_FLOOR) {
                width = WIDTH_FLOOR;
                floored += 1;
                report.floored_widths.push((j, d));
            }
            memberships.push(Gaussian { center: mean, width });
        }
        if floored == D {
            report.collapsed_rules.push(j);
        }
        rules.push(Rule {
            memberships,
            consequent: vec![0.0; D + 1],
        });
    }
    Ok((AnfisModel::new(D, rules)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Step size of the premise gradient update.
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            learning_rate: 1e-2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Domain("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Domain(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Training MSE right after the least-squares step.
    pub train_mse: f64,
    /// Training MSE after the premise gradient step.
    pub train_mse_after_premise: f64,
    pub validation_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainDiagnostics {
    /// Least-squares solves that hit a rank-deficient system and returned the
    /// minimum-norm solution.
    pub rank_deficient_solves: usize,
    /// Training samples evaluated through the underflow fallback in the
    /// final model.
    pub fallback_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: AnfisModel,
    pub trace: Vec<EpochStats>,
    pub diagnostics: TrainDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseOutcome {
    pub mse: f64,
    pub rank_deficient: bool,
}

fn check_data(model: &AnfisModel, data: &LabeledDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if model.input_dim != 2 {
        return Err(Error::Input(format!(
            "datasets carry two inputs but the model expects {}",
            model.input_dim
        )));
    }
    Ok(())
}

/// Least-squares step: replaces every consequent with the global
/// minimizer of training MSE for the current premises.
pub fn fit_consequents(model: &mut AnfisModel, data: &LabeledDataset) -> Result<LseOutcome> {
    check_data(model, data)?;
    let cols = model.consequent_len();
    let mut design = DMatrix::zeros(data.len(), cols);
    let mut row = vec![0.0; cols];
    for (i, x) in data.inputs.iter().enumerate() {
        model.design_row(x, &mut row);
        for (j, v) in row.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let rhs = DVector::from_column_slice(&data.targets);
    let ls = linalg::lstsq(design, &rhs)?;
    model.set_consequents(ls.solution.as_slice());
    let mse = training_mse(model, data)?;
    Ok(LseOutcome {
        mse,
        rank_deficient: ls.rank_deficient,
    })
}

fn training_mse(model: &AnfisModel, data: &LabeledDataset) -> Result<f64> {
    let mse = metrics::mse(&data.targets, &model.predict_all(&data.inputs))?;
    if !mse.is_finite() {
        return Err(Error::Numerical(format!("training MSE is not finite ({mse})")));
    }
    Ok(mse)
}

/// Gradient of training MSE with respect to the Gaussian parameters,
/// indexed `[rule][dimension]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PremiseGradient {
    pub mse: f64,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<Vec<f64>>,
}

/// Analytic premise gradient. Samples in the underflow fallback region
/// contribute nothing (the output there is locally constant in the premises).
pub fn premise_gradient(model: &AnfisModel, data: &LabeledDataset) -> Result<PremiseGradient> {
    check_data(model, data)?;
    let (r, d) = (model.rules.len(), model.input_dim);
    let mut centers = vec![vec![0.0; d]; r];
    let mut widths = vec![vec![0.0; d]; r];
    let mut sse = 0.0;
    let n = data.len() as f64;
    let mut outputs = vec![0.0; r];

    for (x, &y) in data.inputs.iter().zip(&data.targets) {
        let Some(wn) = model.normalized_strengths(x) else {
            let e = model.evaluate(x).value - y;
            sse += e * e;
            continue;
        };
        for (o, rule) in outputs.iter_mut().zip(&model.rules) {
            *o = rule.output(x);
        }
        let yhat: f64 = wn.iter().zip(&outputs).map(|(w, f)| w * f).sum();
        let err = yhat - y;
        sse += err * err;
        let scale = 2.0 * err / n;
        for j in 0..r {
            let common = scale * wn[j] * (outputs[j] - yhat);
            if common == 0.0 {
                continue;
            }
            for (k, g) in model.rules[j].memberships.iter().enumerate() {
                let delta = x[k] - g.center;
                let inv_w2 = 1.0 / (g.width * g.width);
                centers[j][k] += common * delta * inv_w2;
                widths[j][k] += common * delta * delta * inv_w2 / g.width;
            }
        }
    }
    let mse = sse / n;
    if !mse.is_finite() {
        return Err(Error::Numerical(format!("training MSE is not finite ({mse})")));
    }
    Ok(PremiseGradient { mse, centers, widths })
}

fn apply_premise_step(model: &mut AnfisModel, grad: &PremiseGradient, learning_rate: f64) -> Result<()> {
    for (j, rule) in model.rules.iter_mut().enumerate() {
        for (k, g) in rule.memberships.iter_mut().enumerate() {
            g.center -= learning_rate * grad.centers[j][k];
            g.width = (g.width - learning_rate * grad.widths[j][k]).max(WIDTH_FLOOR);
            if !g.center.is_finite() || !g.width.is_finite() {
                return Err(Error::Numerical(format!("premise parameter of rule {j} became non-finite")));
            }
        }
    }
    Ok(())
}

/// Hybrid training. Each epoch solves the consequents by least squares and
/// then takes one gradient step on the premises. A final least-squares solve
/// after the last epoch leaves the returned model's consequents optimal for
/// its premises.
pub fn train(
    model: &AnfisModel,
    data: &LabeledDataset,
    validation: Option<&LabeledDataset>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    model.validate()?;
    check_data(model, data)?;
    let mut model = model.clone();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut diagnostics = TrainDiagnostics::default();

    for epoch in 1..=config.epochs {
        let lse = fit_consequents(&mut model, data)?;
        diagnostics.rank_deficient_solves += usize::from(lse.rank_deficient);
        let grad = premise_gradient(&model, data)?;
        apply_premise_step(&mut model, &grad, config.learning_rate)?;
        let after = training_mse(&model, data)?;
        let validation_mse = validation
            .map(|v| metrics::mse(&v.targets, &model.predict_all(&v.inputs)))
            .transpose()?;
        trace.push(EpochStats {
            epoch,
            train_mse: lse.mse,
            train_mse_after_premise: after,
            validation_mse,
        });
    }
    let lse = fit_consequents(&mut model, data)?;
    diagnostics.rank_deficient_solves += usize::from(lse.rank_deficient);
    diagnostics.fallback_samples = data
        .inputs
        .iter()
        .filter(|x| model.evaluate(x.as_slice()).fallback)
        .count();
    Ok(TrainOutcome {
        model,
        trace,
        diagnostics,
    })
}

/// Everything needed to go from a labeled dataset to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisConfig {
    pub clusters: usize,
    pub fuzzifier: f64,
    pub fcm_tolerance: f64,
    pub fcm_max_iter: usize,
    /// Cluster on z-scored inputs. The rules themselves always live in raw
    /// input units.
    pub standardize_clustering: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for AnfisConfig {
    fn default() -> Self {
        Self {
            clusters: 20,
            fuzzifier: 2.0,
            fcm_tolerance: 1e-6,
            fcm_max_iter: 300,
            standardize_clustering: true,
            epochs: TrainConfig::default().epochs,
            learning_rate: TrainConfig::default().learning_rate,
            seed: 0,
        }
    }
}

impl AnfisConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedAnfis {
    pub init_report: InitReport,
    pub fcm_iterations: usize,
    pub outcome: TrainOutcome,
}

fn zscore(inputs: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = inputs.len() as f64;
    let mut mean = [0.0; 2];
    let mut sd = [0.0; 2];
    for d in 0..2 {
        mean[d] = inputs.iter().map(|x| x[d]).sum::<f64>() / n;
        sd[d] = (inputs.iter().map(|x| (x[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd[d] > 0.0) {
            sd[d] = 1.0;
        }
    }
    inputs.iter().map(|x| [(x[0] - mean[0]) / sd[0], (x[1] - mean[1]) / sd[1]]).collect()
}

/// FCM initialization followed by hybrid training.
pub fn fit(data: &LabeledDataset, validation: Option<&LabeledDataset>, config: &AnfisConfig) -> Result<FittedAnfis> {
    let train_config = config.train_config();
    train_config.validate()?;
    let fcm_config = FcmConfig {
        clusters: config.clusters,
        fuzzifier: config.fuzzifier,
        tolerance: config.fcm_tolerance,
        max_iter: config.fcm_max_iter,
        seed: config.seed,
    };
    let points = if config.standardize_clustering {
        zscore(&data.inputs)
    } else {
        data.inputs.clone()
    };
    let clusters = fcm::cluster(&points, &fcm_config)?;
    let (model, init_report) = init_from_fcm(&clusters, &data.inputs)?;
    let outcome = train(&model, data, validation, &train_config)?;
    Ok(FittedAnfis {
        init_report,
        fcm_iterations: clusters.iterations,
        outcome,
    })
}
