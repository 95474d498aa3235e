use serde::{Deserialize, Serialize};

use super::{require_labels, sigmoid, ModelParams, TrainingMeta, WinProbError, WinProbModel};
use crate::features::{FeatureMatrix, FeatureSchema};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Coefficients over the schema's logistic design (see
/// [`FeatureSchema::design_names`]); index 0 is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Training loss before the first step and after every epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_history: Vec<f64>,
}

impl LogisticParams {
    pub(crate) fn predict_row(&self, schema: &FeatureSchema, row: &[f64]) -> f64 {
        let mut x = [0.0f64; 64];
        let d = self.coefficients.len();
        let x = if d <= x.len() {
            &mut x[..d]
        } else {
            return self.predict_row_heap(schema, row);
        };
        schema.design_row(row, x);
        sigmoid(dot(x, &self.coefficients))
    }

    fn predict_row_heap(&self, schema: &FeatureSchema, row: &[f64]) -> f64 {
        let mut x = vec![0.0; self.coefficients.len()];
        schema.design_row(row, &mut x);
        sigmoid(dot(&x, &self.coefficients))
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log loss and its gradient for a row-major design `x` (`d` columns).
/// Computed from the logit directly so it stays finite for large margins.
pub fn logistic_loss_and_grad(x: &[f64], d: usize, y: &[bool], w: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut grad = vec![0.0; d];
    let mut loss = 0.0;
    for (row, &yi) in x.chunks_exact(d).zip(y) {
        let z = dot(row, w);
        // -[y ln σ(z) + (1-y) ln(1-σ(z))] = log(1+e^z) - y z
        loss += log1pexp(z) - if yi { z } else { 0.0 };
        let r = sigmoid(z) - if yi { 1.0 } else { 0.0 };
        for (g, xj) in grad.iter_mut().zip(row) {
            *g += r * xj;
        }
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    (loss * inv, grad)
}

/// Unregularized logistic regression by full-batch gradient descent with a
/// fixed step on the standardized design.
pub fn train_logistic(
    schema: &FeatureSchema,
    matrix: &FeatureMatrix,
    config: &LogisticConfig,
) -> Result<WinProbModel, WinProbError> {
    let labels = require_labels(matrix)?;
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(WinProbError::InvalidConfig(format!("learning rate must be positive, got {}", config.learning_rate)));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(WinProbError::DegenerateLabels);
    }
    let d = schema.design_width();
    let mut x = vec![0.0; matrix.n_rows() * d];
    for (row, out) in matrix.rows().zip(x.chunks_exact_mut(d)) {
        schema.design_row(row, out);
    }

    let mut w = vec![0.0; d];
    let mut history = Vec::with_capacity(config.epochs + 1);
    let (mut loss, mut grad) = logistic_loss_and_grad(&x, d, labels, &w);
    history.push(loss);
    for epoch in 1..=config.epochs {
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= config.learning_rate * gj;
        }
        (loss, grad) = logistic_loss_and_grad(&x, d, labels, &w);
        if !loss.is_finite() {
            return Err(WinProbError::NonFiniteLoss {
                epoch,
                loss,
                learning_rate: config.learning_rate,
            });
        }
        history.push(loss);
    }
    log::debug!("logistic: final training loss {loss:.6} after {} epochs", config.epochs);
    Ok(WinProbModel {
        schema: schema.clone(),
        params: ModelParams::Logistic(LogisticParams {
            names: schema.design_names(),
            coefficients: w,
            loss_history: history,
        }),
        meta: TrainingMeta {
            seed: config.seed,
            hyperparameters: serde_json::to_value(config).expect("config serializes"),
            train_rows: matrix.n_rows(),
            split: None,
        },
    })
}
