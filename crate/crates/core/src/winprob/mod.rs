//! Win-probability models: per-map baseline, logistic regression and
//! histogram gradient-boosted trees, plus metrics, calibration and the
//! model file container.

mod baseline;
mod gbt;
mod logistic;
mod metrics;
mod store;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{vectorize, FeatureError, FeatureMatrix, FeatureSchema};
use crate::model::GameState;

pub use baseline::{train_baseline, BaselineParams};
pub use gbt::{feature_importance, train_gbt, GbtConfig, GbtParams, Importance, Node, Tree};
pub use logistic::{logistic_loss_and_grad, train_logistic, LogisticConfig, LogisticParams};
pub use metrics::{
    auc, by_time_csv, calibration_csv, calibration_curve, calibration_table, evaluate, evaluate_by_time, evaluate_predictions, CalibrationBin,
    EvalReport, Metrics, TimeBinRow,
};
pub use store::{load_model, read_model, save_model, write_model, MODEL_FORMAT_VERSION};

/// Lower clamp for emitted probabilities; the upper clamp is `1 - PROB_EPS`.
pub const PROB_EPS: f64 = 1e-6;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Error)]
pub enum WinProbError {
    #[error("empty input")]
    EmptyInput,
    #[error("training rows carry no outcome labels")]
    MissingLabels,
    #[error("degenerate labels: every training row has the same outcome")]
    DegenerateLabels,
    #[error("non-finite training loss {loss} at epoch {epoch} (learning rate {learning_rate})")]
    NonFiniteLoss { epoch: usize, loss: f64, learning_rate: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("feature importance needs a tree model, got {0}")]
    NotATreeModel(ModelKind),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("model file checksum mismatch (truncated or corrupt)")]
    Checksum,
    #[error("corrupt model payload: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MapAverage,
    Logistic,
    Gbt,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::MapAverage => 0,
            ModelKind::Logistic => 1,
            ModelKind::Gbt => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ModelKind::MapAverage),
            1 => Some(ModelKind::Logistic),
            2 => Some(ModelKind::Gbt),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::MapAverage => "map_average",
            ModelKind::Logistic => "logistic",
            ModelKind::Gbt => "gbt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    MapAverage(BaselineParams),
    Logistic(LogisticParams),
    Gbt(GbtParams),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    pub train_rows: usize,
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinProbModel {
    pub schema: FeatureSchema,
    pub params: ModelParams,
    pub meta: TrainingMeta,
}

impl WinProbModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::MapAverage(_) => ModelKind::MapAverage,
            ModelParams::Logistic(_) => ModelKind::Logistic,
            ModelParams::Gbt(_) => ModelKind::Gbt,
        }
    }

    /// CT win probability of one raw feature row (no schema check).
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = match &self.params {
            ModelParams::MapAverage(b) => b.predict_row(&self.schema, row),
            ModelParams::Logistic(l) => l.predict_row(&self.schema, row),
            ModelParams::Gbt(g) => g.predict_row(row),
        };
        clamp_prob(p)
    }

    pub fn check_matrix(&self, matrix: &FeatureMatrix) -> Result<(), WinProbError> {
        let expected = self.schema.names();
        if matrix.names != expected {
            return Err(WinProbError::SchemaMismatch(format!(
                "model expects features [{}], rows have [{}]",
                expected.join(", "),
                matrix.names.join(", ")
            )));
        }
        Ok(())
    }

    pub fn predict_state(&self, state: &GameState) -> Result<f64, WinProbError> {
        let m = vectorize(std::slice::from_ref(state), &self.schema)?;
        Ok(self.predict_row(m.row(0)))
    }
}

/// Batch prediction, parallel over row blocks.
pub fn predict(model: &WinProbModel, matrix: &FeatureMatrix) -> Result<Vec<f64>, WinProbError> {
    model.check_matrix(matrix)?;
    if matrix.n_cols == 0 {
        return Ok(Vec::new());
    }
    Ok(matrix
        .data
        .par_chunks(matrix.n_cols * 1024)
        .flat_map_iter(|block| block.chunks_exact(matrix.n_cols).map(|r| model.predict_row(r)).collect::<Vec<_>>())
        .collect())
}

/// Vectorizes under the model's schema and predicts.
pub fn predict_states(model: &WinProbModel, states: &[GameState]) -> Result<Vec<f64>, WinProbError> {
    let m = vectorize(states, &model.schema)?;
    predict(model, &m)
}

pub(crate) fn require_labels(matrix: &FeatureMatrix) -> Result<&[bool], WinProbError> {
    if matrix.n_rows() == 0 {
        return Err(WinProbError::EmptyInput);
    }
    matrix.labels.as_deref().ok_or(WinProbError::MissingLabels)
}
