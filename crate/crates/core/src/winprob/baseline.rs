use serde::{Deserialize, Serialize};

use super::{require_labels, ModelParams, TrainingMeta, WinProbError, WinProbModel};
use crate::features::{FeatureMatrix, FeatureSchema, MAP};

/// Per-map CT win rate, indexed by map vocabulary code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub map_rates: Vec<f64>,
    pub global_rate: f64,
}

impl BaselineParams {
    pub(crate) fn predict_row(&self, schema: &FeatureSchema, row: &[f64]) -> f64 {
        let col = schema.index_of(MAP).expect("schemas always carry the map feature");
        self.map_rates.get(row[col] as usize).copied().unwrap_or(self.global_rate)
    }
}

/// Map-average benchmark: predicts the training CT win rate of the state's
/// map; maps without training rows fall back to the global rate.
pub fn train_baseline(schema: &FeatureSchema, matrix: &FeatureMatrix) -> Result<WinProbModel, WinProbError> {
    let labels = require_labels(matrix)?;
    let col = schema.index_of(MAP).expect("schemas always carry the map feature");
    let n_maps = schema.map_vocab.len();
    let mut wins = vec![0usize; n_maps];
    let mut counts = vec![0usize; n_maps];
    for (row, &y) in matrix.rows().zip(labels) {
        let code = row[col] as usize;
        if code < n_maps {
            counts[code] += 1;
            wins[code] += y as usize;
        }
    }
    let global_rate = labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64;
    let map_rates = wins
        .iter()
        .zip(&counts)
        .map(|(&w, &c)| if c == 0 { global_rate } else { w as f64 / c as f64 })
        .collect();
    Ok(WinProbModel {
        schema: schema.clone(),
        params: ModelParams::MapAverage(BaselineParams { map_rates, global_rate }),
        meta: TrainingMeta {
            train_rows: matrix.n_rows(),
            hyperparameters: serde_json::json!({}),
            ..Default::default()
        },
    })
}
