use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{clamp_prob, predict, require_labels, WinProbError, WinProbModel, PROB_EPS};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub log_loss: f64,
    pub brier: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    /// Share of rows where `p >= 0.5` agrees with the label.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub bin: usize,
    pub mean_predicted: f64,
    pub mean_observed: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBinRow {
    pub bin: i64,
    pub start_seconds: f64,
    pub end_seconds: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: String,
    /// Probabilities are clamped to `[prob_clamp, 1 - prob_clamp]`.
    pub prob_clamp: f64,
    pub metrics: Metrics,
    pub calibration: Vec<CalibrationBin>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub by_time: Vec<TimeBinRow>,
}

/// Rank-statistic AUC with midranks for ties.
pub fn auc(p: &[f64], y: &[bool]) -> Option<f64> {
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && p[idx[j + 1]] == p[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * idx[i..=j].iter().filter(|&&k| y[k]).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

pub fn evaluate_predictions(p: &[f64], y: &[bool]) -> Result<Metrics, WinProbError> {
    if p.is_empty() {
        return Err(WinProbError::EmptyInput);
    }
    assert_eq!(p.len(), y.len(), "prediction / label length mismatch");
    let n = p.len() as f64;
    let (mut ll, mut brier, mut correct) = (0.0, 0.0, 0usize);
    for (&pi, &yi) in p.iter().zip(y) {
        let pi = clamp_prob(pi);
        let t = if yi { 1.0 } else { 0.0 };
        ll -= t * pi.ln() + (1.0 - t) * (1.0 - pi).ln();
        brier += (pi - t) * (pi - t);
        correct += ((pi >= 0.5) == yi) as usize;
    }
    Ok(Metrics {
        n: p.len(),
        log_loss: ll / n,
        brier: brier / n,
        auc: auc(p, y),
        accuracy: correct as f64 / n,
    })
}

/// Equal-width reliability table; empty bins are omitted.
pub fn calibration_table(p: &[f64], y: &[bool], n_bins: usize) -> Result<Vec<CalibrationBin>, WinProbError> {
    if n_bins < 2 {
        return Err(WinProbError::InvalidConfig(format!("calibration needs at least 2 bins, got {n_bins}")));
    }
    let mut acc = vec![(0.0, 0usize, 0usize); n_bins];
    for (&pi, &yi) in p.iter().zip(y) {
        let b = ((pi * n_bins as f64).floor() as usize).min(n_bins - 1);
        acc[b].0 += pi;
        acc[b].1 += yi as usize;
        acc[b].2 += 1;
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .filter(|(_, (_, _, c))| *c > 0)
        .map(|(bin, (sp, sy, c))| CalibrationBin {
            bin,
            mean_predicted: sp / c as f64,
            mean_observed: sy as f64 / c as f64,
            count: c,
        })
        .collect())
}

pub fn calibration_curve(
    model: &WinProbModel,
    matrix: &FeatureMatrix,
    n_bins: usize,
) -> Result<Vec<CalibrationBin>, WinProbError> {
    let y = require_labels(matrix)?;
    let p = predict(model, matrix)?;
    calibration_table(&p, y, n_bins)
}

pub const DEFAULT_CALIBRATION_BINS: usize = 100;

pub fn evaluate(model: &WinProbModel, matrix: &FeatureMatrix) -> Result<EvalReport, WinProbError> {
    let y = require_labels(matrix)?;
    let p = predict(model, matrix)?;
    Ok(EvalReport {
        model_kind: model.kind().to_string(),
        prob_clamp: PROB_EPS,
        metrics: evaluate_predictions(&p, y)?,
        calibration: calibration_table(&p, y, DEFAULT_CALIBRATION_BINS)?,
        by_time: Vec::new(),
    })
}

/// Metrics per elapsed-time bin `floor(seconds / bin_seconds)`; empty bins
/// are omitted.
pub fn evaluate_by_time(
    model: &WinProbModel,
    matrix: &FeatureMatrix,
    bin_seconds: f64,
) -> Result<Vec<TimeBinRow>, WinProbError> {
    if !(bin_seconds > 0.0) {
        return Err(WinProbError::InvalidConfig(format!("time bin width must be positive, got {bin_seconds}")));
    }
    let y = require_labels(matrix)?;
    let p = predict(model, matrix)?;
    let mut groups: BTreeMap<i64, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for ((meta, &pi), &yi) in matrix.meta.iter().zip(&p).zip(y) {
        let g = groups.entry((meta.seconds / bin_seconds).floor() as i64).or_default();
        g.0.push(pi);
        g.1.push(yi);
    }
    groups
        .into_iter()
        .map(|(bin, (p, y))| {
            Ok(TimeBinRow {
                bin,
                start_seconds: bin as f64 * bin_seconds,
                end_seconds: (bin + 1) as f64 * bin_seconds,
                metrics: evaluate_predictions(&p, &y)?,
            })
        })
        .collect()
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn metrics_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "n", "log_loss", "brier", "auc", "accuracy"]).expect("in-memory write");
        let m = &self.metrics;
        w.write_record([
            self.model_kind.clone(),
            m.n.to_string(),
            m.log_loss.to_string(),
            m.brier.to_string(),
            m.auc.map(|a| a.to_string()).unwrap_or_default(),
            m.accuracy.to_string(),
        ])
        .expect("in-memory write");
        into_string(w)
    }

    pub fn calibration_csv(&self) -> String {
        calibration_csv(&self.calibration)
    }

    pub fn by_time_csv(&self) -> String {
        by_time_csv(&self.by_time)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn calibration_csv(bins: &[CalibrationBin]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in bins {
        w.serialize(b).expect("in-memory write");
    }
    if bins.is_empty() {
        w.write_record(["bin", "mean_predicted", "mean_observed", "count"]).expect("in-memory write");
    }
    into_string(w)
}

pub fn by_time_csv(rows: &[TimeBinRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin", "start_seconds", "end_seconds", "n", "log_loss", "brier", "auc", "accuracy"])
        .expect("in-memory write");
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.bin.to_string(),
            r.start_seconds.to_string(),
            r.end_seconds.to_string(),
            m.n.to_string(),
            m.log_loss.to_string(),
            m.brier.to_string(),
            m.auc.map(|a| a.to_string()).unwrap_or_default(),
            m.accuracy.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_small_example() {
        assert_eq!(auc(&[0.9, 0.8, 0.3], &[true, false, false]), Some(1.0));
        assert_eq!(auc(&[0.5, 0.5], &[true, false]), Some(0.5));
        assert_eq!(auc(&[0.1, 0.9], &[true, true]), None);
    }

    #[test]
    fn constant_half_identities() {
        let y: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
        let m = evaluate_predictions(&vec![0.5; 1000], &y).unwrap();
        assert!((m.log_loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((m.brier - 0.25).abs() < 1e-12);
        assert_eq!(m.auc, Some(0.5));
    }

    #[test]
    fn perfect_predictions_are_clamped() {
        let m = evaluate_predictions(&[1.0, 0.0], &[true, false]).unwrap();
        assert!(m.log_loss > 0.0 && m.log_loss < 2e-6);
        assert!(m.brier < 1e-11);
        assert_eq!(m.auc, Some(1.0));
    }

    #[test]
    fn calibration_bins() {
        let t = calibration_table(&[0.5, 0.5, 0.5], &[true, false, true], 100).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].bin, 50);
        assert_eq!(t[0].count, 3);
        let t = calibration_table(&[1.0], &[true], 10).unwrap();
        assert_eq!(t[0].bin, 9);
        assert!(calibration_table(&[0.5], &[true], 1).is_err());
    }
}
