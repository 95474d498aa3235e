use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::Statistics;

use super::{classic_metrics, wpa, ActionValue, ClassicConfig, ValuationError};
use crate::model::MatchRecord;

pub const METRIC_WPA: &str = "wpa";
pub const METRIC_KDR: &str = "kdr";
pub const METRIC_ADR: &str = "adr";
pub const METRIC_KAST: &str = "kast";
pub const METRIC_RATING: &str = "rating_1_0";

/// One player's metric values over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub player: String,
    pub period: String,
    pub rounds: u32,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityConfig {
    /// A player counts in a period only with at least this many rounds.
    pub min_rounds: u32,
    /// The metric compared against every other one.
    pub focus: String,
    /// The metric whose correlation measures (lack of) independence.
    pub reference: String,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            min_rounds: 100,
            focus: METRIC_WPA.into(),
            reference: METRIC_KDR.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    /// Pearson correlation between consecutive periods, pooled over pairs.
    pub stability_r: f64,
    pub stability_n: usize,
    /// Pearson correlation with the reference metric over qualifying rows.
    pub reference_r: f64,
    pub reference_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    pub z1: f64,
    pub z2: f64,
    pub statistic: f64,
    /// `P(Z >= statistic)`: small when the first correlation is larger.
    pub p_one_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub periods: Vec<String>,
    pub correlations: Vec<MetricCorrelation>,
    /// Focus metric more stable than each other metric.
    pub stability_tests: BTreeMap<String, CorrelationTest>,
    /// Focus metric less correlated with the reference than each other metric.
    pub independence_tests: BTreeMap<String, CorrelationTest>,
}

/// `½ ln((1 + r) / (1 - r))`; infinite for `|r| = 1`.
pub fn fisher_z(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        log::warn!("Fisher z of r = {r} is infinite");
        return f64::INFINITY.copysign(r);
    }
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

/// Pearson correlation; `None` with fewer than 2 points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs paired samples");
    if x.len() < 2 {
        return None;
    }
    let (sx, sy) = (x.iter().std_dev(), y.iter().std_dev());
    if !(sx > 0.0 && sy > 0.0) {
        return None;
    }
    Some((x.iter().covariance(y.iter()) / (sx * sy)).clamp(-1.0, 1.0))
}

/// One-sided test that the correlation behind `r1` (sample size `n1`)
/// exceeds the one behind `r2`.
pub fn compare_correlations(r1: f64, n1: usize, r2: f64, n2: usize) -> Result<CorrelationTest, ValuationError> {
    if n1 <= 3 || n2 <= 3 {
        return Err(ValuationError::Stability(format!(
            "correlation test needs more than 3 samples per correlation (got {n1} and {n2})"
        )));
    }
    let (z1, z2) = (fisher_z(r1), fisher_z(r2));
    let se = (1.0 / (n1 as f64 - 3.0) + 1.0 / (n2 as f64 - 3.0)).sqrt();
    let statistic = (z1 - z2) / se;
    let normal = Normal::standard();
    Ok(CorrelationTest {
        z1,
        z2,
        statistic,
        p_one_sided: normal.sf(statistic),
    })
}

/// Per-player metrics for every calendar month (`YYYY-MM`) of match dates.
pub fn monthly_metrics(
    records: &[MatchRecord],
    actions: &[ActionValue],
    config: &ClassicConfig,
    include_received: bool,
) -> Result<Vec<PeriodMetrics>, ValuationError> {
    let mut months: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in records.iter().enumerate() {
        months.entry(m.date.format("%Y-%m").to_string()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (period, idx) in months {
        let subset: Vec<MatchRecord> = idx.iter().map(|&i| records[i].clone()).collect();
        let ids: std::collections::HashSet<&str> = subset.iter().map(|m| m.match_id.as_str()).collect();
        let acts: Vec<ActionValue> = actions.iter().filter(|a| ids.contains(a.match_id.as_str())).cloned().collect();
        let rounds = super::rounds_played(&subset);
        let w = wpa(&acts, &rounds, include_received)?;
        let view: Vec<_> = subset.iter().flat_map(|m| m.rounds.iter().map(move |r| (m, r))).collect();
        let classic = classic_metrics(view, config)?;
        for (player, n) in rounds {
            let c = &classic[&player];
            let values = BTreeMap::from([
                (METRIC_WPA.to_string(), w[&player]),
                (METRIC_KDR.to_string(), c.kdr),
                (METRIC_ADR.to_string(), c.adr),
                (METRIC_KAST.to_string(), c.kast_pct),
                (METRIC_RATING.to_string(), c.rating_1_0),
            ]);
            out.push(PeriodMetrics {
                player,
                period: period.clone(),
                rounds: n,
                values,
            });
        }
    }
    Ok(out)
}

/// Period-to-period stability and independence from the reference metric,
/// with Fisher-z difference tests of the focus metric against the others.
pub fn stability_analysis(
    table: &[PeriodMetrics],
    metrics: &[&str],
    config: &StabilityConfig,
) -> Result<StabilityReport, ValuationError> {
    let mut periods: Vec<String> = table.iter().map(|r| r.period.clone()).collect();
    periods.sort();
    periods.dedup();
    if periods.len() < 2 {
        return Err(ValuationError::Stability(format!("need at least 2 periods, got {}", periods.len())));
    }
    let qualifying: BTreeMap<(&str, &str), &PeriodMetrics> = table
        .iter()
        .filter(|r| r.rounds >= config.min_rounds)
        .map(|r| ((r.period.as_str(), r.player.as_str()), r))
        .collect();
    let mut players: Vec<&str> = qualifying.keys().map(|(_, p)| *p).collect();
    players.sort();
    players.dedup();
    if players.len() < 4 {
        return Err(ValuationError::Stability(format!(
            "need at least 4 players with {} or more rounds in a period, got {}",
            config.min_rounds,
            players.len()
        )));
    }
    let value = |row: &PeriodMetrics, metric: &str| -> Result<f64, ValuationError> {
        row.values
            .get(metric)
            .copied()
            .ok_or_else(|| ValuationError::Stability(format!("metric {metric:?} missing for {} in {}", row.player, row.period)))
    };

    let mut correlations = Vec::new();
    for &metric in metrics {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for pair in periods.windows(2) {
            for &p in &players {
                if let (Some(a), Some(b)) = (qualifying.get(&(&pair[0], p)), qualifying.get(&(&pair[1], p))) {
                    x.push(value(a, metric)?);
                    y.push(value(b, metric)?);
                }
            }
        }
        let (mut m, mut r) = (Vec::new(), Vec::new());
        for row in qualifying.values() {
            m.push(value(row, metric)?);
            r.push(value(row, &config.reference)?);
        }
        let undefined = |what: &str| ValuationError::Stability(format!("{what} correlation of {metric:?} is undefined"));
        correlations.push(MetricCorrelation {
            metric: metric.to_string(),
            stability_r: pearson(&x, &y).ok_or_else(|| undefined("period-to-period"))?,
            stability_n: x.len(),
            reference_r: pearson(&m, &r).ok_or_else(|| undefined("reference"))?,
            reference_n: m.len(),
        });
    }

    let mut stability_tests = BTreeMap::new();
    let mut independence_tests = BTreeMap::new();
    if let Some(focus) = correlations.iter().find(|c| c.metric == config.focus) {
        for other in correlations.iter().filter(|c| c.metric != config.focus) {
            stability_tests.insert(
                other.metric.clone(),
                compare_correlations(focus.stability_r, focus.stability_n, other.stability_r, other.stability_n)?,
            );
            if other.metric != config.reference {
                independence_tests.insert(
                    other.metric.clone(),
                    compare_correlations(other.reference_r, other.reference_n, focus.reference_r, focus.reference_n)?,
                );
            }
        }
    }
    Ok(StabilityReport {
        periods,
        correlations,
        stability_tests,
        independence_tests,
    })
}
