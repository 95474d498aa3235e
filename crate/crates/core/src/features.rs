//! Game states to fixed-width numeric rows.
//!
//! A [`FeatureMatrix`] stores raw values, one column per schema feature, with
//! categoricals stored as vocabulary codes. Trees consume these directly; the
//! logistic model expands them through [`FeatureSchema::design_row`], which
//! standardizes numerics and one-hot encodes categoricals. Zero-variance
//! numerics are centered but not scaled.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BombSite, GameState};

pub const SCHEMA_VERSION: u16 = 1;

pub const MAP: &str = "map";
pub const TICKS_SINCE_START: &str = "ticks_since_start";
pub const CT_EQUIP_VALUE: &str = "ct_equip_value";
pub const T_EQUIP_VALUE: &str = "t_equip_value";
pub const CT_PLAYERS_ALIVE: &str = "ct_players_alive";
pub const T_PLAYERS_ALIVE: &str = "t_players_alive";
pub const CT_HP_TOTAL: &str = "ct_hp_total";
pub const T_HP_TOTAL: &str = "t_hp_total";
pub const BOMB_PLANTED: &str = "bomb_planted";
pub const BOMB_SITE: &str = "bomb_site";
pub const CT_DIST_A: &str = "ct_dist_a";
pub const CT_DIST_B: &str = "ct_dist_b";
pub const T_DIST_A: &str = "t_dist_a";
pub const T_DIST_B: &str = "t_dist_b";

const BASE_FEATURES: [(&str, FeatureKind); 10] = [
    (MAP, FeatureKind::Categorical),
    (TICKS_SINCE_START, FeatureKind::Numeric),
    (CT_EQUIP_VALUE, FeatureKind::Numeric),
    (T_EQUIP_VALUE, FeatureKind::Numeric),
    (CT_PLAYERS_ALIVE, FeatureKind::Numeric),
    (T_PLAYERS_ALIVE, FeatureKind::Numeric),
    (CT_HP_TOTAL, FeatureKind::Numeric),
    (T_HP_TOTAL, FeatureKind::Numeric),
    (BOMB_PLANTED, FeatureKind::Numeric),
    (BOMB_SITE, FeatureKind::Categorical),
];
const DISTANCE_FEATURES: [&str; 4] = [CT_DIST_A, CT_DIST_B, T_DIST_A, T_DIST_B];

/// Bomb-site vocabulary: code 0 = not planted.
pub const SITE_VOCAB: [&str; 3] = ["none", "A", "B"];

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit a feature schema on an empty state set")]
    EmptyInput,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u16,
    pub features: Vec<FeatureSpec>,
    pub map_vocab: Vec<String>,
    /// Per-column mean and population standard deviation on the fit set
    /// (raw values; categorical columns carry 0 / 0 and are never scaled).
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Finite stand-in for unreachable bombsite distances.
    pub unreachable_value: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Drop the distance features even when every state carries them.
    pub drop_distances: bool,
    /// Value substituted for unreachable distances. Defaults to `graph_nodes`
    /// when set, else one more than the largest finite distance in the fit set.
    pub unreachable_value: Option<f64>,
    pub graph_nodes: Option<usize>,
}

/// Per-row bookkeeping kept next to the numeric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub match_id: Arc<str>,
    pub round_num: u32,
    pub tick: i64,
    pub ticks_since_start: i64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub n_cols: usize,
    /// Row-major raw values.
    pub data: Vec<f64>,
    /// CT-win labels, present when every state was labeled.
    pub labels: Option<Vec<bool>>,
    pub meta: Vec<RowMeta>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.meta.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            names: self.names.clone(),
            n_cols: self.n_cols,
            data,
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }
}

fn distances_of(s: &GameState) -> [Option<f64>; 4] {
    [s.ct_dist_a, s.ct_dist_b, s.t_dist_a, s.t_dist_b]
}

fn site_code(site: Option<BombSite>) -> f64 {
    match site {
        None => 0.0,
        Some(BombSite::A) => 1.0,
        Some(BombSite::B) => 2.0,
    }
}

/// Fits vocabularies, standardization statistics and the unreachable-distance
/// constant on a (training) state set.
pub fn fit_schema(states: &[GameState], options: &FitOptions) -> Result<FeatureSchema, FeatureError> {
    if states.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let with_distances = !options.drop_distances && states.iter().all(|s| s.has_distances());
    let mut features: Vec<FeatureSpec> = BASE_FEATURES
        .iter()
        .map(|&(name, kind)| FeatureSpec { name: name.into(), kind })
        .collect();
    let mut unreachable_value = None;
    if with_distances {
        features.extend(DISTANCE_FEATURES.iter().map(|&name| FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }));
        let fallback = || {
            let max_finite = states
                .iter()
                .flat_map(distances_of)
                .flatten()
                .filter(|d| d.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            if max_finite.is_finite() {
                max_finite + 1.0
            } else {
                1.0
            }
        };
        unreachable_value = Some(
            options
                .unreachable_value
                .or(options.graph_nodes.map(|n| n as f64))
                .unwrap_or_else(fallback),
        );
    }
    let map_vocab: Vec<String> = states
        .iter()
        .map(|s| s.map_name.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut schema = FeatureSchema {
        version: SCHEMA_VERSION,
        features,
        map_vocab,
        means: Vec::new(),
        stds: Vec::new(),
        unreachable_value,
    };
    let n_cols = schema.features.len();
    let rows: Vec<Vec<f64>> = states.iter().map(|s| schema.raw_row(s)).collect();
    let n = rows.len() as f64;
    let mut means = vec![0.0; n_cols];
    for r in &rows {
        for (m, v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; n_cols];
    for r in &rows {
        for ((acc, v), m) in vars.iter_mut().zip(r).zip(&means) {
            *acc += (v - m) * (v - m);
        }
    }
    let mut stds: Vec<f64> = vars.iter().map(|v| (v / n).sqrt()).collect();
    for (j, f) in schema.features.iter().enumerate() {
        if f.kind == FeatureKind::Categorical {
            means[j] = 0.0;
            stds[j] = 0.0;
        }
    }
    // guard against round-off leaving a tiny positive spread on constant columns
    for (j, s) in stds.iter_mut().enumerate() {
        if *s <= 1e-12 * means[j].abs().max(1.0) {
            *s = 0.0;
        }
    }
    schema.means = means;
    schema.stds = stds;
    Ok(schema)
}

impl FeatureSchema {
    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn has_distances(&self) -> bool {
        self.unreachable_value.is_some()
    }

    /// Vocabulary code of a map; unseen maps get `map_vocab.len()`.
    pub fn map_code(&self, map: &str) -> usize {
        self.map_vocab.iter().position(|m| m == map).unwrap_or(self.map_vocab.len())
    }

    /// Number of levels (including the unseen bucket for maps) of a
    /// categorical column.
    pub fn n_categories(&self, col: usize) -> usize {
        match self.features[col].name.as_str() {
            MAP => self.map_vocab.len() + 1,
            BOMB_SITE => SITE_VOCAB.len(),
            _ => 0,
        }
    }

    fn raw_row(&self, s: &GameState) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.features.len());
        row.extend_from_slice(&[
            self.map_code(&s.map_name) as f64,
            s.ticks_since_start as f64,
            s.ct_equip_value as f64,
            s.t_equip_value as f64,
            s.ct_players_alive as f64,
            s.t_players_alive as f64,
            s.ct_hp_total as f64,
            s.t_hp_total as f64,
            if s.bomb_planted { 1.0 } else { 0.0 },
            site_code(s.bomb_site),
        ]);
        if let Some(unreachable) = self.unreachable_value {
            for d in distances_of(s) {
                let d = d.unwrap_or(f64::INFINITY);
                row.push(if d.is_finite() { d } else { unreachable });
            }
        }
        row
    }

    fn check_state(&self, s: &GameState) -> Result<(), FeatureError> {
        let has = distances_of(s).iter().any(Option::is_some);
        if self.has_distances() && !s.has_distances() {
            return Err(FeatureError::SchemaMismatch(format!(
                "schema expects bombsite distances but state at tick {} of {} round {} has none (replay without a navmesh?)",
                s.tick, s.match_id, s.round_num
            )));
        }
        if !self.has_distances() && has {
            return Err(FeatureError::SchemaMismatch(format!(
                "schema has no bombsite distance features but state at tick {} of {} round {} carries them",
                s.tick, s.match_id, s.round_num
            )));
        }
        Ok(())
    }

    /// Width of the logistic design row.
    pub fn design_width(&self) -> usize {
        self.design_names().len()
    }

    /// Column names of the logistic design: intercept, standardized numerics
    /// (bomb_planted excluded, it is the sum of the site indicators), map
    /// dummies against the first vocabulary entry, then site indicators.
    pub fn design_names(&self) -> Vec<String> {
        let mut names = vec!["intercept".to_string()];
        for f in &self.features {
            if f.kind == FeatureKind::Numeric && f.name != BOMB_PLANTED {
                names.push(f.name.clone());
            }
        }
        for m in self.map_vocab.iter().skip(1) {
            names.push(format!("map={m}"));
        }
        names.push("bomb_site=A".into());
        names.push("bomb_site=B".into());
        names
    }

    /// Expands one raw row into the logistic design. `out` must have
    /// `design_width()` entries.
    pub fn design_row(&self, raw: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        let mut k = 1;
        let mut map_code = 0usize;
        let mut site = 0usize;
        for (j, f) in self.features.iter().enumerate() {
            match f.kind {
                FeatureKind::Numeric if f.name != BOMB_PLANTED => {
                    out[k] = if self.stds[j] > 0.0 {
                        (raw[j] - self.means[j]) / self.stds[j]
                    } else {
                        raw[j] - self.means[j]
                    };
                    k += 1;
                }
                FeatureKind::Numeric => {}
                FeatureKind::Categorical if f.name == MAP => map_code = raw[j] as usize,
                FeatureKind::Categorical => site = raw[j] as usize,
            }
        }
        let n_dummies = self.map_vocab.len().saturating_sub(1);
        out[k..k + n_dummies].iter_mut().for_each(|v| *v = 0.0);
        if map_code >= 1 && map_code < self.map_vocab.len() {
            out[k + map_code - 1] = 1.0;
        }
        k += n_dummies;
        out[k] = (site == 1) as u8 as f64;
        out[k + 1] = (site == 2) as u8 as f64;
    }
}

const CHUNK: usize = 4096;

/// Vectorizes states under a fitted schema, preserving state order.
pub fn vectorize(states: &[GameState], schema: &FeatureSchema) -> Result<FeatureMatrix, FeatureError> {
    let n_cols = schema.n_features();
    let chunks: Vec<Result<Vec<f64>, FeatureError>> = states
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut data = Vec::with_capacity(chunk.len() * n_cols);
            for s in chunk {
                schema.check_state(s)?;
                data.extend(schema.raw_row(s));
            }
            Ok(data)
        })
        .collect();
    let mut data = Vec::with_capacity(states.len() * n_cols);
    for c in chunks {
        data.extend(c?);
    }

    let unseen: BTreeSet<&str> = states
        .iter()
        .map(|s| &*s.map_name)
        .filter(|m| !schema.map_vocab.iter().any(|v| v == m))
        .collect();
    for m in unseen {
        log::warn!("map {m:?} was not seen when the schema was fitted; encoding it as all-zero dummies");
    }

    let labels = states.iter().map(|s| s.outcome_label).collect::<Option<Vec<bool>>>();
    let meta = states
        .iter()
        .map(|s| RowMeta {
            match_id: Arc::clone(&s.match_id),
            round_num: s.round_num,
            tick: s.tick,
            ticks_since_start: s.ticks_since_start,
            seconds: s.seconds_since_start(),
        })
        .collect();
    Ok(FeatureMatrix {
        names: schema.names(),
        n_cols,
        data,
        labels,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    pub(crate) fn state(map: &str) -> GameState {
        GameState {
            match_id: Arc::from("m"),
            match_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            map_name: Arc::from(map),
            round_num: 1,
            tick_rate: 128,
            tick: 0,
            ticks_since_start: 0,
            ct_equip_value: 4000,
            t_equip_value: 4000,
            ct_players_alive: 5,
            t_players_alive: 5,
            ct_hp_total: 500,
            t_hp_total: 500,
            bomb_planted: false,
            bomb_site: None,
            ct_dist_a: None,
            ct_dist_b: None,
            t_dist_a: None,
            t_dist_b: None,
            outcome_label: Some(true),
        }
    }

    #[test]
    fn single_map_vocab_and_constant_passthrough() {
        let states = vec![state("de_nuke"), state("de_nuke")];
        let schema = fit_schema(&states, &FitOptions::default()).unwrap();
        assert_eq!(schema.map_vocab, vec!["de_nuke"]);
        let j = schema.index_of(BOMB_PLANTED).unwrap();
        assert_eq!(schema.stds[j], 0.0);
        assert!(!schema.has_distances());
        assert_eq!(schema.n_features(), 10);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(fit_schema(&[], &FitOptions::default()), Err(FeatureError::EmptyInput));
    }

    #[test]
    fn initial_and_planted_rows() {
        let mut planted = state("de_nuke");
        planted.bomb_planted = true;
        planted.bomb_site = Some(BombSite::A);
        let states = vec![state("de_nuke"), planted];
        let schema = fit_schema(&states, &FitOptions::default()).unwrap();
        let m = vectorize(&states, &schema).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 4000.0, 4000.0, 5.0, 5.0, 500.0, 500.0, 0.0, 0.0]);
        assert_eq!(m.row(1)[8..], [1.0, 1.0]);
        let mut design = vec![0.0; schema.design_width()];
        schema.design_row(m.row(1), &mut design);
        assert_eq!(design[design.len() - 2..], [1.0, 0.0]);
    }

    #[test]
    fn unseen_map_gets_zero_dummies() {
        let states = vec![state("de_dust2"), state("de_nuke")];
        let schema = fit_schema(&states, &FitOptions::default()).unwrap();
        let m = vectorize(&[state("de_vertigo")], &schema).unwrap();
        assert_eq!(m.row(0)[0], 2.0);
        let mut design = vec![0.0; schema.design_width()];
        schema.design_row(m.row(0), &mut design);
        let names = schema.design_names();
        let dummy = names.iter().position(|n| n == "map=de_nuke").unwrap();
        assert_eq!(design[dummy], 0.0);
    }

    #[test]
    fn distance_presence_must_match_schema() {
        let mut with = state("de_nuke");
        with.ct_dist_a = Some(3.0);
        with.ct_dist_b = Some(f64::INFINITY);
        with.t_dist_a = Some(1.0);
        with.t_dist_b = Some(2.0);
        let schema = fit_schema(&[with.clone()], &FitOptions::default()).unwrap();
        assert_eq!(schema.unreachable_value, Some(4.0));
        let m = vectorize(&[with.clone()], &schema).unwrap();
        assert_eq!(m.row(0)[10..], [3.0, 4.0, 1.0, 2.0]);
        assert!(matches!(vectorize(&[state("de_nuke")], &schema), Err(FeatureError::SchemaMismatch(_))));

        let plain = fit_schema(&[state("de_nuke")], &FitOptions::default()).unwrap();
        assert!(matches!(vectorize(&[with], &plain), Err(FeatureError::SchemaMismatch(_))));
    }

    #[test]
    fn graph_node_count_is_default_unreachable_constant() {
        let mut s = state("de_nuke");
        s.ct_dist_a = Some(1.0);
        s.ct_dist_b = Some(1.0);
        s.t_dist_a = Some(1.0);
        s.t_dist_b = Some(f64::INFINITY);
        let schema = fit_schema(
            &[s],
            &FitOptions {
                graph_nodes: Some(40),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(schema.unreachable_value, Some(40.0));
    }
}
