#![allow(dead_code)]

use std::path::PathBuf;

use csgo_wpa::features::{fit_schema, FitOptions};
use csgo_wpa::ingest::{generate_synthetic, parse_match, SyntheticConfig};
use csgo_wpa::model::{replay_match, GameState, MatchRecord};
use csgo_wpa::winprob::{LogisticParams, ModelParams, TrainingMeta, WinProbModel};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_match(name: &str) -> MatchRecord {
    let bytes = std::fs::read(fixture(name)).expect("fixture exists");
    parse_match(&bytes).expect("fixture is valid")
}

pub fn all_states(records: &[MatchRecord]) -> Vec<GameState> {
    records
        .iter()
        .flat_map(|m| replay_match(m, None).expect("replays").into_iter().flatten())
        .collect()
}

pub fn synthetic_states(config: &SyntheticConfig) -> Vec<GameState> {
    all_states(&generate_synthetic(config).matches)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Logistic model over raw (unscaled) feature values with the given design
/// coefficients; every other coefficient is zero.
pub fn raw_logistic(states: &[GameState], coefficients: &[(&str, f64)]) -> WinProbModel {
    let mut schema = fit_schema(states, &FitOptions::default()).expect("non-empty states");
    schema.means.iter_mut().for_each(|m| *m = 0.0);
    schema.stds.iter_mut().for_each(|s| *s = 0.0);
    let names = schema.design_names();
    let mut w = vec![0.0; names.len()];
    for (name, c) in coefficients {
        let j = names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no design column {name}"));
        w[j] = *c;
    }
    WinProbModel {
        schema,
        params: ModelParams::Logistic(LogisticParams {
            names,
            coefficients: w,
            loss_history: Vec::new(),
        }),
        meta: TrainingMeta::default(),
    }
}

/// Model whose CT log-odds is `k * (ct_alive - t_alive)`.
pub fn alive_diff_model(states: &[GameState], k: f64) -> WinProbModel {
    raw_logistic(states, &[("ct_players_alive", k), ("t_players_alive", -k)])
}
