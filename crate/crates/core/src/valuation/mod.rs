//! Player valuation from win-probability changes.
//!
//! Every damage event is valued as the change in CT win probability between
//! the replayed states just before and just after it. The attacker is
//! credited with that change in their own team's frame and the victim with
//! its negative.

mod bootstrap;
mod classic;
mod export;
mod filter;
mod impact;
mod stability;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{vectorize, FeatureError};
use crate::model::{replay_match, EventKind, MatchRecord, ReplayError, Side};
use crate::navmesh::NavGraph;
use crate::winprob::{predict, WinProbError, WinProbModel};

pub use bootstrap::{bootstrap_wpa, per_round_wpa, BootstrapSummary, DEFAULT_BOOTSTRAP_SAMPLES};
pub use classic::{classic_metrics, rating_1_0, ClassicConfig, ClassicMetrics, RatingComponents};
pub use export::{bootstrap_samples_csv, impact_csv, ratings_csv, ratings_json};
pub use filter::{apply_filter, AlivePattern, FilterParseError, RoundKey, RoundView, ScenarioFilter};
pub use impact::{impact_plays, ImpactPlay, ImpactQuery};
pub use stability::{
    compare_correlations, fisher_z, monthly_metrics, pearson, stability_analysis, CorrelationTest, MetricCorrelation,
    PeriodMetrics, StabilityConfig, StabilityReport,
};

#[derive(Debug, Error)]
pub enum ValuationError {
    #[error("match {match_id}: {source}")]
    Replay {
        match_id: String,
        #[source]
        source: ReplayError,
    },
    #[error(transparent)]
    Model(#[from] WinProbError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("player {0} has no rounds played")]
    ZeroRounds(String),
    #[error("bootstrap needs at least 2 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("no data matches the filter")]
    NoData,
    #[error("stability analysis: {0}")]
    Stability(String),
}

/// One valued damage event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub match_id: String,
    pub map_name: String,
    pub round_num: u32,
    pub tick: i64,
    /// Seconds since the round started.
    pub seconds: f64,
    pub actor_id: String,
    pub actor_side: Side,
    pub victim_id: String,
    pub hp_damage: u32,
    pub is_kill: bool,
    /// Index into the round's replayed states; `post_state = pre_state + 1`.
    pub pre_state: usize,
    pub post_state: usize,
    /// Alive counts in the state before the event.
    pub pre_ct_alive: u8,
    pub pre_t_alive: u8,
    pub p_pre: f64,
    pub p_post: f64,
    /// `p_post - p_pre`, in the CT frame.
    pub v_ct: f64,
    pub actor_credit: f64,
    pub receiver_credit: f64,
}

impl ActionValue {
    /// Win probability of the actor's team before the event.
    pub fn actor_win_prob_pre(&self) -> f64 {
        match self.actor_side {
            Side::Ct => self.p_pre,
            Side::T => 1.0 - self.p_pre,
        }
    }
}

/// Credits a CT-frame change to the acting side.
pub fn credit(v_ct: f64, actor_side: Side) -> f64 {
    match actor_side {
        Side::Ct => v_ct,
        Side::T => -v_ct,
    }
}

type Replayed = (Vec<Vec<crate::model::GameState>>, Vec<f64>);

fn replay_and_predict(
    record: &MatchRecord,
    model: &WinProbModel,
    graph: Option<&NavGraph>,
) -> Result<Replayed, ValuationError> {
    let rounds = replay_match(record, graph).map_err(|source| ValuationError::Replay {
        match_id: record.match_id.clone(),
        source,
    })?;
    let flat: Vec<_> = rounds.iter().flatten().cloned().collect();
    let matrix = vectorize(&flat, &model.schema)?;
    let p = predict(model, &matrix)?;
    Ok((rounds, p))
}

/// CT win probability of every replayed state, per round.
pub fn win_prob_series(
    record: &MatchRecord,
    model: &WinProbModel,
    graph: Option<&NavGraph>,
) -> Result<Vec<Vec<f64>>, ValuationError> {
    let (rounds, p) = replay_and_predict(record, model, graph)?;
    let mut out = Vec::with_capacity(rounds.len());
    let mut at = 0;
    for r in &rounds {
        out.push(p[at..at + r.len()].to_vec());
        at += r.len();
    }
    Ok(out)
}

/// Values every damage event of a match. Other events advance the state but
/// produce no value.
pub fn value_actions(
    record: &MatchRecord,
    model: &WinProbModel,
    graph: Option<&NavGraph>,
) -> Result<Vec<ActionValue>, ValuationError> {
    let (rounds, p) = replay_and_predict(record, model, graph)?;
    let mut out = Vec::new();
    let mut offset = 0;
    for (round, states) in record.rounds.iter().zip(&rounds) {
        let probs = &p[offset..offset + states.len()];
        offset += states.len();
        for (i, ev) in round.events.iter().enumerate() {
            let EventKind::Damage(d) = &ev.kind else { continue };
            // state 0 is the round start; event i produces state i + 1
            let (pre, post) = (i, i + 1);
            let v_ct = probs[post] - probs[pre];
            let actor_credit = credit(v_ct, d.attacker_side);
            out.push(ActionValue {
                match_id: record.match_id.clone(),
                map_name: record.map_name.clone(),
                round_num: round.round_num,
                tick: ev.tick,
                seconds: states[post].seconds_since_start(),
                actor_id: d.attacker_id.clone(),
                actor_side: d.attacker_side,
                victim_id: d.victim_id.clone(),
                hp_damage: d.hp_damage,
                is_kill: d.is_kill,
                pre_state: pre,
                post_state: post,
                pre_ct_alive: states[pre].ct_players_alive,
                pre_t_alive: states[pre].t_players_alive,
                p_pre: probs[pre],
                p_post: probs[post],
                v_ct,
                actor_credit,
                receiver_credit: -actor_credit,
            });
        }
    }
    Ok(out)
}

/// Values many matches in parallel; the output keeps match order.
pub fn value_matches(
    records: &[MatchRecord],
    model: &WinProbModel,
    graph: Option<&NavGraph>,
) -> Result<Vec<ActionValue>, ValuationError> {
    let per_match: Vec<Vec<ActionValue>> = records
        .par_iter()
        .map(|m| value_actions(m, model, graph))
        .collect::<Result<_, _>>()?;
    Ok(per_match.into_iter().flatten().collect())
}

/// `Ŷ(b) - Ŷ(a)` for two arbitrary states.
pub fn value_between(
    model: &WinProbModel,
    a: &crate::model::GameState,
    b: &crate::model::GameState,
) -> Result<f64, ValuationError> {
    Ok(model.predict_state(b)? - model.predict_state(a)?)
}

/// Rounds each player appeared in, over whole matches.
pub fn rounds_played(records: &[MatchRecord]) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    for m in records {
        for r in &m.rounds {
            for p in r.players.all() {
                *out.entry(p.clone()).or_insert(0) += 1;
            }
        }
    }
    out
}

/// WPA per round for every player in `rounds_played`. Received credits
/// (the negative of the value of damage taken) count unless
/// `include_received` is false.
pub fn wpa(
    actions: &[ActionValue],
    rounds_played: &BTreeMap<String, u32>,
    include_received: bool,
) -> Result<BTreeMap<String, f64>, ValuationError> {
    let mut totals: BTreeMap<&str, f64> = rounds_played.keys().map(|p| (p.as_str(), 0.0)).collect();
    for a in actions {
        *totals.entry(&a.actor_id).or_insert(0.0) += a.actor_credit;
        if include_received {
            *totals.entry(&a.victim_id).or_insert(0.0) += a.receiver_credit;
        }
    }
    totals
        .into_iter()
        .map(|(player, total)| match rounds_played.get(player) {
            Some(&n) if n > 0 => Ok((player.to_string(), total / n as f64)),
            _ => Err(ValuationError::ZeroRounds(player.to_string())),
        })
        .collect()
}

/// Everything the rating table reports for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerValuation {
    pub player_id: String,
    pub rounds_played: u32,
    pub wpa_per_round: f64,
    #[serde(flatten)]
    pub classic: ClassicMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateOptions {
    pub classic: ClassicConfig,
    pub include_received: bool,
    /// Number of bootstrap resamples; `None` skips the bootstrap.
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            classic: ClassicConfig::default(),
            include_received: true,
            bootstrap: None,
            seed: 0,
        }
    }
}

/// Builds the rating table over a filtered view, sorted by WPA per round
/// (descending, then player id). Denominators count only rounds in the view.
pub fn rate_players(
    records: &[MatchRecord],
    actions: &[ActionValue],
    filter: &ScenarioFilter,
    options: &RateOptions,
) -> Result<Vec<PlayerValuation>, ValuationError> {
    let view = apply_filter(filter, records);
    if view.is_empty() {
        return Err(ValuationError::NoData);
    }
    let kept: Vec<ActionValue> = actions.iter().filter(|a| view.keeps_action(filter, a)).cloned().collect();
    let rounds = view.rounds_played(records);
    let wpa = wpa(&kept, &rounds, options.include_received)?;
    let classic = classic_metrics(view.rounds(records), &options.classic)?;
    let mut out: Vec<PlayerValuation> = rounds
        .iter()
        .map(|(player, &n)| PlayerValuation {
            player_id: player.clone(),
            rounds_played: n,
            wpa_per_round: wpa[player],
            classic: classic[player].clone(),
            bootstrap: None,
        })
        .collect();
    if let Some(b) = options.bootstrap {
        let keys = view.round_keys(records);
        for (i, pv) in out.iter_mut().enumerate() {
            let per_round = per_round_wpa(&pv.player_id, &kept, &keys, options.include_received);
            let seed = options.seed.wrapping_add(i as u64);
            pv.bootstrap = Some(bootstrap_wpa(&per_round, b, seed)?);
        }
    }
    out.sort_by(|a, b| b.wpa_per_round.total_cmp(&a.wpa_per_round).then_with(|| a.player_id.cmp(&b.player_id)));
    Ok(out)
}
