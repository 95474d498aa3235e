use serde::{Deserialize, Serialize};

use super::ActionValue;
use crate::model::Side;

/// Selects high-leverage actions. All set constraints must hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactQuery {
    /// Keep actions with `|actor_credit| >= threshold`.
    pub threshold: Option<f64>,
    pub top_k: Option<usize>,
    /// Inclusive range for the actor's team win probability before the action.
    pub win_prob: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactPlay {
    pub rank: usize,
    pub actor_win_prob_pre: f64,
    /// Round context, e.g. `T 1v2 at 84.3s, round 12 of syn-00003`.
    pub context: String,
    pub action: ActionValue,
}

/// Actions ranked by `|actor_credit|`, largest first; ties keep match,
/// round and tick order.
pub fn impact_plays(actions: &[ActionValue], query: &ImpactQuery) -> Vec<ImpactPlay> {
    let mut kept: Vec<&ActionValue> = actions
        .iter()
        .filter(|a| query.threshold.is_none_or(|t| a.actor_credit.abs() >= t))
        .filter(|a| {
            let p = a.actor_win_prob_pre();
            query.win_prob.is_none_or(|(lo, hi)| p >= lo && p <= hi)
        })
        .collect();
    kept.sort_by(|a, b| {
        b.actor_credit
            .abs()
            .total_cmp(&a.actor_credit.abs())
            .then_with(|| a.match_id.cmp(&b.match_id))
            .then(a.round_num.cmp(&b.round_num))
            .then(a.tick.cmp(&b.tick))
    });
    kept.truncate(query.top_k.unwrap_or(usize::MAX));
    kept.into_iter()
        .enumerate()
        .map(|(i, a)| {
            let (own, opp) = match a.actor_side {
                Side::Ct => (a.pre_ct_alive, a.pre_t_alive),
                Side::T => (a.pre_t_alive, a.pre_ct_alive),
            };
            ImpactPlay {
                rank: i + 1,
                actor_win_prob_pre: a.actor_win_prob_pre(),
                context: format!(
                    "{} {own}v{opp} at {:.1}s, round {} of {}",
                    a.actor_side, a.seconds, a.round_num, a.match_id
                ),
                action: a.clone(),
            }
        })
        .collect()
}
