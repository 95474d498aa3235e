use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics, Statistics};

use super::filter::RoundKey;
use super::{ActionValue, ValuationError};

pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub stddev: f64,
    pub p5: f64,
    pub p95: f64,
    pub samples: usize,
    pub seed: u64,
    /// Resampled means of per-round WPA, in draw order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub draws: Vec<f64>,
}

/// The player's WPA in each round of `rounds` they took part in, in round
/// order.
pub fn per_round_wpa(player: &str, actions: &[ActionValue], rounds: &[RoundKey], include_received: bool) -> Vec<f64> {
    let mut sums: HashMap<(&str, u32), f64> = HashMap::new();
    for a in actions {
        if a.actor_id == player {
            *sums.entry((&a.match_id, a.round_num)).or_default() += a.actor_credit;
        }
        if include_received && a.victim_id == player {
            *sums.entry((&a.match_id, a.round_num)).or_default() += a.receiver_credit;
        }
    }
    rounds
        .iter()
        .filter(|k| k.players.iter().any(|p| p == player))
        .map(|k| sums.get(&(k.match_id.as_str(), k.round_num)).copied().unwrap_or(0.0))
        .collect()
}

/// Resamples rounds with replacement `samples` times and summarizes the
/// resampled means. Deterministic for a given seed.
pub fn bootstrap_wpa(per_round: &[f64], samples: usize, seed: u64) -> Result<BootstrapSummary, ValuationError> {
    if samples < 2 {
        return Err(ValuationError::TooFewResamples(samples));
    }
    if per_round.is_empty() {
        return Err(ValuationError::NoData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_round.len();
    let draws: Vec<f64> = (0..samples)
        .map(|_| (0..n).map(|_| per_round[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mut data = Data::new(draws.clone());
    Ok(BootstrapSummary {
        mean: draws.iter().mean(),
        stddev: draws.iter().std_dev(),
        p5: data.percentile(5),
        p95: data.percentile(95),
        samples,
        seed,
        draws,
    })
}
