use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ValuationError;
use crate::model::{EventKind, MatchRecord, RoundRecord};

/// Knobs for the box-score metrics. The rating constants are the average
/// per-round kill, survival and multi-kill figures the sub-ratings are
/// normalized by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicConfig {
    /// A death counts as traded if the killer dies within this many seconds.
    pub trade_window_seconds: f64,
    /// Cumulative damage to a victim that earns an assist when the kill
    /// event does not name an assister.
    pub assist_min_damage: u32,
    pub derive_assists: bool,
    pub kill_rating_avg: f64,
    pub survival_rating_avg: f64,
    pub multi_kill_rating_avg: f64,
}

impl Default for ClassicConfig {
    fn default() -> Self {
        Self {
            trade_window_seconds: 5.0,
            assist_min_damage: 40,
            derive_assists: true,
            kill_rating_avg: 0.679,
            survival_rating_avg: 0.317,
            multi_kill_rating_avg: 1.277,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingComponents {
    pub kill_rating: f64,
    pub survival_rating: f64,
    pub multi_kill_rating: f64,
}

/// `(R_K + 0.7 R_S + R_MK) / 2.7`
pub fn rating_1_0(c: &RatingComponents) -> f64 {
    (c.kill_rating + 0.7 * c.survival_rating + c.multi_kill_rating) / 2.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicMetrics {
    pub rounds: u32,
    pub kills: u32,
    pub deaths: u32,
    pub assists: u32,
    pub damage: u64,
    /// Kills over deaths; with zero deaths this is the kill count and
    /// `kdr_zero_deaths` is set.
    pub kdr: f64,
    pub kdr_zero_deaths: bool,
    pub adr: f64,
    pub kast_pct: f64,
    pub rating_1_0: f64,
    pub components: RatingComponents,
}

#[derive(Default)]
struct Tally {
    rounds: u32,
    kills: u32,
    deaths: u32,
    assists: u32,
    damage: u64,
    survived: u32,
    kast_rounds: u32,
    kills_squared: u64,
}

#[derive(Default, Clone, Copy)]
struct RoundLine {
    kills: u32,
    assisted: bool,
    died: bool,
    traded: bool,
}

fn tally_round(record: &MatchRecord, round: &RoundRecord, config: &ClassicConfig) -> HashMap<String, RoundLine> {
    let mut lines: HashMap<String, RoundLine> = round.players.all().map(|p| (p.clone(), RoundLine::default())).collect();
    let window = (config.trade_window_seconds * record.tick_rate as f64).round() as i64;
    // (attacker, victim) -> cumulative damage this round
    let mut dealt: HashMap<(&str, &str), u32> = HashMap::new();
    // (victim, killer, tick) of every death
    let mut deaths: Vec<(&str, &str, i64)> = Vec::new();

    for ev in &round.events {
        let EventKind::Damage(d) = &ev.kind else { continue };
        *dealt.entry((&d.attacker_id, &d.victim_id)).or_default() += d.hp_damage;
        if !d.is_kill {
            continue;
        }
        deaths.push((&d.victim_id, &d.attacker_id, ev.tick));
        if let Some(l) = lines.get_mut(&d.victim_id) {
            l.died = true;
        }
        if d.attacker_side != d.victim_side {
            if let Some(l) = lines.get_mut(&d.attacker_id) {
                l.kills += 1;
            }
        }
        let mut assisters: Vec<&str> = Vec::new();
        if let Some(a) = &d.assister_id {
            assisters.push(a);
        } else if config.derive_assists {
            for p in round.players.side(d.attacker_side) {
                if p != &d.attacker_id && dealt.get(&(p.as_str(), d.victim_id.as_str())).copied().unwrap_or(0) >= config.assist_min_damage {
                    assisters.push(p);
                }
            }
        }
        for a in assisters {
            if a != d.attacker_id {
                if let Some(l) = lines.get_mut(a) {
                    l.assisted = true;
                }
            }
        }
    }
    for &(victim, killer, tick) in &deaths {
        let avenged = deaths.iter().any(|&(v, _, t)| v == killer && t >= tick && t - tick <= window);
        if avenged {
            if let Some(l) = lines.get_mut(victim) {
                l.traded = true;
            }
        }
    }
    lines
}

/// Box-score metrics over a set of rounds. Damage counts only damage dealt
/// to opponents; deaths count every kill suffered.
pub fn classic_metrics(
    rounds: Vec<(&MatchRecord, &RoundRecord)>,
    config: &ClassicConfig,
) -> Result<BTreeMap<String, ClassicMetrics>, ValuationError> {
    if rounds.is_empty() {
        return Err(ValuationError::NoData);
    }
    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    for (record, round) in rounds {
        let lines = tally_round(record, round, config);
        for ev in &round.events {
            if let EventKind::Damage(d) = &ev.kind {
                if d.attacker_side != d.victim_side {
                    tallies.entry(d.attacker_id.clone()).or_default().damage += d.hp_damage as u64;
                }
            }
        }
        for (player, line) in lines {
            let t = tallies.entry(player).or_default();
            t.rounds += 1;
            t.kills += line.kills;
            t.deaths += line.died as u32;
            t.assists += line.assisted as u32;
            t.survived += !line.died as u32;
            t.kills_squared += (line.kills as u64).pow(2);
            t.kast_rounds += (line.kills > 0 || line.assisted || !line.died || line.traded) as u32;
        }
    }
    tallies
        .into_iter()
        .map(|(player, t)| {
            if t.rounds == 0 {
                return Err(ValuationError::ZeroRounds(player));
            }
            let n = t.rounds as f64;
            let components = RatingComponents {
                kill_rating: t.kills as f64 / n / config.kill_rating_avg,
                survival_rating: t.survived as f64 / n / config.survival_rating_avg,
                multi_kill_rating: t.kills_squared as f64 / n / config.multi_kill_rating_avg,
            };
            let m = ClassicMetrics {
                rounds: t.rounds,
                kills: t.kills,
                deaths: t.deaths,
                assists: t.assists,
                damage: t.damage,
                kdr: t.kills as f64 / t.deaths.max(1) as f64,
                kdr_zero_deaths: t.deaths == 0,
                adr: t.damage as f64 / n,
                kast_pct: t.kast_rounds as f64 / n,
                rating_1_0: rating_1_0(&components),
                components,
            };
            Ok((player, m))
        })
        .collect()
}
