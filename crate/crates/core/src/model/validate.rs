use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{EventKind, MatchRecord, RoundRecord, Side, WinReason, DEFAULT_MAP_POOL, GAME};

/// A broken invariant. Violations are data: validation never fails early.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub round_num: Option<u32>,
    pub tick: Option<i64>,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.rule)?;
        if let Some(r) = self.round_num {
            write!(f, " round {r}")?;
        }
        if let Some(t) = self.tick {
            write!(f, " tick {t}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub map_pool: Vec<String>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            map_pool: DEFAULT_MAP_POOL.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn validate_match(record: &MatchRecord) -> Vec<Violation> {
    validate_match_with(record, &ValidationConfig::default())
}

pub fn validate_match_with(record: &MatchRecord, config: &ValidationConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |round_num: Option<u32>, tick: Option<i64>, rule: &'static str, message: String| {
        out.push(Violation {
            round_num,
            tick,
            rule,
            message,
        })
    };

    if record.tick_rate == 0 {
        push(None, None, "tick-rate", "tick_rate must be positive".into());
    }
    if !config.map_pool.iter().any(|m| m == &record.map_name) {
        push(
            None,
            None,
            "map-pool",
            format!("map {:?} is not in the configured map pool", record.map_name),
        );
    }
    if record.rounds.len() as u32 > GAME.max_regulation_rounds() {
        push(
            None,
            None,
            "overtime",
            format!(
                "{} rounds recorded; only {} regulation rounds are supported",
                record.rounds.len(),
                GAME.max_regulation_rounds()
            ),
        );
    }

    let first = record.rounds.first();
    let mut wins: HashMap<&str, u32> = HashMap::new();
    let mut prev_end: Option<i64> = None;
    for (idx, round) in record.rounds.iter().enumerate() {
        let expected = idx as u32 + 1;
        let rn = Some(round.round_num);
        if round.round_num != expected {
            push(
                rn,
                None,
                "round-numbering",
                format!("expected round {expected}, found {}", round.round_num),
            );
        }
        if let Some((team, _)) = wins.iter().find(|(_, &w)| w >= GAME.rounds_to_win) {
            push(
                rn,
                None,
                "match-over",
                format!("round played after {team} reached {} wins", GAME.rounds_to_win),
            );
        }
        if let Some(first) = first {
            let (ct, t) = if expected <= GAME.half_length {
                (&first.ct_team, &first.t_team)
            } else {
                (&first.t_team, &first.ct_team)
            };
            if &round.ct_team != ct || &round.t_team != t {
                push(
                    rn,
                    None,
                    "side-swap",
                    format!(
                        "expected CT={ct} T={t} (sides swap once after round {}), found CT={} T={}",
                        GAME.half_length, round.ct_team, round.t_team
                    ),
                );
            }
        }
        if let Some(prev) = prev_end {
            if round.start_tick < prev {
                push(
                    rn,
                    Some(round.start_tick),
                    "round-overlap",
                    format!("round starts at tick {} before previous round ended at {prev}", round.start_tick),
                );
            }
        }
        prev_end = Some(round.end_tick);
        validate_round(round, &mut push);
        *wins.entry(round.winner_team()).or_default() += 1;
    }
    out
}

fn validate_round(
    round: &RoundRecord,
    push: &mut impl FnMut(Option<u32>, Option<i64>, &'static str, String),
) {
    let rn = Some(round.round_num);
    if round.round_num == 0 || round.round_num > GAME.max_regulation_rounds() {
        push(rn, None, "round-range", format!("round_num {} outside 1..=30", round.round_num));
    }
    if round.start_tick >= round.end_tick {
        push(
            rn,
            Some(round.start_tick),
            "tick-order",
            format!("start_tick {} is not before end_tick {}", round.start_tick, round.end_tick),
        );
    }
    if round.ct_team == round.t_team {
        push(rn, None, "roster", "CT and T team identifiers are equal".into());
    }
    match (round.win_reason, round.winner_side) {
        (WinReason::BombDefused, Side::T) => {
            push(rn, None, "win-reason", "bomb_defused rounds must be won by CT".into())
        }
        (WinReason::BombExploded, Side::Ct) => {
            push(rn, None, "win-reason", "bomb_exploded rounds must be won by T".into())
        }
        _ => {}
    }

    let mut roster = HashSet::new();
    for side in [Side::Ct, Side::T] {
        let players = round.players.side(side);
        if players.len() != GAME.players_per_side {
            push(
                rn,
                None,
                "roster",
                format!("{side} roster has {} players, expected {}", players.len(), GAME.players_per_side),
            );
        }
        for p in players {
            if !roster.insert(p.as_str()) {
                push(rn, None, "roster", format!("player {p} listed more than once"));
            }
        }
    }

    let side_ok = |player: &str, side: Side| round.players.side(side).iter().any(|p| p == player);
    let mut hp: HashMap<&str, u32> = round.players.all().map(|p| (p.as_str(), GAME.start_hp)).collect();
    let mut last_tick = i64::MIN;
    let mut plant_tick: Option<i64> = None;
    for ev in &round.events {
        let tick = Some(ev.tick);
        if ev.tick < round.start_tick || ev.tick > round.end_tick {
            push(
                rn,
                tick,
                "event-bounds",
                format!("event tick outside [{}, {}]", round.start_tick, round.end_tick),
            );
        }
        if ev.tick < last_tick {
            push(rn, tick, "event-order", format!("event at tick {} follows tick {last_tick}", ev.tick));
        }
        last_tick = last_tick.max(ev.tick);
        match &ev.kind {
            EventKind::Footstep(f) => {
                if !side_ok(&f.player_id, f.side) {
                    push(rn, tick, "roster", format!("footstep by {} not on {} roster", f.player_id, f.side));
                }
            }
            EventKind::Damage(d) => {
                if d.attacker_side == d.victim_side {
                    push(
                        rn,
                        tick,
                        "team-damage",
                        format!("{} damaged teammate {}", d.attacker_id, d.victim_id),
                    );
                }
                if !side_ok(&d.attacker_id, d.attacker_side) || !side_ok(&d.victim_id, d.victim_side) {
                    push(rn, tick, "roster", "damage participants do not match the rosters".into());
                }
                if let Some(a) = &d.assister_id {
                    if !side_ok(a, d.attacker_side) || a == &d.attacker_id {
                        push(rn, tick, "roster", format!("assister {a} is not a teammate of the attacker"));
                    }
                }
                if d.hp_damage == 0 || d.hp_damage > GAME.start_hp {
                    push(rn, tick, "hp-range", format!("hp_damage {} outside 1..=100", d.hp_damage));
                }
                if hp.get(d.attacker_id.as_str()) == Some(&0) {
                    push(rn, tick, "dead-actor", format!("{} attacks after dying", d.attacker_id));
                }
                if let Some(remaining) = hp.get_mut(d.victim_id.as_str()) {
                    let before = *remaining;
                    if d.hp_damage > before {
                        push(
                            rn,
                            tick,
                            "hp-overflow",
                            format!(
                                "cumulative damage to {} exceeds {} HP",
                                d.victim_id, GAME.start_hp
                            ),
                        );
                    }
                    *remaining = before.saturating_sub(d.hp_damage);
                    let lethal = before > 0 && *remaining == 0;
                    if d.is_kill != lethal {
                        push(
                            rn,
                            tick,
                            "kill-flag",
                            format!(
                                "is_kill={} but victim {} has {} HP left",
                                d.is_kill, d.victim_id, remaining
                            ),
                        );
                    }
                }
            }
            EventKind::BombPlant(p) => {
                if !side_ok(&p.player_id, Side::T) {
                    push(rn, tick, "bomb", format!("bomb planted by non-T player {}", p.player_id));
                }
                if plant_tick.is_some() {
                    push(rn, tick, "bomb-plant-dup", "more than one bomb_plant in a round".into());
                }
                plant_tick.get_or_insert(ev.tick);
            }
            EventKind::BombDefuse(d) => {
                if !side_ok(&d.player_id, Side::Ct) {
                    push(rn, tick, "bomb", format!("bomb defused by non-CT player {}", d.player_id));
                }
                if plant_tick.is_none() {
                    push(rn, tick, "defuse-without-plant", "bomb_defuse without a prior bomb_plant".into());
                }
            }
        }
    }
    if matches!(round.win_reason, WinReason::BombDefused | WinReason::BombExploded) && plant_tick.is_none() {
        push(rn, None, "win-reason", "bomb outcome without a bomb_plant event".into());
    }
}
