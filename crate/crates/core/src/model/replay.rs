use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::{BombSite, EventKind, GameState, MatchRecord, RoundRecord, Side, Vec3, GAME};
use crate::navmesh::NavGraph;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("round {round_num}, tick {tick}: {reason}")]
pub struct ReplayError {
    pub round_num: u32,
    pub tick: i64,
    pub reason: String,
}

struct PlayerSlot {
    side: Side,
    hp: u32,
    area: Option<u32>,
}

struct Tracker<'a> {
    index: HashMap<&'a str, usize>,
    slots: Vec<PlayerSlot>,
    graph: Option<&'a NavGraph>,
}

impl<'a> Tracker<'a> {
    fn new(round: &'a RoundRecord, graph: Option<&'a NavGraph>) -> Self {
        let mut index = HashMap::with_capacity(2 * GAME.players_per_side);
        let mut slots = Vec::with_capacity(2 * GAME.players_per_side);
        for side in [Side::Ct, Side::T] {
            for p in round.players.side(side) {
                index.insert(p.as_str(), slots.len());
                slots.push(PlayerSlot {
                    side,
                    hp: GAME.start_hp,
                    area: None,
                });
            }
        }
        Self { index, slots, graph }
    }

    fn slot(&self, player: &str) -> Option<usize> {
        self.index.get(player).copied()
    }

    fn move_to(&mut self, slot: usize, position: &Vec3, area: Option<u32>) {
        if let Some(graph) = self.graph {
            let area = area
                .filter(|a| graph.contains_area(*a))
                .or_else(|| graph.locate(position));
            if area.is_some() {
                self.slots[slot].area = area;
            }
        }
    }

    fn alive(&self, side: Side) -> u8 {
        self.slots.iter().filter(|s| s.side == side && s.hp > 0).count() as u8
    }

    fn hp(&self, side: Side) -> u32 {
        self.slots.iter().filter(|s| s.side == side).map(|s| s.hp).sum()
    }

    fn site_distance(&self, side: Side, site: BombSite) -> Option<f64> {
        let graph = self.graph?;
        let best = self
            .slots
            .iter()
            .filter(|s| s.side == side && s.hp > 0)
            .filter_map(|s| s.area)
            .map(|a| graph.site_distance(a, site))
            .fold(f64::INFINITY, f64::min);
        Some(best)
    }
}

/// Replays a round's event stream into game states: one initial state at
/// `start_tick` followed by one state per event, each reflecting every event
/// up to and including its own.
pub fn replay_round(
    record: &MatchRecord,
    round: &RoundRecord,
    graph: Option<&NavGraph>,
) -> Result<Vec<GameState>, ReplayError> {
    let match_id: Arc<str> = Arc::from(record.match_id.as_str());
    let map_name: Arc<str> = Arc::from(record.map_name.as_str());
    replay_with(record, round, graph, &match_id, &map_name)
}

fn replay_with(
    record: &MatchRecord,
    round: &RoundRecord,
    graph: Option<&NavGraph>,
    match_id: &Arc<str>,
    map_name: &Arc<str>,
) -> Result<Vec<GameState>, ReplayError> {
    let err = |tick: i64, reason: String| ReplayError {
        round_num: round.round_num,
        tick,
        reason,
    };
    let mut tracker = Tracker::new(round, graph);
    let mut bomb_site: Option<BombSite> = None;
    let outcome = Some(round.winner_side == Side::Ct);

    let snapshot = |tracker: &Tracker, tick: i64, bomb_site: Option<BombSite>| GameState {
        match_id: Arc::clone(match_id),
        match_date: record.date,
        map_name: Arc::clone(map_name),
        round_num: round.round_num,
        tick_rate: record.tick_rate,
        tick,
        ticks_since_start: tick - round.start_tick,
        ct_equip_value: round.ct_equip_value,
        t_equip_value: round.t_equip_value,
        ct_players_alive: tracker.alive(Side::Ct),
        t_players_alive: tracker.alive(Side::T),
        ct_hp_total: tracker.hp(Side::Ct),
        t_hp_total: tracker.hp(Side::T),
        bomb_planted: bomb_site.is_some(),
        bomb_site,
        ct_dist_a: tracker.site_distance(Side::Ct, BombSite::A),
        ct_dist_b: tracker.site_distance(Side::Ct, BombSite::B),
        t_dist_a: tracker.site_distance(Side::T, BombSite::A),
        t_dist_b: tracker.site_distance(Side::T, BombSite::B),
        outcome_label: outcome,
    };

    let mut states = Vec::with_capacity(round.events.len() + 1);
    states.push(snapshot(&tracker, round.start_tick, None));
    let mut last_tick = round.start_tick;
    for ev in &round.events {
        if ev.tick > round.end_tick {
            return Err(err(ev.tick, format!("event after round end (end_tick {})", round.end_tick)));
        }
        if ev.tick < last_tick {
            return Err(err(ev.tick, format!("event out of order or before round start (previous tick {last_tick})")));
        }
        last_tick = ev.tick;
        match &ev.kind {
            EventKind::Footstep(f) => {
                let slot = tracker
                    .slot(&f.player_id)
                    .ok_or_else(|| err(ev.tick, format!("unknown player {}", f.player_id)))?;
                tracker.move_to(slot, &f.position, f.area_id);
            }
            EventKind::Damage(d) => {
                let attacker = tracker
                    .slot(&d.attacker_id)
                    .ok_or_else(|| err(ev.tick, format!("unknown attacker {}", d.attacker_id)))?;
                let victim = tracker
                    .slot(&d.victim_id)
                    .ok_or_else(|| err(ev.tick, format!("unknown victim {}", d.victim_id)))?;
                let remaining = tracker.slots[victim].hp;
                if remaining == 0 {
                    return Err(err(ev.tick, format!("damage to dead player {}", d.victim_id)));
                }
                if d.hp_damage > remaining {
                    return Err(err(
                        ev.tick,
                        format!("HP of {} would drop below 0 ({} damage, {} left)", d.victim_id, d.hp_damage, remaining),
                    ));
                }
                tracker.slots[victim].hp = remaining - d.hp_damage;
                tracker.move_to(attacker, &d.attacker_position, None);
                tracker.move_to(victim, &d.victim_position, None);
            }
            EventKind::BombPlant(p) => {
                if bomb_site.is_some() {
                    return Err(err(ev.tick, "second bomb plant".into()));
                }
                bomb_site = Some(p.site);
            }
            EventKind::BombDefuse(_) => {
                if bomb_site.is_none() {
                    return Err(err(ev.tick, "defuse without plant".into()));
                }
            }
        }
        states.push(snapshot(&tracker, ev.tick, bomb_site));
    }
    Ok(states)
}

/// Replays every round of a match, in parallel across rounds. The result is
/// indexed like `record.rounds`.
pub fn replay_match(record: &MatchRecord, graph: Option<&NavGraph>) -> Result<Vec<Vec<GameState>>, ReplayError> {
    let match_id: Arc<str> = Arc::from(record.match_id.as_str());
    let map_name: Arc<str> = Arc::from(record.map_name.as_str());
    record
        .rounds
        .par_iter()
        .map(|r| replay_with(record, r, graph, &match_id, &map_name))
        .collect()
}
