//! Match / round / event hierarchy and the per-tick game state snapshot.
//!
//! A [`MatchRecord`] holds an ordered list of [`RoundRecord`]s, each of which
//! carries the time-ordered [`GameEvent`] stream of that round. Replaying a
//! round ([`replay_round`]) turns the event stream into a sequence of
//! [`GameState`] snapshots, which is what the win-probability models consume.

mod replay;
mod validate;

use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use replay::{replay_match, replay_round, ReplayError};
pub use validate::{validate_match, validate_match_with, ValidationConfig, Violation};

/// Fixed game-rule constants for regulation competitive play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameConstants {
    pub start_hp: u32,
    pub bomb_timer_seconds: u32,
    pub default_tick_rate: u32,
    pub rounds_to_win: u32,
    pub half_length: u32,
    pub players_per_side: usize,
}

pub const GAME: GameConstants = GameConstants {
    start_hp: 100,
    bomb_timer_seconds: 35,
    default_tick_rate: 128,
    rounds_to_win: 16,
    half_length: 15,
    players_per_side: 5,
};

impl GameConstants {
    pub const fn max_regulation_rounds(&self) -> u32 {
        self.half_length * 2
    }

    /// Ticks between a bomb plant and the explosion.
    pub const fn bomb_window_ticks(&self, tick_rate: u32) -> i64 {
        self.bomb_timer_seconds as i64 * tick_rate as i64
    }

    pub const fn side_hp_total(&self) -> u32 {
        self.start_hp * self.players_per_side as u32
    }
}

/// Competitive map pool accepted by default validation.
pub const DEFAULT_MAP_POOL: &[&str] = &[
    "de_cache",
    "de_cbble",
    "de_dust2",
    "de_inferno",
    "de_mirage",
    "de_nuke",
    "de_overpass",
    "de_train",
    "de_vertigo",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "T")]
    T,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Ct => Side::T,
            Side::T => Side::Ct,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Ct => "CT",
            Side::T => "T",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BombSite {
    A,
    B,
}

impl fmt::Display for BombSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BombSite::A => "A",
            BombSite::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinReason {
    Elimination,
    BombExploded,
    BombDefused,
    TimeExpired,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

pub type PlayerId = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footstep {
    pub player_id: PlayerId,
    pub side: Side,
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Damage {
    pub attacker_id: PlayerId,
    pub attacker_side: Side,
    pub victim_id: PlayerId,
    pub victim_side: Side,
    pub hp_damage: u32,
    pub is_kill: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assister_id: Option<PlayerId>,
    pub attacker_position: Vec3,
    pub victim_position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BombPlant {
    pub player_id: PlayerId,
    pub site: BombSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BombDefuse {
    pub player_id: PlayerId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Footstep(Footstep),
    Damage(Damage),
    BombPlant(BombPlant),
    BombDefuse(BombDefuse),
}

impl EventKind {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventKind::Footstep(_) => "footstep",
            EventKind::Damage(_) => "damage",
            EventKind::BombPlant(_) => "bomb_plant",
            EventKind::BombDefuse(_) => "bomb_defuse",
        }
    }
}

/// One entry of a round's event stream. Serialized as a flat JSON object with
/// a `"type"` discriminator (see `ingest`).
#[derive(Debug, Clone, PartialEq)]
pub struct GameEvent {
    pub tick: i64,
    pub kind: EventKind,
}

impl GameEvent {
    pub fn damage(&self) -> Option<&Damage> {
        match &self.kind {
            EventKind::Damage(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rosters {
    pub ct: Vec<PlayerId>,
    pub t: Vec<PlayerId>,
}

impl Rosters {
    pub fn side(&self, side: Side) -> &[PlayerId] {
        match side {
            Side::Ct => &self.ct,
            Side::T => &self.t,
        }
    }

    pub fn side_of(&self, player: &str) -> Option<Side> {
        if self.ct.iter().any(|p| p == player) {
            Some(Side::Ct)
        } else if self.t.iter().any(|p| p == player) {
            Some(Side::T)
        } else {
            None
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &PlayerId> {
        self.ct.iter().chain(self.t.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_num: u32,
    pub start_tick: i64,
    pub end_tick: i64,
    pub ct_team: String,
    pub t_team: String,
    pub ct_equip_value: u32,
    pub t_equip_value: u32,
    pub winner_side: Side,
    pub win_reason: WinReason,
    pub players: Rosters,
    pub events: Vec<GameEvent>,
}

impl RoundRecord {
    pub fn team_on(&self, side: Side) -> &str {
        match side {
            Side::Ct => &self.ct_team,
            Side::T => &self.t_team,
        }
    }

    pub fn winner_team(&self) -> &str {
        self.team_on(self.winner_side)
    }

    pub fn is_pistol(&self) -> bool {
        self.round_num == 1 || self.round_num == GAME.half_length + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub map_name: String,
    pub tick_rate: u32,
    pub date: NaiveDate,
    pub rounds: Vec<RoundRecord>,
}

/// Snapshot of everything the models see at one tick of a round.
///
/// Bombsite distances are `None` when no navmesh was available and
/// `Some(f64::INFINITY)` when the site cannot be reached from any located
/// player of that side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub match_id: Arc<str>,
    pub match_date: NaiveDate,
    pub map_name: Arc<str>,
    pub round_num: u32,
    pub tick_rate: u32,
    pub tick: i64,
    pub ticks_since_start: i64,
    pub ct_equip_value: u32,
    pub t_equip_value: u32,
    pub ct_players_alive: u8,
    pub t_players_alive: u8,
    pub ct_hp_total: u32,
    pub t_hp_total: u32,
    pub bomb_planted: bool,
    pub bomb_site: Option<BombSite>,
    pub ct_dist_a: Option<f64>,
    pub ct_dist_b: Option<f64>,
    pub t_dist_a: Option<f64>,
    pub t_dist_b: Option<f64>,
    pub outcome_label: Option<bool>,
}

impl GameState {
    pub fn seconds_since_start(&self) -> f64 {
        self.ticks_since_start as f64 / self.tick_rate as f64
    }

    pub fn alive(&self, side: Side) -> u8 {
        match side {
            Side::Ct => self.ct_players_alive,
            Side::T => self.t_players_alive,
        }
    }

    pub fn hp_total(&self, side: Side) -> u32 {
        match side {
            Side::Ct => self.ct_hp_total,
            Side::T => self.t_hp_total,
        }
    }

    pub fn has_distances(&self) -> bool {
        self.ct_dist_a.is_some()
            && self.ct_dist_b.is_some()
            && self.t_dist_a.is_some()
            && self.t_dist_b.is_some()
    }
}
