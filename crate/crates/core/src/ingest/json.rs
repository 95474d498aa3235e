//! Canonical JSON event-log format.
//!
//! A document mirrors [`MatchRecord`] field for field. Events are a flat array
//! per round; each event object carries a `"type"` discriminator
//! (`footstep`, `damage`, `bomb_plant`, `bomb_defuse`) next to its `tick` and
//! payload fields. See `docs/format.md`.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::de::{Error as _, IgnoredAny};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    validate_match, BombDefuse, BombPlant, BombSite, Damage, EventKind, Footstep, GameEvent, MatchRecord,
    RoundRecord, Side, Vec3, Violation, GAME,
};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("{reason} at {path}")]
    Schema { path: String, reason: String },
    #[error("invalid match: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl ParseError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ParseError::Invalid(v) => v,
            _ => &[],
        }
    }
}

fn default_tick_rate() -> u32 {
    GAME.default_tick_rate
}

#[derive(Deserialize)]
struct MatchDocument {
    match_id: String,
    map_name: String,
    #[serde(default = "default_tick_rate")]
    tick_rate: u32,
    date: NaiveDate,
    rounds: Vec<RoundRecord>,
}

const KNOWN_TOP_LEVEL: &[&str] = &["match_id", "map_name", "tick_rate", "date", "rounds"];

/// Parses and validates one match document.
pub fn parse_match(bytes: &[u8]) -> Result<MatchRecord, ParseError> {
    let record = parse_match_unchecked(bytes)?;
    let violations = validate_match(&record);
    if violations.is_empty() {
        Ok(record)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

/// Parses a match document without semantic validation.
pub fn parse_match_unchecked(bytes: &[u8]) -> Result<MatchRecord, ParseError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: MatchDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() || inner.is_io() {
            ParseError::Malformed(inner.to_string())
        } else {
            ParseError::Schema {
                path,
                reason: strip_position(&inner.to_string()),
            }
        }
    })?;
    // second, skipping pass: unknown top-level keys are tolerated but reported
    if let Ok(keys) = serde_json::from_slice::<BTreeMap<String, IgnoredAny>>(bytes) {
        for key in keys.keys().filter(|k| !KNOWN_TOP_LEVEL.contains(&k.as_str())) {
            log::warn!("match {}: ignoring unknown top-level key {key:?}", doc.match_id);
        }
    }
    Ok(MatchRecord {
        match_id: doc.match_id,
        map_name: doc.map_name,
        tick_rate: doc.tick_rate,
        date: doc.date,
        rounds: doc.rounds,
    })
}

// serde_json appends " at line L column C" to data errors; the JSON path is
// the more useful locator.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn to_json(record: &MatchRecord) -> String {
    serde_json::to_string(record).expect("match records always serialize")
}

pub fn to_json_pretty(record: &MatchRecord) -> String {
    serde_json::to_string_pretty(record).expect("match records always serialize")
}

impl Serialize for GameEvent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("type", self.kind.type_name())?;
        map.serialize_entry("tick", &self.tick)?;
        match &self.kind {
            EventKind::Footstep(f) => {
                map.serialize_entry("player_id", &f.player_id)?;
                map.serialize_entry("side", &f.side)?;
                map.serialize_entry("position", &f.position)?;
                if let Some(a) = f.area_id {
                    map.serialize_entry("area_id", &a)?;
                }
            }
            EventKind::Damage(d) => {
                map.serialize_entry("attacker_id", &d.attacker_id)?;
                map.serialize_entry("attacker_side", &d.attacker_side)?;
                map.serialize_entry("victim_id", &d.victim_id)?;
                map.serialize_entry("victim_side", &d.victim_side)?;
                map.serialize_entry("hp_damage", &d.hp_damage)?;
                map.serialize_entry("is_kill", &d.is_kill)?;
                if let Some(a) = &d.assister_id {
                    map.serialize_entry("assister_id", a)?;
                }
                map.serialize_entry("attacker_position", &d.attacker_position)?;
                map.serialize_entry("victim_position", &d.victim_position)?;
            }
            EventKind::BombPlant(p) => {
                map.serialize_entry("player_id", &p.player_id)?;
                map.serialize_entry("site", &p.site)?;
            }
            EventKind::BombDefuse(d) => {
                map.serialize_entry("player_id", &d.player_id)?;
            }
        }
        map.end()
    }
}

/// Union of every event payload field; `type` decides which are required.
#[derive(Deserialize)]
struct EventFields {
    #[serde(rename = "type")]
    kind: String,
    tick: i64,
    player_id: Option<String>,
    side: Option<Side>,
    position: Option<Vec3>,
    area_id: Option<u32>,
    attacker_id: Option<String>,
    attacker_side: Option<Side>,
    victim_id: Option<String>,
    victim_side: Option<Side>,
    hp_damage: Option<u32>,
    is_kill: Option<bool>,
    assister_id: Option<String>,
    attacker_position: Option<Vec3>,
    victim_position: Option<Vec3>,
    site: Option<BombSite>,
}

struct MissingField(&'static str, &'static str);

impl fmt::Display for MissingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} event is missing field `{}`", self.0, self.1)
    }
}

impl<'de> Deserialize<'de> for GameEvent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let f = EventFields::deserialize(deserializer)?;
        fn req<T, E: serde::de::Error>(v: Option<T>, ty: &'static str, name: &'static str) -> Result<T, E> {
            v.ok_or_else(|| E::custom(MissingField(ty, name)))
        }
        let kind = match f.kind.as_str() {
            "footstep" => EventKind::Footstep(Footstep {
                player_id: req(f.player_id, "footstep", "player_id")?,
                side: req(f.side, "footstep", "side")?,
                position: req(f.position, "footstep", "position")?,
                area_id: f.area_id,
            }),
            "damage" => EventKind::Damage(Damage {
                attacker_id: req(f.attacker_id, "damage", "attacker_id")?,
                attacker_side: req(f.attacker_side, "damage", "attacker_side")?,
                victim_id: req(f.victim_id, "damage", "victim_id")?,
                victim_side: req(f.victim_side, "damage", "victim_side")?,
                hp_damage: req(f.hp_damage, "damage", "hp_damage")?,
                is_kill: req(f.is_kill, "damage", "is_kill")?,
                assister_id: f.assister_id,
                attacker_position: req(f.attacker_position, "damage", "attacker_position")?,
                victim_position: req(f.victim_position, "damage", "victim_position")?,
            }),
            "bomb_plant" => EventKind::BombPlant(BombPlant {
                player_id: req(f.player_id, "bomb_plant", "player_id")?,
                site: req(f.site, "bomb_plant", "site")?,
            }),
            "bomb_defuse" => EventKind::BombDefuse(BombDefuse {
                player_id: req(f.player_id, "bomb_defuse", "player_id")?,
            }),
            other => return Err(D::Error::custom(format!("unknown event type {other:?}"))),
        };
        Ok(GameEvent { tick: f.tick, kind })
    }
}
