use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ActionValue;
use crate::model::{MatchRecord, RoundRecord, Side};

/// Players-remaining pattern such as a 1v2, read from one side's point of
/// view: `side` has `own` players alive and the opponent `opponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlivePattern {
    pub side: Side,
    pub own: u8,
    pub opponent: u8,
}

impl AlivePattern {
    pub fn matches(&self, ct_alive: u8, t_alive: u8) -> bool {
        let (own, opp) = match self.side {
            Side::Ct => (ct_alive, t_alive),
            Side::T => (t_alive, ct_alive),
        };
        own == self.own && opp == self.opponent
    }
}

impl fmt::Display for AlivePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Ct => "ct",
            Side::T => "t",
        };
        write!(f, "{side}:{}v{}", self.own, self.opponent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterParseError {
    #[error("empty filter clause")]
    EmptyClause,
    #[error("unknown filter clause {0:?} (expected pistol, map=, alive= or wp=)")]
    UnknownClause(String),
    #[error("bad value in filter clause {clause:?}: {reason}")]
    BadValue { clause: String, reason: String },
}

impl FromStr for AlivePattern {
    type Err = FilterParseError;

    /// `1v2` (T side first), `t:1v2` or `ct:1v2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| FilterParseError::BadValue {
            clause: s.to_string(),
            reason: reason.to_string(),
        };
        let (side, pattern) = match s.split_once(':') {
            Some((side, rest)) => match side.to_ascii_lowercase().as_str() {
                "t" => (Side::T, rest),
                "ct" => (Side::Ct, rest),
                _ => return Err(bad("side must be t or ct")),
            },
            None => (Side::T, s),
        };
        let (own, opp) = pattern.split_once(['v', 'V']).ok_or_else(|| bad("expected a pattern like 1v2"))?;
        let count = |v: &str| -> Result<u8, FilterParseError> {
            match v.trim().parse::<u8>() {
                Ok(n) if n <= 5 => Ok(n),
                _ => Err(bad("player counts must be 0..=5")),
            }
        };
        Ok(AlivePattern {
            side,
            own: count(own)?,
            opponent: count(opp)?,
        })
    }
}

/// Conjunction of round- and state-level predicates.
///
/// Round predicates (`pistol_only`, `maps`) select rounds and therefore the
/// denominators of per-round metrics. State predicates (`alive`, `win_prob`)
/// select actions by the state before the action. The win-probability range
/// is read in the acting team's frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFilter {
    pub pistol_only: bool,
    pub maps: Option<BTreeSet<String>>,
    pub alive: Vec<AlivePattern>,
    pub win_prob: Vec<(f64, f64)>,
}

impl ScenarioFilter {
    pub fn pistol() -> Self {
        Self {
            pistol_only: true,
            ..Self::default()
        }
    }

    pub fn and(mut self, other: ScenarioFilter) -> Self {
        self.pistol_only |= other.pistol_only;
        self.maps = match (self.maps, other.maps) {
            (Some(a), Some(b)) => Some(a.intersection(&b).cloned().collect()),
            (a, b) => a.or(b),
        };
        self.alive.extend(other.alive);
        self.win_prob.extend(other.win_prob);
        self
    }

    pub fn keeps_round(&self, record: &MatchRecord, round: &RoundRecord) -> bool {
        (!self.pistol_only || round.is_pistol()) && self.maps.as_ref().is_none_or(|m| m.contains(&record.map_name))
    }

    pub fn keeps_state(&self, ct_alive: u8, t_alive: u8) -> bool {
        self.alive.iter().all(|p| p.matches(ct_alive, t_alive))
    }

    /// State-level predicates only; the caller checks the round.
    pub fn keeps_action(&self, action: &ActionValue) -> bool {
        let p = action.actor_win_prob_pre();
        self.keeps_state(action.pre_ct_alive, action.pre_t_alive)
            && self.win_prob.iter().all(|&(lo, hi)| p >= lo && p <= hi)
    }
}

impl FromStr for ScenarioFilter {
    type Err = FilterParseError;

    /// Comma-separated clauses, all of which must hold:
    /// `pistol`, `map=de_dust2|de_inferno`, `alive=1v2` / `alive=ct:2v1`,
    /// `wp=0..0.05`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = ScenarioFilter::default();
        for clause in s.split(',').map(str::trim) {
            if clause.is_empty() {
                return Err(FilterParseError::EmptyClause);
            }
            let bad = |reason: &str| FilterParseError::BadValue {
                clause: clause.to_string(),
                reason: reason.to_string(),
            };
            match clause.split_once('=') {
                None if clause == "pistol" => f.pistol_only = true,
                Some(("map", maps)) => {
                    let maps: BTreeSet<String> = maps.split('|').map(|m| m.trim().to_string()).collect();
                    if maps.iter().any(String::is_empty) {
                        return Err(bad("empty map name"));
                    }
                    f = f.and(ScenarioFilter {
                        maps: Some(maps),
                        ..Default::default()
                    });
                }
                Some(("alive", pattern)) => f.alive.push(pattern.trim().parse()?),
                Some(("wp", range)) => {
                    let (lo, hi) = range.split_once("..").ok_or_else(|| bad("expected lo..hi"))?;
                    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("bounds must be numbers"));
                    let (lo, hi) = (parse(lo)?, parse(hi)?);
                    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                        return Err(bad("need 0 <= lo <= hi <= 1"));
                    }
                    f.win_prob.push((lo, hi));
                }
                _ => return Err(FilterParseError::UnknownClause(clause.to_string())),
            }
        }
        Ok(f)
    }
}

/// Rounds that pass a filter's round predicates, as `(match, round)`
/// indices into the slice the view was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundView {
    pub rounds: Vec<(usize, usize)>,
    keys: HashSet<(String, u32)>,
}

/// A round in a view with its roster, for per-round resampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundKey {
    pub match_id: String,
    pub round_num: u32,
    pub players: Vec<String>,
}

pub fn apply_filter(filter: &ScenarioFilter, records: &[MatchRecord]) -> RoundView {
    let mut rounds = Vec::new();
    let mut keys = HashSet::new();
    for (mi, m) in records.iter().enumerate() {
        for (ri, r) in m.rounds.iter().enumerate() {
            if filter.keeps_round(m, r) {
                rounds.push((mi, ri));
                keys.insert((m.match_id.clone(), r.round_num));
            }
        }
    }
    RoundView { rounds, keys }
}

impl RoundView {
    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn contains(&self, match_id: &str, round_num: u32) -> bool {
        self.keys.contains(&(match_id.to_string(), round_num))
    }

    pub fn rounds<'a>(&self, records: &'a [MatchRecord]) -> Vec<(&'a MatchRecord, &'a RoundRecord)> {
        self.rounds.iter().map(|&(m, r)| (&records[m], &records[m].rounds[r])).collect()
    }

    pub fn rounds_played(&self, records: &[MatchRecord]) -> BTreeMap<String, u32> {
        let mut out = BTreeMap::new();
        for (_, r) in self.rounds(records) {
            for p in r.players.all() {
                *out.entry(p.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn round_keys(&self, records: &[MatchRecord]) -> Vec<RoundKey> {
        self.rounds(records)
            .into_iter()
            .map(|(m, r)| RoundKey {
                match_id: m.match_id.clone(),
                round_num: r.round_num,
                players: r.players.all().cloned().collect(),
            })
            .collect()
    }

    /// Round membership plus the filter's state predicates.
    pub fn keeps_action(&self, filter: &ScenarioFilter, action: &ActionValue) -> bool {
        self.contains(&action.match_id, action.round_num) && filter.keeps_action(action)
    }
}
