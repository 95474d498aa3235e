//! Binary game-state tables (`.wpas`).
//!
//! Layout, little endian:
//!
//! ```text
//! b"WPAS" | u16 version | u16 n_columns | n_columns × (u8 type, u16 len, name)
//! u32 n_strings | n_strings × (u16 len, utf-8)        string dictionary
//! blocks: u32 n_rows (> 0) | n_rows × row              row-major
//! u32 0 | u64 total_rows                              footer
//! ```
//!
//! Strings (match ids, map names) are stored as `u32` dictionary indices.
//! See `docs/formats.md` for the per-type encodings.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::model::{BombSite, GameState};

pub const STATE_FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 4] = b"WPAS";
const BLOCK_ROWS: usize = 65_536;

#[derive(Debug, Error)]
pub enum StateFileError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a state file (bad magic)")]
    BadMagic,
    #[error("unsupported state file version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("state file is truncated")]
    Truncated,
    #[error("corrupt state file: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum ColType {
    Str = 0,
    Date = 1,
    U32 = 2,
    I64 = 3,
    U8 = 4,
    Bool = 5,
    OptSite = 6,
    OptF64 = 7,
    OptBool = 8,
}

const COLUMNS: [(&str, ColType); 20] = [
    ("match_id", ColType::Str),
    ("match_date", ColType::Date),
    ("map_name", ColType::Str),
    ("round_num", ColType::U32),
    ("tick_rate", ColType::U32),
    ("tick", ColType::I64),
    ("ticks_since_start", ColType::I64),
    ("ct_equip_value", ColType::U32),
    ("t_equip_value", ColType::U32),
    ("ct_players_alive", ColType::U8),
    ("t_players_alive", ColType::U8),
    ("ct_hp_total", ColType::U32),
    ("t_hp_total", ColType::U32),
    ("bomb_planted", ColType::Bool),
    ("bomb_site", ColType::OptSite),
    ("ct_dist_a", ColType::OptF64),
    ("ct_dist_b", ColType::OptF64),
    ("t_dist_a", ColType::OptF64),
    ("t_dist_b", ColType::OptF64),
    ("outcome_label", ColType::OptBool),
];

fn put_opt_f64(buf: &mut Vec<u8>, v: Option<f64>) {
    match v {
        None => buf.push(0),
        Some(x) => {
            buf.push(1);
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub fn write_states_to(states: &[GameState], out: &mut impl Write) -> Result<(), StateFileError> {
    let mut header = Vec::new();
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&STATE_FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&(COLUMNS.len() as u16).to_le_bytes());
    for (name, ty) in COLUMNS {
        header.push(ty as u8);
        header.extend_from_slice(&(name.len() as u16).to_le_bytes());
        header.extend_from_slice(name.as_bytes());
    }
    let mut dict: Vec<&str> = Vec::new();
    let mut index: HashMap<&str, u32> = HashMap::new();
    for s in states {
        for v in [&*s.match_id, &*s.map_name] {
            index.entry(v).or_insert_with(|| {
                dict.push(v);
                dict.len() as u32 - 1
            });
        }
    }
    header.extend_from_slice(&(dict.len() as u32).to_le_bytes());
    for s in &dict {
        let len = u16::try_from(s.len()).map_err(|_| StateFileError::Corrupt(format!("string too long: {s:.40}…")))?;
        header.extend_from_slice(&len.to_le_bytes());
        header.extend_from_slice(s.as_bytes());
    }
    out.write_all(&header)?;

    let mut buf = Vec::with_capacity(BLOCK_ROWS * 96);
    for block in states.chunks(BLOCK_ROWS) {
        buf.clear();
        buf.extend_from_slice(&(block.len() as u32).to_le_bytes());
        for s in block {
            buf.extend_from_slice(&index[&*s.match_id].to_le_bytes());
            buf.extend_from_slice(&s.match_date.num_days_from_ce().to_le_bytes());
            buf.extend_from_slice(&index[&*s.map_name].to_le_bytes());
            buf.extend_from_slice(&s.round_num.to_le_bytes());
            buf.extend_from_slice(&s.tick_rate.to_le_bytes());
            buf.extend_from_slice(&s.tick.to_le_bytes());
            buf.extend_from_slice(&s.ticks_since_start.to_le_bytes());
            buf.extend_from_slice(&s.ct_equip_value.to_le_bytes());
            buf.extend_from_slice(&s.t_equip_value.to_le_bytes());
            buf.push(s.ct_players_alive);
            buf.push(s.t_players_alive);
            buf.extend_from_slice(&s.ct_hp_total.to_le_bytes());
            buf.extend_from_slice(&s.t_hp_total.to_le_bytes());
            buf.push(s.bomb_planted as u8);
            buf.push(match s.bomb_site {
                None => 0,
                Some(BombSite::A) => 1,
                Some(BombSite::B) => 2,
            });
            for d in [s.ct_dist_a, s.ct_dist_b, s.t_dist_a, s.t_dist_b] {
                put_opt_f64(&mut buf, d);
            }
            buf.push(match s.outcome_label {
                None => 0,
                Some(false) => 1,
                Some(true) => 2,
            });
        }
        out.write_all(&buf)?;
    }
    out.write_all(&0u32.to_le_bytes())?;
    out.write_all(&(states.len() as u64).to_le_bytes())?;
    Ok(())
}

pub fn write_states(states: &[GameState], path: impl AsRef<Path>) -> Result<(), StateFileError> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_states_to(states, &mut f)?;
    f.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StateFileError> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or(StateFileError::Truncated)?;
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, StateFileError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, StateFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32, StateFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn i32(&mut self) -> Result<i32, StateFileError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn i64(&mut self) -> Result<i64, StateFileError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u64(&mut self) -> Result<u64, StateFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, StateFileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn opt_f64(&mut self) -> Result<Option<f64>, StateFileError> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.f64()?)),
            b => Err(StateFileError::Corrupt(format!("bad optional flag {b}"))),
        }
    }
}

pub fn read_states_from(input: &mut impl Read) -> Result<Vec<GameState>, StateFileError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4).map_err(|_| StateFileError::BadMagic)? != MAGIC {
        return Err(StateFileError::BadMagic);
    }
    let version = c.u16()?;
    if version != STATE_FORMAT_VERSION {
        return Err(StateFileError::VersionMismatch {
            found: version,
            expected: STATE_FORMAT_VERSION,
        });
    }
    let n_cols = c.u16()? as usize;
    if n_cols != COLUMNS.len() {
        return Err(StateFileError::Corrupt(format!("expected {} columns, found {n_cols}", COLUMNS.len())));
    }
    for (name, ty) in COLUMNS {
        let t = c.u8()?;
        let len = c.u16()? as usize;
        let got = c.take(len)?;
        if t != ty as u8 || got != name.as_bytes() {
            return Err(StateFileError::Corrupt(format!(
                "column table mismatch: expected {name}, found {}",
                String::from_utf8_lossy(got)
            )));
        }
    }
    let n_strings = c.u32()? as usize;
    let mut dict: Vec<Arc<str>> = Vec::with_capacity(n_strings.min(1 << 20));
    for _ in 0..n_strings {
        let len = c.u16()? as usize;
        let s = std::str::from_utf8(c.take(len)?).map_err(|e| StateFileError::Corrupt(e.to_string()))?;
        dict.push(Arc::from(s));
    }
    let string = |i: u32| -> Result<Arc<str>, StateFileError> {
        dict.get(i as usize)
            .cloned()
            .ok_or_else(|| StateFileError::Corrupt(format!("string index {i} out of range")))
    };

    let mut states = Vec::new();
    loop {
        let n = c.u32()? as usize;
        if n == 0 {
            break;
        }
        states.reserve(n);
        for _ in 0..n {
            let match_id = string(c.u32()?)?;
            let days = c.i32()?;
            let match_date = NaiveDate::from_num_days_from_ce_opt(days)
                .ok_or_else(|| StateFileError::Corrupt(format!("bad date {days}")))?;
            let map_name = string(c.u32()?)?;
            let round_num = c.u32()?;
            let tick_rate = c.u32()?;
            let tick = c.i64()?;
            let ticks_since_start = c.i64()?;
            let ct_equip_value = c.u32()?;
            let t_equip_value = c.u32()?;
            let ct_players_alive = c.u8()?;
            let t_players_alive = c.u8()?;
            let ct_hp_total = c.u32()?;
            let t_hp_total = c.u32()?;
            let bomb_planted = c.u8()? != 0;
            let bomb_site = match c.u8()? {
                0 => None,
                1 => Some(BombSite::A),
                2 => Some(BombSite::B),
                b => return Err(StateFileError::Corrupt(format!("bad bomb site code {b}"))),
            };
            let ct_dist_a = c.opt_f64()?;
            let ct_dist_b = c.opt_f64()?;
            let t_dist_a = c.opt_f64()?;
            let t_dist_b = c.opt_f64()?;
            let outcome_label = match c.u8()? {
                0 => None,
                1 => Some(false),
                2 => Some(true),
                b => return Err(StateFileError::Corrupt(format!("bad label code {b}"))),
            };
            states.push(GameState {
                match_id,
                match_date,
                map_name,
                round_num,
                tick_rate,
                tick,
                ticks_since_start,
                ct_equip_value,
                t_equip_value,
                ct_players_alive,
                t_players_alive,
                ct_hp_total,
                t_hp_total,
                bomb_planted,
                bomb_site,
                ct_dist_a,
                ct_dist_b,
                t_dist_a,
                t_dist_b,
                outcome_label,
            });
        }
    }
    let total = c.u64()?;
    if total != states.len() as u64 {
        return Err(StateFileError::Corrupt(format!("footer says {total} rows, read {}", states.len())));
    }
    if c.pos != buf.len() {
        return Err(StateFileError::Corrupt("trailing bytes after footer".into()));
    }
    Ok(states)
}

pub fn read_states(path: impl AsRef<Path>) -> Result<Vec<GameState>, StateFileError> {
    read_states_from(&mut io::BufReader::new(std::fs::File::open(path)?))
}
