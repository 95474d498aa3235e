//! C ABI for loading win-probability models, scoring matches and querying
//! navmesh distances.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`WpaStatus`];
//! on failure [`wpa_last_error`] describes the most recent error on the
//! calling thread. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use csgo_wpa::ingest::parse_match;
use csgo_wpa::model::{replay_match, BombSite, GameState};
use csgo_wpa::navmesh::{build_graph, distance_to_site, graph_distance, NavGraph, NavMesh, Weighting};
use csgo_wpa::winprob::{load_model, predict_states, WinProbModel};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// A model, navmesh or match file could not be decoded.
    Format = 4,
    /// Match data failed validation or replay.
    Validation = 5,
    /// An area id or name, or an enum value, is not known.
    InvalidArgument = 6,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque trained model.
pub struct WpaModel(WinProbModel);

/// Opaque navmesh graph.
pub struct WpaNavGraph(NavGraph);

/// One game state for single-state prediction. `bomb_site` is 0 (none),
/// 1 (A) or 2 (B).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpaState {
    pub map_name: *const c_char,
    pub ticks_since_start: i64,
    pub tick_rate: u32,
    pub ct_equip_value: u32,
    pub t_equip_value: u32,
    pub ct_players_alive: u8,
    pub t_players_alive: u8,
    pub ct_hp_total: u32,
    pub t_hp_total: u32,
    pub bomb_site: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(WpaStatus, String);

impl Failure {
    fn new(status: WpaStatus, message: impl Into<String>) -> Self {
        Self(status, message.into())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WpaStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WpaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(WpaStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(WpaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(WpaStatus::NullArgument, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn wpa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wpa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `csgo-wpa train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wpa_model_load(path: *const c_char, out: *mut *mut WpaModel) -> WpaStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let model = load_model(&path).map_err(|e| {
            let status = match e {
                csgo_wpa::winprob::WinProbError::Io(_) => WpaStatus::Io,
                _ => WpaStatus::Format,
            };
            Failure::new(status, format!("{}: {e}", path.display()))
        })?;
        *out = Box::into_raw(Box::new(WpaModel(model)));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`wpa_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpa_model_free(model: *mut WpaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// CT win probability of a single state.
///
/// # Safety
/// `model`, `state` and `out` must be valid; `state.map_name` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wpa_model_predict_state(
    model: *const WpaModel,
    state: *const WpaState,
    out: *mut f64,
) -> WpaStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(state, "state")?;
        non_null(out, "out")?;
        let s = &*state;
        let bomb_site = match s.bomb_site {
            0 => None,
            1 => Some(BombSite::A),
            2 => Some(BombSite::B),
            other => return Err(Failure::new(WpaStatus::InvalidArgument, format!("bomb_site {other} is not 0, 1 or 2"))),
        };
        let state = GameState {
            match_id: Arc::from(""),
            match_date: Default::default(),
            map_name: Arc::from(str_arg(s.map_name, "state.map_name")?),
            round_num: 1,
            tick_rate: s.tick_rate,
            tick: s.ticks_since_start,
            ticks_since_start: s.ticks_since_start,
            ct_equip_value: s.ct_equip_value,
            t_equip_value: s.t_equip_value,
            ct_players_alive: s.ct_players_alive,
            t_players_alive: s.t_players_alive,
            ct_hp_total: s.ct_hp_total,
            t_hp_total: s.t_hp_total,
            bomb_planted: bomb_site.is_some(),
            bomb_site,
            ct_dist_a: None,
            ct_dist_b: None,
            t_dist_a: None,
            t_dist_b: None,
            outcome_label: None,
        };
        *out = (*model).0.predict_state(&state).map_err(|e| Failure::new(WpaStatus::Format, e.to_string()))?;
        Ok(())
    })
}

/// CT win probability of every replayed state of a match, rounds in order.
///
/// Writes up to `capacity` values to `out` and the total count to `out_len`.
/// Returns [`WpaStatus::BufferTooSmall`] (with `out_len` set) when
/// `capacity` is too small; `out` may be NULL in that case.
///
/// # Safety
/// `json` must point to `json_len` readable bytes, `out` to `capacity`
/// writable doubles, and `model` and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wpa_match_win_probs(
    model: *const WpaModel,
    json: *const u8,
    json_len: usize,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> WpaStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(json, "json")?;
        non_null(out_len, "out_len")?;
        let bytes = std::slice::from_raw_parts(json, json_len);
        let record = parse_match(bytes).map_err(|e| Failure::new(WpaStatus::Validation, e.to_string()))?;
        let states: Vec<GameState> = replay_match(&record, None)
            .map_err(|e| Failure::new(WpaStatus::Validation, format!("match {}: {e}", record.match_id)))?
            .into_iter()
            .flatten()
            .collect();
        let p = predict_states(&(*model).0, &states).map_err(|e| Failure::new(WpaStatus::Format, e.to_string()))?;
        *out_len = p.len();
        if capacity < p.len() {
            return Err(Failure::new(
                WpaStatus::BufferTooSmall,
                format!("{} values do not fit in a buffer of {capacity}", p.len()),
            ));
        }
        non_null(out, "out")?;
        std::ptr::copy_nonoverlapping(p.as_ptr(), out, p.len());
        Ok(())
    })
}

/// Loads a navmesh JSON file. `euclidean` selects centroid-distance edge
/// weights instead of unit weights.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wpa_navgraph_load(path: *const c_char, euclidean: bool, out: *mut *mut WpaNavGraph) -> WpaStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let mesh = NavMesh::load(&path).map_err(|e| {
            let status = match e {
                csgo_wpa::navmesh::NavError::Io(_) => WpaStatus::Io,
                _ => WpaStatus::Format,
            };
            Failure::new(status, format!("{}: {e}", path.display()))
        })?;
        let weighting = if euclidean { Weighting::Euclidean } else { Weighting::Unit };
        let graph = build_graph(&mesh, weighting).map_err(|e| Failure::new(WpaStatus::Format, e.to_string()))?;
        *out = Box::into_raw(Box::new(WpaNavGraph(graph)));
        Ok(())
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `graph` must come from [`wpa_navgraph_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wpa_navgraph_free(graph: *mut WpaNavGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Shortest directed distance between two areas; `INFINITY` when `to` is
/// unreachable.
///
/// # Safety
/// `graph` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wpa_navgraph_distance(graph: *const WpaNavGraph, from: u32, to: u32, out: *mut f64) -> WpaStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let r = graph_distance(&(*graph).0, from, to).map_err(|e| Failure::new(WpaStatus::InvalidArgument, e.to_string()))?;
        *out = r.distance;
        Ok(())
    })
}

/// Distance from an area to the nearest area of bombsite `site` (1 = A,
/// 2 = B).
///
/// # Safety
/// `graph` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wpa_navgraph_site_distance(
    graph: *const WpaNavGraph,
    from: u32,
    site: u8,
    out: *mut f64,
) -> WpaStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let site = match site {
            1 => BombSite::A,
            2 => BombSite::B,
            other => return Err(Failure::new(WpaStatus::InvalidArgument, format!("site {other} is not 1 or 2"))),
        };
        *out = distance_to_site(&(*graph).0, from, site).map_err(|e| Failure::new(WpaStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Resolves an area name (or decimal id) to its id.
///
/// # Safety
/// `graph` and `out` must be valid; `name` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wpa_navgraph_resolve(graph: *const WpaNavGraph, name: *const c_char, out: *mut u32) -> WpaStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let name = str_arg(name, "name")?;
        *out = (*graph).0.resolve(name).map_err(|e| Failure::new(WpaStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
