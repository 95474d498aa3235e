#ifndef CSGO_WPA_H
#define CSGO_WPA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum WpaStatus {
  WPA_STATUS_OK = 0,
  WPA_STATUS_NULL_ARGUMENT = 1,
  WPA_STATUS_INVALID_UTF8 = 2,
  WPA_STATUS_IO = 3,
  /**
   * A model, navmesh or match file could not be decoded.
   */
  WPA_STATUS_FORMAT = 4,
  /**
   * Match data failed validation or replay.
   */
  WPA_STATUS_VALIDATION = 5,
  /**
   * An area id or name, or an enum value, is not known.
   */
  WPA_STATUS_INVALID_ARGUMENT = 6,
  /**
   * The output buffer is too small; the required length was written.
   */
  WPA_STATUS_BUFFER_TOO_SMALL = 7,
  WPA_STATUS_PANIC = 8,
} WpaStatus;

/**
 * Opaque trained model.
 */
typedef struct WpaModel WpaModel;

/**
 * Opaque navmesh graph.
 */
typedef struct WpaNavGraph WpaNavGraph;

/**
 * One game state for single-state prediction. `bomb_site` is 0 (none),
 * 1 (A) or 2 (B).
 */
typedef struct WpaState {
  const char *map_name;
  int64_t ticks_since_start;
  uint32_t tick_rate;
  uint32_t ct_equip_value;
  uint32_t t_equip_value;
  uint8_t ct_players_alive;
  uint8_t t_players_alive;
  uint32_t ct_hp_total;
  uint32_t t_hp_total;
  uint8_t bomb_site;
} WpaState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call on the same thread.
 */
const char *wpa_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wpa_version(void);

/**
 * Loads a model file written by `csgo-wpa train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WpaStatus wpa_model_load(const char *path, struct WpaModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`wpa_model_load`] and not be used afterwards.
 */
void wpa_model_free(struct WpaModel *model);

/**
 * CT win probability of a single state.
 *
 * # Safety
 * `model`, `state` and `out` must be valid; `state.map_name` must be a
 * NUL-terminated string.
 */
enum WpaStatus wpa_model_predict_state(const struct WpaModel *model,
                                       const struct WpaState *state,
                                       double *out);

/**
 * CT win probability of every replayed state of a match, rounds in order.
 *
 * Writes up to `capacity` values to `out` and the total count to `out_len`.
 * Returns [`WpaStatus::BufferTooSmall`] (with `out_len` set) when
 * `capacity` is too small; `out` may be NULL in that case.
 *
 * # Safety
 * `json` must point to `json_len` readable bytes, `out` to `capacity`
 * writable doubles, and `model` and `out_len` must be valid.
 */
enum WpaStatus wpa_match_win_probs(const struct WpaModel *model,
                                   const uint8_t *json,
                                   size_t json_len,
                                   double *out,
                                   size_t capacity,
                                   size_t *out_len);

/**
 * Loads a navmesh JSON file. `euclidean` selects centroid-distance edge
 * weights instead of unit weights.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WpaStatus wpa_navgraph_load(const char *path, bool euclidean, struct WpaNavGraph **out);

/**
 * Releases a graph. NULL is ignored.
 *
 * # Safety
 * `graph` must come from [`wpa_navgraph_load`] and not be used afterwards.
 */
void wpa_navgraph_free(struct WpaNavGraph *graph);

/**
 * Shortest directed distance between two areas; `INFINITY` when `to` is
 * unreachable.
 *
 * # Safety
 * `graph` and `out` must be valid pointers.
 */
enum WpaStatus wpa_navgraph_distance(const struct WpaNavGraph *graph,
                                     uint32_t from,
                                     uint32_t to,
                                     double *out);

/**
 * Distance from an area to the nearest area of bombsite `site` (1 = A,
 * 2 = B).
 *
 * # Safety
 * `graph` and `out` must be valid pointers.
 */
enum WpaStatus wpa_navgraph_site_distance(const struct WpaNavGraph *graph,
                                          uint32_t from,
                                          uint8_t site,
                                          double *out);

/**
 * Resolves an area name (or decimal id) to its id.
 *
 * # Safety
 * `graph` and `out` must be valid; `name` must be a NUL-terminated string.
 */
enum WpaStatus wpa_navgraph_resolve(const struct WpaNavGraph *graph,
                                    const char *name,
                                    uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSGO_WPA_H */
