#ifndef OBJNAV_H
#define OBJNAV_H

/* Generated by cbindgen from the objnav-ffi crate. Do not edit by hand. */

#include <stdint.h>
#include <stddef.h>

#define OBJNAV_OK 0

// Bad usage: unknown kinds, invalid configuration values.
#define OBJNAV_ERR_CONFIG 1

// A precondition or data invariant was violated.
#define OBJNAV_ERR_CONTRACT 2

#define OBJNAV_ERR_IO 3

// A required pointer argument was null.
#define OBJNAV_ERR_NULL 4

// A string argument was not valid UTF-8.
#define OBJNAV_ERR_UTF8 5

// A caller-supplied buffer was too small.
#define OBJNAV_ERR_BUFFER 6

typedef struct ObjnavAgent ObjnavAgent;

typedef struct ObjnavDataset ObjnavDataset;

typedef struct ObjnavHouse ObjnavHouse;

typedef struct ObjnavModel ObjnavModel;

typedef struct ObjnavSim ObjnavSim;

// Mirror of the simulator configuration. `reward_shaping` is 0 or 1.
typedef struct ObjnavEnvConfig {
  double forward_step;
  double turn_angle_deg;
  double success_distance;
  uint32_t max_steps;
  double hfov_deg;
  double sensor_range;
  uint32_t seg_k;
  uint8_t reward_shaping;
  double reward_success_bonus;
  double reward_step_penalty;
} ObjnavEnvConfig;

typedef struct ObjnavStepResult {
  double reward;
  uint8_t done;
  uint8_t success;
  uint8_t collided;
  double geo_to_goal;
  double x;
  double y;
  uint32_t heading;
} ObjnavStepResult;

typedef struct ObjnavEpisodeInfo {
  // Borrowed from the dataset handle.
  const char *id;
  // Borrowed from the dataset handle.
  const char *house;
  const char *split;
  uint32_t goal_class;
  double start_x;
  double start_y;
  uint32_t start_heading;
  double euclidean;
  double geodesic;
  uint32_t shortest_path_steps;
} ObjnavEpisodeInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the most recent failure on this thread; empty if none.
// The pointer stays valid until the next failing call on the thread.
const char *objnav_last_error(void);

const char *objnav_version(void);

int32_t objnav_env_config_default(struct ObjnavEnvConfig *out);

// Number of discrete headings the turn angle yields (12 by default).
int32_t objnav_env_headings(const struct ObjnavEnvConfig *cfg, uint32_t *out);

// Generate a house. Cells are 0.25 m; `grid_w`/`grid_h` include the
// boundary wall.
//
// # Safety
// `out` must point to writable storage for one pointer.
int32_t objnav_house_generate(uint64_t seed,
                              uint32_t grid_w,
                              uint32_t grid_h,
                              uint32_t min_rooms,
                              uint32_t max_rooms,
                              uint32_t min_objects,
                              uint32_t max_objects,
                              struct ObjnavHouse **out);

// # Safety
// `path` must be a valid NUL-terminated string; see [`objnav_house_generate`] for `out`.
int32_t objnav_house_load(const char *path, struct ObjnavHouse **out);

// # Safety
// `house` must be a live handle; `path` a valid NUL-terminated string.
int32_t objnav_house_save(const struct ObjnavHouse *house, const char *path);

// Copy the house id into `buf` (NUL-terminated).
//
// # Safety
// `house` must be a live handle; `buf` must hold `cap` writable bytes.
int32_t objnav_house_id(const struct ObjnavHouse *house, char *buf, size_t cap);

// # Safety
// `house` must be a live handle; out pointers must be writable or null.
int32_t objnav_house_dims(const struct ObjnavHouse *house, uint32_t *w, uint32_t *h);

// Whether cell (ix, iy) is a wall or object cell. Out-of-bounds counts as
// blocked, matching the simulator.
//
// # Safety
// `house` must be a live handle; `out` writable.
int32_t objnav_house_is_blocked(const struct ObjnavHouse *house,
                                int64_t ix,
                                int64_t iy,
                                uint8_t *out);

// # Safety
// `house` must come from this library and not already be freed.
void objnav_house_free(struct ObjnavHouse *house);

// Start an episode. `cfg` may be null for defaults; `goal_class` is a
// class index in [0, 5). The house must stay alive (and unfreed) for the
// simulator's whole lifetime.
//
// # Safety
// `house` must be a live handle that outlives the simulator; `cfg` null or
// valid; `out` writable.
int32_t objnav_sim_new(const struct ObjnavHouse *house,
                       const struct ObjnavEnvConfig *cfg,
                       double x,
                       double y,
                       uint32_t heading,
                       uint32_t goal_class,
                       struct ObjnavSim **out);

// Apply one action: 0 forward, 1 turn left, 2 turn right, 3 stop.
//
// # Safety
// `sim` must be a live handle; `out` writable.
int32_t objnav_sim_step(struct ObjnavSim *sim, uint32_t action, struct ObjnavStepResult *out);

// Current pose and distance-to-goal without stepping. `reward`, `done`,
// `success` and `collided` are zero.
//
// # Safety
// `sim` must be a live handle; `out` writable.
int32_t objnav_sim_state(const struct ObjnavSim *sim, struct ObjnavStepResult *out);

// # Safety
// `sim` must be a live handle; out pointers writable.
int32_t objnav_sim_progress(const struct ObjnavSim *sim, uint32_t *steps, double *path_length);

// Number of doubles [`objnav_sim_observation`] writes: the k*k*7 visible
// class grid, the 6-way room histogram, then the 4 pose features.
//
// # Safety
// `sim` must be a live handle; `out` writable.
int32_t objnav_sim_obs_len(const struct ObjnavSim *sim, size_t *out);

// Write the current observation into `buf` and the two categorical inputs
// into `prev_action` (4 means "none yet") and `goal`.
//
// # Safety
// `sim` must be a live handle; `buf` must hold `cap` doubles; the two out
// pointers must be writable.
int32_t objnav_sim_observation(const struct ObjnavSim *sim,
                               double *buf,
                               size_t cap,
                               uint32_t *prev_action,
                               uint32_t *goal);

// # Safety
// `sim` must come from this library and not already be freed.
void objnav_sim_free(struct ObjnavSim *sim);

// # Safety
// `path` must be a valid NUL-terminated string; `out` writable.
int32_t objnav_dataset_load(const char *path, struct ObjnavDataset **out);

// # Safety
// `ds` must be a live handle; out pointers writable.
int32_t objnav_dataset_info(const struct ObjnavDataset *ds,
                            uint64_t *seed,
                            uint32_t *n_houses,
                            uint32_t *n_episodes);

// The environment configuration every episode in the dataset was drawn
// under (and must be replayed under).
//
// # Safety
// `ds` must be a live handle; `out` writable.
int32_t objnav_dataset_env(const struct ObjnavDataset *ds, struct ObjnavEnvConfig *out);

// # Safety
// `ds` must be a live handle; `out` writable. The string fields of `out`
// stay valid only while `ds` lives.
int32_t objnav_dataset_episode(const struct ObjnavDataset *ds,
                               size_t index,
                               struct ObjnavEpisodeInfo *out);

// Borrow the house with the given id from the dataset. The returned house
// must not be freed and dies with the dataset.
//
// # Safety
// `ds` must be a live handle; `id` a valid NUL-terminated string; `out`
// writable.
int32_t objnav_dataset_house(const struct ObjnavDataset *ds,
                             const char *id,
                             const struct ObjnavHouse **out);

// # Safety
// `ds` must come from this library and not already be freed.
void objnav_dataset_free(struct ObjnavDataset *ds);

// Success-weighted path length; fails if `shortest` is not positive.
//
// # Safety
// `out` must be writable.
int32_t objnav_spl(uint8_t success, double shortest, double realized, double *out);

// Distance to success: `max(geo_final - ring, 0)`. Total, never fails.
double objnav_dts(double geo_final, double ring);

// Cell side length in meters (0.25).
double objnav_cell_size(void);

// Load a checkpoint written by `objnav train` from its base path (the
// path without the `.ckpt`/`.json` extension).
//
// # Safety
// `base` must be a valid NUL-terminated string; `out` writable.
int32_t objnav_model_load(const char *base, struct ObjnavModel **out);

// Copy the model kind name (smtsc, smt_wo_sc, lstm, reactive) into `buf`.
//
// # Safety
// `model` must be a live handle; `buf` must hold `cap` writable bytes.
int32_t objnav_model_kind(const struct ObjnavModel *model, char *buf, size_t cap);

// # Safety
// `model` must be a live handle; `out` writable.
int32_t objnav_model_num_params(const struct ObjnavModel *model, uint64_t *out);

// # Safety
// `model` must come from this library and not already be freed.
void objnav_model_free(struct ObjnavModel *model);

// Create an episode-scoped actor for a model. With `greedy` 0 actions are
// sampled from the policy using `seed`; otherwise the argmax is taken.
// The model must stay alive (and unfreed) while the agent lives.
//
// # Safety
// `model` must be a live handle that outlives the agent; `out` writable.
int32_t objnav_agent_new(const struct ObjnavModel *model,
                         uint64_t seed,
                         uint8_t greedy,
                         struct ObjnavAgent **out);

// Clear the agent's episode state (scene memory or recurrent state) for a
// fresh episode. The sampling stream is not rewound.
//
// # Safety
// `agent` must be a live handle whose model is still alive.
int32_t objnav_agent_reset(struct ObjnavAgent *agent);

// Observe the simulator and pick the next action without stepping; the
// caller passes the returned index to [`objnav_sim_step`]. `value` may be
// null.
//
// # Safety
// `agent` must be a live handle whose model is still alive; `sim` a live
// handle; `action` writable; `value` writable or null.
int32_t objnav_agent_act(struct ObjnavAgent *agent,
                         const struct ObjnavSim *sim,
                         uint32_t *action,
                         double *value);

// # Safety
// `agent` must come from this library and not already be freed.
void objnav_agent_free(struct ObjnavAgent *agent);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OBJNAV_H */
