//! C ABI for the navigation lab.
//!
//! Every function returns an `OBJNAV_*` status code; `0` is success. On any
//! failure the thread-local message behind [`objnav_last_error`] is updated.
//! Handles are opaque and freed with their matching `_free` function.
//! Borrowed pointers (house ids written into buffers, houses returned from
//! a dataset, the model behind an agent) are valid only while the handle
//! they came from stays alive.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use objnav::env::house::{generate_house, House, HouseParams, ObjectClass, CELL};
use objnav::env::sensor::Observation;
use objnav::env::sim::{Action, EnvConfig, Simulator};
use objnav::episodes::types::{Dataset, Episode};
use objnav::policy::model::{load_model, Model, PolicyState};
use objnav::rng::{self, Rng};
use objnav::Error;

pub const OBJNAV_OK: i32 = 0;
/// Bad usage: unknown kinds, invalid configuration values.
pub const OBJNAV_ERR_CONFIG: i32 = 1;
/// A precondition or data invariant was violated.
pub const OBJNAV_ERR_CONTRACT: i32 = 2;
pub const OBJNAV_ERR_IO: i32 = 3;
/// A required pointer argument was null.
pub const OBJNAV_ERR_NULL: i32 = 4;
/// A string argument was not valid UTF-8.
pub const OBJNAV_ERR_UTF8: i32 = 5;
/// A caller-supplied buffer was too small.
pub const OBJNAV_ERR_BUFFER: i32 = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = owned);
}

fn fail(err: Error) -> i32 {
    let code = match err {
        Error::Config(_) => OBJNAV_ERR_CONFIG,
        Error::Io(_) => OBJNAV_ERR_IO,
        _ => OBJNAV_ERR_CONTRACT,
    };
    set_error(&err.to_string());
    code
}

fn fail_null() -> i32 {
    set_error("null pointer argument");
    OBJNAV_ERR_NULL
}

fn fail_config(msg: &str) -> i32 {
    set_error(msg);
    OBJNAV_ERR_CONFIG
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, i32> {
    if s.is_null() {
        return Err(fail_null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        OBJNAV_ERR_UTF8
    })
}

fn write_str(buf: *mut c_char, cap: usize, value: &str) -> i32 {
    if buf.is_null() {
        return fail_null();
    }
    let bytes = value.as_bytes();
    if cap < bytes.len() + 1 {
        set_error(&format!("buffer of {cap} bytes cannot hold {} bytes plus NUL", bytes.len()));
        return OBJNAV_ERR_BUFFER;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    OBJNAV_OK
}

/// Message from the most recent failure on this thread; empty if none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn objnav_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn objnav_version() -> *const c_char {
    c"0.1.0".as_ptr()
}

// ----------------------------------------------------------------- config

/// Mirror of the simulator configuration. `reward_shaping` is 0 or 1.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct ObjnavEnvConfig {
    pub forward_step: f64,
    pub turn_angle_deg: f64,
    pub success_distance: f64,
    pub max_steps: u32,
    pub hfov_deg: f64,
    pub sensor_range: f64,
    pub seg_k: u32,
    pub reward_shaping: u8,
    pub reward_success_bonus: f64,
    pub reward_step_penalty: f64,
}

impl From<EnvConfig> for ObjnavEnvConfig {
    fn from(c: EnvConfig) -> Self {
        ObjnavEnvConfig {
            forward_step: c.forward_step,
            turn_angle_deg: c.turn_angle_deg,
            success_distance: c.success_distance,
            max_steps: c.max_steps as u32,
            hfov_deg: c.hfov_deg,
            sensor_range: c.sensor_range,
            seg_k: c.seg_k as u32,
            reward_shaping: c.reward_shaping as u8,
            reward_success_bonus: c.reward_success_bonus,
            reward_step_penalty: c.reward_step_penalty,
        }
    }
}

impl From<ObjnavEnvConfig> for EnvConfig {
    fn from(c: ObjnavEnvConfig) -> Self {
        EnvConfig {
            forward_step: c.forward_step,
            turn_angle_deg: c.turn_angle_deg,
            success_distance: c.success_distance,
            max_steps: c.max_steps as usize,
            hfov_deg: c.hfov_deg,
            sensor_range: c.sensor_range,
            seg_k: c.seg_k as usize,
            reward_shaping: c.reward_shaping != 0,
            reward_success_bonus: c.reward_success_bonus,
            reward_step_penalty: c.reward_step_penalty,
        }
    }
}

#[no_mangle]
pub extern "C" fn objnav_env_config_default(out: *mut ObjnavEnvConfig) -> i32 {
    if out.is_null() {
        return fail_null();
    }
    unsafe { *out = EnvConfig::default().into() };
    OBJNAV_OK
}

/// Number of discrete headings the turn angle yields (12 by default).
#[no_mangle]
pub extern "C" fn objnav_env_headings(cfg: *const ObjnavEnvConfig, out: *mut u32) -> i32 {
    let (Some(cfg), false) = (unsafe { cfg.as_ref() }, out.is_null()) else {
        return fail_null();
    };
    let env: EnvConfig = (*cfg).into();
    if let Err(e) = env.validate() {
        return fail(e);
    }
    unsafe { *out = env.headings() as u32 };
    OBJNAV_OK
}

// ----------------------------------------------------------------- houses

pub struct ObjnavHouse {
    inner: House,
}

fn house_out(out: *mut *mut ObjnavHouse, house: House) -> i32 {
    if out.is_null() {
        return fail_null();
    }
    unsafe { *out = Box::into_raw(Box::new(ObjnavHouse { inner: house })) };
    OBJNAV_OK
}

/// Generate a house. Cells are 0.25 m; `grid_w`/`grid_h` include the
/// boundary wall.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_generate(
    seed: u64,
    grid_w: u32,
    grid_h: u32,
    min_rooms: u32,
    max_rooms: u32,
    min_objects: u32,
    max_objects: u32,
    out: *mut *mut ObjnavHouse,
) -> i32 {
    let params = HouseParams {
        grid_width: grid_w as usize,
        grid_height: grid_h as usize,
        min_rooms: min_rooms as usize,
        max_rooms: max_rooms as usize,
        min_objects_per_class: min_objects as usize,
        max_objects_per_class: max_objects as usize,
    };
    match generate_house(seed, &params) {
        Ok(h) => house_out(out, h),
        Err(e) => fail(e),
    }
}

/// # Safety
/// `path` must be a valid NUL-terminated string; see [`objnav_house_generate`] for `out`.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_load(path: *const c_char, out: *mut *mut ObjnavHouse) -> i32 {
    let path = match str_arg(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match House::load(Path::new(path)) {
        Ok(h) => house_out(out, h),
        Err(e) => fail(e),
    }
}

/// # Safety
/// `house` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_save(house: *const ObjnavHouse, path: *const c_char) -> i32 {
    let Some(house) = house.as_ref() else {
        return fail_null();
    };
    let path = match str_arg(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match house.inner.save(Path::new(path)) {
        Ok(()) => OBJNAV_OK,
        Err(e) => fail(e),
    }
}

/// Copy the house id into `buf` (NUL-terminated).
///
/// # Safety
/// `house` must be a live handle; `buf` must hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_id(house: *const ObjnavHouse, buf: *mut c_char, cap: usize) -> i32 {
    let Some(house) = house.as_ref() else {
        return fail_null();
    };
    write_str(buf, cap, house.inner.id())
}

/// # Safety
/// `house` must be a live handle; out pointers must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_dims(house: *const ObjnavHouse, w: *mut u32, h: *mut u32) -> i32 {
    let Some(house) = house.as_ref() else {
        return fail_null();
    };
    if w.is_null() || h.is_null() {
        return fail_null();
    }
    *w = house.inner.width() as u32;
    *h = house.inner.height() as u32;
    OBJNAV_OK
}

/// Whether cell (ix, iy) is a wall cell; object footprints stay traversable.
/// Out-of-bounds counts as blocked, matching the simulator.
///
/// # Safety
/// `house` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_is_blocked(house: *const ObjnavHouse, ix: i64, iy: i64, out: *mut u8) -> i32 {
    let Some(house) = house.as_ref() else {
        return fail_null();
    };
    if out.is_null() {
        return fail_null();
    }
    *out = house.inner.is_blocked(ix, iy) as u8;
    OBJNAV_OK
}

/// # Safety
/// `house` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn objnav_house_free(house: *mut ObjnavHouse) {
    if !house.is_null() {
        drop(Box::from_raw(house));
    }
}

// -------------------------------------------------------------- simulator

pub struct ObjnavSim {
    sim: Simulator<'static>,
    // keeps the unsafe contract visible: the house behind this pointer must
    // outlive the simulator
    _house: *const ObjnavHouse,
}

#[repr(C)]
pub struct ObjnavStepResult {
    pub reward: f64,
    pub done: u8,
    pub success: u8,
    pub collided: u8,
    pub geo_to_goal: f64,
    pub x: f64,
    pub y: f64,
    pub heading: u32,
}

/// Start an episode. `cfg` may be null for defaults; `goal_class` is a
/// class index in [0, 5). The house must stay alive (and unfreed) for the
/// simulator's whole lifetime.
///
/// # Safety
/// `house` must be a live handle that outlives the simulator; `cfg` null or
/// valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_new(
    house: *const ObjnavHouse,
    cfg: *const ObjnavEnvConfig,
    x: f64,
    y: f64,
    heading: u32,
    goal_class: u32,
    out: *mut *mut ObjnavSim,
) -> i32 {
    if house.is_null() || out.is_null() {
        return fail_null();
    }
    let env = match cfg.as_ref() {
        Some(c) => (*c).into(),
        None => EnvConfig::default(),
    };
    let Some(goal) = ObjectClass::from_index(goal_class as usize) else {
        return fail_config(&format!("goal class index {goal_class} out of range"));
    };
    // raw-pointer deref gives an unbounded lifetime; the caller guarantees
    // the house outlives the sim
    let house_ref: &'static House = &(*house).inner;
    match Simulator::new(house_ref, env, (x, y, heading as usize), goal) {
        Ok(sim) => {
            *out = Box::into_raw(Box::new(ObjnavSim { sim, _house: house }));
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

fn fill_result(sim: &ObjnavSim, reward: f64, done: bool, success: bool, collided: bool, out: &mut ObjnavStepResult) {
    let agent = sim.sim.agent();
    out.reward = reward;
    out.done = done as u8;
    out.success = success as u8;
    out.collided = collided as u8;
    out.geo_to_goal = sim.sim.geo_to_goal();
    out.x = agent.x;
    out.y = agent.y;
    out.heading = agent.heading as u32;
}

/// Apply one action: 0 forward, 1 turn left, 2 turn right, 3 stop.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_step(sim: *mut ObjnavSim, action: u32, out: *mut ObjnavStepResult) -> i32 {
    let Some(handle) = sim.as_mut() else {
        return fail_null();
    };
    let Some(out) = out.as_mut() else {
        return fail_null();
    };
    let Some(action) = Action::from_index(action as usize) else {
        return fail_config(&format!("action index {action} out of range"));
    };
    match handle.sim.step(action) {
        Ok(res) => {
            fill_result(handle, res.reward, res.done, res.info.success, res.info.collided, out);
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

/// Current pose and distance-to-goal without stepping. `reward`, `done`,
/// `success` and `collided` are zero.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_state(sim: *const ObjnavSim, out: *mut ObjnavStepResult) -> i32 {
    let (Some(handle), Some(out)) = (sim.as_ref(), out.as_mut()) else {
        return fail_null();
    };
    fill_result(handle, 0.0, false, false, false, out);
    OBJNAV_OK
}

/// # Safety
/// `sim` must be a live handle; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_progress(sim: *const ObjnavSim, steps: *mut u32, path_length: *mut f64) -> i32 {
    let Some(handle) = sim.as_ref() else {
        return fail_null();
    };
    if steps.is_null() || path_length.is_null() {
        return fail_null();
    }
    *steps = handle.sim.steps_taken() as u32;
    *path_length = handle.sim.path_length();
    OBJNAV_OK
}

/// Number of doubles [`objnav_sim_observation`] writes: the k*k*7 visible
/// class grid, the 6-way room histogram, then the 4 pose features.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_obs_len(sim: *const ObjnavSim, out: *mut usize) -> i32 {
    let Some(handle) = sim.as_ref() else {
        return fail_null();
    };
    if out.is_null() {
        return fail_null();
    }
    let obs = handle.sim.observation();
    *out = obs_len(&obs);
    OBJNAV_OK
}

fn obs_len(obs: &Observation) -> usize {
    obs.seg_grid.len() + obs.scene_vec.len() + obs.pose.len()
}

/// Write the current observation into `buf` and the two categorical inputs
/// into `prev_action` (4 means "none yet") and `goal`.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `cap` doubles; the two out
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_observation(
    sim: *const ObjnavSim,
    buf: *mut f64,
    cap: usize,
    prev_action: *mut u32,
    goal: *mut u32,
) -> i32 {
    let Some(handle) = sim.as_ref() else {
        return fail_null();
    };
    if buf.is_null() || prev_action.is_null() || goal.is_null() {
        return fail_null();
    }
    let obs = handle.sim.observation();
    let needed = obs_len(&obs);
    if cap < needed {
        set_error(&format!("observation needs {needed} doubles but the buffer holds {cap}"));
        return OBJNAV_ERR_BUFFER;
    }
    let mut offset = 0;
    for chunk in [obs.seg_grid.as_slice(), obs.scene_vec.as_slice(), obs.pose.as_slice()] {
        std::ptr::copy_nonoverlapping(chunk.as_ptr(), buf.add(offset), chunk.len());
        offset += chunk.len();
    }
    *prev_action = obs.prev_action as u32;
    *goal = obs.goal as u32;
    OBJNAV_OK
}

/// # Safety
/// `sim` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn objnav_sim_free(sim: *mut ObjnavSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

// ---------------------------------------------------------------- dataset

pub struct ObjnavDataset {
    inner: Dataset,
    ids: Vec<CString>,
    houses: Vec<CString>,
    // boxed copies so borrowed house pointers stay stable for the
    // dataset's whole lifetime
    house_handles: Vec<Box<ObjnavHouse>>,
}

#[repr(C)]
pub struct ObjnavEpisodeInfo {
    /// Borrowed from the dataset handle.
    pub id: *const c_char,
    /// Borrowed from the dataset handle.
    pub house: *const c_char,
    pub split: *const c_char,
    pub goal_class: u32,
    pub start_x: f64,
    pub start_y: f64,
    pub start_heading: u32,
    pub euclidean: f64,
    pub geodesic: f64,
    pub shortest_path_steps: u32,
}

fn split_cstr(ep: &Episode) -> *const c_char {
    use objnav::episodes::types::Split;
    match ep.split {
        Split::Train => c"train".as_ptr(),
        Split::ValSeen => c"val_seen".as_ptr(),
        Split::TestSeen => c"test_seen".as_ptr(),
        Split::ValUnseen => c"val_unseen".as_ptr(),
        Split::TestUnseen => c"test_unseen".as_ptr(),
    }
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_load(path: *const c_char, out: *mut *mut ObjnavDataset) -> i32 {
    let path = match str_arg(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if out.is_null() {
        return fail_null();
    }
    match Dataset::load(Path::new(path)) {
        Ok(inner) => {
            let ids = inner.episodes.iter().map(|e| CString::new(e.id.as_str()).expect("id has no NUL")).collect();
            let houses =
                inner.episodes.iter().map(|e| CString::new(e.house.as_str()).expect("id has no NUL")).collect();
            let house_handles =
                inner.houses.iter().map(|h| Box::new(ObjnavHouse { inner: h.clone() })).collect();
            *out = Box::into_raw(Box::new(ObjnavDataset { inner, ids, houses, house_handles }));
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `ds` must be a live handle; out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_info(
    ds: *const ObjnavDataset,
    seed: *mut u64,
    n_houses: *mut u32,
    n_episodes: *mut u32,
) -> i32 {
    let Some(ds) = ds.as_ref() else {
        return fail_null();
    };
    if seed.is_null() || n_houses.is_null() || n_episodes.is_null() {
        return fail_null();
    }
    *seed = ds.inner.seed;
    *n_houses = ds.inner.houses.len() as u32;
    *n_episodes = ds.inner.episodes.len() as u32;
    OBJNAV_OK
}

/// The environment configuration every episode in the dataset was drawn
/// under (and must be replayed under).
///
/// # Safety
/// `ds` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_env(ds: *const ObjnavDataset, out: *mut ObjnavEnvConfig) -> i32 {
    let Some(ds) = ds.as_ref() else {
        return fail_null();
    };
    if out.is_null() {
        return fail_null();
    }
    *out = ds.inner.env.into();
    OBJNAV_OK
}

/// # Safety
/// `ds` must be a live handle; `out` writable. The string fields of `out`
/// stay valid only while `ds` lives.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_episode(ds: *const ObjnavDataset, index: usize, out: *mut ObjnavEpisodeInfo) -> i32 {
    let Some(ds) = ds.as_ref() else {
        return fail_null();
    };
    let Some(out) = out.as_mut() else {
        return fail_null();
    };
    let Some(ep) = ds.inner.episodes.get(index) else {
        set_error(&format!("episode index {index} out of range ({} episodes)", ds.inner.episodes.len()));
        return OBJNAV_ERR_CONTRACT;
    };
    *out = ObjnavEpisodeInfo {
        id: ds.ids[index].as_ptr(),
        house: ds.houses[index].as_ptr(),
        split: split_cstr(ep),
        goal_class: ep.goal.index() as u32,
        start_x: ep.start_x,
        start_y: ep.start_y,
        start_heading: ep.start_heading as u32,
        euclidean: ep.euclidean,
        geodesic: ep.geodesic,
        shortest_path_steps: ep.shortest_path_steps as u32,
    };
    OBJNAV_OK
}

/// Borrow the house with the given id from the dataset. The returned house
/// must not be freed and dies with the dataset.
///
/// # Safety
/// `ds` must be a live handle; `id` a valid NUL-terminated string; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_house(
    ds: *const ObjnavDataset,
    id: *const c_char,
    out: *mut *const ObjnavHouse,
) -> i32 {
    let Some(ds) = ds.as_ref() else {
        return fail_null();
    };
    let id = match str_arg(id) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if out.is_null() {
        return fail_null();
    }
    match ds.inner.houses.iter().position(|h| h.id() == id) {
        Some(pos) => {
            *out = &*ds.house_handles[pos] as *const ObjnavHouse;
            OBJNAV_OK
        }
        None => {
            set_error(&format!("dataset has no house {id:?}"));
            OBJNAV_ERR_CONTRACT
        }
    }
}

/// # Safety
/// `ds` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn objnav_dataset_free(ds: *mut ObjnavDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

// ---------------------------------------------------------------- metrics

/// Success-weighted path length; fails if `shortest` is not positive.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_spl(success: u8, shortest: f64, realized: f64, out: *mut f64) -> i32 {
    if out.is_null() {
        return fail_null();
    }
    match objnav::episodes::metrics::spl(success != 0, shortest, realized) {
        Ok(v) => {
            *out = v;
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

/// Distance to success: `max(geo_final - ring, 0)`. Total, never fails.
#[no_mangle]
pub extern "C" fn objnav_dts(geo_final: f64, ring: f64) -> f64 {
    objnav::episodes::metrics::dts(geo_final, ring)
}

/// Cell side length in meters (0.25).
#[no_mangle]
pub extern "C" fn objnav_cell_size() -> f64 {
    CELL
}

// ------------------------------------------------------------------ model

pub struct ObjnavModel {
    model: Model,
    ps: objnav::autodiff::ParameterSet,
}

pub struct ObjnavAgent {
    model: *const ObjnavModel,
    state: PolicyState,
    rng: Rng,
    greedy: bool,
}

/// Load a checkpoint written by `objnav train` from its base path (the
/// path without the `.ckpt`/`.json` extension).
///
/// # Safety
/// `base` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_model_load(base: *const c_char, out: *mut *mut ObjnavModel) -> i32 {
    let base = match str_arg(base) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if out.is_null() {
        return fail_null();
    }
    match load_model(Path::new(base)) {
        Ok((model, ps, _, _)) => {
            *out = Box::into_raw(Box::new(ObjnavModel { model, ps }));
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

/// Copy the model kind name (smtsc, smt_wo_sc, lstm, reactive) into `buf`.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn objnav_model_kind(model: *const ObjnavModel, buf: *mut c_char, cap: usize) -> i32 {
    let Some(model) = model.as_ref() else {
        return fail_null();
    };
    write_str(buf, cap, model.model.kind().name())
}

/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_model_num_params(model: *const ObjnavModel, out: *mut u64) -> i32 {
    let Some(model) = model.as_ref() else {
        return fail_null();
    };
    if out.is_null() {
        return fail_null();
    }
    *out = model.ps.total_numel() as u64;
    OBJNAV_OK
}

/// # Safety
/// `model` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn objnav_model_free(model: *mut ObjnavModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Create an episode-scoped actor for a model. With `greedy` 0 actions are
/// sampled from the policy using `seed`; otherwise the argmax is taken.
/// The model must stay alive (and unfreed) while the agent lives.
///
/// # Safety
/// `model` must be a live handle that outlives the agent; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn objnav_agent_new(model: *const ObjnavModel, seed: u64, greedy: u8, out: *mut *mut ObjnavAgent) -> i32 {
    let Some(model_ref) = model.as_ref() else {
        return fail_null();
    };
    if out.is_null() {
        return fail_null();
    }
    *out = Box::into_raw(Box::new(ObjnavAgent {
        model,
        state: model_ref.model.initial_state(),
        rng: rng::stream(seed, "ffi-agent", 0),
        greedy: greedy != 0,
    }));
    OBJNAV_OK
}

/// Clear the agent's episode state (scene memory or recurrent state) for a
/// fresh episode. The sampling stream is not rewound.
///
/// # Safety
/// `agent` must be a live handle whose model is still alive.
#[no_mangle]
pub unsafe extern "C" fn objnav_agent_reset(agent: *mut ObjnavAgent) -> i32 {
    let Some(agent) = agent.as_mut() else {
        return fail_null();
    };
    let model = &(*agent.model).model;
    agent.state = model.initial_state();
    OBJNAV_OK
}

/// Observe the simulator and pick the next action without stepping; the
/// caller passes the returned index to [`objnav_sim_step`]. `value` may be
/// null.
///
/// # Safety
/// `agent` must be a live handle whose model is still alive; `sim` a live
/// handle; `action` writable; `value` writable or null.
#[no_mangle]
pub unsafe extern "C" fn objnav_agent_act(
    agent: *mut ObjnavAgent,
    sim: *const ObjnavSim,
    action: *mut u32,
    value: *mut f64,
) -> i32 {
    let (Some(agent), Some(sim)) = (agent.as_mut(), sim.as_ref()) else {
        return fail_null();
    };
    if action.is_null() {
        return fail_null();
    }
    let handle = &*agent.model;
    let obs = sim.sim.observation();
    let sample = if agent.greedy { None } else { Some(&mut agent.rng) };
    match handle.model.act(&handle.ps, &mut agent.state, &obs, sample) {
        Ok(d) => {
            *action = d.action.index() as u32;
            if !value.is_null() {
                *value = d.value;
            }
            OBJNAV_OK
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `agent` must come from this library and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn objnav_agent_free(agent: *mut ObjnavAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}
