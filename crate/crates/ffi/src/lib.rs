//! C ABI for trajsim.
//!
//! Fallible calls return a [`TrajsimStatus`]. On failure a message is kept
//! per thread and can be read with [`trajsim_last_error`] until the next call.
//! Handles are opaque; release each with its `_free` function. Strings handed
//! out by the library are released with [`trajsim_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use trajsim::detect::{self, DbscanParams, LachesisParams, Stop};
use trajsim::experiment::{self, ExperimentConfig};
use trajsim::pings::{self, NhppParams, NoiseParams, Ping};
use trajsim::seed::{stage_rng, Stage};
use trajsim::sim::World;
use trajsim::{io, City, Error, ErrorClass};

/// Status codes. Error values match the `trajsim` CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajsimStatus {
    Ok = 0,
    InvalidArgument = 2,
    Conflict = 3,
    NoPath = 4,
    Precondition = 5,
    Io = 6,
    Parse = 7,
    NullPointer = 8,
    Panic = 9,
}

impl From<ErrorClass> for TrajsimStatus {
    fn from(c: ErrorClass) -> Self {
        match c {
            ErrorClass::InvalidArgument => TrajsimStatus::InvalidArgument,
            ErrorClass::Conflict => TrajsimStatus::Conflict,
            ErrorClass::NoPath => TrajsimStatus::NoPath,
            ErrorClass::Precondition => TrajsimStatus::Precondition,
            ErrorClass::Io => TrajsimStatus::Io,
            ErrorClass::Parse => TrajsimStatus::Parse,
        }
    }
}

/// A city together with its street graph and door distances.
pub struct TrajsimWorld(World);

/// Detected stops.
pub struct TrajsimStops(Vec<Stop>);

/// A sparse ping sequence owned by the library.
pub struct TrajsimPings(Vec<TrajsimPing>);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajsimPing {
    pub unix_timestamp: i64,
    pub x: f64,
    pub y: f64,
    /// Horizontal accuracy (95% radius), blocks.
    pub ha: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajsimStop {
    pub start: i64,
    pub end: i64,
    pub x: f64,
    pub y: f64,
    pub member_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajsimDbscanParams {
    /// Blocks.
    pub dist_thresh: f64,
    /// Minutes.
    pub time_thresh: f64,
    pub min_pts: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajsimLachesisParams {
    pub dur_min: f64,
    pub dt_max: f64,
    pub delta_roam: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajsimNhppParams {
    pub beta_start: f64,
    pub beta_duration: f64,
    pub beta_ping: f64,
}

impl From<Ping> for TrajsimPing {
    fn from(p: Ping) -> Self {
        TrajsimPing { unix_timestamp: p.unix_timestamp, x: p.x, y: p.y, ha: p.ha }
    }
}

impl From<TrajsimPing> for Ping {
    fn from(p: TrajsimPing) -> Self {
        Ping { unix_timestamp: p.unix_timestamp, x: p.x, y: p.y, ha: p.ha }
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Other(TrajsimStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> TrajsimStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return TrajsimStatus::Ok,
        Ok(Err(Failure::Core(e))) => (e.class().into(), e.to_string()),
        Ok(Err(Failure::Null(what))) => (TrajsimStatus::NullPointer, format!("{what} is null")),
        Ok(Err(Failure::Other(s, m))) => (s, m),
        Err(payload) => {
            let m = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (TrajsimStatus::Panic, format!("panic: {m}"))
        }
    };
    set_last_error(msg);
    status
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Other(TrajsimStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, n) })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> FfiResult<&'a mut T> {
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn config_arg(toml: *const c_char) -> FfiResult<ExperimentConfig> {
    if toml.is_null() {
        return Ok(ExperimentConfig::default());
    }
    Ok(ExperimentConfig::from_toml(unsafe { str_arg(toml, "config") }?)?)
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Other(TrajsimStatus::Panic, "string contains NUL".into()))
}

fn to_pings(pings: &[TrajsimPing]) -> Vec<Ping> {
    pings.iter().copied().map(Ping::from).collect()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn trajsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn trajsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Build the city described by a TOML run configuration (NULL for defaults).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_from_config(config_toml: *const c_char, out: *mut *mut TrajsimWorld) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let cfg = unsafe { config_arg(config_toml) }?;
        let world = World::new(cfg.city.build(None)?)?;
        *out = Box::into_raw(Box::new(TrajsimWorld(world)));
        Ok(())
    })
}

/// Load a city from its JSON form.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_from_json(json: *const c_char, out: *mut *mut TrajsimWorld) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let city = City::from_json(unsafe { str_arg(json, "json") }?)?;
        *out = Box::into_raw(Box::new(TrajsimWorld(World::new(city)?)));
        Ok(())
    })
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_free(world: *mut TrajsimWorld) {
    if !world.is_null() {
        drop(unsafe { Box::from_raw(world) });
    }
}

/// Serialize the city to JSON. Free the result with `trajsim_string_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_to_json(world: *const TrajsimWorld, out: *mut *mut c_char) -> TrajsimStatus {
    guard(|| {
        let world = unsafe { handle(world, "world") }?;
        let out = unsafe { out_arg(out, "out") }?;
        *out = into_c_string(world.0.city.to_json())?;
        Ok(())
    })
}

/// Number of buildings, or 0 for a NULL handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_building_count(world: *const TrajsimWorld) -> usize {
    unsafe { world.as_ref() }.map_or(0, |w| w.0.city.buildings().len())
}

/// Identifier of building `index`. Free the result with `trajsim_string_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_building_id(
    world: *const TrajsimWorld,
    index: usize,
    out: *mut *mut c_char,
) -> TrajsimStatus {
    guard(|| {
        let world = unsafe { handle(world, "world") }?;
        let out = unsafe { out_arg(out, "out") }?;
        let b = world.0.city.buildings().get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("building index {index} out of range"))
        })?;
        *out = into_c_string(b.id.clone())?;
        Ok(())
    })
}

/// Street distance in blocks between the doors of buildings `k` and `l`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_world_door_distance(
    world: *const TrajsimWorld,
    k: usize,
    l: usize,
    out: *mut u32,
) -> TrajsimStatus {
    guard(|| {
        let world = unsafe { handle(world, "world") }?;
        let out = unsafe { out_arg(out, "out") }?;
        let n = world.0.city.buildings().len();
        if k >= n || l >= n {
            return Err(Error::InvalidArgument(format!("building index out of range ({k}, {l}) for {n}")).into());
        }
        *out = world.0.distances.get(k, l).ok_or_else(|| Error::NoPath(format!("no street path between {k} and {l}")))?;
        Ok(())
    })
}

/// Temporal DBSCAN. Writes one label per ping into `labels` (-1 for noise).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_dbscan(
    pings: *const TrajsimPing,
    n: usize,
    params: TrajsimDbscanParams,
    labels: *mut i32,
) -> TrajsimStatus {
    guard(|| {
        let pings = to_pings(unsafe { slice_arg(pings, n, "pings") }?);
        if n > 0 && labels.is_null() {
            return Err(Failure::Null("labels"));
        }
        let p = DbscanParams::new(params.dist_thresh, params.time_thresh, params.min_pts);
        let got = detect::temporal_dbscan(&pings, &p)?;
        if n > 0 {
            unsafe { std::slice::from_raw_parts_mut(labels, n) }.copy_from_slice(&got.labels);
        }
        Ok(())
    })
}

/// Temporal DBSCAN, returning one stop per cluster.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_dbscan_stops(
    pings: *const TrajsimPing,
    n: usize,
    params: TrajsimDbscanParams,
    out: *mut *mut TrajsimStops,
) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let pings = to_pings(unsafe { slice_arg(pings, n, "pings") }?);
        let p = DbscanParams::new(params.dist_thresh, params.time_thresh, params.min_pts);
        let labels = detect::temporal_dbscan(&pings, &p)?;
        *out = Box::into_raw(Box::new(TrajsimStops(detect::stops_from_labels(&pings, &labels))));
        Ok(())
    })
}

/// Sequential stop detection. Pings must be sorted by time.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_lachesis(
    pings: *const TrajsimPing,
    n: usize,
    params: TrajsimLachesisParams,
    out: *mut *mut TrajsimStops,
) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let pings = to_pings(unsafe { slice_arg(pings, n, "pings") }?);
        let p = LachesisParams::new(params.dur_min, params.dt_max, params.delta_roam);
        *out = Box::into_raw(Box::new(TrajsimStops(detect::lachesis(&pings, &p)?)));
        Ok(())
    })
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_stops_len(stops: *const TrajsimStops) -> usize {
    unsafe { stops.as_ref() }.map_or(0, |s| s.0.len())
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_stops_get(
    stops: *const TrajsimStops,
    index: usize,
    out: *mut TrajsimStop,
) -> TrajsimStatus {
    guard(|| {
        let stops = unsafe { handle(stops, "stops") }?;
        let out = unsafe { out_arg(out, "out") }?;
        let s = stops.0.get(index).ok_or_else(|| Error::InvalidArgument(format!("stop index {index} out of range")))?;
        *out = TrajsimStop { start: s.start, end: s.end, x: s.centroid.0, y: s.centroid.1, member_count: s.members.len() };
        Ok(())
    })
}

/// Ping indices belonging to stop `index`, `member_count` entries long. The
/// pointer lives as long as the handle. NULL when out of range.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_stops_members(stops: *const TrajsimStops, index: usize) -> *const usize {
    unsafe { stops.as_ref() }.and_then(|s| s.0.get(index)).map_or(ptr::null(), |s| s.members.as_ptr())
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_stops_free(stops: *mut TrajsimStops) {
    if !stops.is_null() {
        drop(unsafe { Box::from_raw(stops) });
    }
}

/// Sample bursty noisy pings from a trajectory CSV written by `trajsim`.
/// The ping stream is seeded from `seed` and the trajectory identifier.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_sparsify_trajectory_csv(
    path: *const c_char,
    nhpp: TrajsimNhppParams,
    ha: f64,
    seed: u64,
    out: *mut *mut TrajsimPings,
) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let path = unsafe { str_arg(path, "path") }?;
        let trajectory = io::parse_trajectory_csv(&io::load(path)?, None)?;
        let nhpp = NhppParams::new(nhpp.beta_start, nhpp.beta_duration, nhpp.beta_ping)?;
        let noise = NoiseParams::new(ha)?;
        let mut rng = stage_rng(seed, &trajectory.identifier, Stage::Pings);
        let sample = pings::sample_hierarchical(&trajectory, &nhpp, &noise, &mut rng)?;
        *out = Box::into_raw(Box::new(TrajsimPings(sample.sparse.pings.into_iter().map(Into::into).collect())));
        Ok(())
    })
}

/// Load a sparse ping CSV.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_pings_load_csv(path: *const c_char, out: *mut *mut TrajsimPings) -> TrajsimStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let path = unsafe { str_arg(path, "path") }?;
        let sparse = io::parse_sparse_csv(&io::load(path)?)?;
        *out = Box::into_raw(Box::new(TrajsimPings(sparse.pings.into_iter().map(Into::into).collect())));
        Ok(())
    })
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_pings_len(pings: *const TrajsimPings) -> usize {
    unsafe { pings.as_ref() }.map_or(0, |p| p.0.len())
}

/// Contiguous ping array, `trajsim_pings_len` entries long, valid while the
/// handle lives.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_pings_data(pings: *const TrajsimPings) -> *const TrajsimPing {
    unsafe { pings.as_ref() }.map_or(ptr::null(), |p| p.0.as_ptr())
}

#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_pings_free(pings: *mut TrajsimPings) {
    if !pings.is_null() {
        drop(unsafe { Box::from_raw(pings) });
    }
}

/// Write a population dataset and its manifest into `out_dir`.
/// `jobs` = 0 uses every core.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_generate_dataset(
    config_toml: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
) -> TrajsimStatus {
    guard(|| {
        let cfg = unsafe { config_arg(config_toml) }?;
        let out = unsafe { str_arg(out_dir, "out_dir") }?;
        experiment::generate_population_dataset(&cfg, Path::new(out), jobs)?;
        Ok(())
    })
}

/// Regenerate a dataset from its manifest. `mismatched` receives the number
/// of files whose digest differs from the manifest.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_replay_dataset(
    manifest: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
    mismatched: *mut usize,
) -> TrajsimStatus {
    guard(|| {
        let mismatched = unsafe { out_arg(mismatched, "mismatched") }?;
        let manifest = unsafe { str_arg(manifest, "manifest") }?;
        let out = unsafe { str_arg(out_dir, "out_dir") }?;
        *mismatched = experiment::replay_dataset(Path::new(manifest), Path::new(out), jobs)?.len();
        Ok(())
    })
}

/// Run `"example1"` or `"example2"`. `out_dir` may be NULL to skip writing
/// files. The report JSON is returned through `report_json`; free it with
/// `trajsim_string_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn trajsim_run_experiment(
    name: *const c_char,
    config_toml: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
    report_json: *mut *mut c_char,
) -> TrajsimStatus {
    guard(|| {
        let report_json = unsafe { out_arg(report_json, "report_json") }?;
        let name = unsafe { str_arg(name, "name") }?;
        let cfg = unsafe { config_arg(config_toml) }?;
        let out = if out_dir.is_null() { None } else { Some(Path::new(unsafe { str_arg(out_dir, "out_dir") }?)) };
        let report = match name {
            "example1" => experiment::run_example1(&cfg, out, jobs)?,
            "example2" => experiment::run_example2(&cfg, out, jobs)?,
            other => return Err(Error::InvalidArgument(format!("unknown experiment {other:?}")).into()),
        };
        *report_json = into_c_string(report.to_json())?;
        Ok(())
    })
}
