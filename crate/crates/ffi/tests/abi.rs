use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use trajsim_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn path_c(p: &Path) -> CString {
    c(p.to_str().unwrap())
}

fn last_error() -> String {
    let p = trajsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { trajsim_string_free(p) };
    s
}

fn ping(minute: i64, x: f64, y: f64) -> TrajsimPing {
    TrajsimPing { unix_timestamp: minute * 60, x, y, ha: 0.0 }
}

#[test]
fn world_round_trips_through_json() {
    unsafe {
        let mut world = ptr::null_mut();
        assert_eq!(trajsim_world_from_config(ptr::null(), &mut world), TrajsimStatus::Ok);
        let n = trajsim_world_building_count(world);
        assert!(n > 0);

        let mut json = ptr::null_mut();
        assert_eq!(trajsim_world_to_json(world, &mut json), TrajsimStatus::Ok);
        let json = take_string(json);
        let mut again = ptr::null_mut();
        assert_eq!(trajsim_world_from_json(c(&json).as_ptr(), &mut again), TrajsimStatus::Ok);
        assert_eq!(trajsim_world_building_count(again), n);

        for (k, l) in [(0, n - 1), (n / 2, 1)] {
            let (mut a, mut b) = (0u32, 0u32);
            assert_eq!(trajsim_world_door_distance(world, k, l, &mut a), TrajsimStatus::Ok);
            assert_eq!(trajsim_world_door_distance(again, l, k, &mut b), TrajsimStatus::Ok);
            assert_eq!(a, b);
        }
        let mut id = ptr::null_mut();
        assert_eq!(trajsim_world_building_id(world, 0, &mut id), TrajsimStatus::Ok);
        assert!(!take_string(id).is_empty());
        assert_eq!(trajsim_world_building_id(world, n, &mut id), TrajsimStatus::InvalidArgument);

        trajsim_world_free(world);
        trajsim_world_free(again);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut world = ptr::null_mut();
        assert_eq!(trajsim_world_from_json(c("{not json").as_ptr(), &mut world), TrajsimStatus::Parse);
        assert!(world.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(trajsim_world_from_json(ptr::null(), &mut world), TrajsimStatus::NullPointer);
        assert!(last_error().contains("json"));

        assert_eq!(trajsim_world_from_config(c("sead = 3").as_ptr(), &mut world), TrajsimStatus::Parse);

        // A successful call clears the message.
        assert_eq!(trajsim_world_from_config(ptr::null(), &mut world), TrajsimStatus::Ok);
        assert!(trajsim_last_error().is_null());
        trajsim_world_free(world);

        let bad = TrajsimDbscanParams { dist_thresh: -1.0, time_thresh: 10.0, min_pts: 1 };
        let p = [ping(0, 0.0, 0.0)];
        let mut labels = [0i32];
        assert_eq!(trajsim_dbscan(p.as_ptr(), 1, bad, labels.as_mut_ptr()), TrajsimStatus::InvalidArgument);

        let mut report = ptr::null_mut();
        let status = trajsim_run_experiment(c("example9").as_ptr(), ptr::null(), ptr::null(), 1, &mut report);
        assert_eq!(status, TrajsimStatus::InvalidArgument);

        let mut pings = ptr::null_mut();
        let missing = c("/nonexistent/trajectory.csv");
        let nhpp = TrajsimNhppParams { beta_start: 60.0, beta_duration: 30.0, beta_ping: 5.0 };
        assert_eq!(trajsim_sparsify_trajectory_csv(missing.as_ptr(), nhpp, 0.5, 1, &mut pings), TrajsimStatus::Io);

        // Null handles are tolerated by the non-failing accessors.
        assert_eq!(trajsim_stops_len(ptr::null()), 0);
        assert!(trajsim_pings_data(ptr::null()).is_null());
        trajsim_stops_free(ptr::null_mut());
        trajsim_string_free(ptr::null_mut());
    }
}

#[test]
fn detection_matches_the_core_library() {
    let raw: Vec<TrajsimPing> = (0..40)
        .map(|i| {
            let x = if (i / 10) % 2 == 0 { 2.0 } else { 7.0 };
            ping(i * 2 + (i / 10) * 15, x + 0.1 * (i % 3) as f64, 3.0)
        })
        .collect();
    let core: Vec<trajsim::pings::Ping> = raw.iter().copied().map(Into::into).collect();

    let dp = TrajsimDbscanParams { dist_thresh: 1.0, time_thresh: 10.0, min_pts: 2 };
    let mut labels = vec![0i32; raw.len()];
    unsafe {
        assert_eq!(trajsim_dbscan(raw.as_ptr(), raw.len(), dp, labels.as_mut_ptr()), TrajsimStatus::Ok);
    }
    let expected = trajsim::detect::temporal_dbscan(&core, &trajsim::detect::DbscanParams::new(1.0, 10.0, 2)).unwrap();
    assert_eq!(labels, expected.labels);

    let lp = TrajsimLachesisParams { dur_min: 5.0, dt_max: 20.0, delta_roam: 1.0 };
    let expected = trajsim::detect::lachesis(&core, &trajsim::detect::LachesisParams::new(5.0, 20.0, 1.0)).unwrap();
    assert_eq!(expected.len(), 4);
    unsafe {
        let mut stops = ptr::null_mut();
        assert_eq!(trajsim_lachesis(raw.as_ptr(), raw.len(), lp, &mut stops), TrajsimStatus::Ok);
        assert_eq!(trajsim_stops_len(stops), expected.len());
        for (i, e) in expected.iter().enumerate() {
            let mut s = TrajsimStop { start: 0, end: 0, x: 0.0, y: 0.0, member_count: 0 };
            assert_eq!(trajsim_stops_get(stops, i, &mut s), TrajsimStatus::Ok);
            assert_eq!((s.start, s.end, s.x, s.y), (e.start, e.end, e.centroid.0, e.centroid.1));
            let members = std::slice::from_raw_parts(trajsim_stops_members(stops, i), s.member_count);
            assert_eq!(members, e.members.as_slice());
        }
        let mut s = std::mem::zeroed();
        assert_eq!(trajsim_stops_get(stops, expected.len(), &mut s), TrajsimStatus::InvalidArgument);
        assert!(trajsim_stops_members(stops, expected.len()).is_null());
        trajsim_stops_free(stops);

        let mut stops = ptr::null_mut();
        assert_eq!(trajsim_dbscan_stops(raw.as_ptr(), raw.len(), dp, &mut stops), TrajsimStatus::Ok);
        assert_eq!(trajsim_stops_len(stops), 4);
        trajsim_stops_free(stops);

        // Empty input needs no buffers.
        let mut stops = ptr::null_mut();
        assert_eq!(trajsim_lachesis(ptr::null(), 0, lp, &mut stops), TrajsimStatus::Ok);
        assert_eq!(trajsim_stops_len(stops), 0);
        trajsim_stops_free(stops);
        assert_eq!(trajsim_dbscan(ptr::null(), 0, dp, ptr::null_mut()), TrajsimStatus::Ok);
        assert_eq!(trajsim_dbscan(ptr::null(), 3, dp, labels.as_mut_ptr()), TrajsimStatus::NullPointer);
    }
}

#[test]
fn dataset_pipeline_through_the_abi() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let cfg = c("seed = 21\npopulation = 2\ndays = 1\n");
    unsafe {
        assert_eq!(trajsim_generate_dataset(cfg.as_ptr(), path_c(&data).as_ptr(), 2), TrajsimStatus::Ok, "{}", last_error());

        let mut mismatched = usize::MAX;
        let manifest = path_c(&data.join("manifest.json"));
        let replay = path_c(&tmp.path().join("replay"));
        assert_eq!(trajsim_replay_dataset(manifest.as_ptr(), replay.as_ptr(), 1, &mut mismatched), TrajsimStatus::Ok);
        assert_eq!(mismatched, 0);

        let traj = path_c(&data.join("agent0001_trajectory.csv"));
        let nhpp = TrajsimNhppParams { beta_start: 60.0, beta_duration: 45.0, beta_ping: 3.0 };
        let sample = |seed| {
            let mut h = ptr::null_mut();
            assert_eq!(trajsim_sparsify_trajectory_csv(traj.as_ptr(), nhpp, 0.5, seed, &mut h), TrajsimStatus::Ok);
            let v = std::slice::from_raw_parts(trajsim_pings_data(h), trajsim_pings_len(h)).to_vec();
            trajsim_pings_free(h);
            v
        };
        let a = sample(3);
        assert!(!a.is_empty());
        assert_eq!(a, sample(3));
        assert_ne!(a, sample(4));
        assert!(a.windows(2).all(|w| w[0].unix_timestamp < w[1].unix_timestamp));
        assert!(a.iter().all(|p| p.ha == 0.5 && p.unix_timestamp % 60 == 0));

        let mut loaded = ptr::null_mut();
        let sparse = path_c(&data.join("agent0001_sparse.csv"));
        assert_eq!(trajsim_pings_load_csv(sparse.as_ptr(), &mut loaded), TrajsimStatus::Ok);
        assert!(trajsim_pings_len(loaded) > 0);
        trajsim_pings_free(loaded);
    }
}

#[test]
fn experiment_report_is_returned_as_json() {
    let cfg = c("seed = 5\n[example2]\nreplicates = 4\n");
    unsafe {
        let mut report = ptr::null_mut();
        let status = trajsim_run_experiment(c("example2").as_ptr(), cfg.as_ptr(), ptr::null(), 2, &mut report);
        assert_eq!(status, TrajsimStatus::Ok, "{}", last_error());
        let json: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
        assert_eq!(json["records"].as_array().unwrap().len(), 8);
    }
}

fn staticlib() -> Option<PathBuf> {
    // target/<profile>/deps/abi-<hash> -> target/<profile>/libtrajsim_ffi.a
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libtrajsim_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(lib) = staticlib() else {
        eprintln!("static library not found; skipping C link test");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link test");
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
