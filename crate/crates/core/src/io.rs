//! CSV tables. Headers match the published output listings; floats are
//! written in shortest round-trip form so files are byte-stable.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::city::City;
use crate::detect::{ClusterLabeling, Stop};
use crate::diary::{Diary, DiaryEntry};
use crate::error::{Error, Result};
use crate::pings::{BurstSchedule, Ping, SparseTrajectory};
use crate::time::{Clock, SECONDS_PER_MINUTE};
use crate::trajectory::{Trajectory, TrajectoryPoint};

#[derive(Debug, Serialize, Deserialize)]
struct DiaryRow {
    unix_timestamp: i64,
    local_timestamp: String,
    duration: u32,
    location: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    unix_timestamp: i64,
    local_timestamp: String,
    x: f64,
    y: f64,
    identifier: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SparseRow {
    x: f64,
    y: f64,
    local_timestamp: String,
    unix_timestamp: i64,
    identifier: String,
    ha: f64,
}

#[derive(Debug, Serialize)]
struct LabelRow<'a> {
    x: f64,
    y: f64,
    local_timestamp: String,
    unix_timestamp: i64,
    identifier: &'a str,
    ha: f64,
    cluster: i32,
}

#[derive(Debug, Serialize)]
struct BurstRow {
    burst: usize,
    start_minute: f64,
    end_minute: f64,
    sampled_duration: f64,
    start_unix: f64,
    end_unix: f64,
}

#[derive(Debug, Serialize)]
struct StopRow {
    stop: usize,
    start_unix: i64,
    end_unix: i64,
    start_local: String,
    end_local: String,
    duration_minutes: f64,
    x: f64,
    y: f64,
    pings: usize,
}

fn to_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header_if_empty: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut any = false;
    for r in rows {
        w.serialize(r)?;
        any = true;
    }
    if !any {
        w.write_record(header_if_empty)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn read_rows<T: for<'de> Deserialize<'de>>(bytes: &[u8], expected: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::Parse(format!("expected header {}, got {}", expected.join(","), header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub const DIARY_HEADER: [&str; 4] = ["unix_timestamp", "local_timestamp", "duration", "location"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["unix_timestamp", "local_timestamp", "x", "y", "identifier"];
pub const SPARSE_HEADER: [&str; 6] = ["x", "y", "local_timestamp", "unix_timestamp", "identifier", "ha"];
const LABEL_HEADER: [&str; 7] = ["x", "y", "local_timestamp", "unix_timestamp", "identifier", "ha", "cluster"];
const BURST_HEADER: [&str; 6] = ["burst", "start_minute", "end_minute", "sampled_duration", "start_unix", "end_unix"];
const STOP_HEADER: [&str; 9] =
    ["stop", "start_unix", "end_unix", "start_local", "end_local", "duration_minutes", "x", "y", "pings"];

/// Diary table. Travel rows have an empty location.
pub fn diary_csv(diary: &Diary, clock: &Clock) -> Result<Vec<u8>> {
    to_bytes(
        diary.entries.iter().map(|e| DiaryRow {
            unix_timestamp: e.unix_timestamp,
            local_timestamp: clock.local_timestamp(e.unix_timestamp),
            duration: e.duration,
            location: e.location.clone().unwrap_or_default(),
        }),
        &DIARY_HEADER,
    )
}

pub fn parse_diary_csv(bytes: &[u8]) -> Result<Diary> {
    let rows: Vec<DiaryRow> = read_rows(bytes, &DIARY_HEADER)?;
    Ok(Diary::new(
        rows.into_iter()
            .map(|r| DiaryEntry {
                unix_timestamp: r.unix_timestamp,
                duration: r.duration,
                location: Some(r.location).filter(|l| !l.is_empty()),
            })
            .collect(),
    ))
}

pub fn trajectory_csv(trajectory: &Trajectory, clock: &Clock) -> Result<Vec<u8>> {
    to_bytes(
        trajectory.points.iter().map(|p| TrajectoryRow {
            unix_timestamp: p.unix_timestamp,
            local_timestamp: clock.local_timestamp(p.unix_timestamp),
            x: p.x,
            y: p.y,
            identifier: trajectory.identifier.clone(),
        }),
        &TRAJECTORY_HEADER,
    )
}

/// Read a trajectory table. The file does not record whether a point was
/// indoors; with a city, points inside a building are attributed to it.
pub fn parse_trajectory_csv(bytes: &[u8], city: Option<&City>) -> Result<Trajectory> {
    let rows: Vec<TrajectoryRow> = read_rows(bytes, &TRAJECTORY_HEADER)?;
    let identifier = rows.first().map(|r| r.identifier.clone()).unwrap_or_default();
    let dt_minutes = match rows.as_slice() {
        [a, b, ..] => {
            let step = b.unix_timestamp - a.unix_timestamp;
            if step <= 0 || step % SECONDS_PER_MINUTE != 0 {
                return Err(Error::Parse("trajectory timestamps are not on a minute grid".into()));
            }
            (step / SECONDS_PER_MINUTE) as u32
        }
        _ => 1,
    };
    let points: Vec<TrajectoryPoint> = rows
        .iter()
        .map(|r| TrajectoryPoint {
            unix_timestamp: r.unix_timestamp,
            x: r.x,
            y: r.y,
            building: city.and_then(|c| {
                (0..c.buildings().len()).find(|&i| c.building(i).contains(r.x, r.y) && !c.is_street_point(r.x, r.y))
            }),
        })
        .collect();
    for w in points.windows(2) {
        if w[1].unix_timestamp - w[0].unix_timestamp != dt_minutes as i64 * SECONDS_PER_MINUTE {
            return Err(Error::Parse("trajectory timestamps are not evenly spaced".into()));
        }
    }
    Ok(Trajectory { identifier, dt_minutes, points })
}

pub fn sparse_csv(sparse: &SparseTrajectory, clock: &Clock) -> Result<Vec<u8>> {
    to_bytes(
        sparse.pings.iter().map(|p| SparseRow {
            x: p.x,
            y: p.y,
            local_timestamp: clock.local_timestamp(p.unix_timestamp),
            unix_timestamp: p.unix_timestamp,
            identifier: sparse.identifier.clone(),
            ha: p.ha,
        }),
        &SPARSE_HEADER,
    )
}

pub fn parse_sparse_csv(bytes: &[u8]) -> Result<SparseTrajectory> {
    let rows: Vec<SparseRow> = read_rows(bytes, &SPARSE_HEADER)?;
    let identifier = rows.first().map(|r| r.identifier.clone()).unwrap_or_default();
    let pings = rows
        .into_iter()
        .map(|r| Ping { unix_timestamp: r.unix_timestamp, x: r.x, y: r.y, ha: r.ha })
        .collect();
    Ok(SparseTrajectory { identifier, pings })
}

/// Sparse table with a trailing `cluster` column (-1 for noise).
pub fn labels_csv(sparse: &SparseTrajectory, labels: &ClusterLabeling, clock: &Clock) -> Result<Vec<u8>> {
    if labels.labels.len() != sparse.pings.len() {
        return Err(Error::invalid("label count differs from ping count"));
    }
    to_bytes(
        sparse.pings.iter().zip(&labels.labels).map(|(p, &cluster)| LabelRow {
            x: p.x,
            y: p.y,
            local_timestamp: clock.local_timestamp(p.unix_timestamp),
            unix_timestamp: p.unix_timestamp,
            identifier: &sparse.identifier,
            ha: p.ha,
            cluster,
        }),
        &LABEL_HEADER,
    )
}

/// Burst timeline; `start_unix` offsets are relative to `origin_unix`.
pub fn bursts_csv(schedule: &BurstSchedule, origin_unix: i64) -> Result<Vec<u8>> {
    let to_unix = |m: f64| origin_unix as f64 + m * SECONDS_PER_MINUTE as f64;
    to_bytes(
        schedule.bursts.iter().enumerate().map(|(i, b)| BurstRow {
            burst: i,
            start_minute: b.start,
            end_minute: b.end,
            sampled_duration: b.sampled_duration,
            start_unix: to_unix(b.start),
            end_unix: to_unix(b.end),
        }),
        &BURST_HEADER,
    )
}

pub fn stops_csv(stops: &[Stop], clock: &Clock) -> Result<Vec<u8>> {
    to_bytes(
        stops.iter().enumerate().map(|(i, s)| StopRow {
            stop: i,
            start_unix: s.start,
            end_unix: s.end,
            start_local: clock.local_timestamp(s.start),
            end_local: clock.local_timestamp(s.end),
            duration_minutes: s.duration_minutes(),
            x: s.centroid.0,
            y: s.centroid.1,
            pings: s.members.len(),
        }),
        &STOP_HEADER,
    )
}

pub fn save(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    write_file(path.as_ref(), bytes)
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    read_file(path.as_ref())
}
