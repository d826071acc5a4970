//! Ground-truth trajectories.
//!
//! Inside building `k` the position follows a mixture of a static process
//! and Brownian motion: with probability `q` it stays put, otherwise it moves
//! by `sigma * sqrt(dt) * N(0, I)` conditioned (by rejection) on landing in
//! the building. Between buildings the agent drifts along the street
//! shortest path at `travel_speed`, with Gaussian jitter across the path
//! that is rejected back onto street blocks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::city::{Building, City};
use crate::diary::{Diary, DiaryEntry};
use crate::error::{Error, Result};
use crate::street::StreetGraph;
use crate::time::SECONDS_PER_MINUTE;

/// Proposal draws before an indoor or street step gives up and stays put.
pub const REJECTION_CAP: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Blocks per minute along the street path.
    pub travel_speed: f64,
    /// Lateral street jitter, blocks per sqrt(minute).
    pub street_sigma: f64,
    /// Ground-truth resolution, minutes.
    pub dt_minutes: u32,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig { travel_speed: 3.0, street_sigma: 0.2, dt_minutes: 1 }
    }
}

impl MotionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.travel_speed > 0.0 && self.travel_speed.is_finite()) {
            return Err(Error::invalid("travel speed must be positive"));
        }
        if !(self.street_sigma >= 0.0 && self.street_sigma.is_finite()) {
            return Err(Error::invalid("street jitter must be non-negative"));
        }
        if self.dt_minutes == 0 {
            return Err(Error::invalid("time step must be positive"));
        }
        Ok(())
    }
}

/// Resolved parameters for one step in one building.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    pub sigma: f64,
    pub still_prob: f64,
    pub travel_speed: f64,
    pub dt: f64,
}

impl MotionParams {
    pub fn for_building(agent: &Agent, building: &Building, config: &MotionConfig) -> Self {
        let (sigma, still_prob) = agent.motion_in(building);
        MotionParams {
            sigma,
            still_prob,
            travel_speed: config.travel_speed,
            dt: config.dt_minutes as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MotionDiagnostics {
    /// Indoor steps that hit the rejection cap and stayed put.
    pub indoor_fallbacks: u64,
    /// Street steps whose jitter hit the cap and snapped onto the path.
    pub street_fallbacks: u64,
    /// Planned stops that travel consumed entirely.
    pub skipped_stops: u64,
}

/// One constrained Brownian step inside `building`.
pub fn sample_step_indoor<R: Rng + ?Sized>(
    pos: (f64, f64),
    building: &Building,
    params: &MotionParams,
    rng: &mut R,
    diag: &mut MotionDiagnostics,
) -> (f64, f64) {
    if rng.random::<f64>() < params.still_prob {
        return pos;
    }
    let scale = params.sigma * params.dt.sqrt();
    for _ in 0..REJECTION_CAP {
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let (x, y) = (pos.0 + scale * ex, pos.1 + scale * ey);
        if building.contains(x, y) {
            return (x, y);
        }
    }
    diag.indoor_fallbacks += 1;
    pos
}

/// Door-to-door street route parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelPath {
    pub destination: usize,
    vertices: Vec<(f64, f64)>,
    /// Cumulative arc length at each vertex.
    cumulative: Vec<f64>,
}

impl TravelPath {
    /// Polyline from the origin's door centroid, through the centres of the
    /// street blocks on the shortest door-to-door path, to the destination's
    /// door centroid.
    pub fn between(city: &City, graph: &StreetGraph, from: usize, to: usize) -> Result<Self> {
        let (a, b) = (city.building(from), city.building(to));
        let blocks = graph.shortest_path(a.door, b.door).map_err(|e| match e {
            Error::NoPath(msg) => Error::NoPath(format!("{} -> {}: {msg}", a.id, b.id)),
            other => other,
        })?;
        let mut vertices = vec![a.door_centroid];
        vertices.extend(blocks.iter().map(|blk| blk.center()));
        vertices.push(b.door_centroid);
        let mut cumulative = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in vertices.windows(2) {
            acc += ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
            cumulative.push(acc);
        }
        Ok(TravelPath { destination: to, vertices, cumulative })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("path has vertices")
    }

    /// Point at arc length `s` (clamped) and the unit direction of its segment.
    pub fn point_at(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let s = s.clamp(0.0, self.length());
        let mut seg = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        seg = seg.min(self.vertices.len() - 2);
        // Skip zero-length segments so the direction is defined.
        while seg + 1 < self.vertices.len() - 1 && self.cumulative[seg + 1] - self.cumulative[seg] == 0.0 {
            seg += 1;
        }
        let (p, q) = (self.vertices[seg], self.vertices[seg + 1]);
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        if len == 0.0 {
            return (p, (1.0, 0.0));
        }
        let f = (s - self.cumulative[seg]) / len;
        let dir = ((q.0 - p.0) / len, (q.1 - p.1) / len);
        ((p.0 + f * (q.0 - p.0), p.1 + f * (q.1 - p.1)), dir)
    }
}

/// Progress along a [`TravelPath`].
#[derive(Debug, Clone, PartialEq)]
pub struct TravelState {
    pub path: TravelPath,
    pub s: f64,
}

/// Result of one street step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TravelStep {
    EnRoute((f64, f64)),
    /// Reached the destination door centroid.
    Arrived { building: usize, position: (f64, f64) },
}

/// Advance along the path by `travel_speed * dt` and jitter across it.
pub fn sample_step_travel<R: Rng + ?Sized>(
    state: &mut TravelState,
    city: &City,
    params: &MotionParams,
    street_sigma: f64,
    rng: &mut R,
    diag: &mut MotionDiagnostics,
) -> TravelStep {
    state.s += params.travel_speed * params.dt;
    if state.s >= state.path.length() {
        let building = state.path.destination;
        return TravelStep::Arrived { building, position: city.building(building).door_centroid };
    }
    let (p, dir) = state.path.point_at(state.s);
    let scale = street_sigma * params.dt.sqrt();
    if scale == 0.0 {
        return TravelStep::EnRoute(p);
    }
    let normal = (-dir.1, dir.0);
    for _ in 0..REJECTION_CAP {
        let e: f64 = rng.sample(StandardNormal);
        let (x, y) = (p.0 + scale * e * normal.0, p.1 + scale * e * normal.1);
        if city.is_street_point(x, y) {
            return TravelStep::EnRoute((x, y));
        }
    }
    diag.street_fallbacks += 1;
    TravelStep::EnRoute(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub unix_timestamp: i64,
    pub x: f64,
    pub y: f64,
    /// Building index, or `None` while travelling.
    pub building: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub identifier: String,
    pub dt_minutes: u32,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn start(&self) -> Option<i64> {
        self.points.first().map(|p| p.unix_timestamp)
    }

    /// Point recorded at exactly `unix`, if on the grid.
    pub fn at(&self, unix: i64) -> Option<&TrajectoryPoint> {
        let start = self.start()?;
        let step = self.dt_minutes as i64 * SECONDS_PER_MINUTE;
        let offset = unix - start;
        if offset < 0 || offset % step != 0 {
            return None;
        }
        self.points.get((offset / step) as usize)
    }
}

/// Collapse consecutive points with the same context into diary rows.
pub fn realized_diary(city: &City, trajectory: &Trajectory) -> Diary {
    let mut entries: Vec<DiaryEntry> = Vec::new();
    let mut last: Option<Option<usize>> = None;
    for p in &trajectory.points {
        match entries.last_mut() {
            Some(e) if last == Some(p.building) => e.duration += trajectory.dt_minutes,
            _ => {
                entries.push(DiaryEntry {
                    unix_timestamp: p.unix_timestamp,
                    duration: trajectory.dt_minutes,
                    location: p.building.map(|b| city.building(b).id.clone()),
                });
                last = Some(p.building);
            }
        }
    }
    Diary::new(entries)
}

enum Where {
    Inside(usize),
    Travelling(TravelState),
}

/// Simulate the ground-truth trajectory that follows `plan`, one point per
/// `dt_minutes`, and the realized diary (stops and travel rows) it implies.
///
/// Travel time is charged against the entry being travelled to. When travel
/// outlasts the planned slot, the stop is skipped and the agent continues to
/// the next planned location after touching the door.
pub fn generate_trajectory<R: Rng + ?Sized>(
    agent: &Agent,
    plan: &Diary,
    city: &City,
    graph: &StreetGraph,
    config: &MotionConfig,
    start_position: Option<(f64, f64)>,
    rng: &mut R,
) -> Result<(Trajectory, Diary, MotionDiagnostics)> {
    config.validate()?;
    plan.check_contiguous()?;
    let Some(start_unix) = plan.start() else {
        return Err(Error::invalid("destination diary is empty"));
    };
    let targets: Vec<usize> = plan
        .entries
        .iter()
        .map(|e| match &e.location {
            Some(id) => city.require(id),
            None => Err(Error::invalid("destination diary contains a travel row")),
        })
        .collect::<Result<_>>()?;

    let step_seconds = config.dt_minutes as i64 * SECONDS_PER_MINUTE;
    let steps = plan.total_minutes() / config.dt_minutes as u64;
    let mut diag = MotionDiagnostics::default();

    let first = targets[0];
    let mut pos = match start_position {
        Some(p) if city.building(first).contains(p.0, p.1) => p,
        Some(p) => {
            return Err(Error::invalid(format!(
                "start position ({}, {}) is outside {}",
                p.0,
                p.1,
                city.building(first).id
            )))
        }
        None => city.building(first).door_centroid,
    };
    let mut place = Where::Inside(first);
    let mut dwelled = true;
    let mut points = Vec::with_capacity(steps as usize);
    let mut entry = 0usize;

    for i in 0..steps as i64 {
        let t = start_unix + i * step_seconds;
        while plan.entries[entry].end() <= t {
            entry += 1;
        }
        let target = targets[entry];

        if let Where::Inside(b) = place {
            if b != target {
                if !dwelled {
                    diag.skipped_stops += 1;
                }
                let path = TravelPath::between(city, graph, b, target)?;
                pos = city.building(b).door_centroid;
                place = Where::Travelling(TravelState { path, s: 0.0 });
            }
        }

        match &mut place {
            Where::Inside(b) => {
                let b = *b;
                dwelled = true;
                points.push(TrajectoryPoint { unix_timestamp: t, x: pos.0, y: pos.1, building: Some(b) });
                let building = city.building(b);
                let params = MotionParams::for_building(agent, building, config);
                pos = sample_step_indoor(pos, building, &params, rng, &mut diag);
            }
            Where::Travelling(state) => {
                points.push(TrajectoryPoint { unix_timestamp: t, x: pos.0, y: pos.1, building: None });
                let params = MotionParams {
                    sigma: config.street_sigma,
                    still_prob: 0.0,
                    travel_speed: config.travel_speed,
                    dt: config.dt_minutes as f64,
                };
                match sample_step_travel(state, city, &params, config.street_sigma, rng, &mut diag) {
                    TravelStep::EnRoute(p) => pos = p,
                    TravelStep::Arrived { building, position } => {
                        pos = position;
                        place = Where::Inside(building);
                        dwelled = false;
                    }
                }
            }
        }
    }

    let trajectory = Trajectory {
        identifier: agent.id.clone(),
        dt_minutes: config.dt_minutes,
        points,
    };
    let realized = realized_diary(city, &trajectory);
    Ok((trajectory, realized, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::{BuildingSpec, BuildingType, Footprint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const T0: i64 = 1704067200;

    fn strip_city() -> City {
        // Two homes on the same street row, doors 6 blocks apart.
        let mut city = City::new(12, 4).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Home, (2, 1), Footprint::bbox(2, 2, 3, 3))).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Retail, (8, 1), Footprint::bbox(7, 2, 10, 4))).unwrap();
        city
    }

    fn params(sigma: f64, q: f64) -> MotionParams {
        MotionParams { sigma, still_prob: q, travel_speed: 3.0, dt: 1.0 }
    }

    #[test]
    fn still_probability_one_never_moves() {
        let city = strip_city();
        let b = city.building(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut diag = MotionDiagnostics::default();
        let p0 = (8.3, 3.1);
        for _ in 0..1000 {
            assert_eq!(sample_step_indoor(p0, b, &params(0.5, 1.0), &mut rng, &mut diag), p0);
        }
    }

    #[test]
    fn tiny_sigma_barely_moves() {
        let city = strip_city();
        let b = city.building(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut diag = MotionDiagnostics::default();
        let mut p = (8.5, 3.0);
        for _ in 0..1000 {
            let q = sample_step_indoor(p, b, &params(1e-9, 0.0), &mut rng, &mut diag);
            assert!((q.0 - p.0).abs() < 1e-7 && (q.1 - p.1).abs() < 1e-7);
            assert!(b.contains(q.0, q.1));
            p = q;
        }
    }

    #[test]
    fn rejection_cap_falls_back_in_place() {
        let city = strip_city();
        let b = city.building(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut diag = MotionDiagnostics::default();
        let p = sample_step_indoor((2.5, 2.5), b, &params(1e6, 0.0), &mut rng, &mut diag);
        assert_eq!(p, (2.5, 2.5));
        assert_eq!(diag.indoor_fallbacks, 1);
    }

    #[test]
    fn travel_kinematics() {
        let city = City::new(7, 1).unwrap();
        // Synthetic straight path of length 6.
        let path = TravelPath {
            destination: 0,
            vertices: vec![(0.0, 0.5), (6.0, 0.5)],
            cumulative: vec![0.0, 6.0],
        };
        let mut state = TravelState { path, s: 0.0 };
        let mut diag = MotionDiagnostics::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = params(0.0, 0.0);
        assert_eq!(
            sample_step_travel(&mut state, &city, &p, 0.0, &mut rng, &mut diag),
            TravelStep::EnRoute((3.0, 0.5))
        );
        let mut c2 = City::new(7, 3).unwrap();
        c2.add_building(BuildingSpec::new(BuildingType::Home, (6, 0), Footprint::bbox(6, 1, 7, 2))).unwrap();
        assert!(matches!(
            sample_step_travel(&mut state, &c2, &p, 0.0, &mut rng, &mut diag),
            TravelStep::Arrived { building: 0, .. }
        ));
    }

    #[test]
    fn zero_jitter_stays_on_polyline() {
        let city = strip_city();
        let g = StreetGraph::build(&city).unwrap();
        let path = TravelPath::between(&city, &g, 0, 1).unwrap();
        // Door centroids (2.5, 2) and (8.5, 2); street row y = 1.5.
        assert!((path.length() - 7.0).abs() < 1e-12);
        let mut state = TravelState { path, s: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut diag = MotionDiagnostics::default();
        let p = MotionParams { sigma: 0.0, still_prob: 0.0, travel_speed: 1.0, dt: 1.0 };
        while let TravelStep::EnRoute((x, y)) = sample_step_travel(&mut state, &city, &p, 0.0, &mut rng, &mut diag) {
            assert!(y == 1.5 || (y - 2.0).abs() <= 0.5 && (x == 2.5 || x == 8.5), "({x}, {y})");
        }
    }

    #[test]
    fn single_entry_without_travel() {
        let city = strip_city();
        let g = StreetGraph::build(&city).unwrap();
        let agent = Agent::new("a", "h-x2-y1", "r-x8-y1");
        let plan = Diary::from_plan(T0, &[("h-x2-y1", 90)]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (traj, realized, _) =
            generate_trajectory(&agent, &plan, &city, &g, &MotionConfig::default(), None, &mut rng).unwrap();
        assert_eq!(traj.points.len(), 90);
        assert_eq!(realized.entries, plan.entries);
        let home = city.building(0);
        assert!(traj.points.iter().all(|p| home.contains(p.x, p.y)));
    }

    #[test]
    fn travel_is_charged_to_the_next_stop() {
        let city = strip_city();
        let g = StreetGraph::build(&city).unwrap();
        let agent = Agent::new("a", "h-x2-y1", "r-x8-y1");
        let plan = Diary::from_plan(T0, &[("h-x2-y1", 60), ("r-x8-y1", 60), ("h-x2-y1", 30)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = MotionConfig::default();
        let (traj, realized, diag) = generate_trajectory(&agent, &plan, &city, &g, &cfg, None, &mut rng).unwrap();
        assert_eq!(diag.skipped_stops, 0);
        assert_eq!(realized.total_minutes(), 150);
        realized.check_contiguous().unwrap();
        // Path length 7 at 3 blocks/min: three travel minutes.
        let rows: Vec<_> = realized.entries.iter().map(|e| (e.location.clone(), e.duration)).collect();
        assert_eq!(
            rows,
            vec![
                (Some("h-x2-y1".to_string()), 60),
                (None, 3),
                (Some("r-x8-y1".to_string()), 57),
                (None, 3),
                (Some("h-x2-y1".to_string()), 27),
            ]
        );
        for p in &traj.points {
            match p.building {
                Some(b) => assert!(city.building(b).contains(p.x, p.y)),
                None => assert!(city.is_street_point(p.x, p.y)),
            }
        }
    }

    #[test]
    fn slot_shorter_than_travel_is_skipped() {
        let city = strip_city();
        let g = StreetGraph::build(&city).unwrap();
        let agent = Agent::new("a", "h-x2-y1", "r-x8-y1");
        let plan = Diary::from_plan(T0, &[("h-x2-y1", 10), ("r-x8-y1", 2), ("h-x2-y1", 20)]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, realized, diag) =
            generate_trajectory(&agent, &plan, &city, &g, &MotionConfig::default(), None, &mut rng).unwrap();
        assert_eq!(diag.skipped_stops, 1);
        assert_eq!(realized.total_minutes(), 32);
        assert!(realized.stops().all(|e| e.location.as_deref() == Some("h-x2-y1")));
    }

    #[test]
    fn rejects_unknown_and_travel_rows() {
        let city = strip_city();
        let g = StreetGraph::build(&city).unwrap();
        let agent = Agent::new("a", "h-x2-y1", "r-x8-y1");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = MotionConfig::default();
        let plan = Diary::from_plan(T0, &[("nowhere", 10)]);
        assert!(matches!(
            generate_trajectory(&agent, &plan, &city, &g, &cfg, None, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        let plan = Diary::new(vec![DiaryEntry::travel(T0, 5)]);
        assert!(generate_trajectory(&agent, &plan, &city, &g, &cfg, None, &mut rng).is_err());
    }
}
