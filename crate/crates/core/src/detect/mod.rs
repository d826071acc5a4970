//! Stop detection on sparse pings and scoring against ground truth.

mod dbscan;
mod evaluate;
mod lachesis;

pub use dbscan::{temporal_dbscan, ClusterLabeling, DbscanParams, NOISE};
pub use evaluate::{evaluate_against_diary, Evaluation, StopStatus};
pub use lachesis::{lachesis, LachesisParams};

use crate::pings::Ping;
use crate::time::SECONDS_PER_MINUTE;

/// A detected stay.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    /// Unix seconds of the first and last member ping.
    pub start: i64,
    pub end: i64,
    pub centroid: (f64, f64),
    /// Indices into the ping table, time-ordered.
    pub members: Vec<usize>,
}

impl Stop {
    pub fn from_members(pings: &[Ping], mut members: Vec<usize>) -> Self {
        members.sort_by_key(|&i| (pings[i].unix_timestamp, i));
        let n = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &i| (sx + pings[i].x, sy + pings[i].y));
        Stop {
            start: pings[members[0]].unix_timestamp,
            end: pings[*members.last().unwrap()].unix_timestamp,
            centroid: (sx / n, sy / n),
            members,
        }
    }

    pub fn duration_minutes(&self) -> f64 {
        (self.end - self.start) as f64 / SECONDS_PER_MINUTE as f64
    }
}

/// One stop per cluster, ordered by start. Clusters whose pings all share
/// one timestamp have no extent and are dropped.
pub fn stops_from_labels(pings: &[Ping], labels: &ClusterLabeling) -> Vec<Stop> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); labels.num_clusters()];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l != NOISE {
            groups[l as usize].push(i);
        }
    }
    let mut stops: Vec<Stop> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| Stop::from_members(pings, g))
        .filter(|s| s.end > s.start)
        .collect();
    stops.sort_by_key(|s| (s.start, s.end));
    stops
}

fn minutes_between(a: &Ping, b: &Ping) -> f64 {
    (b.unix_timestamp - a.unix_timestamp) as f64 / SECONDS_PER_MINUTE as f64
}

fn dist(a: &Ping, b: &Ping) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}
