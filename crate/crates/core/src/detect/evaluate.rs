use std::fmt;

use super::Stop;
use crate::diary::Diary;
use crate::time::SECONDS_PER_MINUTE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopStatus {
    /// Exactly one detection touches this stop and it touches nothing else.
    Matched,
    /// No detection touches this stop.
    Missed,
    /// Two or more detections touch this stop.
    Split,
    /// A touching detection also touches another true stop.
    Merged,
}

impl StopStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StopStatus::Matched => "matched",
            StopStatus::Missed => "missed",
            StopStatus::Split => "split",
            StopStatus::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub detected: usize,
    pub true_stops: usize,
    pub statuses: Vec<StopStatus>,
    /// Overlap between each detection and the true stop it overlaps most.
    pub overlap_minutes: f64,
    pub true_stop_minutes: f64,
}

impl Evaluation {
    pub fn count(&self, status: StopStatus) -> usize {
        self.statuses.iter().filter(|&&s| s == status).count()
    }

    /// Same number of stops and every true stop matched.
    pub fn is_exact(&self) -> bool {
        self.detected == self.true_stops && self.count(StopStatus::Matched) == self.true_stops
    }

    /// Flat `key=value` lines.
    pub fn to_record(&self) -> String {
        let statuses: Vec<&str> = self.statuses.iter().map(|s| s.as_str()).collect();
        format!(
            "detected={}\ntrue_stops={}\nmatched={}\nmissed={}\nsplit={}\nmerged={}\nexact={}\noverlap_minutes={}\ntrue_stop_minutes={}\nstatuses={}\n",
            self.detected,
            self.true_stops,
            self.count(StopStatus::Matched),
            self.count(StopStatus::Missed),
            self.count(StopStatus::Split),
            self.count(StopStatus::Merged),
            self.is_exact(),
            self.overlap_minutes,
            self.true_stop_minutes,
            statuses.join(",")
        )
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

fn overlap_seconds(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0)
}

/// Score detections against the stops (rows with a location) of a realized
/// diary. A detection touches a true stop when they overlap by more than
/// `tolerance_minutes`.
pub fn evaluate_against_diary(stops: &[Stop], diary: &Diary, tolerance_minutes: f64) -> Evaluation {
    let truth: Vec<(i64, i64)> = diary.stops().map(|e| (e.unix_timestamp, e.end())).collect();
    let det: Vec<(i64, i64)> = stops.iter().map(|s| (s.start, s.end)).collect();
    let tol = tolerance_minutes * SECONDS_PER_MINUTE as f64;
    let touches = |d: usize, t: usize| overlap_seconds(det[d], truth[t]) as f64 > tol;

    let statuses = (0..truth.len())
        .map(|t| {
            let touching: Vec<usize> = (0..det.len()).filter(|&d| touches(d, t)).collect();
            if touching.is_empty() {
                StopStatus::Missed
            } else if touching.iter().any(|&d| (0..truth.len()).any(|o| o != t && touches(d, o))) {
                StopStatus::Merged
            } else if touching.len() > 1 {
                StopStatus::Split
            } else {
                StopStatus::Matched
            }
        })
        .collect();

    // Truth is time-ordered, so the first maximum is the earlier stop.
    let overlap: i64 = det
        .iter()
        .map(|&d| truth.iter().map(|&t| overlap_seconds(d, t)).fold(0, i64::max))
        .sum();
    let total: i64 = truth.iter().map(|t| t.1 - t.0).sum();
    Evaluation {
        detected: stops.len(),
        true_stops: truth.len(),
        statuses,
        overlap_minutes: overlap as f64 / SECONDS_PER_MINUTE as f64,
        true_stop_minutes: total as f64 / SECONDS_PER_MINUTE as f64,
    }
}
