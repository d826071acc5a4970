use serde::{Deserialize, Serialize};

use super::{dist, minutes_between, Stop};
use crate::error::{Error, Result};
use crate::pings::Ping;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LachesisParams {
    /// Minimum stop span, minutes.
    pub dur_min: f64,
    /// Largest allowed gap between consecutive pings, minutes.
    pub dt_max: f64,
    /// Largest allowed diameter, blocks.
    pub delta_roam: f64,
}

impl LachesisParams {
    pub fn new(dur_min: f64, dt_max: f64, delta_roam: f64) -> Self {
        LachesisParams { dur_min, dt_max, delta_roam }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dur_min", self.dur_min), ("dt_max", self.dt_max), ("delta_roam", self.delta_roam)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sequential stay detection over time-sorted pings.
///
/// A candidate grows while the next ping keeps the diameter within
/// `delta_roam` and follows the previous one within `dt_max`. It is emitted
/// when its span reaches `dur_min` (and is positive). Scanning resumes at
/// the ping that broke the candidate either way.
pub fn lachesis(pings: &[Ping], params: &LachesisParams) -> Result<Vec<Stop>> {
    params.validate()?;
    if pings.windows(2).any(|w| w[1].unix_timestamp < w[0].unix_timestamp) {
        return Err(Error::invalid("pings must be time-sorted"));
    }
    let mut stops = Vec::new();
    let mut i = 0;
    while i < pings.len() {
        let mut j = i + 1;
        while j < pings.len()
            && minutes_between(&pings[j - 1], &pings[j]) <= params.dt_max
            && (i..j).all(|k| dist(&pings[k], &pings[j]) <= params.delta_roam)
        {
            j += 1;
        }
        let span = minutes_between(&pings[i], &pings[j - 1]);
        if span >= params.dur_min && span > 0.0 {
            stops.push(Stop::from_members(pings, (i..j).collect()));
        }
        i = j;
    }
    Ok(stops)
}
