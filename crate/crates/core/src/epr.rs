//! Exploration and preferential return (EPR) transition rows.
//!
//! From building `k`, with visit counts `S`:
//! * stay with probability `kappa[type(k)]`;
//! * conditional on leaving, explore with probability
//!   `min(rho * |V|^-gamma, 1)`, spreading the mass over unexplored buildings
//!   in proportion to `1 / r(k, l)^2`;
//! * otherwise return to a visited building in proportion to `S[l]`.
//!
//! The circadian constraint then conditions the row on the allowed types.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::PerType;
use crate::city::BuildingType;
use crate::error::{Error, Result};
use crate::schedule::TypeSet;
use crate::street::DoorDistances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprParams {
    pub rho: f64,
    pub gamma: f64,
    /// Per-step stay probability by type of the current building.
    pub kappa: PerType<f64>,
    /// Diary step, minutes.
    pub delta_minutes: u32,
    #[serde(default)]
    pub initial_counts: InitialCounts,
}

impl Default for EprParams {
    fn default() -> Self {
        EprParams {
            rho: 0.6,
            gamma: 0.21,
            kappa: PerType { home: 0.97, work: 0.97, retail: 0.6, park: 0.6 },
            delta_minutes: 15,
            initial_counts: InitialCounts::default(),
        }
    }
}

impl EprParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        for t in BuildingType::ALL {
            let k = *self.kappa.get(t);
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::invalid(format!("kappa[{t}] must be in (0, 1), got {k}")));
            }
        }
        if self.delta_minutes == 0 {
            return Err(Error::invalid("diary step must be positive"));
        }
        Ok(())
    }

    /// Mean stay, in minutes, at a building of type `t` when unconstrained.
    pub fn mean_dwell_minutes(&self, t: BuildingType) -> f64 {
        self.delta_minutes as f64 / (1.0 - self.kappa.get(t))
    }
}

/// Seed visit counts: home and workplace start high, plus a few random
/// buildings at one visit so the process starts near its long-run regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCounts {
    pub home: u64,
    pub work: u64,
    pub random_others: usize,
}

impl Default for InitialCounts {
    fn default() -> Self {
        InitialCounts { home: 20, work: 10, random_others: 3 }
    }
}

/// Current building and visit counts `S` (indexed like `City::buildings`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitState {
    pub current: usize,
    pub counts: Vec<u64>,
}

impl VisitState {
    pub fn new(current: usize, counts: Vec<u64>) -> Self {
        VisitState { current, counts }
    }

    /// Buildings other than the current one that were never visited.
    pub fn unexplored(&self) -> impl Iterator<Item = usize> + '_ {
        self.others().filter(|&l| self.counts[l] == 0)
    }

    /// Visited buildings other than the current one.
    pub fn visited(&self) -> impl Iterator<Item = usize> + '_ {
        self.others().filter(|&l| self.counts[l] > 0)
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.counts.len()).filter(move |&l| l != self.current)
    }

    /// Count an arrival at `l`.
    pub fn move_to(&mut self, l: usize) {
        if l != self.current {
            self.counts[l] += 1;
            self.current = l;
        }
    }
}

/// Unconstrained transition row out of `state.current`.
pub fn unconstrained_transition_row(
    state: &VisitState,
    params: &EprParams,
    types: &[BuildingType],
    distances: &DoorDistances,
) -> Vec<f64> {
    let n = state.counts.len();
    let k = state.current;
    let mut row = vec![0.0; n];
    let kappa = *params.kappa.get(types[k]);
    let leave = 1.0 - kappa;

    let visited: Vec<usize> = state.visited().collect();
    let gravity: Vec<(usize, f64)> = state
        .unexplored()
        .filter_map(|l| {
            // Co-located doors would give r = 0; treat them as one block apart.
            distances.get(k, l).map(|r| (l, 1.0 / (r.max(1) as f64).powi(2)))
        })
        .collect();
    let gravity_total: f64 = gravity.iter().map(|(_, w)| w).sum();
    let count_total: u64 = visited.iter().map(|&l| state.counts[l]).sum();

    let explore_share = match (visited.is_empty(), gravity.is_empty()) {
        (_, true) => 0.0,
        (true, false) => 1.0,
        (false, false) => (params.rho * (visited.len() as f64).powf(-params.gamma)).min(1.0),
    };
    let explore_mass = leave * explore_share;
    let return_mass = if visited.is_empty() { 0.0 } else { leave - explore_mass };

    for &(l, w) in &gravity {
        row[l] = explore_mass * w / gravity_total;
    }
    for &l in &visited {
        row[l] = return_mass * state.counts[l] as f64 / count_total as f64;
    }
    // Nowhere to go: all mass stays.
    row[k] = kappa + (leave - explore_mass - return_mass);
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedRow {
    pub row: Vec<f64>,
    /// No allowed building carried mass; the row was replaced by a stay.
    pub forced_stay: bool,
}

/// Condition `row` on the next building having an allowed type.
pub fn constrain_row(
    row: &[f64],
    allowed: TypeSet,
    types: &[BuildingType],
    current: usize,
) -> ConstrainedRow {
    let mut out: Vec<f64> = row
        .iter()
        .zip(types)
        .map(|(&p, &t)| if allowed.contains(t) { p } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|p| *p /= total);
        ConstrainedRow { row: out, forced_stay: false }
    } else {
        out.iter_mut().for_each(|p| *p = 0.0);
        out[current] = 1.0;
        ConstrainedRow { row: out, forced_stay: true }
    }
}

/// Draw an index from a probability vector by inverse CDF.
pub fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let total: f64 = row.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
