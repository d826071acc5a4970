//! Circadian constraint: which building types an agent may occupy at each
//! time of day.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::city::BuildingType;
use crate::error::{Error, Result};
use crate::time::MINUTES_PER_DAY;

/// Small bit set of building types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TypeSet(u8);

impl TypeSet {
    pub const EMPTY: TypeSet = TypeSet(0);
    pub const ALL: TypeSet = TypeSet(0b1111);

    pub fn of(types: &[BuildingType]) -> Self {
        TypeSet(types.iter().fold(0, |acc, t| acc | (1 << t.index())))
    }

    pub fn contains(self, t: BuildingType) -> bool {
        self.0 & (1 << t.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = BuildingType> {
        BuildingType::ALL.into_iter().filter(move |t| self.contains(*t))
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(|t| t.as_str()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// `[from, to)` in minutes of the day; `to <= from` wraps past midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleWindow {
    #[serde(with = "hhmm")]
    pub from: u32,
    #[serde(with = "hhmm")]
    pub to: u32,
    pub allowed: Vec<BuildingType>,
}

impl ScheduleWindow {
    pub fn new(from: u32, to: u32, allowed: &[BuildingType]) -> Self {
        ScheduleWindow { from, to, allowed: allowed.to_vec() }
    }

    fn covers(&self, minute: u32) -> bool {
        if self.from < self.to {
            (self.from..self.to).contains(&minute)
        } else {
            minute >= self.from || minute < self.to
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScheduleWindow>", into = "Vec<ScheduleWindow>")]
pub struct CircadianSchedule {
    windows: Vec<ScheduleWindow>,
    /// Allowed set for every minute of the day.
    lookup: Vec<TypeSet>,
}

impl CircadianSchedule {
    pub fn new(windows: Vec<ScheduleWindow>) -> Result<Self> {
        let mut lookup = vec![None; MINUTES_PER_DAY as usize];
        for w in &windows {
            if w.from >= MINUTES_PER_DAY || w.to > MINUTES_PER_DAY {
                return Err(Error::invalid("schedule window outside 00:00-24:00"));
            }
            let set = TypeSet::of(&w.allowed);
            if set.is_empty() {
                return Err(Error::invalid("schedule window allows no building type"));
            }
            for (minute, slot) in lookup.iter_mut().enumerate() {
                if w.covers(minute as u32) {
                    if slot.is_some() {
                        return Err(Error::invalid(format!(
                            "schedule windows overlap at minute {minute}"
                        )));
                    }
                    *slot = Some(set);
                }
            }
        }
        let lookup = lookup
            .into_iter()
            .enumerate()
            .map(|(minute, s)| {
                s.ok_or_else(|| Error::invalid(format!("schedule leaves minute {minute} uncovered")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CircadianSchedule { windows, lookup })
    }

    /// A single window allowing every building type all day.
    pub fn unconstrained() -> Self {
        CircadianSchedule::new(vec![ScheduleWindow::new(0, 0, &BuildingType::ALL)])
            .expect("full-day window is valid")
    }

    pub fn windows(&self) -> &[ScheduleWindow] {
        &self.windows
    }

    pub fn allowed_types(&self, minute_of_day: u32) -> TypeSet {
        self.lookup[(minute_of_day % MINUTES_PER_DAY) as usize]
    }
}

impl Default for CircadianSchedule {
    fn default() -> Self {
        use BuildingType::*;
        let h = |hour: u32| hour * 60;
        CircadianSchedule::new(vec![
            ScheduleWindow::new(h(20), h(3), &[Home]),
            ScheduleWindow::new(h(3), h(7), &[Home]),
            ScheduleWindow::new(h(7), h(9), &[Home, Retail, Park]),
            ScheduleWindow::new(h(9), h(12), &[Work]),
            ScheduleWindow::new(h(12), h(13), &[Work, Retail, Park]),
            ScheduleWindow::new(h(13), h(17), &[Work]),
            ScheduleWindow::new(h(17), h(20), &[Home, Retail, Park]),
        ])
        .expect("default schedule is valid")
    }
}

impl TryFrom<Vec<ScheduleWindow>> for CircadianSchedule {
    type Error = Error;

    fn try_from(windows: Vec<ScheduleWindow>) -> Result<Self> {
        CircadianSchedule::new(windows)
    }
}

impl From<CircadianSchedule> for Vec<ScheduleWindow> {
    fn from(s: CircadianSchedule) -> Self {
        s.windows
    }
}

mod hhmm {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(minutes: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:02}:{:02}", minutes / 60, minutes % 60))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        let text = String::deserialize(d)?;
        let (h, m) = text
            .split_once(':')
            .ok_or_else(|| de::Error::custom(format!("expected HH:MM, got '{text}'")))?;
        let h: u32 = h.parse().map_err(de::Error::custom)?;
        let m: u32 = m.parse().map_err(de::Error::custom)?;
        if m >= 60 || h > 24 || (h == 24 && m > 0) {
            return Err(de::Error::custom(format!("bad time of day '{text}'")));
        }
        Ok((h * 60 + m) % (24 * 60))
    }
}
