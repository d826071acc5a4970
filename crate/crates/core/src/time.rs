//! Unix timestamps and their wall-clock rendering.

use chrono::{DateTime, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_MINUTE: i64 = 60;
pub const MINUTES_PER_DAY: u32 = 24 * 60;

const LOCAL_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Fixed offset between unix time and the local wall clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub utc_offset_minutes: i32,
}

impl Clock {
    pub fn new(utc_offset_minutes: i32) -> Self {
        Clock { utc_offset_minutes }
    }

    fn shifted(&self, unix: i64) -> NaiveDateTime {
        let local = unix + self.utc_offset_minutes as i64 * SECONDS_PER_MINUTE;
        DateTime::from_timestamp(local, 0)
            .expect("timestamp within chrono range")
            .naive_utc()
    }

    /// `YYYY-MM-DD HH:MM:SS` in local time.
    pub fn local_timestamp(&self, unix: i64) -> String {
        self.shifted(unix).format(LOCAL_FORMAT).to_string()
    }

    pub fn minute_of_day(&self, unix: i64) -> u32 {
        let t = self.shifted(unix);
        t.hour() * 60 + t.minute()
    }

    /// Parse a local `YYYY-MM-DD HH:MM[:SS]` (or `T`-separated) string.
    pub fn parse_local(&self, text: &str) -> Result<i64> {
        let text = text.trim().replace('T', " ");
        let naive = NaiveDateTime::parse_from_str(&text, LOCAL_FORMAT)
            .or_else(|_| NaiveDateTime::parse_from_str(&text, "%Y-%m-%d %H:%M"))
            .map_err(|e| Error::Parse(format!("bad local time '{text}': {e}")))?;
        Ok(naive.and_utc().timestamp() - self.utc_offset_minutes as i64 * SECONDS_PER_MINUTE)
    }
}
