//! Synthetic human-mobility sandbox.
//!
//! Builds a grid city, samples circadian-constrained EPR destination diaries,
//! turns them into minute-level ground-truth trajectories with constrained
//! Brownian motion, sparsifies those into bursty noisy GPS pings, and scores
//! stop-detection algorithms against the known ground truth.

pub mod agent;
pub mod city;
pub mod detect;
pub mod diary;
pub mod epr;
pub mod experiment;
pub mod error;
pub mod io;
pub mod layout;
pub mod pings;
pub mod schedule;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod street;
pub mod time;
pub mod trajectory;

pub use agent::{Agent, MotionOverride, PerType};
pub use city::{Block, Building, BuildingSpec, BuildingType, City, Footprint};
pub use diary::{condense_destinations, generate_destination_diary, Diary, DiaryEntry};
pub use epr::EprParams;
pub use error::{Error, ErrorClass, Result};
pub use layout::{generate_garden_layout, GardenSpec, RingSpec};
pub use schedule::{CircadianSchedule, TypeSet};
pub use street::{DoorDistances, StreetGraph};
pub use time::Clock;
