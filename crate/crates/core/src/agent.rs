use serde::{Deserialize, Serialize};

use crate::city::{Building, BuildingType, City};
use crate::error::{Error, Result};

/// One value per building type.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerType<T> {
    pub home: T,
    pub work: T,
    pub retail: T,
    pub park: T,
}

impl<T> PerType<T> {
    pub fn get(&self, t: BuildingType) -> &T {
        match t {
            BuildingType::Home => &self.home,
            BuildingType::Work => &self.work,
            BuildingType::Retail => &self.retail,
            BuildingType::Park => &self.park,
        }
    }

    pub fn get_mut(&mut self, t: BuildingType) -> &mut T {
        match t {
            BuildingType::Home => &mut self.home,
            BuildingType::Work => &mut self.work,
            BuildingType::Retail => &mut self.retail,
            BuildingType::Park => &mut self.park,
        }
    }

    pub fn from_fn(mut f: impl FnMut(BuildingType) -> T) -> Self {
        PerType {
            home: f(BuildingType::Home),
            work: f(BuildingType::Work),
            retail: f(BuildingType::Retail),
            park: f(BuildingType::Park),
        }
    }
}

/// Agent-specific replacement for a building type's motion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub still_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    pub home: String,
    pub workplace: String,
    /// Building the agent starts in; defaults to `home`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_location: Option<String>,
    #[serde(default)]
    pub overrides: PerType<Option<MotionOverride>>,
}

impl Agent {
    pub fn new(id: impl Into<String>, home: impl Into<String>, workplace: impl Into<String>) -> Self {
        Agent {
            id: id.into(),
            home: home.into(),
            workplace: workplace.into(),
            start_location: None,
            overrides: PerType::default(),
        }
    }

    pub fn with_override(mut self, t: BuildingType, sigma: f64, still_prob: f64) -> Self {
        *self.overrides.get_mut(t) = Some(MotionOverride {
            sigma: Some(sigma),
            still_prob: Some(still_prob),
        });
        self
    }

    pub fn start(&self) -> &str {
        self.start_location.as_deref().unwrap_or(&self.home)
    }

    /// `(sigma, still_prob)` the agent uses inside `building`.
    pub fn motion_in(&self, building: &Building) -> (f64, f64) {
        let o = self.overrides.get(building.building_type).unwrap_or_default();
        (
            o.sigma.unwrap_or(building.sigma),
            o.still_prob.unwrap_or(building.still_prob),
        )
    }

    /// Check that the referenced buildings exist and overrides are in range.
    pub fn validate(&self, city: &City) -> Result<()> {
        city.require(&self.home)?;
        city.require(&self.workplace)?;
        city.require(self.start())?;
        for t in BuildingType::ALL {
            if let Some(o) = self.overrides.get(t) {
                if o.sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
                    return Err(Error::invalid(format!("agent {}: sigma must be positive", self.id)));
                }
                if o.still_prob.is_some_and(|q| !(0.0..=1.0).contains(&q)) {
                    return Err(Error::invalid(format!(
                        "agent {}: still_prob must be in [0, 1]",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}
