use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::city::{BuildingDef, BuildingType, City, CityDef, CityRecord};
use crate::detect::{DbscanParams, LachesisParams};
use crate::epr::EprParams;
use crate::error::{Error, Result};
use crate::layout::{generate_garden_layout, GardenSpec};
use crate::pings::{NhppParams, NoiseParams};
use crate::schedule::CircadianSchedule;
use crate::time::Clock;
use crate::trajectory::MotionConfig;

/// Where the city comes from. The first of `record`, `file`, `layout` that
/// is set wins; otherwise the garden layout is generated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CityConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<CityRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<CityDef>,
    pub garden: GardenSpec,
}

impl CityConfig {
    /// Relative `file` paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<City> {
        if let Some(r) = &self.record {
            return City::from_record(r);
        }
        if let Some(f) = &self.file {
            let path = match base {
                Some(b) if f.is_relative() => b.join(f),
                _ => f.clone(),
            };
            return City::load(path);
        }
        if let Some(def) = &self.layout {
            return def.build();
        }
        generate_garden_layout(&self.garden)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRegime {
    pub name: String,
    #[serde(flatten)]
    pub params: NhppParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDbscan {
    pub name: String,
    #[serde(flatten)]
    pub params: DbscanParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStop {
    pub location: String,
    pub minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub city: CityDef,
    pub plan: Vec<PlanStop>,
    pub agent: String,
    pub regimes: Vec<NamedRegime>,
    pub parametrizations: Vec<NamedDbscan>,
    pub noise: NoiseParams,
    pub replicates: usize,
    /// Overlap, minutes, a detection needs to count as touching a stop.
    pub tolerance_minutes: f64,
    /// Replicates whose ping and label tables are written out.
    pub emit_replicates: usize,
}

impl Default for Example1Config {
    fn default() -> Self {
        use BuildingType::*;
        Example1Config {
            city: CityDef {
                width: 14,
                height: 10,
                buildings: vec![
                    BuildingDef::bbox(Home, (1, 2), [1, 3, 3, 4]),
                    BuildingDef::bbox(Home, (6, 2), [5, 3, 7, 4]),
                    BuildingDef::bbox(Retail, (9, 2), [9, 3, 13, 7]),
                ],
            },
            plan: vec![
                PlanStop { location: "h-x1-y2".into(), minutes: 60 },
                PlanStop { location: "h-x6-y2".into(), minutes: 60 },
                PlanStop { location: "r-x9-y2".into(), minutes: 180 },
            ],
            agent: "Alice".into(),
            regimes: vec![
                NamedRegime { name: "low".into(), params: NhppParams { beta_start: 150.0, beta_duration: 20.0, beta_ping: 2.0 } },
                NamedRegime { name: "high".into(), params: NhppParams { beta_start: 60.0, beta_duration: 40.0, beta_ping: 10.0 } },
            ],
            parametrizations: vec![
                NamedDbscan { name: "coarse".into(), params: DbscanParams::new(2.25, 120.0, 2) },
                NamedDbscan { name: "fine".into(), params: DbscanParams::new(1.0, 45.0, 3) },
            ],
            noise: NoiseParams { ha: 0.75 },
            replicates: 500,
            tolerance_minutes: 0.0,
            emit_replicates: 1,
        }
    }
}

/// One roaming agent of the noise experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoamerSpec {
    pub id: String,
    pub still_prob: f64,
    pub sigma: f64,
    pub ha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example2Config {
    /// Park building id; the first park in the city when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub park: Option<String>,
    pub stay_minutes: u32,
    /// Low-variance agent first, high-variance agent second.
    pub agents: Vec<RoamerSpec>,
    pub pings: NhppParams,
    pub lachesis: LachesisParams,
    pub replicates: usize,
    /// Share of the stay the largest stop must cover.
    pub coverage: f64,
    pub emit_replicates: usize,
}

impl Default for Example2Config {
    fn default() -> Self {
        Example2Config {
            park: None,
            stay_minutes: 120,
            agents: vec![
                RoamerSpec { id: "Daniel".into(), still_prob: 0.75, sigma: 1.5 / 1.96, ha: 0.75 },
                RoamerSpec { id: "Elaine".into(), still_prob: 0.1, sigma: 2.5 / 1.96, ha: 1.5 },
            ],
            pings: NhppParams { beta_start: 10.0, beta_duration: 1000.0, beta_ping: 5.0 },
            lachesis: LachesisParams::new(15.0, 30.0, 3.0),
            replicates: 200,
            coverage: 0.9,
            emit_replicates: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Local start time, `YYYY-MM-DD HH:MM[:SS]`.
    pub start: String,
    pub utc_offset_minutes: i32,
    pub days: u32,
    pub city: CityConfig,
    pub agents: Vec<Agent>,
    /// Extra agents with random home and workplace.
    pub population: usize,
    pub epr: EprParams,
    pub schedule: CircadianSchedule,
    pub motion: MotionConfig,
    pub pings: NhppParams,
    pub noise: NoiseParams,
    pub example1: Example1Config,
    pub example2: Example2Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            start: "2024-01-01 00:00:00".into(),
            utc_offset_minutes: 0,
            days: 1,
            city: CityConfig::default(),
            agents: Vec::new(),
            population: 0,
            epr: EprParams::default(),
            schedule: CircadianSchedule::default(),
            motion: MotionConfig::default(),
            pings: NhppParams { beta_start: 300.0, beta_duration: 60.0, beta_ping: 10.0 },
            noise: NoiseParams::default(),
            example1: Example1Config::default(),
            example2: Example2Config::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // Pin relative city files to the config's directory.
        if let (Some(f), Some(dir)) = (&cfg.city.file, path.parent()) {
            if f.is_relative() {
                cfg.city.file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn clock(&self) -> Clock {
        Clock::new(self.utc_offset_minutes)
    }

    pub fn start_unix(&self) -> Result<i64> {
        self.clock().parse_local(&self.start)
    }

    /// Numeric checks that need no city.
    pub fn validate(&self) -> Result<()> {
        self.start_unix()?;
        self.epr.validate()?;
        self.motion.validate()?;
        self.pings.validate()?;
        self.noise.validate()?;
        if self.days == 0 {
            return Err(Error::invalid("days must be positive"));
        }
        let e1 = &self.example1;
        for r in &e1.regimes {
            r.params.validate()?;
        }
        for p in &e1.parametrizations {
            p.params.validate()?;
        }
        e1.noise.validate()?;
        let e2 = &self.example2;
        e2.pings.validate()?;
        e2.lachesis.validate()?;
        for a in &e2.agents {
            NoiseParams::new(a.ha)?;
            if !a.sigma.is_finite() || a.sigma <= 0.0 || !(0.0..=1.0).contains(&a.still_prob) {
                return Err(Error::invalid(format!("agent {}: bad motion parameters", a.id)));
            }
        }
        Ok(())
    }

    /// Canonical digest of the configuration.
    pub fn hash(&self) -> String {
        super::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}
