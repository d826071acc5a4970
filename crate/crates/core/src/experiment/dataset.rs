//! Per-agent dataset files plus a manifest that is enough to regenerate
//! every one of them.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{ensure_dir, sha256_hex};
use crate::agent::Agent;
use crate::city::{BuildingType, City};
use crate::error::{Error, Result};
use crate::io;
use crate::seed::{derive_seed, derive_seed_labeled, stage_rng, Stage};
use crate::sim::{SimulatedAgent, World};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestAgent {
    pub id: String,
    pub home: String,
    pub workplace: String,
    /// Sub-seed per stage name.
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config_hash: String,
    pub master_seed: u64,
    /// Configuration with the city embedded, so the manifest stands alone.
    pub config: ExperimentConfig,
    pub agents: Vec<ManifestAgent>,
    pub files: Vec<FileDigest>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || id.starts_with('.') {
        return Err(Error::invalid(format!("agent id '{id}' is not usable as a file name")));
    }
    Ok(())
}

/// Configured agents followed by `population` generated ones
/// (`agent0000`, ...), each drawing home and workplace from its own seed.
pub fn resolve_agents(cfg: &ExperimentConfig, city: &City) -> Result<Vec<Agent>> {
    let mut agents = cfg.agents.clone();
    if cfg.population > 0 {
        let homes: Vec<&str> = city.buildings_of_type(BuildingType::Home).map(|(_, b)| b.id.as_str()).collect();
        let works: Vec<&str> = city.buildings_of_type(BuildingType::Work).map(|(_, b)| b.id.as_str()).collect();
        if homes.is_empty() || works.is_empty() {
            return Err(Error::invalid("population needs at least one home and one workplace"));
        }
        for i in 0..cfg.population {
            let id = format!("agent{i:04}");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_labeled(cfg.seed, &id, "population"));
            let home = homes.choose(&mut rng).expect("non-empty");
            let work = works.choose(&mut rng).expect("non-empty");
            agents.push(Agent::new(id, *home, *work));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for a in &agents {
        check_id(&a.id)?;
        if !seen.insert(a.id.clone()) {
            return Err(Error::Conflict(format!("duplicate agent id {}", a.id)));
        }
        a.validate(city)?;
    }
    Ok(agents)
}

type AgentFiles = Vec<(String, Vec<u8>)>;

fn simulate_agent(cfg: &ExperimentConfig, world: &World, agent: &Agent, start: i64, end: i64) -> Result<AgentFiles> {
    let clock = cfg.clock();
    let mut sim = SimulatedAgent::new(agent.clone());
    sim.generate_diary(world, &cfg.epr, &cfg.schedule, clock, start, end, &mut stage_rng(cfg.seed, &agent.id, Stage::Diary))?;
    sim.generate_trajectory(world, &cfg.motion, None, &mut stage_rng(cfg.seed, &agent.id, Stage::Trajectory))?;
    sim.sample_traj_hier_nhpp(&cfg.pings, &cfg.noise, derive_seed(cfg.seed, &agent.id, Stage::Pings), false)?;
    let id = &agent.id;
    Ok(vec![
        (format!("{id}_destination_diary.csv"), io::diary_csv(sim.destination_diary.as_ref().unwrap(), &clock)?),
        (format!("{id}_diary.csv"), io::diary_csv(sim.realized_diary.as_ref().unwrap(), &clock)?),
        (format!("{id}_trajectory.csv"), io::trajectory_csv(sim.trajectory.as_ref().unwrap(), &clock)?),
        (format!("{id}_sparse.csv"), io::sparse_csv(sim.sparse.as_ref().unwrap(), &clock)?),
    ])
}

/// Simulate every agent over `days` and write diaries, trajectories, sparse
/// pings, the city and `manifest.json` into `out`.
pub fn generate_population_dataset(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    let city = cfg.city.build(None)?;
    let mut resolved = cfg.clone();
    resolved.city = super::config::CityConfig { record: Some(city.to_record()), ..Default::default() };
    let world = World::new(city)?;
    let agents = resolve_agents(&resolved, &world.city)?;
    let start = resolved.start_unix()?;
    let end = start + resolved.days as i64 * 86_400;

    let outputs: Vec<AgentFiles> = super::with_jobs(jobs, || {
        agents.par_iter().map(|a| simulate_agent(&resolved, &world, a, start, end)).collect::<Result<Vec<_>>>()
    })??;

    ensure_dir(out)?;
    let mut digests = Vec::new();
    let city_json = world.city.to_json();
    io::save(out.join("city.json"), city_json.as_bytes())?;
    digests.push(FileDigest { path: "city.json".into(), sha256: sha256_hex(city_json.as_bytes()) });
    let mut manifest_agents = Vec::new();
    for (agent, files) in agents.iter().zip(outputs) {
        let mut names = Vec::new();
        for (name, bytes) in files {
            io::save(out.join(&name), &bytes)?;
            digests.push(FileDigest { path: name.clone(), sha256: sha256_hex(&bytes) });
            names.push(name);
        }
        manifest_agents.push(ManifestAgent {
            id: agent.id.clone(),
            home: agent.home.clone(),
            workplace: agent.workplace.clone(),
            seeds: Stage::ALL.iter().map(|&s| (s.as_str().to_string(), derive_seed(resolved.seed, &agent.id, s))).collect(),
            files: names,
        });
    }
    let manifest = DatasetManifest {
        config_hash: resolved.hash(),
        master_seed: resolved.seed,
        config: resolved,
        agents: manifest_agents,
        files: digests,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    io::save(out.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}

/// Regenerate a dataset from its manifest into `out` and list the files
/// whose digest differs from the manifest (empty when identical).
pub fn replay_dataset(manifest_path: &Path, out: &Path, jobs: usize) -> Result<Vec<String>> {
    let manifest = DatasetManifest::load(manifest_path)?;
    if manifest.config.hash() != manifest.config_hash {
        return Err(Error::Precondition("manifest config does not match its hash".into()));
    }
    let fresh = generate_population_dataset(&manifest.config, out, jobs)?;
    let old: BTreeMap<_, _> = manifest.files.iter().map(|f| (&f.path, &f.sha256)).collect();
    let new: BTreeMap<_, _> = fresh.files.iter().map(|f| (&f.path, &f.sha256)).collect();
    let mut mismatched: Vec<String> = old
        .iter()
        .filter(|(p, d)| new.get(*p) != Some(*d))
        .map(|(p, _)| p.to_string())
        .collect();
    mismatched.extend(new.keys().filter(|p| !old.contains_key(*p)).map(|p| p.to_string()));
    Ok(mismatched)
}
