//! Two agents roam the park for the same stay with different movement and
//! GPS noise; Lachesis should see one stop for the calm agent and
//! fragments for the restless one.

use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Record, RunReport};
use super::{emit, ensure_dir};
use crate::agent::Agent;
use crate::city::BuildingType;
use crate::detect::{lachesis, Stop};
use crate::diary::Diary;
use crate::error::{Error, Result};
use crate::io;
use crate::pings::{NoiseParams, SparseTrajectory};
use crate::seed::{replicate_key, stage_rng, Stage};
use crate::sim::{SimulatedAgent, World};

/// Share of `[start, end)` covered by the longest-overlapping stop.
pub fn largest_coverage(stops: &[Stop], start: i64, end: i64) -> f64 {
    let best = stops.iter().map(|s| (s.end.min(end) - s.start.max(start)).max(0)).max().unwrap_or(0);
    best as f64 / (end - start) as f64
}

struct Outcome {
    records: Vec<Record>,
    tables: Vec<(SimulatedAgent, SparseTrajectory, Vec<Stop>)>,
}

pub fn run_example2(cfg: &ExperimentConfig, out: Option<&Path>, jobs: usize) -> Result<RunReport> {
    cfg.validate()?;
    let ex = &cfg.example2;
    if ex.agents.len() != 2 {
        return Err(Error::invalid(format!("example2 needs two agents, got {}", ex.agents.len())));
    }
    if ex.stay_minutes == 0 {
        return Err(Error::invalid("stay must be positive"));
    }
    let world = World::new(cfg.city.build(None)?)?;
    let park = match &ex.park {
        Some(id) => {
            let idx = world.city.require(id)?;
            if world.city.building(idx).building_type != BuildingType::Park {
                return Err(Error::invalid(format!("{id} is not a park")));
            }
            id.clone()
        }
        None => world
            .city
            .buildings_of_type(BuildingType::Park)
            .next()
            .map(|(_, b)| b.id.clone())
            .ok_or_else(|| Error::invalid("city has no park"))?,
    };
    let start = cfg.start_unix()?;
    let end = start + ex.stay_minutes as i64 * 60;
    let plan = Diary::from_plan(start, &[(park.as_str(), ex.stay_minutes)]);
    let agents: Vec<(Agent, NoiseParams)> = ex
        .agents
        .iter()
        .map(|r| {
            (
                Agent::new(r.id.clone(), park.clone(), park.clone()).with_override(BuildingType::Park, r.sigma, r.still_prob),
                NoiseParams { ha: r.ha },
            )
        })
        .collect();

    let run_one = |i: usize| -> Result<Outcome> {
        let mut records = Vec::new();
        let mut tables = Vec::new();
        for (agent, noise) in &agents {
            let key = format!("{}/{}", agent.id, replicate_key(i));
            let mut sim = SimulatedAgent::new(agent.clone());
            sim.set_destination_diary(plan.clone());
            sim.generate_trajectory(&world, &cfg.motion, None, &mut stage_rng(cfg.seed, &key, Stage::Trajectory))?;
            let sparse = sim.sample_with_rng(&ex.pings, noise, false, &mut stage_rng(cfg.seed, &key, Stage::Pings))?.clone();
            let stops = lachesis(&sparse.pings, &ex.lachesis)?;
            let coverage = largest_coverage(&stops, start, end);
            records.push(
                Record::new(i, agent.id.clone())
                    .with("pings", sparse.len() as f64)
                    .with("stops", stops.len() as f64)
                    .with("largest_coverage", coverage)
                    .flag("single_covering", stops.len() == 1 && coverage >= ex.coverage)
                    .flag("fragmented", stops.len() > 1),
            );
            tables.push((sim, sparse, stops));
        }
        Ok(Outcome { records, tables })
    };

    let outcomes: Vec<Outcome> =
        super::with_jobs(jobs, || (0..ex.replicates).into_par_iter().map(run_one).collect::<Result<Vec<_>>>())??;
    let records = outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect();
    let mut report = RunReport::new("example2", cfg.hash(), records);
    let (calm, restless) = (&ex.agents[0].id, &ex.agents[1].id);
    report.compare(&format!("fragmented/{restless}_vs_{calm}"), "fragmented", restless, calm);

    if let Some(dir) = out {
        ensure_dir(dir)?;
        let clock = cfg.clock();
        let mut files = Vec::new();
        emit(dir, "destination_diary.csv", &io::diary_csv(&plan, &clock)?, &mut files)?;
        for (i, o) in outcomes.iter().take(ex.emit_replicates).enumerate() {
            for (sim, sparse, stops) in &o.tables {
                let tag = format!("{}_{}", sim.agent.id, replicate_key(i));
                emit(dir, &format!("{tag}_trajectory.csv"), &io::trajectory_csv(sim.trajectory.as_ref().unwrap(), &clock)?, &mut files)?;
                emit(dir, &format!("{tag}_sparse.csv"), &io::sparse_csv(sparse, &clock)?, &mut files)?;
                emit(dir, &format!("{tag}_stops.csv"), &io::stops_csv(stops, &clock)?, &mut files)?;
                let mut labels = vec![crate::detect::NOISE; sparse.len()];
                for (k, s) in stops.iter().enumerate() {
                    for &m in &s.members {
                        labels[m] = k as i32;
                    }
                }
                let labels = crate::detect::ClusterLabeling { labels };
                emit(dir, &format!("{tag}_labels.csv"), &io::labels_csv(sparse, &labels, &clock)?, &mut files)?;
            }
        }
        emit(dir, "records.csv", &report.records_csv()?, &mut files)?;
        emit(dir, "metrics.txt", report.metrics_text().as_bytes(), &mut files)?;
        files.push("report.json".into());
        report.files = files;
        io::save(dir.join("report.json"), report.to_json().as_bytes())?;
    }
    Ok(report)
}
