//! Two homes then a retail visit, sampled at two burstiness levels with the
//! same expected ping budget, clustered by temporal DBSCAN.

use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Record, RunReport};
use super::{emit, ensure_dir};
use crate::agent::Agent;
use crate::detect::{evaluate_against_diary, stops_from_labels, temporal_dbscan, Evaluation};
use crate::diary::Diary;
use crate::error::{Error, Result};
use crate::io;
use crate::pings::{Ping, SparseTrajectory};
use crate::seed::{replicate_key, stage_rng, Stage};
use crate::sim::{SimulatedAgent, World};

/// Ground-truth points as noiseless pings.
pub(crate) fn dense_pings(agent: &SimulatedAgent) -> Vec<Ping> {
    agent
        .trajectory
        .as_ref()
        .map(|t| t.points.iter().map(|p| Ping { unix_timestamp: p.unix_timestamp, x: p.x, y: p.y, ha: 0.0 }).collect())
        .unwrap_or_default()
}

fn eval_record(replicate: usize, group: String, pings: usize, e: &Evaluation) -> Record {
    use crate::detect::StopStatus::*;
    Record::new(replicate, group)
        .with("pings", pings as f64)
        .with("detected", e.detected as f64)
        .with("true_stops", e.true_stops as f64)
        .with("matched", e.count(Matched) as f64)
        .with("missed", e.count(Missed) as f64)
        .with("split", e.count(Split) as f64)
        .with("merged", e.count(Merged) as f64)
        .with("overlap_minutes", e.overlap_minutes)
        .flag("exact", e.is_exact())
}

struct Replicate {
    records: Vec<Record>,
    agent: SimulatedAgent,
    sparse: Vec<(SparseTrajectory, Option<crate::pings::BurstSchedule>)>,
}

/// Run the 2x2 design (sparsity regime x DBSCAN setting) over
/// `example1.replicates` seeds, plus the dense noiseless baseline. With
/// `out`, tables for the first `emit_replicates` seeds are written there.
pub fn run_example1(cfg: &ExperimentConfig, out: Option<&Path>, jobs: usize) -> Result<RunReport> {
    cfg.validate()?;
    let ex = &cfg.example1;
    if ex.regimes.len() < 2 || ex.parametrizations.len() < 2 {
        return Err(Error::invalid(format!(
            "example1 needs two sparsity regimes and two DBSCAN settings, got {} and {}",
            ex.regimes.len(),
            ex.parametrizations.len()
        )));
    }
    if ex.plan.is_empty() {
        return Err(Error::invalid("example1 plan is empty"));
    }
    let world = World::new(ex.city.build()?)?;
    let start = cfg.start_unix()?;
    let plan = Diary::from_plan(start, &ex.plan.iter().map(|s| (s.location.as_str(), s.minutes)).collect::<Vec<_>>());
    for s in &ex.plan {
        world.city.require(&s.location)?;
    }
    let first = &ex.plan[0].location;
    let agent = Agent::new(ex.agent.clone(), first.clone(), first.clone());

    let run_one = |i: usize| -> Result<Replicate> {
        let key = format!("{}/{}", ex.agent, replicate_key(i));
        let mut sim = SimulatedAgent::new(agent.clone());
        sim.set_destination_diary(plan.clone());
        sim.generate_trajectory(&world, &cfg.motion, None, &mut stage_rng(cfg.seed, &key, Stage::Trajectory))?;
        let realized = sim.realized_diary.clone().expect("trajectory sets realized diary");
        let mut records = Vec::new();

        let dense = dense_pings(&sim);
        for p in &ex.parametrizations {
            let labels = temporal_dbscan(&dense, &p.params)?;
            let e = evaluate_against_diary(&stops_from_labels(&dense, &labels), &realized, ex.tolerance_minutes);
            records.push(eval_record(i, format!("ground_truth/{}", p.name), dense.len(), &e));
        }

        let mut sparse = Vec::new();
        for r in &ex.regimes {
            let mut rng = stage_rng(cfg.seed, &format!("{key}/{}", r.name), Stage::Pings);
            let s = sim.sample_with_rng(&r.params, &ex.noise, true, &mut rng)?.clone();
            for p in &ex.parametrizations {
                let labels = temporal_dbscan(&s.pings, &p.params)?;
                let e = evaluate_against_diary(&stops_from_labels(&s.pings, &labels), &realized, ex.tolerance_minutes);
                records.push(eval_record(i, format!("{}/{}", r.name, p.name), s.len(), &e));
            }
            sparse.push((s, sim.bursts.clone()));
        }
        Ok(Replicate { records, agent: sim, sparse })
    };

    let replicates: Vec<Replicate> =
        super::with_jobs(jobs, || (0..ex.replicates).into_par_iter().map(run_one).collect::<Result<Vec<_>>>())??;

    let records = replicates.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let mut report = RunReport::new("example1", cfg.hash(), records);
    for p in &ex.parametrizations {
        let (a, b) = (&ex.regimes[0].name, &ex.regimes[1].name);
        report.compare(
            &format!("exact/{}/{a}_vs_{b}", p.name),
            "exact",
            &format!("{a}/{}", p.name),
            &format!("{b}/{}", p.name),
        );
    }

    if let Some(dir) = out {
        ensure_dir(dir)?;
        let clock = cfg.clock();
        let mut files = Vec::new();
        emit(dir, "city.json", world.city.to_json().as_bytes(), &mut files)?;
        emit(dir, "destination_diary.csv", &io::diary_csv(&plan, &clock)?, &mut files)?;
        for (i, rep) in replicates.iter().take(ex.emit_replicates).enumerate() {
            let tag = replicate_key(i);
            let sim = &rep.agent;
            emit(dir, &format!("{tag}_diary.csv"), &io::diary_csv(sim.realized_diary.as_ref().unwrap(), &clock)?, &mut files)?;
            emit(dir, &format!("{tag}_trajectory.csv"), &io::trajectory_csv(sim.trajectory.as_ref().unwrap(), &clock)?, &mut files)?;
            for (r, (s, bursts)) in ex.regimes.iter().zip(&rep.sparse) {
                emit(dir, &format!("{tag}_{}_sparse.csv", r.name), &io::sparse_csv(s, &clock)?, &mut files)?;
                if let Some(b) = bursts {
                    emit(dir, &format!("{tag}_{}_bursts.csv", r.name), &io::bursts_csv(b, start)?, &mut files)?;
                }
                for p in &ex.parametrizations {
                    let labels = temporal_dbscan(&s.pings, &p.params)?;
                    let stops = stops_from_labels(&s.pings, &labels);
                    emit(dir, &format!("{tag}_{}_{}_labels.csv", r.name, p.name), &io::labels_csv(s, &labels, &clock)?, &mut files)?;
                    emit(dir, &format!("{tag}_{}_{}_stops.csv", r.name, p.name), &io::stops_csv(&stops, &clock)?, &mut files)?;
                }
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
