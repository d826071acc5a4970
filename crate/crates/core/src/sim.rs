//! Per-agent pipeline state: destination diary, ground truth, sparse pings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::Agent;
use crate::city::City;
use crate::diary::{generate_destination_diary, Diary, DiaryContext, DiaryDiagnostics};
use crate::epr::EprParams;
use crate::error::{Error, Result};
use crate::pings::{sample_hierarchical, BurstSchedule, NhppParams, NoiseParams, SparseTrajectory};
use crate::schedule::CircadianSchedule;
use crate::street::{DoorDistances, StreetGraph};
use crate::time::Clock;
use crate::trajectory::{generate_trajectory, MotionConfig, MotionDiagnostics, Trajectory};

/// A city with its street graph and door-to-door distances.
#[derive(Debug, Clone)]
pub struct World {
    pub city: City,
    pub graph: StreetGraph,
    pub distances: DoorDistances,
}

impl World {
    pub fn new(city: City) -> Result<Self> {
        let graph = StreetGraph::build(&city)?;
        let distances = DoorDistances::new(&city, &graph)?;
        Ok(World { city, graph, distances })
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedAgent {
    pub agent: Agent,
    pub destination_diary: Option<Diary>,
    pub trajectory: Option<Trajectory>,
    pub realized_diary: Option<Diary>,
    pub sparse: Option<SparseTrajectory>,
    pub bursts: Option<BurstSchedule>,
    pub diary_diagnostics: DiaryDiagnostics,
    pub motion_diagnostics: MotionDiagnostics,
    /// Pings lost to flooring in the last sparsification.
    pub collapsed_pings: usize,
}

impl SimulatedAgent {
    pub fn new(agent: Agent) -> Self {
        SimulatedAgent {
            agent,
            destination_diary: None,
            trajectory: None,
            realized_diary: None,
            sparse: None,
            bursts: None,
            diary_diagnostics: DiaryDiagnostics::default(),
            motion_diagnostics: MotionDiagnostics::default(),
            collapsed_pings: 0,
        }
    }

    /// Use a hand-written plan instead of sampling one.
    pub fn set_destination_diary(&mut self, diary: Diary) {
        self.destination_diary = Some(diary);
        self.trajectory = None;
        self.realized_diary = None;
        self.sparse = None;
        self.bursts = None;
    }

    #[allow(clippy::too_many_arguments)]
    pub fn generate_diary<R: Rng + ?Sized>(
        &mut self,
        world: &World,
        params: &EprParams,
        schedule: &CircadianSchedule,
        clock: Clock,
        start_unix: i64,
        end_unix: i64,
        rng: &mut R,
    ) -> Result<&Diary> {
        let ctx = DiaryContext { city: &world.city, distances: &world.distances, params, schedule, clock };
        let (diary, diag) = generate_destination_diary(&self.agent, start_unix, end_unix, &ctx, rng)?;
        self.set_destination_diary(diary);
        self.diary_diagnostics = diag;
        Ok(self.destination_diary.as_ref().unwrap())
    }

    pub fn generate_trajectory<R: Rng + ?Sized>(
        &mut self,
        world: &World,
        motion: &MotionConfig,
        start_position: Option<(f64, f64)>,
        rng: &mut R,
    ) -> Result<&Trajectory> {
        let plan = self
            .destination_diary
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("agent {} has no destination diary", self.agent.id)))?;
        let (traj, realized, diag) =
            generate_trajectory(&self.agent, plan, &world.city, &world.graph, motion, start_position, rng)?;
        self.trajectory = Some(traj);
        self.realized_diary = Some(realized);
        self.motion_diagnostics = diag;
        self.sparse = None;
        self.bursts = None;
        Ok(self.trajectory.as_ref().unwrap())
    }

    /// Bursts, pings and noise from a dedicated seed. The burst schedule is
    /// kept when `output_bursts` is set.
    pub fn sample_traj_hier_nhpp(
        &mut self,
        params: &NhppParams,
        noise: &NoiseParams,
        seed: u64,
        output_bursts: bool,
    ) -> Result<&SparseTrajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with_rng(params, noise, output_bursts, &mut rng)
    }

    pub fn sample_with_rng<R: Rng + ?Sized>(
        &mut self,
        params: &NhppParams,
        noise: &NoiseParams,
        output_bursts: bool,
        rng: &mut R,
    ) -> Result<&SparseTrajectory> {
        let traj = self
            .trajectory
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("agent {} has no trajectory", self.agent.id)))?;
        let sample = sample_hierarchical(traj, params, noise, rng)?;
        self.collapsed_pings = sample.collapsed;
        self.bursts = output_bursts.then_some(sample.bursts);
        self.sparse = Some(sample.sparse);
        Ok(self.sparse.as_ref().unwrap())
    }
}
