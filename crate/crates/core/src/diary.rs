//! Mobility diaries: the planned destination diary sampled from the
//! circadian-constrained EPR process, and the realized diary produced by
//! trajectory simulation (which adds travel rows with no location).

use rand::seq::index::sample;
use rand::Rng;

use crate::agent::Agent;
use crate::city::City;
use crate::epr::{constrain_row, sample_index, unconstrained_transition_row, EprParams, VisitState};
use crate::error::{Error, Result};
use crate::schedule::CircadianSchedule;
use crate::street::DoorDistances;
use crate::time::{Clock, SECONDS_PER_MINUTE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiaryEntry {
    pub unix_timestamp: i64,
    /// Minutes.
    pub duration: u32,
    /// Building id; `None` while travelling.
    pub location: Option<String>,
}

impl DiaryEntry {
    pub fn stop(unix_timestamp: i64, duration: u32, location: impl Into<String>) -> Self {
        DiaryEntry { unix_timestamp, duration, location: Some(location.into()) }
    }

    pub fn travel(unix_timestamp: i64, duration: u32) -> Self {
        DiaryEntry { unix_timestamp, duration, location: None }
    }

    pub fn end(&self) -> i64 {
        self.unix_timestamp + self.duration as i64 * SECONDS_PER_MINUTE
    }
}

/// Time-contiguous table of stays (and, for realized diaries, travels).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Diary {
    pub entries: Vec<DiaryEntry>,
}

impl Diary {
    pub fn new(entries: Vec<DiaryEntry>) -> Self {
        Diary { entries }
    }

    /// Build a plan of consecutive stays from `(location, minutes)` pairs.
    pub fn from_plan<S: AsRef<str>>(start_unix: i64, plan: &[(S, u32)]) -> Self {
        let mut t = start_unix;
        let entries = plan
            .iter()
            .map(|(loc, minutes)| {
                let e = DiaryEntry::stop(t, *minutes, loc.as_ref());
                t = e.end();
                e
            })
            .collect();
        Diary { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn start(&self) -> Option<i64> {
        self.entries.first().map(|e| e.unix_timestamp)
    }

    pub fn end(&self) -> Option<i64> {
        self.entries.last().map(|e| e.end())
    }

    pub fn total_minutes(&self) -> u64 {
        self.entries.iter().map(|e| e.duration as u64).sum()
    }

    /// Stops only (rows with a location).
    pub fn stops(&self) -> impl Iterator<Item = &DiaryEntry> {
        self.entries.iter().filter(|e| e.location.is_some())
    }

    pub fn check_contiguous(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            if w[0].end() != w[1].unix_timestamp {
                return Err(Error::invalid(format!(
                    "diary rows are not contiguous: row at {} ends at {} but next starts at {}",
                    w[0].unix_timestamp,
                    w[0].end(),
                    w[1].unix_timestamp
                )));
            }
        }
        Ok(())
    }

    /// Location planned for the minute starting at `unix`.
    pub fn location_at(&self, unix: i64) -> Option<&DiaryEntry> {
        let i = self.entries.partition_point(|e| e.end() <= unix);
        self.entries.get(i).filter(|e| e.unix_timestamp <= unix)
    }
}

/// Merge maximal runs of rows with the same location, summing durations.
pub fn condense_destinations(diary: &Diary) -> Result<Diary> {
    diary.check_contiguous()?;
    let mut out: Vec<DiaryEntry> = Vec::with_capacity(diary.len());
    for e in &diary.entries {
        match out.last_mut() {
            Some(last) if last.location == e.location => last.duration += e.duration,
            _ => out.push(e.clone()),
        }
    }
    Ok(Diary::new(out))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiaryDiagnostics {
    pub steps: u64,
    /// Steps where no allowed building carried mass and the agent stayed put.
    pub forced_stays: u64,
}

/// Initial visit counts for `agent`, drawing the extra seeded buildings
/// from `rng`.
pub fn initial_visit_state<R: Rng + ?Sized>(
    agent: &Agent,
    city: &City,
    params: &EprParams,
    rng: &mut R,
) -> Result<VisitState> {
    let n = city.buildings().len();
    let home = city.require(&agent.home)?;
    let work = city.require(&agent.workplace)?;
    let start = city.require(agent.start())?;
    let mut counts = vec![0u64; n];
    counts[home] += params.initial_counts.home;
    counts[work] += params.initial_counts.work;
    let others: Vec<usize> = (0..n).filter(|&l| l != home && l != work).collect();
    let picks = params.initial_counts.random_others.min(others.len());
    for i in sample(rng, others.len(), picks).into_iter() {
        counts[others[i]] = counts[others[i]].max(1);
    }
    counts[start] = counts[start].max(1);
    Ok(VisitState::new(start, counts))
}

/// Everything the diary sampler needs besides the agent and the RNG.
#[derive(Debug, Clone, Copy)]
pub struct DiaryContext<'a> {
    pub city: &'a City,
    pub distances: &'a DoorDistances,
    pub params: &'a EprParams,
    pub schedule: &'a CircadianSchedule,
    pub clock: Clock,
}

/// Sample a destination diary on `[start_unix, end_unix)`, one EPR step per
/// `delta_minutes`, then condense. The horizon is rounded down to a whole
/// number of steps.
pub fn generate_destination_diary<R: Rng + ?Sized>(
    agent: &Agent,
    start_unix: i64,
    end_unix: i64,
    ctx: &DiaryContext<'_>,
    rng: &mut R,
) -> Result<(Diary, DiaryDiagnostics)> {
    if ctx.city.buildings().is_empty() {
        return Err(Error::invalid("city has no buildings"));
    }
    ctx.params.validate()?;
    agent.validate(ctx.city)?;
    let mut state = initial_visit_state(agent, ctx.city, ctx.params, rng)?;
    generate_from_state(&mut state, start_unix, end_unix, ctx, rng)
}

/// Diary sampler starting from an explicit visit state.
pub fn generate_from_state<R: Rng + ?Sized>(
    state: &mut VisitState,
    start_unix: i64,
    end_unix: i64,
    ctx: &DiaryContext<'_>,
    rng: &mut R,
) -> Result<(Diary, DiaryDiagnostics)> {
    let step_seconds = ctx.params.delta_minutes as i64 * SECONDS_PER_MINUTE;
    if end_unix < start_unix {
        return Err(Error::invalid("diary end precedes start"));
    }
    let steps = (end_unix - start_unix) / step_seconds;
    let types: Vec<_> = ctx.city.buildings().iter().map(|b| b.building_type).collect();
    let mut diag = DiaryDiagnostics::default();
    let mut raw = Vec::with_capacity(steps as usize);

    for step in 0..steps {
        let t = start_unix + step * step_seconds;
        raw.push(DiaryEntry::stop(
            t,
            ctx.params.delta_minutes,
            ctx.city.building(state.current).id.clone(),
        ));
        if step + 1 == steps {
            break;
        }
        let next_t = t + step_seconds;
        let allowed = ctx.schedule.allowed_types(ctx.clock.minute_of_day(next_t));
        let row = unconstrained_transition_row(state, ctx.params, &types, ctx.distances);
        let constrained = constrain_row(&row, allowed, &types, state.current);
        diag.steps += 1;
        if constrained.forced_stay {
            diag.forced_stays += 1;
        }
        let next = sample_index(&constrained.row, rng);
        state.move_to(next);
    }
    Ok((condense_destinations(&Diary::new(raw))?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::{BuildingSpec, BuildingType, Footprint};
    use crate::layout::{generate_garden_layout, GardenSpec};
    use crate::schedule::ScheduleWindow;
    use crate::street::StreetGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const T0: i64 = 1704067200;

    #[test]
    fn condense_run_length() {
        let d = Diary::from_plan(T0, &[("h", 15), ("h", 15), ("r", 15), ("r", 15), ("r", 15), ("h", 15)]);
        let c = condense_destinations(&d).unwrap();
        let got: Vec<_> = c.entries.iter().map(|e| (e.location.clone().unwrap(), e.duration)).collect();
        assert_eq!(got, vec![("h".into(), 30), ("r".into(), 45), ("h".into(), 15)]);
        assert_eq!(c.entries[1].unix_timestamp, T0 + 30 * 60);
    }

    #[test]
    fn condense_custom_plan() {
        let mut plan = Vec::new();
        plan.extend(std::iter::repeat_n(("h-x8-y13", 15), 2));
        plan.extend(std::iter::repeat_n(("r-x12-y3", 15), 4));
        plan.extend(std::iter::repeat_n(("w-x15-y15", 15), 12));
        plan.extend(std::iter::repeat_n(("h-x8-y13", 15), 4));
        let c = condense_destinations(&Diary::from_plan(T0, &plan)).unwrap();
        let got: Vec<_> = c.entries.iter().map(|e| (e.location.as_deref().unwrap(), e.duration)).collect();
        assert_eq!(got, vec![("h-x8-y13", 30), ("r-x12-y3", 60), ("w-x15-y15", 180), ("h-x8-y13", 60)]);
        assert_eq!(c.total_minutes(), 22 * 15);
    }

    #[test]
    fn condense_single_and_gap() {
        let d = Diary::from_plan(T0, &[("h", 15)]);
        assert_eq!(condense_destinations(&d).unwrap(), d);
        let mut gap = Diary::from_plan(T0, &[("h", 15), ("r", 15)]);
        gap.entries[1].unix_timestamp += 60;
        assert!(matches!(condense_destinations(&gap), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn home_only_schedule_is_absorbing() {
        let mut city = City::new(8, 4).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Home, (1, 0), Footprint::bbox(1, 1, 3, 2))).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Work, (5, 0), Footprint::bbox(5, 1, 7, 2))).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Park, (4, 3), Footprint::bbox(3, 2, 5, 3))).unwrap();
        let g = StreetGraph::build(&city).unwrap();
        let d = DoorDistances::new(&city, &g).unwrap();
        let schedule = CircadianSchedule::new(vec![ScheduleWindow::new(0, 0, &[BuildingType::Home])]).unwrap();
        let params = EprParams::default();
        let ctx = DiaryContext { city: &city, distances: &d, params: &params, schedule: &schedule, clock: Clock::default() };
        let agent = Agent::new("a", "h-x1-y0", "w-x5-y0");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (diary, diag) = generate_destination_diary(&agent, T0, T0 + 86400 + 600, &ctx, &mut rng).unwrap();
        assert_eq!(diary.len(), 1);
        assert_eq!(diary.entries[0].duration, 1440);
        assert_eq!(diary.entries[0].location.as_deref(), Some("h-x1-y0"));
        assert_eq!(diag.forced_stays, 0);
    }

    #[test]
    fn default_schedule_is_respected_and_deterministic() {
        let city = generate_garden_layout(&GardenSpec::default()).unwrap();
        let g = StreetGraph::build(&city).unwrap();
        let d = DoorDistances::new(&city, &g).unwrap();
        let schedule = CircadianSchedule::default();
        let params = EprParams::default();
        let clock = Clock::default();
        let ctx = DiaryContext { city: &city, distances: &d, params: &params, schedule: &schedule, clock };
        let home = city.buildings_of_type(BuildingType::Home).next().unwrap().1.id.clone();
        let work = city.buildings_of_type(BuildingType::Work).next().unwrap().1.id.clone();
        let agent = Agent::new("Bob", home, work);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            generate_destination_diary(&agent, T0, T0 + 7 * 86400, &ctx, &mut rng).unwrap()
        };
        let (diary, diag) = run(7);
        assert_eq!(run(7).0, diary);
        assert_eq!(diary.total_minutes(), 7 * 1440);
        diary.check_contiguous().unwrap();
        assert_eq!(diag.forced_stays, 0);
        let mut saw_work = false;
        for e in &diary.entries {
            let b = city.get(e.location.as_deref().unwrap()).unwrap();
            saw_work |= b.building_type == BuildingType::Work;
            // Every 15-minute step inside the row must allow its type.
            for k in 0..(e.duration / 15) as i64 {
                let minute = clock.minute_of_day(e.unix_timestamp + k * 900);
                if e.unix_timestamp + k * 900 == T0 {
                    continue;
                }
                assert!(schedule.allowed_types(minute).contains(b.building_type), "{} at {minute}", b.id);
            }
        }
        assert!(saw_work);
    }

    #[test]
    fn counts_increment_once_per_arrival() {
        let mut state = VisitState::new(0, vec![1, 0, 2]);
        state.move_to(0);
        assert_eq!(state.counts, vec![1, 0, 2]);
        state.move_to(1);
        state.move_to(1);
        assert_eq!(state.counts, vec![1, 1, 2]);
    }

    #[test]
    fn location_lookup() {
        let d = Diary::from_plan(T0, &[("a", 30), ("b", 15)]);
        assert_eq!(d.location_at(T0 + 29 * 60).unwrap().location.as_deref(), Some("a"));
        assert_eq!(d.location_at(T0 + 30 * 60).unwrap().location.as_deref(), Some("b"));
        assert!(d.location_at(T0 + 45 * 60).is_none());
        assert!(d.location_at(T0 - 60).is_none());
    }
}
