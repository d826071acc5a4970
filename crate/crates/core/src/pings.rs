//! Bursty ping sampling.
//!
//! Burst starts form a Poisson process with mean gap `beta_start`. Each burst
//! lasts `Exp(beta_duration)` minutes, truncated at the next start and the
//! horizon. Inside a burst pings arrive with mean gap `beta_ping`. Ping times
//! are floored to the trajectory grid and observed positions get isotropic
//! Gaussian noise with per-axis standard deviation `ha / 1.96`.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::SECONDS_PER_MINUTE;
use crate::trajectory::Trajectory;

/// z-score of a two-sided 95% interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NhppParams {
    /// Mean minutes between burst starts.
    pub beta_start: f64,
    /// Mean burst duration, minutes.
    pub beta_duration: f64,
    /// Mean minutes between pings inside a burst.
    pub beta_ping: f64,
}

impl NhppParams {
    pub fn new(beta_start: f64, beta_duration: f64, beta_ping: f64) -> Result<Self> {
        let p = NhppParams { beta_start, beta_duration, beta_ping };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_start", self.beta_start),
            ("beta_duration", self.beta_duration),
            ("beta_ping", self.beta_ping),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn exp_with_mean(mean: f64) -> Exp<f64> {
    Exp::new(1.0 / mean).expect("positive rate")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// Minutes from the trajectory start.
    pub start: f64,
    pub end: f64,
    /// Duration drawn before truncation.
    pub sampled_duration: f64,
}

impl Burst {
    pub fn is_truncated(&self) -> bool {
        self.end < self.start + self.sampled_duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstSchedule {
    pub bursts: Vec<Burst>,
    /// Minutes.
    pub horizon: f64,
}

impl BurstSchedule {
    pub fn validate(&self) -> Result<()> {
        let mut prev_start = f64::NEG_INFINITY;
        for (i, b) in self.bursts.iter().enumerate() {
            let next = self.bursts.get(i + 1).map_or(self.horizon, |n| n.start);
            if !(b.start > prev_start && b.start >= 0.0 && b.start < self.horizon) {
                return Err(Error::invalid(format!("burst {i} start {} out of order or range", b.start)));
            }
            if !(b.start <= b.end && b.end <= next && b.end <= self.horizon) {
                return Err(Error::invalid(format!("burst {i} end {} violates truncation", b.end)));
            }
            prev_start = b.start;
        }
        Ok(())
    }
}

/// Burst starts on `[0, horizon)` with their truncated ends.
pub fn sample_bursts<R: Rng + ?Sized>(params: &NhppParams, horizon: f64, rng: &mut R) -> Result<BurstSchedule> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let gaps = exp_with_mean(params.beta_start);
    let durations = exp_with_mean(params.beta_duration);
    let mut starts = Vec::new();
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t >= horizon {
            break;
        }
        starts.push(t);
    }
    let bursts = starts
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let d = durations.sample(rng);
            let cap = starts.get(i + 1).copied().unwrap_or(horizon).min(horizon);
            Burst { start: s, end: (s + d).min(cap), sampled_duration: d }
        })
        .collect();
    Ok(BurstSchedule { bursts, horizon })
}

/// Continuous ping times inside one burst: cumulative `Exp(beta_ping)` gaps
/// from the burst start while they stay at or before the end.
pub fn burst_ping_times<R: Rng + ?Sized>(burst: &Burst, beta_ping: f64, rng: &mut R) -> Vec<f64> {
    let gaps = exp_with_mean(beta_ping);
    let mut out = Vec::new();
    let mut t = burst.start;
    loop {
        t += gaps.sample(rng);
        if t > burst.end {
            return out;
        }
        out.push(t);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PingTimes {
    /// Minute offsets from the trajectory start, strictly increasing.
    pub minutes: Vec<u64>,
    /// Continuous pings dropped because they floored onto an earlier ping.
    pub collapsed: usize,
}

/// Ping minutes for a schedule, floored onto a grid of `step_minutes`.
pub fn sample_ping_times_on_grid<R: Rng + ?Sized>(
    schedule: &BurstSchedule,
    beta_ping: f64,
    step_minutes: u32,
    rng: &mut R,
) -> Result<PingTimes> {
    if !(beta_ping > 0.0 && beta_ping.is_finite()) {
        return Err(Error::invalid(format!("beta_ping must be positive, got {beta_ping}")));
    }
    if step_minutes == 0 {
        return Err(Error::invalid("grid step must be positive"));
    }
    schedule.validate()?;
    let step = step_minutes as f64;
    let mut out = PingTimes::default();
    for burst in &schedule.bursts {
        for t in burst_ping_times(burst, beta_ping, rng) {
            let m = ((t / step).floor() * step) as u64;
            if m as f64 >= schedule.horizon {
                continue;
            }
            if out.minutes.last().is_some_and(|&last| last >= m) {
                out.collapsed += 1;
            } else {
                out.minutes.push(m);
            }
        }
    }
    Ok(out)
}

/// Ping minutes on the one-minute grid.
pub fn sample_ping_times<R: Rng + ?Sized>(schedule: &BurstSchedule, beta_ping: f64, rng: &mut R) -> Result<PingTimes> {
    sample_ping_times_on_grid(schedule, beta_ping, 1, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Horizontal accuracy, blocks. Zero disables noise.
    pub ha: f64,
}

impl NoiseParams {
    pub fn new(ha: f64) -> Result<Self> {
        let n = NoiseParams { ha };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ha >= 0.0 && self.ha.is_finite()) {
            return Err(Error::invalid(format!("ha must be non-negative, got {}", self.ha)));
        }
        Ok(())
    }

    pub fn sigma_gps(&self) -> f64 {
        self.ha / Z95
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { ha: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ping {
    pub unix_timestamp: i64,
    pub x: f64,
    pub y: f64,
    pub ha: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseTrajectory {
    pub identifier: String,
    pub pings: Vec<Ping>,
}

impl SparseTrajectory {
    pub fn len(&self) -> usize {
        self.pings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pings.is_empty()
    }
}

/// Observe `trajectory` at `minutes` (offsets from its start) with noise.
/// `ha_override`, when given, supplies one accuracy per ping.
pub fn sparsify<R: Rng + ?Sized>(
    trajectory: &Trajectory,
    minutes: &[u64],
    noise: &NoiseParams,
    ha_override: Option<&[f64]>,
    rng: &mut R,
) -> Result<SparseTrajectory> {
    noise.validate()?;
    if let Some(has) = ha_override {
        if has.len() != minutes.len() {
            return Err(Error::invalid(format!(
                "{} accuracies given for {} pings",
                has.len(),
                minutes.len()
            )));
        }
        if let Some(bad) = has.iter().find(|h| !(**h >= 0.0 && h.is_finite())) {
            return Err(Error::invalid(format!("ha must be non-negative, got {bad}")));
        }
    }
    let Some(start) = trajectory.start() else {
        if minutes.is_empty() {
            return Ok(SparseTrajectory { identifier: trajectory.identifier.clone(), pings: vec![] });
        }
        return Err(Error::invalid("cannot sample pings from an empty trajectory"));
    };
    let mut pings = Vec::with_capacity(minutes.len());
    for (i, &m) in minutes.iter().enumerate() {
        let unix = start + m as i64 * SECONDS_PER_MINUTE;
        let p = trajectory.at(unix).ok_or_else(|| {
            Error::invalid(format!("ping at minute {m} is outside the trajectory grid"))
        })?;
        if pings.last().is_some_and(|q: &Ping| q.unix_timestamp >= unix) {
            return Err(Error::invalid("ping times must be strictly increasing"));
        }
        let ha = ha_override.map_or(noise.ha, |h| h[i]);
        let sigma = ha / Z95;
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        pings.push(Ping { unix_timestamp: unix, x: p.x + sigma * ex, y: p.y + sigma * ey, ha });
    }
    Ok(SparseTrajectory { identifier: trajectory.identifier.clone(), pings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSample {
    pub sparse: SparseTrajectory,
    pub bursts: BurstSchedule,
    pub collapsed: usize,
}

/// Bursts, ping times and noise in one go, over the trajectory's horizon.
pub fn sample_hierarchical<R: Rng + ?Sized>(
    trajectory: &Trajectory,
    params: &NhppParams,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<SparseSample> {
    let horizon = trajectory.points.len() as f64 * trajectory.dt_minutes as f64;
    if horizon == 0.0 {
        return Err(Error::Precondition("trajectory is empty".into()));
    }
    let bursts = sample_bursts(params, horizon, rng)?;
    let times = sample_ping_times_on_grid(&bursts, params.beta_ping, trajectory.dt_minutes, rng)?;
    let sparse = sparsify(trajectory, &times.minutes, noise, None, rng)?;
    Ok(SparseSample { sparse, bursts, collapsed: times.collapsed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectoryPoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn still_trajectory(minutes: usize) -> Trajectory {
        Trajectory {
            identifier: "Bob".into(),
            dt_minutes: 1,
            points: (0..minutes)
                .map(|i| TrajectoryPoint { unix_timestamp: 1704067200 + 60 * i as i64, x: 3.5, y: 4.5, building: Some(0) })
                .collect(),
        }
    }

    #[test]
    fn huge_gap_means_no_bursts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = NhppParams::new(1440.0 * 1e6, 60.0, 10.0).unwrap();
        for _ in 0..100 {
            assert!(sample_bursts(&p, 1440.0, &mut rng).unwrap().bursts.is_empty());
        }
    }

    #[test]
    fn mean_burst_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = NhppParams::new(300.0, 60.0, 10.0).unwrap();
        let n = 10_000;
        let total: usize = (0..n).map(|_| sample_bursts(&p, 1440.0, &mut rng).unwrap().bursts.len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean / 4.8 - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn long_bursts_are_truncated_at_next_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = NhppParams::new(10.0, 1e6, 5.0).unwrap();
        let s = sample_bursts(&p, 1440.0, &mut rng).unwrap();
        s.validate().unwrap();
        for w in s.bursts.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(s.bursts.last().unwrap().end, 1440.0);
    }

    #[test]
    fn empty_schedule_has_no_pings() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = BurstSchedule { bursts: vec![], horizon: 60.0 };
        assert!(sample_ping_times(&s, 1.0, &mut rng).unwrap().minutes.is_empty());
    }

    #[test]
    fn one_hour_burst_ping_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = Burst { start: 0.0, end: 60.0, sampled_duration: 60.0 };
        let n = 10_000;
        let total: usize = (0..n).map(|_| burst_ping_times(&b, 10.0, &mut rng).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean / 6.0 - 1.0).abs() < 0.05, "mean {mean}");
        // Flooring with beta = 10 rarely collapses, so the floored count tracks it.
        let s = BurstSchedule { bursts: vec![b], horizon: 60.0 };
        let floored: usize = (0..n).map(|_| sample_ping_times(&s, 10.0, &mut rng).unwrap().minutes.len()).sum();
        assert!((floored as f64 / n as f64 / 6.0 - 1.0).abs() < 0.08);
    }

    #[test]
    fn ping_times_are_unique_sorted_and_inside_bursts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = NhppParams::new(20.0, 30.0, 0.3).unwrap();
        for _ in 0..50 {
            let s = sample_bursts(&p, 300.0, &mut rng).unwrap();
            let t = sample_ping_times(&s, p.beta_ping, &mut rng).unwrap();
            assert!(t.minutes.windows(2).all(|w| w[0] < w[1]));
            for &m in &t.minutes {
                // The floored minute lies within one minute of some burst.
                let m = m as f64;
                assert!(s.bursts.iter().any(|b| m + 1.0 > b.start && m <= b.end));
                assert!(m < 300.0);
            }
        }
    }

    #[test]
    fn zero_accuracy_is_exact() {
        let traj = still_trajectory(30);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sparsify(&traj, &[0, 5, 29], &NoiseParams::new(0.0).unwrap(), None, &mut rng).unwrap();
        assert!(s.pings.iter().all(|p| p.x == 3.5 && p.y == 4.5 && p.ha == 0.0));
        assert_eq!(s.pings[2].unix_timestamp, 1704067200 + 29 * 60);
    }

    #[test]
    fn ping_outside_grid_is_rejected() {
        let traj = still_trajectory(30);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(matches!(
            sparsify(&traj, &[30], &NoiseParams::default(), None, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn per_ping_accuracy_override() {
        let traj = still_trajectory(10);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sparsify(&traj, &[1, 2], &NoiseParams::default(), Some(&[0.0, 2.0]), &mut rng).unwrap();
        assert_eq!((s.pings[0].x, s.pings[0].ha), (3.5, 0.0));
        assert_eq!(s.pings[1].ha, 2.0);
        assert!(sparsify(&traj, &[1, 2], &NoiseParams::default(), Some(&[1.0]), &mut rng).is_err());
    }

    #[test]
    fn noise_moments() {
        let traj = still_trajectory(1);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let noise = NoiseParams::new(0.75).unwrap();
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let s = sparsify(&traj, &[0], &noise, None, &mut rng).unwrap();
            xs.push(s.pings[0].x - 3.5);
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma2 = noise.sigma_gps().powi(2);
        assert!(mean.abs() < 3.0 * (sigma2 / n as f64).sqrt());
        assert!((var / sigma2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn hierarchical_is_deterministic() {
        let traj = still_trajectory(1440);
        let p = NhppParams::new(300.0, 60.0, 10.0).unwrap();
        let run = || sample_hierarchical(&traj, &p, &NoiseParams::default(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(run(), run());
    }
}
