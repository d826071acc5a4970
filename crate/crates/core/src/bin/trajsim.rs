use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajsim::detect::{evaluate_against_diary, lachesis, stops_from_labels, temporal_dbscan, DbscanParams, LachesisParams};
use trajsim::experiment::{self, ExperimentConfig};
use trajsim::pings::{sample_hierarchical, NhppParams, NoiseParams};
use trajsim::seed::{derive_seed, stage_rng, Stage};
use trajsim::sim::{SimulatedAgent, World};
use trajsim::{io, Error, Result};

#[derive(Parser)]
#[command(name = "trajsim", version, about = "Grid-city mobility simulator and stop-detection benchmark")]
struct Cli {
    /// TOML configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// City operations.
    City {
        #[command(subcommand)]
        action: CityAction,
    },
    /// Destination diaries, realized diaries and trajectories for the population.
    Simulate(PopulationArgs),
    /// Sample bursty noisy pings from a trajectory table.
    Sparsify(SparsifyArgs),
    /// Run stop detection on a ping table.
    Detect(DetectArgs),
    /// Burstiness experiment with temporal DBSCAN.
    Example1(ReplicateArgs),
    /// Movement-variance experiment with Lachesis.
    Example2(ReplicateArgs),
    /// Full per-agent dataset with a replayable manifest.
    Dataset(DatasetArgs),
}

#[derive(Subcommand)]
enum CityAction {
    /// Write the configured city as JSON.
    Build,
}

#[derive(Args)]
struct PopulationArgs {
    #[arg(long)]
    days: Option<u32>,
    /// Number of generated agents, in addition to configured ones.
    #[arg(long)]
    population: Option<usize>,
}

#[derive(Args)]
struct SparsifyArgs {
    /// Trajectory table (`unix_timestamp,local_timestamp,x,y,identifier`).
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_duration: Option<f64>,
    #[arg(long)]
    beta_ping: Option<f64>,
    /// Horizontal accuracy, blocks.
    #[arg(long)]
    ha: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Dbscan,
    Lachesis,
}

#[derive(Args)]
struct DetectArgs {
    /// Ping table (`x,y,local_timestamp,unix_timestamp,identifier,ha`).
    #[arg(long)]
    pings: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// DBSCAN distance threshold, blocks.
    #[arg(long, default_value_t = 1.0)]
    dist_thresh: f64,
    /// DBSCAN time threshold, minutes.
    #[arg(long, default_value_t = 45.0)]
    time_thresh: f64,
    #[arg(long, default_value_t = 3)]
    min_pts: usize,
    /// Lachesis minimum duration, minutes.
    #[arg(long, default_value_t = 15.0)]
    dur_min: f64,
    /// Lachesis maximum gap, minutes.
    #[arg(long, default_value_t = 30.0)]
    dt_max: f64,
    /// Lachesis roaming diameter, blocks.
    #[arg(long, default_value_t = 3.0)]
    delta_roam: f64,
    /// Realized diary to score against.
    #[arg(long)]
    diary: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct DatasetArgs {
    #[command(flatten)]
    population: PopulationArgs,
    /// Regenerate from an existing manifest and compare digests.
    #[arg(long)]
    replay: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_population(cfg: &mut ExperimentConfig, args: &PopulationArgs) -> Result<()> {
    if let Some(d) = args.days {
        cfg.days = d;
    }
    if let Some(p) = args.population {
        cfg.population = p;
    }
    cfg.validate()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::City { action: CityAction::Build } => {
            let city = cfg.city.build(None)?;
            ensure_dir(out)?;
            let path = out.join("city.json");
            city.save(&path)?;
            println!("wrote {} ({} buildings, {}x{})", path.display(), city.buildings().len(), city.width(), city.height());
        }
        Command::Simulate(args) => {
            apply_population(&mut cfg, args)?;
            let world = World::new(cfg.city.build(None)?)?;
            let agents = experiment::dataset_agents(&cfg, &world.city)?;
            if agents.is_empty() {
                return Err(Error::InvalidArgument("no agents configured; set agents or --population".into()));
            }
            let start = cfg.start_unix()?;
            let end = start + cfg.days as i64 * 86_400;
            let clock = cfg.clock();
            ensure_dir(out)?;
            world.city.save(out.join("city.json"))?;
            for agent in agents {
                let mut sim = SimulatedAgent::new(agent.clone());
                sim.generate_diary(&world, &cfg.epr, &cfg.schedule, clock, start, end, &mut stage_rng(cfg.seed, &agent.id, Stage::Diary))?;
                sim.generate_trajectory(&world, &cfg.motion, None, &mut stage_rng(cfg.seed, &agent.id, Stage::Trajectory))?;
                let id = &agent.id;
                io::save(out.join(format!("{id}_destination_diary.csv")), &io::diary_csv(sim.destination_diary.as_ref().unwrap(), &clock)?)?;
                io::save(out.join(format!("{id}_diary.csv")), &io::diary_csv(sim.realized_diary.as_ref().unwrap(), &clock)?)?;
                io::save(out.join(format!("{id}_trajectory.csv")), &io::trajectory_csv(sim.trajectory.as_ref().unwrap(), &clock)?)?;
                println!("{id}: {} stops, {} points", sim.realized_diary.as_ref().unwrap().stops().count(), sim.trajectory.as_ref().unwrap().points.len());
            }
        }
        Command::Sparsify(args) => {
            let params = NhppParams::new(
                args.beta_start.unwrap_or(cfg.pings.beta_start),
                args.beta_duration.unwrap_or(cfg.pings.beta_duration),
                args.beta_ping.unwrap_or(cfg.pings.beta_ping),
            )?;
            let noise = NoiseParams::new(args.ha.unwrap_or(cfg.noise.ha))?;
            let traj = io::parse_trajectory_csv(&io::load(&args.trajectory)?, None)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &traj.identifier, Stage::Pings));
            let sample = sample_hierarchical(&traj, &params, &noise, &mut rng)?;
            let clock = cfg.clock();
            ensure_dir(out)?;
            let id = &traj.identifier;
            io::save(out.join(format!("{id}_sparse.csv")), &io::sparse_csv(&sample.sparse, &clock)?)?;
            io::save(out.join(format!("{id}_bursts.csv")), &io::bursts_csv(&sample.bursts, traj.start().unwrap_or(0))?)?;
            println!(
                "{id}: {} bursts, {} pings ({} collapsed)",
                sample.bursts.bursts.len(),
                sample.sparse.len(),
                sample.collapsed
            );
        }
        Command::Detect(args) => {
            let sparse = io::parse_sparse_csv(&io::load(&args.pings)?)?;
            let clock = cfg.clock();
            ensure_dir(out)?;
            let id = if sparse.identifier.is_empty() { "pings".to_string() } else { sparse.identifier.clone() };
            let stops = match args.algorithm {
                Algorithm::Dbscan => {
                    let params = DbscanParams::new(args.dist_thresh, args.time_thresh, args.min_pts);
                    let labels = temporal_dbscan(&sparse.pings, &params)?;
                    io::save(out.join(format!("{id}_labels.csv")), &io::labels_csv(&sparse, &labels, &clock)?)?;
                    stops_from_labels(&sparse.pings, &labels)
                }
                Algorithm::Lachesis => {
                    lachesis(&sparse.pings, &LachesisParams::new(args.dur_min, args.dt_max, args.delta_roam))?
                }
            };
            io::save(out.join(format!("{id}_stops.csv")), &io::stops_csv(&stops, &clock)?)?;
            let mut metrics = format!("pings={}\nstops={}\n", sparse.len(), stops.len());
            if let Some(path) = &args.diary {
                let diary = io::parse_diary_csv(&io::load(path)?)?;
                metrics += &evaluate_against_diary(&stops, &diary, args.tolerance).to_record();
            }
            io::save(out.join(format!("{id}_metrics.txt")), metrics.as_bytes())?;
            print!("{metrics}");
        }
        Command::Example1(args) => {
            if let Some(n) = args.replicates {
                cfg.example1.replicates = n;
            }
            let report = experiment::run_example1(&cfg, Some(out), cli.jobs)?;
            print!("{}", report.metrics_text());
        }
        Command::Example2(args) => {
            if let Some(n) = args.replicates {
                cfg.example2.replicates = n;
            }
            let report = experiment::run_example2(&cfg, Some(out), cli.jobs)?;
            print!("{}", report.metrics_text());
        }
        Command::Dataset(args) => match &args.replay {
            Some(manifest) => {
                let mismatched = experiment::replay_dataset(manifest, out, cli.jobs)?;
                if mismatched.is_empty() {
                    println!("replay identical");
                } else {
                    return Err(Error::Precondition(format!("replay differs in {}", mismatched.join(", "))));
                }
            }
            None => {
                apply_population(&mut cfg, &args.population)?;
                let m = experiment::generate_population_dataset(&cfg, out, cli.jobs)?;
                println!("wrote {} files for {} agents (config {})", m.files.len() + 1, m.agents.len(), m.config_hash);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Format::Csv = cli.format;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
