//! Reproduction harness: configuration, Monte-Carlo reports, the two
//! robustness examples and population datasets.

mod config;
mod dataset;
mod example1;
mod example2;
mod report;

pub use config::{CityConfig, ExperimentConfig, NamedDbscan, NamedRegime, PlanStop, Example1Config, Example2Config, RoamerSpec};
pub use dataset::{generate_population_dataset, replay_dataset, resolve_agents as dataset_agents, DatasetManifest, FileDigest, ManifestAgent};
pub use example1::run_example1;
pub use example2::run_example2;
pub use report::{Comparison, GroupSummary, Record, RunReport};

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run `f` on a pool of `jobs` threads (0 = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write `bytes` under `dir` and return the relative name.
pub(crate) fn emit(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    crate::io::save(dir.join(name), bytes)?;
    files.push(name.to_string());
    Ok(())
}
