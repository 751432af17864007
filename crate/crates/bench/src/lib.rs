//! Sweeps, heatmaps and verification runs over the Allgather schedules.

pub mod config;
pub mod heatmap;
pub mod ranges;
pub mod sweep;
pub mod verify;

pub use config::{SweepSpec, TopologyChoice};
pub use heatmap::{build_heatmap, HeatmapCell, MissingCell};
pub use sweep::{run_sweep, SkipRecord, SweepOutput, SweepRow};
pub use verify::{verify_all, VerifyFinding, VerifyReport};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Core(#[from] allgather_core::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset does not cover a full grid; {} cells missing, first: {}", .0.len(), .0[0])]
    IncompleteGrid(Vec<MissingCell>),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

pub const THREADS_ENV: &str = "ALLGATHER_LAB_THREADS";

/// Runs `f` on a pool sized by `ALLGATHER_LAB_THREADS` (all cores if unset).
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                BenchError::Config(format!(
                    "{THREADS_ENV} must be a positive integer, got `{value}`"
                ))
            })?;
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(pool.install(f))
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}
