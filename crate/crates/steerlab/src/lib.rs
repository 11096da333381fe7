//! Experiment runner for steered dark-state simulations: configuration,
//! canned experiments, the verification suite and CSV/JSON output.

pub mod config;
pub mod criteria;
pub mod experiments;
pub mod format;
pub mod report;

pub use config::{load_config, ConfigError, ExperimentConfig, ExperimentKind, FrameChoice};
pub use criteria::{CheckRow, RunContext};
pub use experiments::{run, Outcome};
pub use report::Report;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "STEERLAB_WORKERS";

/// Thread pool sized by `STEERLAB_WORKERS`, or rayon's default when unset.
pub fn worker_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(WORKERS_ENV) {
        let n: usize = text.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            anyhow::anyhow!("{WORKERS_ENV} must be a positive integer, got `{text}`")
        })?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}
