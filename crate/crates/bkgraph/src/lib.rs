//! File formats and job runner behind the `bkgraph` command.

pub mod config;
pub mod error;
pub mod output;
pub mod random;
pub mod tasks;

use std::path::PathBuf;

use serde_json::{json, Value};

pub use config::{JobConfig, Task};
pub use error::{CliError, ErrorReport};

/// Command-line overrides that are not part of the job file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
}

/// Read, check and run a job file.
pub fn run_file(path: &std::path::Path, opts: &RunOptions) -> Result<Value, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo { path: path.to_path_buf(), source })?;
    let cfg = JobConfig::parse(&text)?;
    run(&cfg, opts)
}

/// Run a parsed job and write its artifacts to `opts.out`.
pub fn run(cfg: &JobConfig, opts: &RunOptions) -> Result<Value, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(CliError::Invalid { field: "threads", reason: "must be at least 1".into() });
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Threads(e.to_string()))?;
    let mut out = output::Artifacts::new(&opts.out)?;
    let ctx = tasks::Ctx { cfg, seed: opts.seed, pool: &pool };
    let result = match cfg.task {
        Task::Validate => tasks::validate(&ctx, &mut out),
        Task::Spectrum => tasks::spectrum_task(&ctx, &mut out),
        Task::Weyl => tasks::weyl(&ctx, &mut out),
        Task::TraceCheck => tasks::trace(&ctx, &mut out),
        Task::HeatTrace => tasks::heat(&ctx, &mut out),
        Task::HalflineDemo => tasks::halfline(&ctx, &mut out),
        Task::CountingCompare => tasks::counting_compare(&ctx, &mut out),
    }?;
    Ok(json!({
        "status": "ok",
        "task": cfg.task.name(),
        "outputs": out.files(),
        "summary": result,
    }))
}
