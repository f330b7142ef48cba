use std::path::PathBuf;
use std::process::ExitCode;

use bkgraph::{run_file, RunOptions};
use clap::Parser;

/// Spectra and trace formulas for dilation operators on metric graphs.
#[derive(Parser, Debug)]
#[command(name = "bkgraph", version)]
struct Args {
    /// Job file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random graphs and boundary data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions { out: args.out, threads: args.threads, seed: args.seed };
    match run_file(&args.config, &opts) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = e.report();
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            if std::fs::create_dir_all(&opts.out).is_ok() {
                let _ = std::fs::write(opts.out.join("error.json"), format!("{text}\n"));
            }
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            eprintln!("error: {e}");
            ExitCode::from(report.exit_code as u8)
        }
    }
}
