use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostmap::harness::{self, ExperimentConfig, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "ghostmap", about = "Run and summarize crowdsourced-map attack experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory (overrides the environment and the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute aggregates and checks from a results directory.
    Summarize { dir: PathBuf },
    /// List the available scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> ghostmap::Result<bool> {
    match cli.cmd {
        Cmd::Run { config, seed, trials, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let dir = cfg.resolve_output_dir(out.as_deref());
            let summary = harness::run_scenario(&cfg, &dir)?;
            print!("{}", harness::render_summary(&summary));
            println!("results written to {} (set {OUT_DIR_ENV} to redirect)", dir.display());
            Ok(summary.passed())
        }
        Cmd::Summarize { dir } => {
            let summaries = harness::summarize(&dir)?;
            for s in &summaries {
                print!("{}", harness::render_summary(s));
            }
            Ok(summaries.iter().all(|s| s.passed()))
        }
        Cmd::ListScenarios => {
            for (name, desc) in harness::list_scenarios() {
                println!("{name:<22} {desc}");
            }
            Ok(true)
        }
    }
}
