//! Write a default TOML config for every scenario, then run one of them with
//! a handful of trials and print its summary.
//!
//!     cargo run --release --example harness_config -- [config-dir] [scenario] [trials]

use std::path::PathBuf;

use ghostmap::harness::{self, ExperimentConfig, Scenario};

fn main() -> ghostmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "configs".into()));
    let pick = args.next().unwrap_or_else(|| "aggregation-sweep".into());
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    std::fs::create_dir_all(&dir)?;
    for (name, _) in harness::list_scenarios() {
        let cfg = ExperimentConfig::new(Scenario::from_name(name)?, 1, 50);
        let text = cfg.to_toml()?;
        // The written file must load back to the same experiment.
        assert_eq!(ExperimentConfig::from_toml(&text)?, cfg);
        std::fs::write(dir.join(format!("{name}.toml")), text)?;
    }
    println!("wrote {} configs to {}", harness::list_scenarios().len(), dir.display());

    let cfg = ExperimentConfig::new(Scenario::from_name(&pick)?, 1, trials);
    let (_, summary) = harness::run_in_memory(&cfg)?;
    print!("{}", harness::render_summary(&summary));
    Ok(())
}
