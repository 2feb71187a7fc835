//! Follow a driver through the query API on a sparse highway and in a dense
//! city, printing one row per seed.
//!
//!     cargo run --release --example track_user -- [seeds]

use ghostmap::tracker::TrackScenario;

fn main() -> ghostmap::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    println!("{:<8} {:>4} {:>10} {:>8} {:>8} {:>9} {:>10}", "setting", "seed", "density", "sent", "caught", "followed", "delay_s");
    for (name, scenario) in [("highway", TrackScenario::highway()), ("city", TrackScenario::city())] {
        for seed in 0..seeds {
            let out = scenario.run(seed)?;
            let r = out.report;
            println!(
                "{name:<8} {seed:>4} {:>10.1} {:>8} {:>8} {:>9} {:>10.2}",
                r.user_density_per_mi2, r.gps_sent, r.gps_captured, r.followed, r.avg_delay_s
            );
        }
    }
    Ok(())
}
