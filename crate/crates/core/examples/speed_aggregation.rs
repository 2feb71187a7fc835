//! How a handful of slow reports drags down the speed a segment displays.
//!
//! Real vehicles drive each road class at the slow and fast speeds below;
//! the engine's displayed aggregate is printed next to the closed form.
//!
//!     cargo run --example speed_aggregation

use ghostmap::harness::AggregationSweep;
use ghostmap::traffic::{aggregate_speed, SpeedCohorts, TieBreak};
use ghostmap::world::RoadClass;

fn main() -> ghostmap::Result<()> {
    let sweep = AggregationSweep::default();
    println!("{:<12} {:>6} {:>10} {:>12} {:>10}", "class", "Ns:Nf", "threshold", "closed_form", "displayed");
    for (class, speeds) in
        [(RoadClass::Highway, sweep.highway), (RoadClass::Local, sweep.local), (RoadClass::Residential, sweep.residential)]
    {
        for &(ns, nf) in &sweep.ratios {
            let expected = aggregate_speed(&SpeedCohorts::new(ns, speeds.0, nf, speeds.1), TieBreak::Slow)?;
            let shown = sweep.displayed_aggregate(class, speeds, ns, nf)?;
            let shown = shown.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            println!(
                "{:<12} {:>6} {:>10} {:>12.3} {:>10}",
                format!("{class:?}"),
                format!("{ns}:{nf}"),
                class.congestion_threshold(),
                expected,
                shown
            );
        }
    }
    Ok(())
}
