//! Grow an honest encounter graph until it is connected, seed trusted
//! venues, and save it as an edge list.
//!
//!     cargo run --release --example proximity_graph -- [n] [out.txt]

use ghostmap::proximity::{grow_honest_graph, seed_trusted, EncounterModel, TrustedPlacement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ghostmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let out = args.next();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut g = grow_honest_graph(&EncounterModel::new(n), &mut rng)?;
    let trusted = seed_trusted(&mut g, 10, TrustedPlacement::Random, &mut rng)?;

    let mut degrees: Vec<u64> = g.nodes().map(|(id, _)| g.weighted_degree(id)).collect();
    degrees.sort_unstable();
    let pct = |p: f64| degrees[((degrees.len() - 1) as f64 * p) as usize];
    println!("{n} nodes, {} edges, {} encounters, largest component {}", g.edge_count(), g.total_weight(), g.largest_component());
    println!("weighted degree: median {}, p90 {}, p99 {}, max {}", pct(0.5), pct(0.9), pct(0.99), pct(1.0));
    println!("trusted: {:?}", trusted.iter().map(|t| t.0).collect::<Vec<_>>());
    if let Some(path) = out {
        g.write_edge_list(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
