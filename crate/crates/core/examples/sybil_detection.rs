//! Plant a Sybil region behind some gateways and run SybilRank on the
//! combined proximity graph.
//!
//!     cargo run --release --example sybil_detection -- [gateways] [attack_edges] [ranked.csv]

use ghostmap::attacks::{attach_gateways, build_sybil_region, SybilPlan};
use ghostmap::proximity::{grow_honest_graph, seed_trusted, EncounterModel, TrustedPlacement};
use ghostmap::sybilrank::{propagate_trust, rank_nodes, write_ranked_csv, DetectionMetrics, SybilRankParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ghostmap::Result<()> {
    let mut args = std::env::args().skip(1);
    let gateways: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let edges: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5_000);
    let csv_out = args.next();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut g = grow_honest_graph(&EncounterModel::default(), &mut rng)?;
    seed_trusted(&mut g, 10, TrustedPlacement::Random, &mut rng)?;
    let plan = SybilPlan { gateway_count: gateways, attack_edge_total: edges, ..Default::default() };
    let region = build_sybil_region(&plan, &mut rng)?;
    let attached = attach_gateways(&mut g, &region, &plan, &mut rng)?;
    g.check_gateway_isolation()?;

    let trust = propagate_trust(&g, &SybilRankParams::default())?;
    let ranked = rank_nodes(&g, &trust)?;
    let m = DetectionMetrics::evaluate(&ranked, &trust, 0.1)?;
    println!(
        "{} honest + {} Sybils, {} gateways, {} attack edges ({} weight)",
        g.len() - plan.sybil_count,
        plan.sybil_count,
        attached.gateways.len(),
        edges,
        attached.attack_weight
    );
    println!("{} iterations: AUC {:.4}, FP {:.4}, FN {:.4} at the {:.0}% cutoff", m.iterations, m.auc, m.fp, m.fn_, 100.0 * m.cutoff);
    if let Some(path) = csv_out {
        write_ranked_csv(std::fs::File::create(&path)?, &ranked)?;
        println!("wrote {path}");
    }
    Ok(())
}
