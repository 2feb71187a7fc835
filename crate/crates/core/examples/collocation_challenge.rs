//! Success rate of the WiFi-tethering proximity challenge against distance,
//! and why only gateway Sybils can collect honest collocation edges.
//!
//!     cargo run --example collocation_challenge

use ghostmap::proximity::{attempt_collocation, challenge_success_prob, ChallengeContext, ChallengeMode, NodeKind, ProximityGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ghostmap::Result<()> {
    println!("{:>10} {:>8} {:>8}", "distance_m", "static", "driving");
    for d in (0..=200).step_by(20) {
        let d = d as f64;
        let s = challenge_success_prob(ChallengeContext::new(d, ChallengeMode::Static))?;
        let m = challenge_success_prob(ChallengeContext::new(d, ChallengeMode::Driving))?;
        println!("{d:>10} {s:>8.2} {m:>8.2}");
    }

    let mut g = ProximityGraph::with_honest(1);
    let honest = ghostmap::proximity::NodeId(0);
    let virtual_sybil = g.add_node(NodeKind::Sybil);
    let gateway = g.add_node(NodeKind::Sybil);
    g.set_gateway(gateway, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let near = ChallengeContext::new(10.0, ChallengeMode::Static);
    let a = attempt_collocation(&mut g, honest, virtual_sybil, near, &mut rng)?;
    let b = attempt_collocation(&mut g, honest, gateway, near, &mut rng)?;
    println!("honest<->virtual sybil: {a}; honest<->gateway: {b}; edges {}", g.edge_count());
    Ok(())
}
