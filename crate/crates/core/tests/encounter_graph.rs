use ghostmap::proximity::{grow_honest_graph, EncounterModel, NodeKind, ProximityGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Continuous-approximation maximum-likelihood exponent of the tail
/// `x >= xmin` of a discrete sample.
fn power_law_mle(xs: &[f64], xmin: f64) -> f64 {
    let tail: Vec<f64> = xs.iter().copied().filter(|&x| x >= xmin).collect();
    let s: f64 = tail.iter().map(|x| (x / (xmin - 0.5)).ln()).sum();
    1.0 + tail.len() as f64 / s
}

fn full_size() -> ProximityGraph {
    grow_honest_graph(&EncounterModel::default(), &mut ChaCha8Rng::seed_from_u64(2024)).unwrap()
}

#[test]
fn giant_component_reaches_target() {
    let g = full_size();
    assert_eq!(g.len(), 10_000);
    assert_eq!(g.count_of(NodeKind::Sybil), 0);
    assert!(g.largest_component() >= 9_990, "largest component {}", g.largest_component());
}

#[test]
fn degree_tail_fits_exponent_two() {
    let g = full_size();
    let weighted: Vec<f64> = g.nodes().map(|(id, _)| g.weighted_degree(id) as f64).collect();
    let plain: Vec<f64> = g.nodes().map(|(id, _)| g.degree(id) as f64).collect();
    let a_w = power_law_mle(&weighted, 10.0);
    let a_p = power_law_mle(&plain, 10.0);
    assert!((a_w - 2.0).abs() <= 0.3, "encounter-count exponent {a_w}");
    assert!((a_p - 2.0).abs() <= 0.3, "neighbour-count exponent {a_p}");
}

#[test]
fn mle_recovers_a_known_exponent() {
    // Sanity check of the estimator on a discretized Pareto(alpha = 2.5) sample.
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..200_000).map(|_| (10.0 * rng.random::<f64>().powf(-1.0 / 1.5)).floor()).collect();
    let a = power_law_mle(&xs, 20.0);
    assert!((a - 2.5).abs() < 0.05, "estimated {a}");
}

#[test]
fn edge_list_round_trip_preserves_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = grow_honest_graph(&EncounterModel::new(300), &mut rng).unwrap();
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf).unwrap();
    let back = ProximityGraph::read_edge_list(buf.as_slice()).unwrap();
    let mut again = Vec::new();
    back.write_edge_list(&mut again).unwrap();
    assert_eq!(buf, again);
    assert_eq!(back.total_weight(), g.total_weight());
}
