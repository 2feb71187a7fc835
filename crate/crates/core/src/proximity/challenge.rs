//! Success model for the WiFi-tethering collocation challenge: one device
//! opens a hotspot with a server-chosen SSID and the other must report it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{NodeId, NodeKind, ProximityGraph};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeMode {
    Static,
    Driving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChallengeContext {
    pub distance_m: f64,
    pub mode: ChallengeMode,
}

impl ChallengeContext {
    pub fn new(distance_m: f64, mode: ChallengeMode) -> Self {
        Self { distance_m, mode }
    }
}

fn interpolate(x: f64, (x0, y0): (f64, f64), (x1, y1): (f64, f64)) -> f64 {
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Piecewise-linear fit of the measured success rates.
///
/// Parked cars: certain up to 80 m, falling linearly to zero at 160 m.
/// Moving cars: 0.98 up to 80 m, 0.10 at 140 m, zero from 160 m.
pub fn challenge_success_prob(ctx: ChallengeContext) -> Result<f64> {
    let d = ctx.distance_m;
    if !(d >= 0.0) {
        return Err(invalid(format!("distance must be non-negative, got {d}")));
    }
    let p = match ctx.mode {
        ChallengeMode::Static => match d {
            d if d <= 80.0 => 1.0,
            d if d < 160.0 => interpolate(d, (80.0, 1.0), (160.0, 0.0)),
            _ => 0.0,
        },
        ChallengeMode::Driving => match d {
            d if d <= 80.0 => 0.98,
            d if d <= 140.0 => interpolate(d, (80.0, 0.98), (140.0, 0.10)),
            d if d < 160.0 => interpolate(d, (140.0, 0.10), (160.0, 0.0)),
            _ => 0.0,
        },
    };
    Ok(p)
}

/// Runs one challenge between `u` and `v`; on success the edge weight grows
/// by one.
///
/// A Sybil without a physical radio can never answer an honest device.
/// Two Sybils always "pass", since the attacker controls both ends.
pub fn attempt_collocation<R: Rng + ?Sized>(
    graph: &mut ProximityGraph,
    u: NodeId,
    v: NodeId,
    ctx: ChallengeContext,
    rng: &mut R,
) -> Result<bool> {
    if u == v {
        return Err(invalid("a device cannot challenge itself"));
    }
    let (a, b) = (*graph.node(u)?, *graph.node(v)?);
    let p = challenge_success_prob(ctx)?;
    let success = match (a.kind, b.kind) {
        (NodeKind::Sybil, NodeKind::Sybil) => true,
        (NodeKind::Honest, NodeKind::Honest) => rng.random_bool(p),
        (NodeKind::Honest, NodeKind::Sybil) => b.gateway && rng.random_bool(p),
        (NodeKind::Sybil, NodeKind::Honest) => a.gateway && rng.random_bool(p),
    };
    if success {
        graph.add_weight(u, v, 1)?;
    }
    Ok(success)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn p(d: f64, mode: ChallengeMode) -> f64 {
        challenge_success_prob(ChallengeContext::new(d, mode)).unwrap()
    }

    #[test]
    fn fitted_points() {
        assert_eq!(p(50.0, ChallengeMode::Static), 1.0);
        assert_eq!(p(200.0, ChallengeMode::Static), 0.0);
        assert_eq!(p(200.0, ChallengeMode::Driving), 0.0);
        assert!((p(120.0, ChallengeMode::Static) - 0.5).abs() < 1e-12);
        assert_eq!(p(50.0, ChallengeMode::Driving), 0.98);
        assert!((p(140.0, ChallengeMode::Driving) - 0.10).abs() < 1e-12);
        assert!((p(150.0, ChallengeMode::Driving) - 0.05).abs() < 1e-12);
        assert_eq!(p(160.0, ChallengeMode::Static), 0.0);
        assert!(challenge_success_prob(ChallengeContext::new(-1.0, ChallengeMode::Static)).is_err());
    }

    #[test]
    fn nonincreasing_in_distance() {
        for mode in [ChallengeMode::Static, ChallengeMode::Driving] {
            let mut prev = f64::INFINITY;
            for i in 0..=2500 {
                let v = p(i as f64 * 0.1, mode);
                assert!(v <= prev + 1e-15, "{mode:?} at {}", i as f64 * 0.1);
                prev = v;
            }
        }
    }

    #[test]
    fn radio_rules() {
        let mut g = ProximityGraph::with_honest(2);
        let s = g.add_nodes(NodeKind::Sybil, 3);
        let (gw, s1, s2) = (s, NodeId(s.0 + 1), NodeId(s.0 + 2));
        g.set_gateway(gw, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let near = ChallengeContext::new(10.0, ChallengeMode::Static);
        let far = ChallengeContext::new(1000.0, ChallengeMode::Static);

        for _ in 0..50 {
            assert!(!attempt_collocation(&mut g, NodeId(0), s1, near, &mut rng).unwrap());
        }
        assert!(attempt_collocation(&mut g, s1, s2, far, &mut rng).unwrap());
        assert!(attempt_collocation(&mut g, NodeId(0), gw, near, &mut rng).unwrap());
        assert!(!attempt_collocation(&mut g, NodeId(0), NodeId(1), far, &mut rng).unwrap());
        assert_eq!(g.weight(NodeId(0), s1), 0);
        assert_eq!(g.weight(s1, s2), 1);
        g.check_gateway_isolation().unwrap();
    }

    #[test]
    fn driving_success_rate() {
        let mut g = ProximityGraph::with_honest(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ctx = ChallengeContext::new(50.0, ChallengeMode::Driving);
        let n = 20_000;
        let wins = (0..n).filter(|_| attempt_collocation(&mut g, NodeId(0), NodeId(1), ctx, &mut rng).unwrap()).count();
        let rate = wins as f64 / n as f64;
        // 0.98 ± 4σ for a Bernoulli mean over 20k draws.
        assert!((rate - 0.98).abs() < 4.0 * (0.98f64 * 0.02 / n as f64).sqrt(), "{rate}");
        assert_eq!(g.weight(NodeId(0), NodeId(1)), wins as u64);
    }
}
