//! Growth of the honest collocation graph from a power-law encounter process.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Dsu, NodeId, NodeKind, ProximityGraph};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncounterModel {
    pub n: usize,
    pub alpha: f64,
    /// Stop once the largest component holds at least this fraction of nodes.
    pub connectivity_target: f64,
    /// Give up after this many encounters; `None` means `10_000 * n`.
    pub max_events: Option<u64>,
}

impl Default for EncounterModel {
    fn default() -> Self {
        Self { n: 10_000, alpha: 2.0, connectivity_target: 0.999, max_events: None }
    }
}

impl EncounterModel {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("encounter model needs at least two nodes"));
        }
        if !(self.alpha > 1.0) {
            return Err(invalid("power-law exponent must exceed 1"));
        }
        if !(self.connectivity_target > 0.0 && self.connectivity_target <= 1.0) {
            return Err(invalid("connectivity target must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Per-node encounter propensities.
    pub fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(power_law_weights(self.n, self.alpha, rng))
    }
}

/// Inverse-transform power-law draws `u^(-1/(alpha-1))`, `u` uniform on
/// (0, 1], clamped to `n`.
pub fn power_law_weights<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Vec<f64> {
    let exp = -1.0 / (alpha - 1.0);
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(exp).min(n as f64)
        })
        .collect()
}

/// Draws an unordered pair with probability proportional to `w_i * w_j`:
/// each endpoint independently by weight, redrawing on `i == j`.
pub(crate) fn sample_pair<R: Rng + ?Sized>(dist: &WeightedIndex<f64>, rng: &mut R) -> (usize, usize) {
    loop {
        let (i, j) = (dist.sample(rng), dist.sample(rng));
        if i != j {
            return (i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthStats {
    pub events: u64,
    pub largest_component: usize,
}

/// Adds weighted encounters until the largest component reaches the
/// connectivity target, and returns the snapshot at that moment.
pub fn grow_honest_graph<R: Rng + ?Sized>(model: &EncounterModel, rng: &mut R) -> Result<ProximityGraph> {
    let weights = model.sample_weights(rng)?;
    grow_with_weights(model, &weights, rng).map(|(g, _)| g)
}

/// As [`grow_honest_graph`], with caller-supplied propensities.
pub fn grow_with_weights<R: Rng + ?Sized>(model: &EncounterModel, weights: &[f64], rng: &mut R) -> Result<(ProximityGraph, GrowthStats)> {
    model.validate()?;
    if weights.len() != model.n {
        return Err(invalid("one weight per node is required"));
    }
    let dist = WeightedIndex::new(weights).map_err(|e| invalid(e.to_string()))?;
    let target = (model.connectivity_target * model.n as f64 - 1e-9).ceil() as usize;
    let max_events = model.max_events.unwrap_or(10_000 * model.n as u64);

    let mut graph = ProximityGraph::with_honest(model.n);
    let mut dsu = Dsu::new(model.n);
    let mut events = 0u64;
    while dsu.largest() < target {
        if events >= max_events {
            return Err(Error::GrowthStalled { reached: dsu.largest() as f64 / model.n as f64, target: model.connectivity_target, events });
        }
        let (i, j) = sample_pair(&dist, rng);
        graph.add_weight(NodeId(i as u32), NodeId(j as u32), 1)?;
        dsu.union(i, j);
        events += 1;
    }
    Ok((graph, GrowthStats { events, largest_component: dsu.largest() }))
}

/// Infrastructure visits: each visit picks an honest user by encounter
/// propensity and a trusted node uniformly, and adds a weight-1 edge.
pub fn add_trusted_visits<R: Rng + ?Sized>(graph: &mut ProximityGraph, weights: &[f64], visits: u64, rng: &mut R) -> Result<()> {
    if visits == 0 {
        return Ok(());
    }
    let trusted = graph.trusted();
    if trusted.is_empty() {
        return Err(invalid("no trusted nodes to visit"));
    }
    let honest = graph.ids_of(NodeKind::Honest);
    if weights.len() != honest.len() {
        return Err(invalid("one weight per honest node is required"));
    }
    let dist = WeightedIndex::new(weights).map_err(|e| invalid(e.to_string()))?;
    for _ in 0..visits {
        let t = trusted[rng.random_range(0..trusted.len())];
        let u = honest[dist.sample(rng)];
        if u != t {
            graph.add_weight(u, t, 1)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustedPlacement {
    #[default]
    Random,
    /// One seed from each of `k` equal-size weighted-degree strata, a
    /// stand-in for covering distinct communities.
    DegreeSpread,
}

/// Flags `k` honest nodes as trusted, replacing any previous choice.
pub fn seed_trusted<R: Rng + ?Sized>(
    graph: &mut ProximityGraph,
    k: usize,
    placement: TrustedPlacement,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let honest = graph.ids_of(NodeKind::Honest);
    if k == 0 {
        return Err(invalid("at least one trusted node is required"));
    }
    if k > honest.len() {
        return Err(invalid(format!("cannot trust {k} of {} honest nodes", honest.len())));
    }
    let mut chosen: Vec<NodeId> = match placement {
        TrustedPlacement::Random => index::sample(rng, honest.len(), k).into_iter().map(|i| honest[i]).collect(),
        TrustedPlacement::DegreeSpread => {
            let mut by_degree = honest.clone();
            by_degree.sort_by_key(|&id| (graph.weighted_degree(id), id));
            (0..k)
                .map(|b| {
                    let lo = b * by_degree.len() / k;
                    let hi = (b + 1) * by_degree.len() / k;
                    by_degree[rng.random_range(lo..hi)]
                })
                .collect()
        }
    };
    chosen.sort();
    graph.clear_trusted();
    for &id in &chosen {
        graph.set_trusted(id, true)?;
    }
    Ok(chosen)
}
