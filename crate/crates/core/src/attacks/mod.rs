//! Sybil regions and the gateway strategies that wire them into the honest
//! graph.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::proximity::{power_law_weights, sample_pair, Dsu, NodeId, NodeKind, ProximityGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SybilPlan {
    pub sybil_count: usize,
    /// Mean weighted degree inside the Sybil region.
    pub inner_avg_degree: f64,
    pub gateway_count: usize,
    /// Number of gateway-to-victim collocations.
    pub attack_edge_total: u64,
    /// Weight of each collocation (re-encounters of the same victim).
    pub attack_edge_weight: u64,
    /// Power-law exponent for inner-region propensities.
    pub alpha: f64,
    /// Give each gateway distinct victims instead of independent draws.
    pub distinct_victims: bool,
}

impl Default for SybilPlan {
    fn default() -> Self {
        Self {
            sybil_count: 1000,
            inner_avg_degree: 10.0,
            gateway_count: 1,
            attack_edge_total: 5000,
            attack_edge_weight: 1,
            alpha: 2.0,
            distinct_victims: false,
        }
    }
}

impl SybilPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sybil_count == 0 {
            return Err(invalid("a Sybil region needs at least one node"));
        }
        if self.gateway_count == 0 || self.gateway_count > self.sybil_count {
            return Err(invalid(format!("gateway count must be in 1..={}", self.sybil_count)));
        }
        if !(self.inner_avg_degree >= 0.0) || self.inner_avg_degree > (self.sybil_count - 1) as f64 {
            return Err(invalid(format!("inner degree {} infeasible for {} Sybils", self.inner_avg_degree, self.sybil_count)));
        }
        if self.attack_edge_weight == 0 {
            return Err(invalid("attack edge weight must be positive"));
        }
        if !(self.alpha > 1.0) {
            return Err(invalid("power-law exponent must exceed 1"));
        }
        Ok(())
    }

    /// Inner-region weight budget, `round(count * degree / 2)`.
    pub fn inner_weight(&self) -> u64 {
        (self.sybil_count as f64 * self.inner_avg_degree / 2.0).round() as u64
    }
}

/// A Sybil subgraph in local ids `0..count`; ids `0..gateway_count` are the
/// gateways.
#[derive(Debug, Clone, PartialEq)]
pub struct SybilRegion {
    pub count: usize,
    pub gateway_count: usize,
    pub edges: BTreeMap<(u32, u32), u64>,
}

impl SybilRegion {
    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn mean_weighted_degree(&self) -> f64 {
        2.0 * self.total_weight() as f64 / self.count as f64
    }
}

fn bump(edges: &mut BTreeMap<(u32, u32), u64>, a: usize, b: usize) {
    let key = (a.min(b) as u32, a.max(b) as u32);
    *edges.entry(key).or_insert(0) += 1;
}

/// Builds a connected scale-free Sybil region with the planned mean weighted
/// degree.
///
/// Each non-gateway hangs off one gateway (round-robin), so every Sybil is
/// reachable through some gateway. Power-law encounters fill the remaining
/// budget, holding back just enough edges to join whatever components are
/// left at the end.
pub fn build_sybil_region<R: Rng + ?Sized>(plan: &SybilPlan, rng: &mut R) -> Result<SybilRegion> {
    plan.validate()?;
    let n = plan.sybil_count;
    let g = plan.gateway_count;
    let budget = plan.inner_weight();
    let mut edges = BTreeMap::new();
    if n == 1 {
        return Ok(SybilRegion { count: 1, gateway_count: 1, edges });
    }

    let mut dsu = Dsu::new(n);
    let mut used = 0u64;
    for i in g..n {
        bump(&mut edges, i, i % g);
        dsu.union(i, i % g);
        used += 1;
    }
    if used + (dsu.components() as u64 - 1) > budget {
        return Err(invalid(format!("inner degree {} too low to connect {n} Sybils across {g} gateways", plan.inner_avg_degree)));
    }

    let weights = power_law_weights(n, plan.alpha, rng);
    let dist = WeightedIndex::new(&weights).map_err(|e| invalid(e.to_string()))?;
    while used + (dsu.components() as u64 - 1) < budget {
        let (i, j) = sample_pair(&dist, rng);
        bump(&mut edges, i, j);
        dsu.union(i, j);
        used += 1;
    }

    // Chain the leftover components together through their smallest members.
    let mut reps: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let r = dsu.find(i);
        reps.entry(r).or_insert(i);
    }
    let mut firsts: Vec<usize> = reps.into_values().collect();
    firsts.sort_unstable();
    for pair in firsts.windows(2) {
        bump(&mut edges, pair[0], pair[1]);
    }
    Ok(SybilRegion { count: n, gateway_count: g, edges })
}

/// Where the region landed inside the merged graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub first_sybil: NodeId,
    pub gateways: Vec<NodeId>,
    pub attack_weight: u64,
}

/// Copies the region into `graph` after its existing nodes and adds the
/// attack edges from gateways to uniformly random honest users.
///
/// The attack budget is split evenly over gateways, with the remainder going
/// to the first gateways. Repeated (gateway, victim) draws raise the weight
/// of one edge rather than creating a second, so a single gateway may spend
/// more collocations than there are honest users. With `distinct_victims`
/// every draw is a new victim and the budget is capped by
/// `gateways x honest users`.
pub fn attach_gateways<R: Rng + ?Sized>(
    graph: &mut ProximityGraph,
    region: &SybilRegion,
    plan: &SybilPlan,
    rng: &mut R,
) -> Result<Attachment> {
    plan.validate()?;
    if region.count != plan.sybil_count || region.gateway_count != plan.gateway_count {
        return Err(invalid("region does not match plan"));
    }
    let honest = graph.ids_of(NodeKind::Honest);
    if honest.is_empty() && plan.attack_edge_total > 0 {
        return Err(invalid("no honest users to attack"));
    }
    if plan.distinct_victims && plan.attack_edge_total > plan.gateway_count as u64 * honest.len() as u64 {
        return Err(invalid(format!(
            "{} attack edges exceed the capacity of {} gateways x {} honest users",
            plan.attack_edge_total,
            plan.gateway_count,
            honest.len()
        )));
    }

    let first = graph.add_nodes(NodeKind::Sybil, region.count);
    let local = |i: u32| NodeId(first.0 + i);
    let gateways: Vec<NodeId> = (0..region.gateway_count as u32).map(local).collect();
    for &gw in &gateways {
        graph.set_gateway(gw, true)?;
    }
    for (&(a, b), &w) in &region.edges {
        graph.add_weight(local(a), local(b), w)?;
    }

    let g = gateways.len() as u64;
    let (share, extra) = (plan.attack_edge_total / g, plan.attack_edge_total % g);
    for (k, &gw) in gateways.iter().enumerate() {
        let edges = share + u64::from((k as u64) < extra);
        if plan.distinct_victims {
            for i in index::sample(rng, honest.len(), edges as usize) {
                graph.add_weight(gw, honest[i], plan.attack_edge_weight)?;
            }
        } else {
            for _ in 0..edges {
                let victim = honest[rng.random_range(0..honest.len())];
                graph.add_weight(gw, victim, plan.attack_edge_weight)?;
            }
        }
    }
    Ok(Attachment { first_sybil: first, gateways, attack_weight: plan.attack_edge_total * plan.attack_edge_weight })
}
