//! Proximity-graph substrate of the defense: collocation challenges, the
//! honest encounter process, and trusted seeds.

mod challenge;
mod encounter;
mod graph;

pub use challenge::{attempt_collocation, challenge_success_prob, ChallengeContext, ChallengeMode};
pub use encounter::{
    add_trusted_visits, grow_honest_graph, grow_with_weights, power_law_weights, seed_trusted, EncounterModel, GrowthStats,
    TrustedPlacement,
};
pub use graph::{NodeId, NodeInfo, NodeKind, ProximityGraph};

pub(crate) use encounter::sample_pair;
pub(crate) use graph::Dsu;
