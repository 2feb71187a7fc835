//! Server-side traffic inference: speed aggregation, congestion hotspots and
//! travel-time routing.

mod aggregate;
mod hotspot;
mod routing;

pub use aggregate::{aggregate_speed, partition_cohorts, CohortSplit, SpeedCohorts, TieBreak};
pub use hotspot::{update_hotspot, SegmentStateCsv, SegmentTrafficState, TrafficEngine, TrafficMap, TrafficParams};
pub use routing::{maybe_reroute, plan_route, remaining_eta, segment_time, PlannedRoute, RerouteDecision};
