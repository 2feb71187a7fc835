use thiserror::Error;

use crate::proximity::NodeId;
use crate::query::AccountId;
use crate::world::{EventId, JunctionId, SegmentId, VehicleId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid road network: {0}")]
    Network(String),

    #[error("segment {0} does not exist")]
    UnknownSegment(SegmentId),

    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),

    #[error("vehicle {0} has no active app session")]
    NoSession(VehicleId),

    #[error("unknown event {0}")]
    UnknownEvent(EventId),

    #[error("speed cohorts are empty")]
    EmptyCohorts,

    #[error("no route from junction {from} to junction {to}")]
    Unreachable { from: JunctionId, to: JunctionId },

    #[error("invalid search area: {0}")]
    InvalidArea(String),

    #[error("bootstrap failed: no visible user matched the location and time window")]
    TargetNotFound,

    #[error("bootstrap ambiguous: {n} candidates ({0:?})", n = .0.len())]
    AmbiguousTarget(Vec<AccountId>),

    #[error("node {0} does not exist")]
    UnknownNode(NodeId),

    #[error("graph growth stalled: largest component {reached:.4} < {target:.4} after {events} events")]
    GrowthStalled { reached: f64, target: f64, events: u64 },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
