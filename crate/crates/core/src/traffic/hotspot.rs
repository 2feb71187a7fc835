use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::world::{GpsReport, RoadClass, RoadNetwork, SegmentId};

use super::aggregate::{aggregate_speed, partition_cohorts, CohortSplit, TieBreak};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficParams {
    /// Sliding window over speed samples, seconds.
    pub window_s: f64,
    /// Normal aggregate speed must hold this long before a hotspot clears.
    pub dismissal_s: f64,
    /// A hotspot with no fresh samples clears after this long.
    pub persistence_s: f64,
    pub split: CohortSplit,
    pub tie_break: TieBreak,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self { window_s: 120.0, dismissal_s: 180.0, persistence_s: 1800.0, split: CohortSplit::Threshold, tie_break: TieBreak::Slow }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTrafficState {
    pub segment_id: SegmentId,
    /// Most recent aggregate computed from a non-empty window.
    pub aggregate_speed: Option<f64>,
    pub hotspot: bool,
    pub hotspot_since: Option<f64>,
    pub normal_since: Option<f64>,
    pub last_sample_at: Option<f64>,
}

impl SegmentTrafficState {
    pub fn new(segment_id: SegmentId) -> Self {
        Self { segment_id, aggregate_speed: None, hotspot: false, hotspot_since: None, normal_since: None, last_sample_at: None }
    }

    /// Speed shown on the map, if any.
    pub fn displayed_speed(&self) -> Option<f64> {
        if self.hotspot {
            self.aggregate_speed
        } else {
            None
        }
    }

    fn clear(&mut self) {
        self.hotspot = false;
        self.hotspot_since = None;
        self.normal_since = None;
    }
}

/// One tick of the hotspot state machine. `aggregate` is `None` when the
/// sample window is empty.
///
/// A congested aggregate opens (or holds) the hotspot and forgets any normal
/// streak. A normal aggregate starts the dismissal clock, which keeps running
/// through empty windows. Without any fresh samples the hotspot survives
/// until the persistence timeout.
pub fn update_hotspot(
    state: &SegmentTrafficState,
    aggregate: Option<f64>,
    road_class: RoadClass,
    now: f64,
    params: &TrafficParams,
) -> SegmentTrafficState {
    let mut s = state.clone();
    let threshold = road_class.congestion_threshold();
    if let Some(a) = aggregate {
        s.aggregate_speed = Some(a);
        s.last_sample_at = Some(now);
        if a < threshold {
            if !s.hotspot {
                s.hotspot = true;
                s.hotspot_since = Some(now);
            }
            s.normal_since = None;
        } else if s.hotspot && s.normal_since.is_none() {
            s.normal_since = Some(now);
        }
    }
    if s.hotspot {
        let dismissed = s.normal_since.is_some_and(|t| now - t >= params.dismissal_s);
        let stale = aggregate.is_none() && s.last_sample_at.is_some_and(|t| now - t >= params.persistence_s);
        if dismissed || stale {
            s.clear();
        }
    }
    s
}

/// Effective per-segment speeds as seen by the router.
#[derive(Debug, Clone, Default)]
pub struct TrafficMap {
    congested: BTreeMap<SegmentId, f64>,
}

impl TrafficMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks a segment as a hotspot displaying `mph`.
    pub fn set_congestion(&mut self, segment: SegmentId, mph: f64) {
        self.congested.insert(segment, mph);
    }

    pub fn clear_congestion(&mut self, segment: SegmentId) {
        self.congested.remove(&segment);
    }

    pub fn congestion(&self, segment: SegmentId) -> Option<f64> {
        self.congested.get(&segment).copied()
    }
}

/// Per-segment sample windows and hotspot state.
#[derive(Debug, Clone)]
pub struct TrafficEngine {
    params: TrafficParams,
    samples: BTreeMap<SegmentId, VecDeque<(f64, f64)>>,
    states: BTreeMap<SegmentId, SegmentTrafficState>,
}

impl TrafficEngine {
    pub fn new(network: &RoadNetwork, params: TrafficParams) -> Self {
        let states = network.segments().map(|s| (s.id, SegmentTrafficState::new(s.id))).collect();
        Self { params, samples: BTreeMap::new(), states }
    }

    pub fn params(&self) -> &TrafficParams {
        &self.params
    }

    /// Records the speed of every upload that lies on a segment.
    pub fn ingest(&mut self, reports: &[GpsReport]) {
        for r in reports {
            if let Some(pos) = r.segment {
                self.samples.entry(pos.segment).or_default().push_back((r.timestamp, r.speed));
            }
        }
    }

    /// Re-evaluates every segment at `now`.
    pub fn tick(&mut self, network: &RoadNetwork, now: f64) -> Result<()> {
        for (id, state) in self.states.iter_mut() {
            let seg = network.segment(*id)?;
            let aggregate = match self.samples.get_mut(id) {
                Some(window) => {
                    while window.front().is_some_and(|(t, _)| *t <= now - self.params.window_s) {
                        window.pop_front();
                    }
                    if window.is_empty() {
                        None
                    } else {
                        let speeds: Vec<f64> = window.iter().map(|(_, s)| *s).collect();
                        let c = partition_cohorts(&speeds, self.params.split, seg.road_class.congestion_threshold())?;
                        Some(aggregate_speed(&c, self.params.tie_break)?)
                    }
                }
                None => None,
            };
            *state = update_hotspot(state, aggregate, seg.road_class, now, &self.params);
        }
        Ok(())
    }

    pub fn state(&self, segment: SegmentId) -> Option<&SegmentTrafficState> {
        self.states.get(&segment)
    }

    pub fn states(&self) -> impl Iterator<Item = &SegmentTrafficState> {
        self.states.values()
    }

    pub fn traffic_map(&self) -> TrafficMap {
        let mut m = TrafficMap::new();
        for s in self.states.values() {
            if let Some(v) = s.displayed_speed() {
                m.set_congestion(s.segment_id, v);
            }
        }
        m
    }
}

/// Streams `time_s,segment_id,aggregate_mph,hotspot_flag` rows.
pub struct SegmentStateCsv<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SegmentStateCsv<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["time_s", "segment_id", "aggregate_mph", "hotspot_flag"])?;
        Ok(Self { inner })
    }

    pub fn write_tick<'a>(&mut self, now: f64, states: impl IntoIterator<Item = &'a SegmentTrafficState>) -> Result<()> {
        for s in states {
            self.inner.write_record([
                format!("{now}"),
                s.segment_id.0.to_string(),
                s.aggregate_speed.map(|v| format!("{v:.6}")).unwrap_or_default(),
                u8::from(s.hotspot).to_string(),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}
