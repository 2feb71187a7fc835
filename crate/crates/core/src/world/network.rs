use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JunctionId(pub u32);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Highway,
    Local,
    Residential,
}

impl RoadClass {
    pub const ALL: [RoadClass; 3] = [RoadClass::Highway, RoadClass::Local, RoadClass::Residential];

    pub fn default_speed_limit(self) -> f64 {
        match self {
            RoadClass::Highway => 65.0,
            RoadClass::Local => 45.0,
            RoadClass::Residential => 25.0,
        }
    }

    /// Aggregate speed below which the server paints the segment congested.
    pub fn congestion_threshold(self) -> f64 {
        match self {
            RoadClass::Highway => 40.0,
            RoadClass::Local => 20.0,
            RoadClass::Residential => 15.0,
        }
    }
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RoadClass::Highway => "highway",
            RoadClass::Local => "local",
            RoadClass::Residential => "residential",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: SegmentId,
    pub road_class: RoadClass,
    /// mph
    pub speed_limit: f64,
    /// miles
    pub length: f64,
    pub endpoints: (JunctionId, JunctionId),
}

impl RoadSegment {
    /// Free-flow traversal time in seconds.
    pub fn free_flow_time(&self) -> f64 {
        self.length / self.speed_limit * 3600.0
    }
}

/// Segment description as it appears in scenario files. `speed_limit` and
/// `length` fall back to the class default and the straight-line distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub id: SegmentId,
    pub road_class: RoadClass,
    pub from: JunctionId,
    pub to: JunctionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

/// One directed traversal of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub segment: SegmentId,
    /// `true` when travelling from `endpoints.0` to `endpoints.1`.
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub origin: JunctionId,
    pub hops: Vec<Hop>,
}

impl Route {
    pub fn stay(origin: JunctionId) -> Self {
        Self { origin, hops: Vec::new() }
    }

    pub fn segments(&self) -> impl Iterator<Item = SegmentId> + '_ {
        self.hops.iter().map(|h| h.segment)
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }
}

/// A location on the network: distance in miles from `endpoints.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPosition {
    pub segment: SegmentId,
    pub offset: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RoadNetwork {
    junctions: BTreeMap<JunctionId, Point>,
    segments: BTreeMap<SegmentId, RoadSegment>,
    adjacency: BTreeMap<JunctionId, Vec<SegmentId>>,
}

impl RoadNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_junction(&mut self, id: JunctionId, at: Point) -> Result<()> {
        if self.junctions.insert(id, at).is_some() {
            return Err(Error::Network(format!("duplicate junction {id}")));
        }
        self.adjacency.entry(id).or_default();
        Ok(())
    }

    pub fn add_segment(&mut self, spec: SegmentSpec) -> Result<SegmentId> {
        let a = *self
            .junctions
            .get(&spec.from)
            .ok_or_else(|| Error::Network(format!("segment {} references unknown junction {}", spec.id, spec.from)))?;
        let b = *self
            .junctions
            .get(&spec.to)
            .ok_or_else(|| Error::Network(format!("segment {} references unknown junction {}", spec.id, spec.to)))?;
        if spec.from == spec.to {
            return Err(Error::Network(format!("segment {} is a loop", spec.id)));
        }
        if self.segments.contains_key(&spec.id) {
            return Err(Error::Network(format!("duplicate segment {}", spec.id)));
        }
        let length = spec.length.unwrap_or_else(|| a.distance(&b));
        let speed_limit = spec.speed_limit.unwrap_or_else(|| spec.road_class.default_speed_limit());
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Network(format!("segment {} has non-positive length", spec.id)));
        }
        if !(speed_limit > 0.0) || !speed_limit.is_finite() {
            return Err(Error::Network(format!("segment {} has non-positive speed limit", spec.id)));
        }
        self.segments.insert(
            spec.id,
            RoadSegment { id: spec.id, road_class: spec.road_class, speed_limit, length, endpoints: (spec.from, spec.to) },
        );
        self.adjacency.entry(spec.from).or_default().push(spec.id);
        self.adjacency.entry(spec.to).or_default().push(spec.id);
        Ok(spec.id)
    }

    /// Builds a network from scenario-file parts.
    pub fn from_parts(
        junctions: impl IntoIterator<Item = (JunctionId, Point)>,
        segments: impl IntoIterator<Item = SegmentSpec>,
    ) -> Result<Self> {
        let mut net = Self::new();
        for (id, p) in junctions {
            net.add_junction(id, p)?;
        }
        for s in segments {
            net.add_segment(s)?;
        }
        Ok(net)
    }

    pub fn segment(&self, id: SegmentId) -> Result<&RoadSegment> {
        self.segments.get(&id).ok_or(Error::UnknownSegment(id))
    }

    pub fn segments(&self) -> impl Iterator<Item = &RoadSegment> {
        self.segments.values()
    }

    pub fn junction(&self, id: JunctionId) -> Option<Point> {
        self.junctions.get(&id).copied()
    }

    pub fn junctions(&self) -> impl Iterator<Item = (JunctionId, Point)> + '_ {
        self.junctions.iter().map(|(k, v)| (*k, *v))
    }

    /// Segments incident to a junction, in ascending id order.
    pub fn incident(&self, j: JunctionId) -> &[SegmentId] {
        self.adjacency.get(&j).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn hop_start(&self, hop: Hop) -> Result<JunctionId> {
        let s = self.segment(hop.segment)?;
        Ok(if hop.forward { s.endpoints.0 } else { s.endpoints.1 })
    }

    pub fn hop_end(&self, hop: Hop) -> Result<JunctionId> {
        let s = self.segment(hop.segment)?;
        Ok(if hop.forward { s.endpoints.1 } else { s.endpoints.0 })
    }

    /// Hop leaving `from` along `segment`.
    pub fn hop_from(&self, segment: SegmentId, from: JunctionId) -> Result<Hop> {
        let s = self.segment(segment)?;
        if s.endpoints.0 == from {
            Ok(Hop { segment, forward: true })
        } else if s.endpoints.1 == from {
            Ok(Hop { segment, forward: false })
        } else {
            Err(Error::Network(format!("segment {segment} does not touch junction {from}")))
        }
    }

    /// Route through a junction sequence, using the lowest-id segment between
    /// each consecutive pair.
    pub fn route_through(&self, junctions: &[JunctionId]) -> Result<Route> {
        let origin = *junctions.first().ok_or_else(|| Error::Network("empty junction sequence".into()))?;
        let mut hops = Vec::with_capacity(junctions.len().saturating_sub(1));
        for w in junctions.windows(2) {
            let seg = self
                .incident(w[0])
                .iter()
                .copied()
                .filter(|s| {
                    let e = self.segments[s].endpoints;
                    (e.0 == w[0] && e.1 == w[1]) || (e.1 == w[0] && e.0 == w[1])
                })
                .min()
                .ok_or_else(|| Error::Network(format!("no segment between {} and {}", w[0], w[1])))?;
            hops.push(self.hop_from(seg, w[0])?);
        }
        Ok(Route { origin, hops })
    }

    /// Checks that consecutive hops share junctions.
    pub fn validate_route(&self, route: &Route) -> Result<()> {
        if !self.junctions.contains_key(&route.origin) {
            return Err(Error::Network(format!("route origin {} unknown", route.origin)));
        }
        let mut at = route.origin;
        for hop in &route.hops {
            if self.hop_start(*hop)? != at {
                return Err(Error::Network(format!("route is discontinuous at segment {}", hop.segment)));
            }
            at = self.hop_end(*hop)?;
        }
        Ok(())
    }

    pub fn route_end(&self, route: &Route) -> Result<JunctionId> {
        match route.hops.last() {
            Some(h) => self.hop_end(*h),
            None => Ok(route.origin),
        }
    }

    pub fn route_length(&self, route: &Route) -> Result<f64> {
        route.hops.iter().map(|h| self.segment(h.segment).map(|s| s.length)).sum()
    }

    /// Planar point at `along` miles into a hop.
    pub fn point_on_hop(&self, hop: Hop, along: f64) -> Result<Point> {
        let s = self.segment(hop.segment)?;
        let offset = if hop.forward { along } else { s.length - along };
        self.point_at(SegmentPosition { segment: hop.segment, offset })
    }

    pub fn point_at(&self, pos: SegmentPosition) -> Result<Point> {
        let s = self.segment(pos.segment)?;
        let a = self.junctions[&s.endpoints.0];
        let b = self.junctions[&s.endpoints.1];
        let t = (pos.offset / s.length).clamp(0.0, 1.0);
        Ok(a.lerp(&b, t))
    }

    pub fn position_on_hop(&self, hop: Hop, along: f64) -> Result<SegmentPosition> {
        let s = self.segment(hop.segment)?;
        let along = along.clamp(0.0, s.length);
        Ok(SegmentPosition { segment: hop.segment, offset: if hop.forward { along } else { s.length - along } })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> RoadNetwork {
        RoadNetwork::from_parts(
            [(JunctionId(0), Point::new(0.0, 0.0)), (JunctionId(1), Point::new(1.0, 0.0)), (JunctionId(2), Point::new(1.0, 2.0))],
            [
                SegmentSpec {
                    id: SegmentId(10),
                    road_class: RoadClass::Local,
                    from: JunctionId(0),
                    to: JunctionId(1),
                    speed_limit: None,
                    length: None,
                },
                SegmentSpec {
                    id: SegmentId(11),
                    road_class: RoadClass::Highway,
                    from: JunctionId(2),
                    to: JunctionId(1),
                    speed_limit: Some(55.0),
                    length: Some(2.5),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn class_defaults() {
        let net = line();
        let s = net.segment(SegmentId(10)).unwrap();
        assert_eq!(s.speed_limit, 45.0);
        assert_eq!(s.length, 1.0);
        let h = net.segment(SegmentId(11)).unwrap();
        assert_eq!(h.speed_limit, 55.0);
        assert_eq!(h.length, 2.5);
    }

    #[test]
    fn rejects_dangling_and_degenerate_segments() {
        let mut net = line();
        let dangling = SegmentSpec {
            id: SegmentId(12),
            road_class: RoadClass::Local,
            from: JunctionId(0),
            to: JunctionId(9),
            speed_limit: None,
            length: None,
        };
        assert!(net.add_segment(dangling).is_err());
        net.add_junction(JunctionId(3), Point::new(0.0, 0.0)).unwrap();
        let zero = SegmentSpec {
            id: SegmentId(13),
            road_class: RoadClass::Local,
            from: JunctionId(0),
            to: JunctionId(3),
            speed_limit: None,
            length: None,
        };
        assert!(net.add_segment(zero).is_err());
        let neg = SegmentSpec {
            id: SegmentId(14),
            road_class: RoadClass::Local,
            from: JunctionId(0),
            to: JunctionId(2),
            speed_limit: Some(-1.0),
            length: None,
        };
        assert!(net.add_segment(neg).is_err());
    }

    #[test]
    fn route_through_orients_hops() {
        let net = line();
        let r = net.route_through(&[JunctionId(0), JunctionId(1), JunctionId(2)]).unwrap();
        assert_eq!(r.hops, vec![Hop { segment: SegmentId(10), forward: true }, Hop { segment: SegmentId(11), forward: false }]);
        net.validate_route(&r).unwrap();
        assert_eq!(net.route_end(&r).unwrap(), JunctionId(2));
        assert_eq!(net.route_length(&r).unwrap(), 3.5);
        let p = net.point_on_hop(r.hops[1], 2.5).unwrap();
        assert_eq!(p, Point::new(1.0, 2.0));
    }
}
