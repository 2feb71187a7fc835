use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::world::{Hop, JunctionId, RoadNetwork, Route, SegmentId};

use super::hotspot::TrafficMap;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRoute {
    pub route: Route,
    pub eta_s: f64,
}

/// Seconds to traverse `miles` of `segment` under current traffic.
pub fn segment_time(network: &RoadNetwork, traffic: &TrafficMap, segment: SegmentId, miles: f64) -> Result<f64> {
    let s = network.segment(segment)?;
    let mph = traffic.congestion(segment).unwrap_or(s.speed_limit);
    if mph <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(miles / mph * 3600.0)
}

// Travel times compared at microsecond resolution so that equal-cost paths
// tie exactly and fall through to the segment-id ordering.
fn key(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Label {
    cost: i64,
    path: Vec<SegmentId>,
    at: JunctionId,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.cmp(&other.cost).then_with(|| self.path.cmp(&other.path)).then_with(|| self.at.cmp(&other.at))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Fastest route from `origin` to `dest`. Hotspot segments are costed at
/// their displayed speed, all others at the speed limit. Equal travel times
/// resolve to the lexicographically smallest segment-id sequence.
pub fn plan_route(network: &RoadNetwork, origin: JunctionId, dest: JunctionId, traffic: &TrafficMap) -> Result<PlannedRoute> {
    if network.junction(origin).is_none() || network.junction(dest).is_none() {
        return Err(Error::Unreachable { from: origin, to: dest });
    }
    let mut settled: BTreeMap<JunctionId, Label> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Label { cost: 0, path: Vec::new(), at: origin }));
    while let Some(Reverse(label)) = heap.pop() {
        if settled.contains_key(&label.at) {
            continue;
        }
        let at = label.at;
        if at == dest {
            settled.insert(at, label);
            break;
        }
        for &seg in network.incident(at) {
            let hop = network.hop_from(seg, at)?;
            let next = network.hop_end(hop)?;
            if settled.contains_key(&next) {
                continue;
            }
            let t = segment_time(network, traffic, seg, network.segment(seg)?.length)?;
            if !t.is_finite() {
                continue;
            }
            let mut path = label.path.clone();
            path.push(seg);
            heap.push(Reverse(Label { cost: label.cost + key(t), path, at: next }));
        }
        settled.insert(at, label);
    }
    let best = settled.remove(&dest).ok_or(Error::Unreachable { from: origin, to: dest })?;
    let mut hops = Vec::with_capacity(best.path.len());
    let mut at = origin;
    let mut eta = 0.0;
    for seg in best.path {
        let hop = network.hop_from(seg, at)?;
        eta += segment_time(network, traffic, seg, network.segment(seg)?.length)?;
        at = network.hop_end(hop)?;
        hops.push(hop);
    }
    Ok(PlannedRoute { route: Route { origin, hops }, eta_s: eta })
}

/// Remaining travel time of `route` from `hop_index`, `along` miles into that hop.
pub fn remaining_eta(network: &RoadNetwork, route: &Route, hop_index: usize, along: f64, traffic: &TrafficMap) -> Result<f64> {
    let mut eta = 0.0;
    for (i, hop) in route.hops.iter().enumerate().skip(hop_index) {
        let len = network.segment(hop.segment)?.length;
        let miles = if i == hop_index { (len - along).max(0.0) } else { len };
        eta += segment_time(network, traffic, hop.segment, miles)?;
    }
    Ok(eta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RerouteDecision {
    Keep {
        eta_s: f64,
    },
    /// Finish the current hop, then follow `route` (which starts at the end
    /// of the current hop).
    Switch {
        route: Route,
        eta_s: f64,
        previous_eta_s: f64,
    },
}

/// Recomputes the remaining ETA and switches only to a strictly faster detour.
/// The vehicle always finishes the hop it is on.
pub fn maybe_reroute(network: &RoadNetwork, route: &Route, hop_index: usize, along: f64, traffic: &TrafficMap) -> Result<RerouteDecision> {
    let current = remaining_eta(network, route, hop_index, along, traffic)?;
    let Some(hop) = route.hops.get(hop_index).copied() else {
        return Ok(RerouteDecision::Keep { eta_s: current });
    };
    let dest = network.route_end(route)?;
    let next = network.hop_end(hop)?;
    let finish_hop = remaining_eta(network, &Route { origin: route.origin, hops: vec![hop] }, 0, along, traffic)?;
    let planned = plan_route(network, next, dest, traffic)?;
    let candidate = finish_hop + planned.eta_s;
    let same = planned.route.hops.as_slice() == &route.hops[hop_index + 1..];
    if !same && key(candidate) < key(current) {
        let mut hops: Vec<Hop> = vec![hop];
        hops.extend(planned.route.hops);
        let start = network.hop_start(hop)?;
        Ok(RerouteDecision::Switch { route: Route { origin: start, hops }, eta_s: candidate, previous_eta_s: current })
    } else {
        Ok(RerouteDecision::Keep { eta_s: current })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Point;
    use crate::world::{RoadClass, SegmentSpec};

    fn seg(id: u32, from: u32, to: u32, len: f64) -> SegmentSpec {
        SegmentSpec {
            id: SegmentId(id),
            road_class: RoadClass::Local,
            from: JunctionId(from),
            to: JunctionId(to),
            speed_limit: None,
            length: Some(len),
        }
    }

    /// Diamond: 0 -> 1 -> 3 (segments 1, 2) and 0 -> 2 -> 3 (segments 3, 4),
    /// then 3 -> 4 (segment 5).
    fn diamond() -> RoadNetwork {
        RoadNetwork::from_parts(
            [
                (JunctionId(0), Point::new(0.0, 0.0)),
                (JunctionId(1), Point::new(1.0, 1.0)),
                (JunctionId(2), Point::new(1.0, -1.0)),
                (JunctionId(3), Point::new(2.0, 0.0)),
                (JunctionId(4), Point::new(3.0, 0.0)),
            ],
            [seg(1, 0, 1, 1.0), seg(2, 1, 3, 1.0), seg(3, 0, 2, 1.0), seg(4, 2, 3, 1.0), seg(5, 3, 4, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn single_segment_eta() {
        let net = RoadNetwork::from_parts(
            [(JunctionId(0), Point::new(0.0, 0.0)), (JunctionId(1), Point::new(12.8, 0.0))],
            [SegmentSpec {
                id: SegmentId(1),
                road_class: RoadClass::Highway,
                from: JunctionId(0),
                to: JunctionId(1),
                speed_limit: None,
                length: None,
            }],
        )
        .unwrap();
        let p = plan_route(&net, JunctionId(0), JunctionId(1), &TrafficMap::new()).unwrap();
        assert!((p.eta_s - 12.8 / 65.0 * 3600.0).abs() < 1e-9);
        assert!((p.eta_s - 709.0).abs() < 1.0);
    }

    #[test]
    fn avoids_congested_branch() {
        let net = diamond();
        let mut traffic = TrafficMap::new();
        traffic.set_congestion(SegmentId(2), 15.0);
        let p = plan_route(&net, JunctionId(0), JunctionId(3), &traffic).unwrap();
        assert_eq!(p.route.segments().collect::<Vec<_>>(), vec![SegmentId(3), SegmentId(4)]);
    }

    #[test]
    fn equal_costs_break_ties_lexicographically() {
        let net = diamond();
        let mut traffic = TrafficMap::new();
        for s in 1..=4 {
            traffic.set_congestion(SegmentId(s), 15.0);
        }
        for _ in 0..3 {
            let p = plan_route(&net, JunctionId(0), JunctionId(3), &traffic).unwrap();
            assert_eq!(p.route.segments().collect::<Vec<_>>(), vec![SegmentId(1), SegmentId(2)]);
        }
    }

    #[test]
    fn unreachable_is_an_error() {
        let mut net = diamond();
        net.add_junction(JunctionId(9), Point::new(9.0, 9.0)).unwrap();
        assert!(matches!(plan_route(&net, JunctionId(0), JunctionId(9), &TrafficMap::new()), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn reroutes_around_fake_jam_ahead() {
        let net = diamond();
        let route = net.route_through(&[JunctionId(0), JunctionId(1), JunctionId(3), JunctionId(4)]).unwrap();
        let mut traffic = TrafficMap::new();
        assert!(matches!(maybe_reroute(&net, &route, 0, 0.2, &traffic).unwrap(), RerouteDecision::Keep { .. }));
        traffic.set_congestion(SegmentId(2), 5.0);
        match maybe_reroute(&net, &route, 0, 0.2, &traffic).unwrap() {
            RerouteDecision::Switch { route, eta_s, previous_eta_s } => {
                assert!(eta_s < previous_eta_s);
                // finish segment 1, turn back, and go around through 3 and 4
                let segs: Vec<u32> = route.segments().map(|s| s.0).collect();
                assert_eq!(segs, vec![1, 1, 3, 4, 5]);
                net.validate_route(&route).unwrap();
            }
            other => panic!("expected a switch, got {other:?}"),
        }
    }

    #[test]
    fn congestion_behind_does_not_reroute() {
        let net = diamond();
        let route = net.route_through(&[JunctionId(0), JunctionId(1), JunctionId(3), JunctionId(4)]).unwrap();
        let mut traffic = TrafficMap::new();
        traffic.set_congestion(SegmentId(1), 5.0);
        let d = maybe_reroute(&net, &route, 2, 0.5, &traffic).unwrap();
        assert!(matches!(d, RerouteDecision::Keep { .. }));
    }

    #[test]
    fn slower_detour_is_not_taken() {
        // congestion ahead on segment 2, but the detour through 1 -> 0 -> 2 -> 3 is longer still
        let net = diamond();
        let route = net.route_through(&[JunctionId(0), JunctionId(1), JunctionId(3), JunctionId(4)]).unwrap();
        let mut traffic = TrafficMap::new();
        traffic.set_congestion(SegmentId(2), 40.0);
        let d = maybe_reroute(&net, &route, 0, 0.9, &traffic).unwrap();
        assert!(matches!(d, RerouteDecision::Keep { .. }), "{d:?}");
    }
}
