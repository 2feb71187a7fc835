//! Three looping ghost riders keep a fake jam on a road that two real
//! drivers are using at full speed; then a driver's router avoids it.
//!
//!     cargo run --example ghost_jam

use ghostmap::geo::Point;
use ghostmap::harness::PersistentJam;
use ghostmap::traffic::{maybe_reroute, plan_route, RerouteDecision, TrafficMap};
use ghostmap::world::{JunctionId, RoadClass, RoadNetwork, SegmentId, SegmentSpec};

fn main() -> ghostmap::Result<()> {
    let jam = PersistentJam::default();
    let out = jam.simulate()?;
    println!("ghost riders: {} at {} mph; honest: {} at {} mph", jam.slow_cars, jam.slow_mph, jam.fast_cars, jam.fast_mph);
    println!("hotspot onset at {:?} s, on for {:.1}% of the attack", out.onset_s, 100.0 * out.on_fraction);
    println!(
        "ghosts removed at {} s; speed normal from {:?} s; hotspot cleared at {:?} s",
        out.removed_at_s, out.normal_since_s, out.cleared_at_s
    );

    // An approach road, then a choice: a 2-mile direct local road or a
    // highway detour of about 4 miles.
    let j = |i| JunctionId(i);
    let seg = |id, class, from, to| SegmentSpec {
        id: SegmentId(id),
        road_class: class,
        from: j(from),
        to: j(to),
        speed_limit: None,
        length: None,
    };
    let net = RoadNetwork::from_parts(
        [(j(0), Point::new(-1.0, 0.0)), (j(1), Point::new(0.0, 0.0)), (j(2), Point::new(2.0, 0.0)), (j(3), Point::new(1.0, 1.7))],
        [
            seg(1, RoadClass::Local, 0, 1),
            seg(2, RoadClass::Local, 1, 2),
            seg(3, RoadClass::Highway, 1, 3),
            seg(4, RoadClass::Highway, 3, 2),
        ],
    )?;
    let mut traffic = TrafficMap::new();
    let planned = plan_route(&net, j(0), j(2), &traffic)?;
    println!("free-flow route {:?}, eta {:.0} s", planned.route.segments().map(|s| s.0).collect::<Vec<_>>(), planned.eta_s);
    traffic.set_congestion(SegmentId(2), 5.0);
    // Halfway along the approach road the map shows the fake jam.
    match maybe_reroute(&net, &planned.route, 0, 0.5, &traffic)? {
        RerouteDecision::Switch { route, eta_s, previous_eta_s } => println!(
            "jam on segment 2: switch to {:?} ({previous_eta_s:.0} s -> {eta_s:.0} s)",
            route.segments().map(|s| s.0).collect::<Vec<_>>()
        ),
        RerouteDecision::Keep { eta_s } => println!("keep route, eta {eta_s:.0} s"),
    }
    Ok(())
}
