//! A ghost rider posts a fake accident; honest drivers vote on it.
//!
//!     cargo run --example fake_events

use ghostmap::geo::Point;
use ghostmap::query::AccountId;
use ghostmap::world::{
    AgentKind, AgentSpec, EventType, JunctionId, MotionScript, RoadClass, RoadNetwork, Route, SegmentId, SegmentSpec, Vote, VoteOutcome,
    World, WorldParams,
};

fn main() -> ghostmap::Result<()> {
    let net = RoadNetwork::from_parts(
        [(JunctionId(0), Point::new(0.0, 0.0)), (JunctionId(1), Point::new(1.0, 0.0))],
        [SegmentSpec {
            id: SegmentId(1),
            road_class: RoadClass::Local,
            from: JunctionId(0),
            to: JunctionId(1),
            speed_limit: None,
            length: None,
        }],
    )?;
    let mut world = World::new(net, WorldParams::default());
    let ghost = world.add_agent(AgentSpec::new(
        ghostmap::world::VehicleId(7),
        AgentKind::GhostRider,
        AccountId(1_400_000_007),
        MotionScript::drive(Route::stay(JunctionId(0)), Default::default()),
    ))?;
    world.advance(1.0)?;

    let spot = Point::new(0.5, 0.0);
    let id = world.report_event(ghost, EventType::Accident, spot)?;
    // A second report a few meters away merges into the same event.
    let again = world.report_event(ghost, EventType::Accident, Point::new(0.501, 0.0))?;
    println!("fake accident {id:?} (second report merged: {})", id == again);

    for vote in [Vote::Thanks, Vote::NotThere, Vote::Thanks, Vote::NotThere, Vote::NotThere] {
        let outcome = world.vote_event(id, vote)?;
        let state = match &outcome {
            VoteOutcome::Alive(_) => "alive",
            VoteOutcome::Removed(_) => "removed",
            VoteOutcome::IgnoredDead(_) => "already gone",
        };
        let e = outcome.event();
        println!("{vote:?}: {state} (thanks {}, not-there streak {})", e.thanks_count, e.not_there_streak);
    }
    Ok(())
}
