//! Discrete-time road world: network, vehicles, GPS uploads and the
//! crowdsourced event board.

mod agent;
mod event;
mod network;
mod scenario;

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use agent::{AgentKind, AgentSpec, AppState, MotionScript, SpeedProfile, SpeedStep, VehicleAgent, VehicleId};
pub use event::{EventBoard, EventId, EventType, MapEvent, Vote, VoteOutcome, NOT_THERE_LIMIT};
pub use network::{Hop, JunctionId, RoadClass, RoadNetwork, RoadSegment, Route, SegmentId, SegmentPosition, SegmentSpec};
pub use scenario::{JunctionSpec, ScriptSpec, WorldAgentSpec, WorldScenario};

use crate::error::{invalid, Error, Result};
use crate::geo::{GeoPoint, Point, Projection};
use crate::query::{AccountId, SessionId, UserRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub merge_radius_m: f64,
    pub event_ttl_s: f64,
    pub seed: u64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self { merge_radius_m: 50.0, event_ttl_s: 1800.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsReport {
    pub vehicle_id: VehicleId,
    pub kind: AgentKind,
    pub account: AccountId,
    pub session: SessionId,
    pub visible: bool,
    pub position: Point,
    pub segment: Option<SegmentPosition>,
    /// mph
    pub speed: f64,
    pub timestamp: f64,
}

impl GpsReport {
    /// Server-side record for this upload.
    pub fn to_record(&self, nickname: &str, projection: &Projection) -> UserRecord {
        UserRecord {
            session_user_id: self.session,
            nickname: nickname.to_string(),
            account_created: self.account,
            gps: projection.to_geo(self.position),
            gps_timestamp: self.timestamp,
            visible: self.visible,
        }
    }
}

pub struct World {
    clock: f64,
    network: RoadNetwork,
    agents: BTreeMap<VehicleId, VehicleAgent>,
    events: EventBoard,
    projection: Projection,
    rng: ChaCha8Rng,
}

impl World {
    pub fn new(network: RoadNetwork, params: WorldParams) -> Self {
        Self {
            clock: 0.0,
            network,
            agents: BTreeMap::new(),
            events: EventBoard::new(params.merge_radius_m, params.event_ttl_s),
            projection: Projection::default(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        }
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = projection;
        self
    }

    pub fn now(&self) -> f64 {
        self.clock
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn events(&self) -> &EventBoard {
        &self.events
    }

    fn new_session(&mut self) -> SessionId {
        SessionId(self.rng.random())
    }

    pub fn add_agent(&mut self, spec: AgentSpec) -> Result<VehicleId> {
        if self.agents.contains_key(&spec.id) {
            return Err(invalid(format!("duplicate vehicle {}", spec.id)));
        }
        let id = spec.id;
        let session = self.new_session();
        let agent = VehicleAgent::new(spec, &self.network, self.clock, session)?;
        self.agents.insert(id, agent);
        Ok(id)
    }

    pub fn remove_agent(&mut self, id: VehicleId) -> Result<VehicleAgent> {
        self.agents.remove(&id).ok_or(Error::UnknownVehicle(id))
    }

    pub fn agent(&self, id: VehicleId) -> Result<&VehicleAgent> {
        self.agents.get(&id).ok_or(Error::UnknownVehicle(id))
    }

    pub fn agents(&self) -> impl Iterator<Item = &VehicleAgent> {
        self.agents.values()
    }

    fn agent_mut(&mut self, id: VehicleId) -> Result<&mut VehicleAgent> {
        self.agents.get_mut(&id).ok_or(Error::UnknownVehicle(id))
    }

    pub fn set_app_state(&mut self, id: VehicleId, state: AppState) -> Result<()> {
        let now = self.clock;
        let a = self.agent_mut(id)?;
        if a.app_state != state {
            a.app_state = state;
            a.next_report_at = a.last_report_at.unwrap_or(now) + state.report_interval();
        }
        Ok(())
    }

    pub fn set_visible(&mut self, id: VehicleId, visible: bool) -> Result<()> {
        self.agent_mut(id)?.visible = visible;
        Ok(())
    }

    /// Kills the app: the session id is released and uploads stop.
    pub fn close_app(&mut self, id: VehicleId) -> Result<()> {
        self.agent_mut(id)?.session = None;
        Ok(())
    }

    /// Logs in again under a fresh session id. The account creation time
    /// does not change.
    pub fn open_app(&mut self, id: VehicleId) -> Result<SessionId> {
        let now = self.clock;
        let session = self.new_session();
        let a = self.agent_mut(id)?;
        a.session = Some(session);
        a.next_report_at = now + a.app_state.report_interval();
        Ok(session)
    }

    /// Swaps the remaining route of a driving vehicle, used after rerouting.
    pub fn replace_route(&mut self, id: VehicleId, route: Route) -> Result<()> {
        self.network.validate_route(&route)?;
        self.agent_mut(id)?.replace_route(route);
        Ok(())
    }

    /// Advances the clock by `dt` seconds, moving every vehicle and
    /// returning the GPS uploads whose cadence timer elapsed.
    pub fn advance(&mut self, dt: f64) -> Result<Vec<GpsReport>> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt must be positive"));
        }
        let t = self.clock;
        let now = t + dt;
        let mut reports = Vec::new();
        for agent in self.agents.values_mut() {
            agent.step(&self.network, t, dt)?;
            if agent.arrived() || now + 1e-9 < agent.next_report_at {
                continue;
            }
            let interval = agent.app_state.report_interval();
            while agent.next_report_at <= now + 1e-9 {
                agent.next_report_at += interval;
            }
            let Some(session) = agent.session else { continue };
            if agent.is_idle() {
                continue;
            }
            agent.last_report_at = Some(now);
            reports.push(GpsReport {
                vehicle_id: agent.id,
                kind: agent.kind,
                account: agent.account_created,
                session,
                visible: agent.visible,
                position: agent.point(&self.network)?,
                segment: agent.segment_position(&self.network)?,
                speed: agent.speed(),
                timestamp: now,
            });
        }
        self.clock = now;
        Ok(reports)
    }

    /// Files an event report at `location`.
    pub fn report_event(&mut self, vehicle: VehicleId, event_type: EventType, location: Point) -> Result<EventId> {
        let a = self.agent(vehicle)?;
        if !a.is_online() {
            return Err(Error::NoSession(vehicle));
        }
        Ok(self.events.report(vehicle, event_type, location, self.clock))
    }

    pub fn vote_event(&mut self, event: EventId, vote: Vote) -> Result<VoteOutcome> {
        self.events.vote(event, vote, self.clock)
    }

    pub fn expire_events(&mut self, now: f64) -> Vec<EventId> {
        self.events.expire(now)
    }

    pub fn to_geo(&self, p: Point) -> GeoPoint {
        self.projection.to_geo(p)
    }

    /// Server record for a report, carrying the vehicle's nickname.
    pub fn record_for(&self, report: &GpsReport) -> UserRecord {
        let nick = self.agents.get(&report.vehicle_id).map_or("", |a| a.nickname.as_str());
        report.to_record(nick, &self.projection)
    }
}

/// Writes reports as `time_s,vehicle_id,kind,lat,lon,speed_mph`.
pub fn write_gps_csv<W: Write>(out: W, reports: &[GpsReport], projection: &Projection) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_s", "vehicle_id", "kind", "lat", "lon", "speed_mph"])?;
    for r in reports {
        let g = projection.to_geo(r.position);
        w.write_record([
            format!("{}", r.timestamp),
            r.vehicle_id.0.to_string(),
            r.kind.to_string(),
            format!("{:.7}", g.lat),
            format!("{:.7}", g.lon),
            format!("{:.3}", r.speed),
        ])?;
    }
    w.flush()?;
    Ok(())
}
