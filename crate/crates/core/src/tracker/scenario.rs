//! Self-contained tracking experiment: one target driving a straight road
//! through a static crowd of other users at a given density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{track, TrackConfig, TrackReport, TrackTrace};
use crate::error::{invalid, Result};
use crate::geo::Point;
use crate::query::{AccountId, ClusterParams, ServerCluster, SessionId, UserRecord};
use crate::seeds::derive_seed;
use crate::world::{
    AgentKind, AgentSpec, JunctionId, MotionScript, RoadClass, RoadNetwork, SegmentId, SegmentSpec, SpeedProfile, VehicleId, World,
    WorldParams,
};

const TARGET_ACCOUNT: u64 = 1_400_000_000;
const CROWD_ACCOUNT_BASE: u64 = 1_300_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackScenario {
    pub density_per_mi2: f64,
    pub travel_time_min: f64,
    pub speed_mph: f64,
    pub road_class: RoadClass,
    /// Heading of the road, degrees counter-clockwise from east.
    pub heading_deg: f64,
    /// Time of the target's first upload after departure.
    pub first_report_at: f64,
    /// Crowd extends this far beyond the route on every side.
    pub margin_mi: f64,
    pub cluster: ClusterParams,
    pub config: TrackConfig,
}

impl Default for TrackScenario {
    fn default() -> Self {
        Self::highway()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackScenarioOutcome {
    pub trace: TrackTrace,
    pub report: TrackReport,
    pub crowd_size: usize,
}

impl TrackScenario {
    /// Sparse crowd, fast road, 40-minute drive.
    pub fn highway() -> Self {
        Self {
            density_per_mi2: 2.8,
            travel_time_min: 40.0,
            speed_mph: 60.0,
            road_class: RoadClass::Highway,
            heading_deg: 30.0,
            first_report_at: 10.0,
            margin_mi: 6.0,
            cluster: ClusterParams::default(),
            config: TrackConfig::default(),
        }
    }

    /// Dense crowd, city streets, 35-minute drive.
    pub fn city() -> Self {
        Self { density_per_mi2: 56.6, travel_time_min: 35.0, speed_mph: 25.0, road_class: RoadClass::Local, ..Self::highway() }
    }

    pub fn route_length_mi(&self) -> f64 {
        self.speed_mph * self.travel_time_min / 60.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.density_per_mi2 >= 0.0) || !(self.travel_time_min > 0.0) || !(self.speed_mph > 0.0) {
            return Err(invalid("tracking scenario needs non-negative density and positive duration and speed"));
        }
        if !(self.margin_mi >= 0.0) || !(self.first_report_at >= 0.0) {
            return Err(invalid("margin and first report time must be non-negative"));
        }
        self.config.validate()
    }

    fn network(&self) -> Result<RoadNetwork> {
        let length = self.route_length_mi();
        let (dx, dy) = (self.heading_deg.to_radians().cos(), self.heading_deg.to_radians().sin());
        let pieces = length.ceil() as u32;
        let mut net = RoadNetwork::new();
        for j in 0..=pieces {
            let d = (j as f64).min(length);
            net.add_junction(JunctionId(j), Point::new(d * dx, d * dy))?;
        }
        for s in 0..pieces {
            let len = (s as f64 + 1.0).min(length) - s as f64;
            net.add_segment(SegmentSpec {
                id: SegmentId(s),
                road_class: self.road_class,
                from: JunctionId(s),
                to: JunctionId(s + 1),
                speed_limit: Some(self.speed_mph),
                length: Some(len),
            })?;
        }
        Ok(net)
    }

    /// Builds the world and crowd for one seed and runs the track.
    pub fn run(&self, seed: u64) -> Result<TrackScenarioOutcome> {
        self.validate()?;
        let net = self.network()?;
        let pieces = net.junctions().count() as u32 - 1;
        let path: Vec<JunctionId> = (0..=pieces).map(JunctionId).collect();
        let route = net.route_through(&path)?;
        let start = net.junction(JunctionId(0)).unwrap_or_default();
        let end = net.junction(JunctionId(pieces)).unwrap_or_default();

        let mut world = World::new(net, WorldParams { seed: derive_seed(seed, 1), ..WorldParams::default() });
        let vehicle = VehicleId(0);
        let target = AccountId(TARGET_ACCOUNT);
        let script = MotionScript::Drive { route, speed: SpeedProfile::constant(self.speed_mph), repeat: false, depart_at: 0.0 };
        world.add_agent(AgentSpec::new(vehicle, AgentKind::Honest, target, script).first_report_at(self.first_report_at))?;

        let mut cluster = ServerCluster::new(ClusterParams { seed: derive_seed(seed, 2), ..self.cluster })?;
        let crowd_size = self.populate_crowd(&world, &mut cluster, start, end, derive_seed(seed, 3))?;

        let travel_s = self.travel_time_min * 60.0;
        let until = travel_s + self.config.expected_cadence_s;
        let start_geo = world.to_geo(start);
        let trace = track(&mut world, &mut cluster, vehicle, target, start_geo, &self.config, until, derive_seed(seed, 4))?;
        let report = TrackReport::new(&trace, self.route_length_mi(), self.travel_time_min, self.density_per_mi2);
        Ok(TrackScenarioOutcome { trace, report, crowd_size })
    }

    /// Scatters parked, visible users uniformly over the route's bounding box
    /// plus margin. Their records are already on every server.
    fn populate_crowd(&self, world: &World, cluster: &mut ServerCluster, a: Point, b: Point, seed: u64) -> Result<usize> {
        let m = self.margin_mi;
        let (x0, x1) = (a.x.min(b.x) - m, a.x.max(b.x) + m);
        let (y0, y1) = (a.y.min(b.y) - m, a.y.max(b.y) + m);
        let count = (self.density_per_mi2 * (x1 - x0) * (y1 - y0)).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..count {
            let p = Point::new(rng.random_range(x0..=x1), rng.random_range(y0..=y1));
            let account = CROWD_ACCOUNT_BASE + i as u64;
            cluster.ingest_replicated(UserRecord {
                session_user_id: SessionId(rng.random()),
                nickname: format!("user{account}"),
                account_created: AccountId(account),
                gps: world.to_geo(p),
                gps_timestamp: -rng.random_range(0.0..600.0),
                visible: true,
            });
        }
        Ok(count)
    }
}
