//! Real-time tracking of one user through the public query API.
//!
//! The attacker knows only the target's persistent id (account creation
//! time). Every round it centres a search area on where the target should be
//! next, fans a fleet of query agents out over the servers, and waits for a
//! record with a newer GPS timestamp to show up.

mod scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use scenario::{TrackScenario, TrackScenarioOutcome};

use crate::error::{invalid, Error, Result};
use crate::geo::{GeoPoint, Point};
use crate::query::{downsample, merge_server_views, AccountId, SearchArea, ServerCluster, UserRecord};
use crate::seeds::derive_seed;
use crate::world::{AppState, VehicleId, World};

/// How query agents are spread over servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServerStrategy {
    /// Round-robin over all servers every round.
    Uniform,
    /// Round-robin until a fresh capture reveals the target's home server,
    /// then put every agent on that server.
    #[default]
    HomeServerFocus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackConfig {
    pub area_width_mi: f64,
    pub area_height_mi: f64,
    pub query_agents: usize,
    /// Upper bound used when extrapolating the target's position (mph).
    pub max_target_speed: f64,
    /// Queries per round, shared round-robin by the agents.
    pub query_budget_per_round: usize,
    pub round_interval_s: f64,
    /// Time from issuing a query to holding its answer.
    pub query_rtt_s: f64,
    /// Report interval the attacker assumes for the target.
    pub expected_cadence_s: f64,
    /// Without a capture for this long the target counts as lost.
    pub lost_after_s: f64,
    pub strategy: ServerStrategy,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            area_width_mi: 6.0,
            area_height_mi: 8.0,
            query_agents: 20,
            max_target_speed: 160.0,
            query_budget_per_round: 20,
            round_interval_s: 2.0,
            query_rtt_s: 1.0,
            expected_cadence_s: AppState::Foreground.report_interval(),
            lost_after_s: 300.0,
            strategy: ServerStrategy::HomeServerFocus,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.query_agents == 0 || self.query_budget_per_round == 0 {
            return Err(invalid("tracking needs at least one agent and one query per round"));
        }
        if !(self.round_interval_s > 0.0) || !(self.query_rtt_s >= 0.0) || !(self.expected_cadence_s > 0.0) {
            return Err(invalid("round interval and cadence must be positive"));
        }
        if !(self.max_target_speed > 0.0) {
            return Err(invalid("max target speed must be positive"));
        }
        // The target may not be able to leave the area between two reports.
        let reach = self.max_target_speed * self.expected_cadence_s / 3600.0;
        if self.area_width_mi.min(self.area_height_mi) < reach {
            return Err(invalid(format!(
                "search area {}x{} mi is smaller than the {reach:.2} mi a target can cover between reports",
                self.area_width_mi, self.area_height_mi
            )));
        }
        Ok(())
    }
}

/// Finds the persistent id of the single visible user seen inside `area`
/// with a GPS timestamp in `[from, to]`, querying every server.
pub fn bootstrap_target<R: Rng + ?Sized>(cluster: &ServerCluster, area: &SearchArea, from: f64, to: f64, rng: &mut R) -> Result<AccountId> {
    let seen = merge_server_views(cluster, area, 5, rng)?;
    let matches: Vec<AccountId> =
        seen.values().filter(|r| r.gps_timestamp >= from && r.gps_timestamp <= to).map(|r| r.account_created).collect();
    match matches[..] {
        [] => Err(Error::TargetNotFound),
        [one] => Ok(one),
        _ => Err(Error::AmbiguousTarget(matches)),
    }
}

/// Looks for the target (by persistent id) at a monitored location, e.g.
/// after it logged in again under a new session.
pub fn reacquire<R: Rng + ?Sized>(
    cluster: &ServerCluster,
    target: AccountId,
    area: &SearchArea,
    newer_than: f64,
    queries_per_server: usize,
    rng: &mut R,
) -> Result<Option<GeoPoint>> {
    let seen = merge_server_views(cluster, area, queries_per_server, rng)?;
    Ok(seen.get(&target).filter(|r| r.gps_timestamp > newer_than).map(|r| r.gps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub gps: GeoPoint,
    pub gps_timestamp: f64,
    pub captured_at: f64,
    pub server: usize,
    /// Seconds from the target's upload to the attacker holding it.
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackTrace {
    pub target: AccountId,
    pub captured: Vec<Capture>,
    /// Timestamps of the visible uploads the target made during the track.
    pub sent: Vec<f64>,
    pub missed: usize,
    pub followed_to_destination: bool,
    pub queries_issued: u64,
}

impl TrackTrace {
    pub fn mean_delay(&self) -> Option<f64> {
        if self.captured.is_empty() {
            None
        } else {
            Some(self.captured.iter().map(|c| c.delay_s).sum::<f64>() / self.captured.len() as f64)
        }
    }
}

/// The attacker's belief about the target.
#[derive(Debug, Clone)]
struct Belief {
    last: Option<(Point, f64)>,
    velocity: Point,
    home: Option<usize>,
    last_capture_at: f64,
}

impl Belief {
    fn predict(&self, config: &TrackConfig) -> Option<Point> {
        let (p, _) = self.last?;
        // Aim at the next expected upload.
        let dt = config.expected_cadence_s / 3600.0;
        let mut shift = Point::new(self.velocity.x * dt, self.velocity.y * dt);
        let len = shift.x.hypot(shift.y);
        let cap = config.max_target_speed * dt;
        if len > cap {
            shift = Point::new(shift.x * cap / len, shift.y * cap / len);
        }
        Some(Point::new(p.x + shift.x, p.y + shift.y))
    }

    fn update(&mut self, p: Point, ts: f64) {
        if let Some((q, t)) = self.last {
            if ts > t {
                let h = (ts - t) / 3600.0;
                self.velocity = Point::new((p.x - q.x) / h, (p.y - q.y) / h);
            }
        }
        self.last = Some((p, ts));
    }
}

/// Runs the world forward to `until`, uploading every GPS report to the
/// cluster, while the attacker tracks `target` starting from `start`.
///
/// The attacker only reads query results. `vehicle` is used purely for
/// bookkeeping: it tells the trace which uploads the target actually made.
#[allow(clippy::too_many_arguments)]
pub fn track(
    world: &mut World,
    cluster: &mut ServerCluster,
    vehicle: VehicleId,
    target: AccountId,
    start: GeoPoint,
    config: &TrackConfig,
    until: f64,
    seed: u64,
) -> Result<TrackTrace> {
    config.validate()?;
    if world.agent(vehicle)?.account_created != target {
        return Err(invalid(format!("vehicle {vehicle} does not own account {target}")));
    }
    let projection = *world.projection();
    let servers = cluster.server_count();
    let mut belief = Belief { last: None, velocity: Point::default(), home: None, last_capture_at: world.now() };
    let mut fallback = projection.to_plane(start);
    let mut trace =
        TrackTrace { target, captured: Vec::new(), sent: Vec::new(), missed: 0, followed_to_destination: true, queries_issued: 0 };
    let mut last_ts = f64::NEG_INFINITY;
    let mut round: u64 = 0;
    let mut next_round = world.now() + config.round_interval_s;

    while world.now() < until {
        let reports = world.advance(1.0)?;
        let now = world.now();
        for r in &reports {
            if r.vehicle_id == vehicle && r.visible {
                trace.sent.push(r.timestamp);
            }
            cluster.ingest(world.record_for(r), now);
        }
        if now + 1e-9 < next_round {
            continue;
        }
        next_round += config.round_interval_s;
        round += 1;

        let center = belief.predict(config).unwrap_or(fallback);
        let area = SearchArea::centered(projection.to_geo(center), config.area_width_mi, config.area_height_mi)?;
        let targets: Vec<usize> = match (config.strategy, belief.home) {
            (ServerStrategy::HomeServerFocus, Some(h)) => vec![h; config.query_budget_per_round],
            _ => (0..config.query_budget_per_round).map(|k| k % servers).collect(),
        };

        // Each query carries its own random stream, so the outcome does not
        // depend on the order in which agents run.
        let mut candidates: Vec<Option<Vec<&UserRecord>>> = vec![None; servers];
        for &server in &targets {
            if candidates[server].is_none() {
                candidates[server] = Some(cluster.visible_in(server, &area)?);
            }
        }
        let mut best: Option<(usize, UserRecord)> = None;
        for (k, &server) in targets.iter().enumerate() {
            let cands = candidates[server].as_deref().unwrap_or_default();
            let stream = round * config.query_budget_per_round as u64 + k as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
            trace.queries_issued += 1;
            for rec in downsample(cands, &mut rng) {
                let fresher = rec.gps_timestamp > best.as_ref().map_or(last_ts, |(_, b)| b.gps_timestamp);
                if rec.account_created == target && fresher {
                    best = Some((server, rec));
                }
            }
        }

        let captured_at = now + config.query_rtt_s;
        if let Some((server, rec)) = best {
            let delay = captured_at - rec.gps_timestamp;
            // Replicas lag by at least the minimum sync delay, so a record
            // this fresh can only have come from the home server.
            if delay < cluster.params().sync_delay_min_s {
                belief.home = Some(server);
            }
            if captured_at - belief.last_capture_at > config.lost_after_s {
                trace.followed_to_destination = false;
            }
            last_ts = rec.gps_timestamp;
            let p = projection.to_plane(rec.gps);
            belief.update(p, rec.gps_timestamp);
            belief.last_capture_at = captured_at;
            fallback = p;
            trace.captured.push(Capture { gps: rec.gps, gps_timestamp: rec.gps_timestamp, captured_at, server, delay_s: delay });
        }
    }

    // Only count captures of uploads made during this track.
    let sent_set: std::collections::BTreeSet<u64> = trace.sent.iter().map(|t| t.to_bits()).collect();
    trace.captured.retain(|c| sent_set.contains(&c.gps_timestamp.to_bits()));
    trace.missed = trace.sent.len() - trace.captured.len();
    if let Some(&last_sent) = trace.sent.last() {
        let last_captured = trace.captured.last().map_or(f64::NEG_INFINITY, |c| c.gps_timestamp);
        if last_captured < last_sent {
            trace.followed_to_destination = false;
        }
    }
    Ok(trace)
}

/// Summary row for one track: route, reports sent and caught, delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub route_length_mi: f64,
    pub travel_time_min: f64,
    pub gps_sent: usize,
    pub gps_captured: usize,
    pub followed: bool,
    pub avg_delay_s: f64,
    pub user_density_per_mi2: f64,
}

impl TrackReport {
    pub fn new(trace: &TrackTrace, route_length_mi: f64, travel_time_min: f64, user_density_per_mi2: f64) -> Self {
        Self {
            route_length_mi,
            travel_time_min,
            gps_sent: trace.sent.len(),
            gps_captured: trace.captured.len(),
            followed: trace.followed_to_destination,
            avg_delay_s: trace.mean_delay().unwrap_or(f64::NAN),
            user_density_per_mi2,
        }
    }
}
