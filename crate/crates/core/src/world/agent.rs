use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geo::Point;
use crate::query::{AccountId, SessionId};

use super::network::{Hop, RoadNetwork, Route, SegmentPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Honest,
    /// Scripted virtual device with forged GPS.
    GhostRider,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Honest => "honest",
            AgentKind::GhostRider => "ghost-rider",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppState {
    #[default]
    Foreground,
    Background,
}

impl AppState {
    /// Seconds between GPS uploads.
    pub fn report_interval(self) -> f64 {
        match self {
            AppState::Foreground => 120.0,
            AppState::Background => 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpeedProfile {
    /// Drive at the speed limit of whichever segment the vehicle is on.
    #[default]
    SpeedLimit,
    Constant {
        mph: f64,
    },
    /// Piecewise-constant speed; each step applies from `from_s` onward.
    Steps {
        steps: Vec<SpeedStep>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedStep {
    pub from_s: f64,
    pub mph: f64,
}

impl SpeedProfile {
    pub fn constant(mph: f64) -> Self {
        SpeedProfile::Constant { mph }
    }

    fn speed_at(&self, t: f64, limit: f64) -> f64 {
        match self {
            SpeedProfile::SpeedLimit => limit,
            SpeedProfile::Constant { mph } => *mph,
            SpeedProfile::Steps { steps } => steps.iter().take_while(|s| s.from_s <= t).last().map_or(0.0, |s| s.mph),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SpeedProfile::SpeedLimit => true,
            SpeedProfile::Constant { mph } => *mph >= 0.0 && mph.is_finite(),
            SpeedProfile::Steps { steps } => {
                steps.iter().all(|s| s.mph >= 0.0 && s.mph.is_finite()) && steps.windows(2).all(|w| w[0].from_s < w[1].from_s)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("speed profile must be non-negative with increasing step times"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MotionScript {
    /// Continuous travel along a route. With `repeat`, a closed route is
    /// driven again from its origin.
    Drive { route: Route, speed: SpeedProfile, repeat: bool, depart_at: f64 },
    /// Drive `route` at constant speed, jumping back to its origin every
    /// `period` seconds. Only ghost riders may do this; the jump is a forged
    /// GPS teleport. A pass that finishes early idles without reporting.
    Loop { route: Route, mph: f64, period: f64, start_at: f64 },
}

impl MotionScript {
    pub fn drive(route: Route, speed: SpeedProfile) -> Self {
        MotionScript::Drive { route, speed, repeat: false, depart_at: 0.0 }
    }

    pub fn route(&self) -> &Route {
        match self {
            MotionScript::Drive { route, .. } | MotionScript::Loop { route, .. } => route,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: VehicleId,
    pub kind: AgentKind,
    pub account_created: AccountId,
    pub script: MotionScript,
    pub app_state: AppState,
    pub visible: bool,
    /// Time of the first GPS upload; defaults to one report interval after
    /// the simulation start.
    pub first_report_at: Option<f64>,
    pub nickname: Option<String>,
}

impl AgentSpec {
    pub fn new(id: VehicleId, kind: AgentKind, account_created: AccountId, script: MotionScript) -> Self {
        Self { id, kind, account_created, script, app_state: AppState::Foreground, visible: true, first_report_at: None, nickname: None }
    }

    pub fn first_report_at(mut self, t: f64) -> Self {
        self.first_report_at = Some(t);
        self
    }

    pub fn app_state(mut self, s: AppState) -> Self {
        self.app_state = s;
        self
    }

    pub fn visible(mut self, v: bool) -> Self {
        self.visible = v;
        self
    }
}

#[derive(Debug, Clone)]
pub struct VehicleAgent {
    pub id: VehicleId,
    pub kind: AgentKind,
    pub script: MotionScript,
    pub app_state: AppState,
    pub visible: bool,
    pub account_created: AccountId,
    pub nickname: String,
    pub(crate) session: Option<SessionId>,
    hop_index: usize,
    along: f64,
    speed: f64,
    arrived: bool,
    idle: bool,
    pub(crate) next_report_at: f64,
    pub(crate) last_report_at: Option<f64>,
}

impl VehicleAgent {
    pub(crate) fn new(spec: AgentSpec, net: &RoadNetwork, now: f64, session: SessionId) -> Result<Self> {
        net.validate_route(spec.script.route())?;
        match &spec.script {
            MotionScript::Drive { route, speed, repeat, .. } => {
                speed.validate()?;
                if *repeat && !route.is_empty() && net.route_end(route)? != route.origin {
                    return Err(invalid(format!("vehicle {} repeats a route that is not a closed circuit", spec.id)));
                }
            }
            MotionScript::Loop { mph, period, .. } => {
                if spec.kind != AgentKind::GhostRider {
                    return Err(invalid(format!("honest vehicle {} cannot teleport on a loop script", spec.id)));
                }
                if !(*mph >= 0.0) || !(*period > 0.0) {
                    return Err(invalid("loop script needs non-negative speed and positive period"));
                }
            }
        }
        let interval = spec.app_state.report_interval();
        Ok(Self {
            id: spec.id,
            kind: spec.kind,
            nickname: spec.nickname.unwrap_or_else(|| format!("user{}", spec.id.0)),
            next_report_at: spec.first_report_at.unwrap_or(now + interval),
            script: spec.script,
            app_state: spec.app_state,
            visible: spec.visible,
            account_created: spec.account_created,
            session: Some(session),
            hop_index: 0,
            along: 0.0,
            speed: 0.0,
            arrived: false,
            idle: false,
            last_report_at: None,
        })
    }

    pub fn session(&self) -> Option<SessionId> {
        self.session
    }

    pub fn is_online(&self) -> bool {
        self.session.is_some()
    }

    pub fn arrived(&self) -> bool {
        self.arrived
    }

    /// Current speed in mph.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    fn current_hop(&self) -> Option<Hop> {
        self.script.route().hops.get(self.hop_index).copied()
    }

    pub fn segment_position(&self, net: &RoadNetwork) -> Result<Option<SegmentPosition>> {
        match self.current_hop() {
            Some(h) => net.position_on_hop(h, self.along).map(Some),
            None => Ok(None),
        }
    }

    pub fn point(&self, net: &RoadNetwork) -> Result<Point> {
        match self.current_hop() {
            Some(h) => net.point_on_hop(h, self.along),
            None => {
                let route = self.script.route();
                let end = if route.is_empty() { route.origin } else { net.route_end(route)? };
                Ok(net.junction(end).unwrap_or_default())
            }
        }
    }

    /// Progress along the route: hop index and miles into that hop.
    pub fn progress(&self) -> (usize, f64) {
        (self.hop_index, self.along)
    }

    /// Swaps in a new route whose first hop is the hop currently driven;
    /// progress along that hop is kept.
    pub(crate) fn replace_route(&mut self, route: Route) {
        let keep_along = route.hops.first().copied() == self.current_hop();
        if let MotionScript::Drive { route: r, .. } = &mut self.script {
            *r = route;
            self.hop_index = 0;
            if !keep_along {
                self.along = 0.0;
            }
        }
    }

    pub(crate) fn is_idle(&self) -> bool {
        self.idle
    }

    /// Moves the vehicle from `t` to `t + dt`.
    pub(crate) fn step(&mut self, net: &RoadNetwork, t: f64, dt: f64) -> Result<()> {
        if self.arrived {
            return Ok(());
        }
        match &self.script {
            MotionScript::Drive { route, speed, repeat, depart_at } => {
                if t < *depart_at || route.is_empty() {
                    self.speed = 0.0;
                    return Ok(());
                }
                let limit = match self.current_hop() {
                    Some(h) => net.segment(h.segment)?.speed_limit,
                    None => 0.0,
                };
                self.speed = speed.speed_at(t, limit);
                let mut remaining = self.speed * dt / 3600.0;
                let n = route.hops.len();
                let repeat = *repeat;
                while remaining > 0.0 {
                    let len = net.segment(route.hops[self.hop_index].segment)?.length;
                    let left = len - self.along;
                    if remaining < left {
                        self.along += remaining;
                        break;
                    }
                    remaining -= left;
                    if self.hop_index + 1 == n {
                        if repeat {
                            self.hop_index = 0;
                            self.along = 0.0;
                        } else {
                            self.along = len;
                            self.arrived = true;
                            self.speed = 0.0;
                            break;
                        }
                    } else {
                        self.hop_index += 1;
                        self.along = 0.0;
                    }
                }
            }
            MotionScript::Loop { route, mph, period, start_at } => {
                let now = t + dt;
                if now < *start_at || route.is_empty() {
                    self.speed = 0.0;
                    self.idle = route.is_empty();
                    return Ok(());
                }
                let phase = (now - start_at) % period;
                let mut dist = mph * phase / 3600.0;
                self.speed = *mph;
                self.idle = false;
                self.hop_index = 0;
                self.along = 0.0;
                for (i, hop) in route.hops.iter().enumerate() {
                    let len = net.segment(hop.segment)?.length;
                    if dist < len {
                        self.hop_index = i;
                        self.along = dist;
                        return Ok(());
                    }
                    dist -= len;
                }
                // finished this pass early
                self.hop_index = route.hops.len() - 1;
                self.along = net.segment(route.hops[self.hop_index].segment)?.length;
                self.idle = true;
            }
        }
        Ok(())
    }
}
