//! Scenario files for the road world (TOML).
//!
//! ```toml
//! duration_s = 600
//!
//! [[junctions]]
//! id = 0
//! x = 0.0
//! y = 0.0
//!
//! [[segments]]
//! id = 1
//! road_class = "local"
//! from = 0
//! to = 1
//!
//! [[agents]]
//! id = 1
//! kind = "honest"
//! account_created = 1400000000
//! script = { type = "drive", path = [0, 1], speed = { type = "constant", mph = 30.0 } }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Point, Projection};
use crate::query::AccountId;

use super::agent::{AgentKind, AgentSpec, AppState, MotionScript, SpeedProfile, VehicleId};
use super::network::{JunctionId, RoadNetwork, SegmentSpec};
use super::{GpsReport, World, WorldParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    pub id: JunctionId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ScriptSpec {
    Drive {
        path: Vec<JunctionId>,
        #[serde(default)]
        speed: SpeedProfile,
        #[serde(default)]
        repeat: bool,
        #[serde(default)]
        depart_at: f64,
    },
    Loop {
        path: Vec<JunctionId>,
        mph: f64,
        period: f64,
        #[serde(default)]
        start_at: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldAgentSpec {
    pub id: VehicleId,
    pub kind: AgentKind,
    pub account_created: AccountId,
    pub script: ScriptSpec,
    #[serde(default)]
    pub app_state: AppState,
    #[serde(default = "yes")]
    pub visible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_report_at: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nickname: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldScenario {
    pub duration_s: f64,
    #[serde(default = "one")]
    pub dt: f64,
    #[serde(default)]
    pub params: WorldParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Projection>,
    pub junctions: Vec<JunctionSpec>,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub agents: Vec<WorldAgentSpec>,
}

fn one() -> f64 {
    1.0
}

impl WorldScenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn network(&self) -> Result<RoadNetwork> {
        RoadNetwork::from_parts(self.junctions.iter().map(|j| (j.id, Point::new(j.x, j.y))), self.segments.iter().cloned())
    }

    pub fn build(&self) -> Result<World> {
        let net = self.network()?;
        let mut specs = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let script = match &a.script {
                ScriptSpec::Drive { path, speed, repeat, depart_at } => {
                    MotionScript::Drive { route: net.route_through(path)?, speed: speed.clone(), repeat: *repeat, depart_at: *depart_at }
                }
                ScriptSpec::Loop { path, mph, period, start_at } => {
                    MotionScript::Loop { route: net.route_through(path)?, mph: *mph, period: *period, start_at: *start_at }
                }
            };
            specs.push(AgentSpec {
                id: a.id,
                kind: a.kind,
                account_created: a.account_created,
                script,
                app_state: a.app_state,
                visible: a.visible,
                first_report_at: a.first_report_at,
                nickname: a.nickname.clone(),
            });
        }
        let mut world = World::new(net, self.params);
        if let Some(p) = self.projection {
            world = world.with_projection(p);
        }
        for s in specs {
            world.add_agent(s)?;
        }
        Ok(world)
    }

    /// Builds the world and runs it for `duration_s`, collecting every upload.
    pub fn run(&self) -> Result<(World, Vec<GpsReport>)> {
        let mut world = self.build()?;
        let mut reports = Vec::new();
        let steps = (self.duration_s / self.dt).round() as u64;
        for _ in 0..steps {
            reports.extend(world.advance(self.dt)?);
        }
        Ok((world, reports))
    }
}
