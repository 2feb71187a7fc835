//! Traffic-side scenarios: the aggregation sweep and the persistent fake jam.

use serde::{Deserialize, Serialize};

use super::results::{AggregatePoint, Check, PointResult};
use crate::error::{invalid, Result};
use crate::geo::Point;
use crate::query::AccountId;
use crate::traffic::{aggregate_speed, CohortSplit, SpeedCohorts, TieBreak, TrafficEngine, TrafficParams};
use crate::world::{
    AgentKind, AgentSpec, JunctionId, MotionScript, RoadClass, RoadNetwork, SegmentId, SegmentSpec, SpeedProfile, VehicleId, World,
    WorldParams,
};

/// Drives two speed cohorts over one segment of each road class and reads
/// back the aggregate the engine displays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationSweep {
    /// `(n_slow, n_fast)` pairs.
    pub ratios: Vec<(u32, u32)>,
    pub highway: (f64, f64),
    pub local: (f64, f64),
    pub residential: (f64, f64),
    pub split: CohortSplit,
    pub tie_break: TieBreak,
    /// Largest allowed |displayed - closed form|, mph.
    pub tolerance: f64,
}

impl Default for AggregationSweep {
    fn default() -> Self {
        let mut ratios: Vec<(u32, u32)> = (1..=5).rev().map(|s| (s, 1)).collect();
        ratios.extend((2..=5).map(|f| (1, f)));
        Self {
            ratios,
            highway: (10.0, 30.0),
            local: (5.0, 15.0),
            residential: (5.0, 10.0),
            split: CohortSplit::RangeMidpoint,
            tie_break: TieBreak::Slow,
            tolerance: 1e-9,
        }
    }
}

fn class_name(class: RoadClass) -> &'static str {
    match class {
        RoadClass::Highway => "highway",
        RoadClass::Local => "local",
        RoadClass::Residential => "residential",
    }
}

impl AggregationSweep {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() || self.ratios.iter().any(|&(s, f)| s + f == 0) {
            return Err(invalid("every ratio needs at least one vehicle"));
        }
        for (s, f) in [self.highway, self.local, self.residential] {
            if !(s > 0.0 && f >= s) {
                return Err(invalid("speed tuples must be positive with slow <= fast"));
            }
        }
        Ok(())
    }

    /// One segment per class; every vehicle uploads once inside the window.
    pub fn displayed_aggregate(&self, class: RoadClass, speeds: (f64, f64), n_slow: u32, n_fast: u32) -> Result<Option<f64>> {
        let mut net = RoadNetwork::new();
        net.add_junction(JunctionId(0), Point::new(0.0, 0.0))?;
        net.add_junction(JunctionId(1), Point::new(20.0, 0.0))?;
        let seg = net.add_segment(SegmentSpec {
            id: SegmentId(0),
            road_class: class,
            from: JunctionId(0),
            to: JunctionId(1),
            speed_limit: None,
            length: None,
        })?;
        let route = net.route_through(&[JunctionId(0), JunctionId(1)])?;
        let params = TrafficParams { split: self.split, tie_break: self.tie_break, ..TrafficParams::default() };
        let mut engine = TrafficEngine::new(&net, params);
        let mut world = World::new(net, WorldParams::default());
        let n = n_slow + n_fast;
        for i in 0..n {
            let mph = if i < n_slow { speeds.0 } else { speeds.1 };
            let script = MotionScript::drive(route.clone(), SpeedProfile::constant(mph));
            let spec = AgentSpec::new(VehicleId(i), AgentKind::Honest, AccountId(1_000 + u64::from(i)), script)
                .first_report_at(10.0 + f64::from(i));
            world.add_agent(spec)?;
        }
        let end = 10.0 + f64::from(n);
        while world.now() < end {
            let reports = world.advance(1.0)?;
            engine.ingest(&reports);
        }
        engine.tick(world.network(), world.now())?;
        Ok(engine.state(seg).and_then(|s| s.displayed_speed()))
    }

    pub(crate) fn run_trial(&self) -> Result<Vec<PointResult>> {
        let mut out = Vec::new();
        for (class, speeds) in
            [(RoadClass::Highway, self.highway), (RoadClass::Local, self.local), (RoadClass::Residential, self.residential)]
        {
            for &(ns, nf) in &self.ratios {
                let expected = aggregate_speed(&SpeedCohorts::new(ns, speeds.0, nf, speeds.1), self.tie_break)?;
                let shown = self.displayed_aggregate(class, speeds, ns, nf)?;
                let mut p = PointResult::new(format!("{}:{ns}:{nf}", class_name(class)))
                    .param("n_slow", f64::from(ns))
                    .param("n_fast", f64::from(nf))
                    .param("s_slow", speeds.0)
                    .param("s_fast", speeds.1)
                    .metric("closed_form", expected)
                    .metric("hotspot", f64::from(u8::from(shown.is_some())));
                if let Some(v) = shown {
                    p = p.metric("displayed", v).metric("abs_error", (v - expected).abs());
                }
                out.push(p);
            }
        }
        Ok(out)
    }

    pub(crate) fn checks(&self, points: &[AggregatePoint]) -> Vec<Check> {
        let mut worst = 0.0f64;
        let mut missing = Vec::new();
        for p in points {
            match p.metrics.get("abs_error") {
                Some(s) => worst = worst.max(s.max),
                None => missing.push(p.label.clone()),
            }
        }
        let mut checks = vec![Check::new(
            "aggregate-matches-closed-form",
            missing.is_empty() && worst <= self.tolerance,
            format!("max |error| {worst:.3e} (tolerance {:.0e}); not displayed: {missing:?}", self.tolerance),
        )];
        // More slow cars never raise the aggregate.
        for class in ["highway", "local", "residential"] {
            let mut series: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.label.starts_with(class))
                .filter_map(|p| {
                    let share = p.params["n_slow"] / (p.params["n_slow"] + p.params["n_fast"]);
                    p.metrics.get("displayed").map(|s| (share, s.mean))
                })
                .collect();
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
            checks.push(Check::new(format!("{class}-nonincreasing-in-slow-share"), monotone, format!("{series:?}")));
        }
        checks
    }
}

/// Three ghost riders loop slowly over a local road while two honest cars
/// lap a ring through it at full speed. Then the ghosts vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistentJam {
    pub duration_min: f64,
    pub slow_cars: u32,
    pub slow_mph: f64,
    pub fast_cars: u32,
    pub fast_mph: f64,
    /// Length of the jammed road, miles.
    pub segment_mi: f64,
    /// Total ring length the honest cars lap, miles.
    pub ring_mi: f64,
    /// Ghosts jump back to the start of the road this often, seconds.
    pub loop_period_s: f64,
    /// How long to watch after the ghosts leave, minutes.
    pub observe_after_min: f64,
    pub traffic: TrafficParams,
}

impl Default for PersistentJam {
    fn default() -> Self {
        Self {
            duration_min: 50.0,
            slow_cars: 3,
            slow_mph: 5.0,
            fast_cars: 2,
            fast_mph: 45.0,
            segment_mi: 3.0,
            ring_mi: 7.5,
            loop_period_s: 600.0,
            observe_after_min: 30.0,
            traffic: TrafficParams::default(),
        }
    }
}

/// What one jam trial observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JamOutcome {
    pub onset_s: Option<f64>,
    /// Fraction of ticks from onset to the end of the attack with the hotspot on.
    pub on_fraction: f64,
    pub removed_at_s: f64,
    /// When the hotspot cleared after the ghosts left.
    pub cleared_at_s: Option<f64>,
    /// Start of the normal-speed streak that cleared it.
    pub normal_since_s: Option<f64>,
}

impl PersistentJam {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.slow_cars == 0 || !(self.duration_min > 0.0) || !(self.slow_mph > 0.0) || !(self.fast_mph > 0.0) {
            return Err(invalid("jam needs slow cars, positive speeds and a positive duration"));
        }
        let ghost_reach = self.slow_mph * self.loop_period_s / 3600.0;
        if !(self.segment_mi > ghost_reach) || !(self.ring_mi > self.segment_mi + 1.0) {
            return Err(invalid("jammed road must contain the ghost loop and fit inside the ring"));
        }
        Ok(())
    }

    fn network(&self) -> Result<RoadNetwork> {
        // Rectangle: the jammed road along the bottom, three local roads back.
        let w = self.segment_mi;
        let h = (self.ring_mi - 2.0 * w) / 2.0;
        if !(h > 0.0) {
            return Err(invalid("ring must be longer than twice the jammed road"));
        }
        let mut net = RoadNetwork::new();
        for (j, (x, y)) in [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)].into_iter().enumerate() {
            net.add_junction(JunctionId(j as u32), Point::new(x, y))?;
        }
        for s in 0..4u32 {
            net.add_segment(SegmentSpec {
                id: SegmentId(s),
                road_class: RoadClass::Local,
                from: JunctionId(s),
                to: JunctionId((s + 1) % 4),
                speed_limit: None,
                length: None,
            })?;
        }
        Ok(net)
    }

    pub fn simulate(&self) -> Result<JamOutcome> {
        self.validate()?;
        let net = self.network()?;
        let jammed = SegmentId(0);
        let ghost_route = net.route_through(&[JunctionId(0), JunctionId(1)])?;

        let mut engine = TrafficEngine::new(&net, self.traffic);
        let mut world = World::new(net.clone(), WorldParams::default());

        let cadence = crate::world::AppState::Foreground.report_interval();
        let period = self.loop_period_s;
        for i in 0..self.slow_cars {
            // Stagger uploads so every window holds a sample from each ghost.
            let offset = cadence * f64::from(i + 1) / f64::from(self.slow_cars);
            let script = MotionScript::Loop { route: ghost_route.clone(), mph: self.slow_mph, period, start_at: 0.0 };
            let spec = AgentSpec::new(VehicleId(i), AgentKind::GhostRider, AccountId(2_000 + u64::from(i)), script).first_report_at(offset);
            world.add_agent(spec)?;
        }
        for k in 0..self.fast_cars {
            // Spread the honest cars around the ring by starting each at a
            // different corner.
            let first = (2 * k) % 4;
            let path: Vec<JunctionId> = (0..=4).map(|i| JunctionId((first + i) % 4)).collect();
            let script = MotionScript::Drive {
                route: net.route_through(&path)?,
                speed: SpeedProfile::constant(self.fast_mph),
                repeat: true,
                depart_at: 0.0,
            };
            let spec = AgentSpec::new(VehicleId(100 + k), AgentKind::Honest, AccountId(3_000 + u64::from(k)), script).first_report_at(30.0);
            world.add_agent(spec)?;
        }

        let attack_end = self.duration_min * 60.0;
        let mut onset = None;
        let (mut on_ticks, mut ticks_after_onset) = (0u64, 0u64);
        while world.now() < attack_end {
            let reports = world.advance(1.0)?;
            engine.ingest(&reports);
            engine.tick(world.network(), world.now())?;
            let hot = engine.state(jammed).is_some_and(|s| s.hotspot);
            if onset.is_none() && hot {
                onset = Some(world.now());
            }
            if onset.is_some() {
                ticks_after_onset += 1;
                on_ticks += u64::from(hot);
            }
        }

        for i in 0..self.slow_cars {
            world.remove_agent(VehicleId(i))?;
        }
        let removed_at = world.now();
        let stop = removed_at + self.observe_after_min * 60.0;
        let mut cleared = None;
        let mut normal_since = None;
        while world.now() < stop && cleared.is_none() {
            let before = engine.state(jammed).and_then(|s| s.normal_since);
            let reports = world.advance(1.0)?;
            engine.ingest(&reports);
            engine.tick(world.network(), world.now())?;
            if engine.state(jammed).is_some_and(|s| !s.hotspot) {
                cleared = Some(world.now());
                normal_since = before;
            }
        }
        Ok(JamOutcome {
            onset_s: onset,
            on_fraction: if ticks_after_onset == 0 { 0.0 } else { on_ticks as f64 / ticks_after_onset as f64 },
            removed_at_s: removed_at,
            cleared_at_s: cleared,
            normal_since_s: normal_since,
        })
    }

    pub(crate) fn run_trial(&self) -> Result<Vec<PointResult>> {
        let o = self.simulate()?;
        let mut p = PointResult::new("jam").metric("on_fraction", o.on_fraction).metric("removed_at_s", o.removed_at_s);
        if let Some(t) = o.onset_s {
            p = p.metric("onset_s", t);
        }
        if let Some(c) = o.cleared_at_s {
            p = p.metric("clear_after_removal_s", c - o.removed_at_s);
            if let Some(n) = o.normal_since_s {
                p = p.metric("clear_after_normal_s", c - n);
            }
        }
        Ok(vec![p])
    }

    pub(crate) fn checks(&self, points: &[AggregatePoint], trials: usize) -> Vec<Check> {
        let Some(p) = points.iter().find(|p| p.label == "jam") else {
            return vec![Check::new("jam-ran", false, "no jam results")];
        };
        let on = p.metrics.get("on_fraction");
        let onset_n = p.metrics.get("onset_s").map_or(0, |s| s.n);
        let mut checks = vec![Check::new(
            "hotspot-held-for-whole-attack",
            onset_n == trials && on.is_some_and(|s| s.min == 1.0),
            format!("onset in {onset_n}/{trials} trials; min on-fraction {:?}", on.map(|s| s.min)),
        )];
        let d = self.traffic.dismissal_s;
        let clear = p.metrics.get("clear_after_normal_s");
        checks.push(Check::new(
            "clears-after-dismissal-delay",
            clear.is_some_and(|s| s.n == trials && s.min >= d - 1.0 && s.max <= d + 1.0),
            format!("normal-to-clear {:?} s (expected {d} +/- 1 tick)", clear.map(|s| (s.min, s.max, s.n))),
        ));
        checks
    }
}
