//! Query-side scenarios: downsampling statistics and tracking.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::results::{AggregatePoint, Check, PointResult};
use crate::error::{invalid, Result};
use crate::geo::GeoPoint;
use crate::query::{
    appearance_distribution_check, expected_unique_users, AccountId, ClusterParams, SearchArea, ServerCluster, SessionId, UserRecord,
};
use crate::tracker::{TrackConfig, TrackScenario};

/// Repeated queries over a fixed crowd: per-user appearance counts and the
/// growth of the distinct-user set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownsampleConverge {
    pub users: usize,
    pub queries: u64,
    /// Length of the distinct-user curve, in queries.
    pub curve_queries: u64,
    /// Allowed relative gap between the mean curve and the closed form.
    pub curve_tolerance: f64,
    /// Required fraction of trials passing the goodness-of-fit test.
    pub min_pass_rate: f64,
}

impl Default for DownsampleConverge {
    fn default() -> Self {
        Self { users: 100, queries: 100, curve_queries: 100, curve_tolerance: 0.03, min_pass_rate: 0.95 }
    }
}

impl DownsampleConverge {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.users == 0 || self.queries == 0 || self.curve_queries == 0 {
            return Err(invalid("users and query counts must be positive"));
        }
        Ok(())
    }

    fn crowd(&self, seed: u64) -> Result<(ServerCluster, SearchArea)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let area = SearchArea::new(34.0, -118.1, 34.1, -118.0)?;
        let mut cluster = ServerCluster::new(ClusterParams { server_count: 1, ..ClusterParams::default() })?;
        for i in 0..self.users {
            cluster.ingest(
                UserRecord {
                    session_user_id: SessionId(rng.random()),
                    nickname: format!("user{i}"),
                    account_created: AccountId(1_300_000_000 + i as u64),
                    gps: GeoPoint::new(rng.random_range(area.lat_min..=area.lat_max), rng.random_range(area.lon_min..=area.lon_max)),
                    gps_timestamp: 0.0,
                    visible: true,
                },
                0.0,
            );
        }
        Ok((cluster, area))
    }

    pub(crate) fn run_trial(&self, seed: u64) -> Result<Vec<PointResult>> {
        let (cluster, area) = self.crowd(seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seeds::derive_seed(seed, 1));
        let index: std::collections::BTreeMap<AccountId, usize> =
            cluster.view(0).expect("one server").keys().enumerate().map(|(i, a)| (*a, i)).collect();

        let mut counts = vec![0u64; self.users];
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let rounds = self.queries.max(self.curve_queries);
        for q in 1..=rounds {
            let got = cluster.query(0, &area, &mut rng)?;
            for r in &got {
                if q <= self.queries {
                    counts[index[&r.account_created]] += 1;
                }
                seen.insert(r.account_created);
            }
            if q <= self.curve_queries {
                let expected = expected_unique_users(self.users as u64, q)?;
                out.push(
                    PointResult::new(format!("unique:{q}"))
                        .param("queries", q as f64)
                        .metric("unique", seen.len() as f64)
                        .metric("expected", expected),
                );
            }
        }
        let gof = appearance_distribution_check(&counts, self.users, self.queries)?;
        let mean = counts.iter().sum::<u64>() as f64 / self.users as f64;
        out.insert(
            0,
            PointResult::new("appearances")
                .param("users", self.users as f64)
                .param("queries", self.queries as f64)
                .metric("gof_pass", f64::from(u8::from(gof.passed)))
                .metric("chi_square", gof.statistic)
                .metric("p_value", gof.p_value)
                .metric("mean_appearances", mean)
                .metric("expected_mean", self.queries as f64 * 20f64.min(self.users as f64) / self.users as f64),
        );
        Ok(out)
    }

    pub(crate) fn checks(&self, points: &[AggregatePoint]) -> Vec<Check> {
        let mut checks = Vec::new();
        match points.iter().find(|p| p.label == "appearances").and_then(|p| p.metrics.get("gof_pass")) {
            Some(s) => checks.push(Check::new(
                "binomial-fit-pass-rate",
                s.mean >= self.min_pass_rate,
                format!("{:.3} of {} trials pass at alpha 0.01 (need {})", s.mean, s.n, self.min_pass_rate),
            )),
            None => checks.push(Check::new("binomial-fit-pass-rate", false, "no appearance results")),
        }
        let mut worst: f64 = 0.0;
        for p in points.iter().filter(|p| p.label.starts_with("unique:")) {
            if let (Some(u), Some(e)) = (p.metrics.get("unique"), p.metrics.get("expected")) {
                worst = worst.max((u.mean - e.mean).abs() / e.mean);
            }
        }
        checks.push(Check::new(
            "unique-users-follow-closed-form",
            worst <= self.curve_tolerance,
            format!("max relative gap of the mean curve {worst:.4} (tolerance {})", self.curve_tolerance),
        ));
        checks
    }
}

/// Overrides on top of the city or highway tracking preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_per_mi2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub travel_time_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed_mph: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracker: Option<TrackConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub servers: Option<usize>,
    /// Acceptance bounds; defaults depend on the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_captured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_mean_delay_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_followed_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackPreset {
    City,
    Highway,
}

impl TrackOverrides {
    pub fn scenario(&self, preset: TrackPreset) -> TrackScenario {
        let mut s = match preset {
            TrackPreset::City => TrackScenario::city(),
            TrackPreset::Highway => TrackScenario::highway(),
        };
        if let Some(v) = self.density_per_mi2 {
            s.density_per_mi2 = v;
        }
        if let Some(v) = self.travel_time_min {
            s.travel_time_min = v;
        }
        if let Some(v) = self.speed_mph {
            s.speed_mph = v;
        }
        if let Some(v) = self.tracker {
            s.config = v;
        }
        if let Some(v) = self.servers {
            s.cluster.server_count = v;
        }
        s
    }

    /// (min captured per trial, max mean delay, min followed rate)
    fn bounds(&self, preset: TrackPreset) -> (f64, f64, Option<f64>) {
        let (c, d, f) = match preset {
            TrackPreset::City => (16.0, 60.0, None),
            TrackPreset::Highway => (19.0, 15.0, Some(0.9)),
        };
        (self.min_captured.unwrap_or(c), self.max_mean_delay_s.unwrap_or(d), self.min_followed_rate.or(f))
    }

    pub(crate) fn run_trial(&self, preset: TrackPreset, seed: u64) -> Result<Vec<PointResult>> {
        let out = self.scenario(preset).run(seed)?;
        let r = out.report;
        let mut p = PointResult::new("track")
            .param("user_density_per_mi2", r.user_density_per_mi2)
            .param("route_length_mi", r.route_length_mi)
            .param("travel_time_min", r.travel_time_min)
            .metric("gps_sent", r.gps_sent as f64)
            .metric("gps_captured", r.gps_captured as f64)
            .metric("followed", f64::from(u8::from(r.followed)))
            .metric("queries", out.trace.queries_issued as f64)
            .metric("crowd_size", out.crowd_size as f64);
        if r.avg_delay_s.is_finite() {
            p = p.metric("avg_delay_s", r.avg_delay_s);
        }
        Ok(vec![p])
    }

    pub(crate) fn checks(&self, preset: TrackPreset, points: &[AggregatePoint], trials: usize) -> Vec<Check> {
        let Some(p) = points.iter().find(|p| p.label == "track") else {
            return vec![Check::new("track-ran", false, "no tracking results")];
        };
        let (min_c, max_d, min_f) = self.bounds(preset);
        let captured = p.metrics.get("gps_captured");
        let delay = p.metrics.get("avg_delay_s");
        let mut checks = vec![
            Check::new(
                "captured-per-trial",
                captured.is_some_and(|s| s.min >= min_c),
                format!(
                    "min captured {:?} (need >= {min_c}), sent {:?}",
                    captured.map(|s| s.min),
                    p.metrics.get("gps_sent").map(|s| s.mean)
                ),
            ),
            Check::new(
                "mean-capture-delay",
                delay.is_some_and(|s| s.n == trials && s.mean <= max_d),
                format!("mean delay {:?} s over {:?} trials (need <= {max_d})", delay.map(|s| s.mean), delay.map(|s| s.n)),
            ),
        ];
        if let Some(f) = min_f {
            let followed = p.metrics.get("followed");
            checks.push(Check::new(
                "followed-to-destination",
                followed.is_some_and(|s| s.mean >= f),
                format!("followed in {:?} of trials (need >= {f})", followed.map(|s| s.mean)),
            ));
        }
        checks
    }
}
