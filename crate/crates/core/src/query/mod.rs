//! The query surface a tracking attacker reads: replicated server views with
//! synchronisation lag, and rectangular area queries capped at 20 users.

mod stats;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use stats::{appearance_counts, appearance_distribution_check, expected_unique_users, GofReport};

use crate::error::{invalid, Error, Result};
use crate::geo::{GeoPoint, MILES_PER_DEGREE_LAT};
use crate::seeds::splitmix64;

/// Maximum number of users returned by one area query.
pub const QUERY_CAP: usize = 20;

/// Account creation time in whole seconds. Stable across logins, which makes
/// it usable as a persistent identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u64);

/// Per-login user id, released when the app is killed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub session_user_id: SessionId,
    pub nickname: String,
    pub account_created: AccountId,
    pub gps: GeoPoint,
    pub gps_timestamp: f64,
    pub visible: bool,
}

/// Closed latitude/longitude rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchArea {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl SearchArea {
    pub fn new(lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64) -> Result<Self> {
        if !(lat_max > lat_min) || !(lon_max > lon_min) {
            return Err(Error::InvalidArea(format!("degenerate rectangle [{lat_min}, {lat_max}] x [{lon_min}, {lon_max}]")));
        }
        Ok(Self { lat_min, lon_min, lat_max, lon_max })
    }

    /// `width_mi` east-west by `height_mi` north-south around `center`.
    pub fn centered(center: GeoPoint, width_mi: f64, height_mi: f64) -> Result<Self> {
        let dlat = height_mi / 2.0 / MILES_PER_DEGREE_LAT;
        let dlon = width_mi / 2.0 / (MILES_PER_DEGREE_LAT * center.lat.to_radians().cos());
        Self::new(center.lat - dlat, center.lon - dlon, center.lat + dlat, center.lon + dlon)
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.lat_min && p.lat <= self.lat_max && p.lon >= self.lon_min && p.lon <= self.lon_max
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint::new((self.lat_min + self.lat_max) / 2.0, (self.lon_min + self.lon_max) / 2.0)
    }
}

impl fmt::Display for SearchArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}:{:.6}:{:.6}:{:.6}", self.lat_min, self.lon_min, self.lat_max, self.lon_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub server_count: usize,
    pub sync_delay_min_s: f64,
    pub sync_delay_max_s: f64,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { server_count: 4, sync_delay_min_s: 120.0, sync_delay_max_s: 300.0, seed: 0 }
    }
}

#[derive(Debug, Clone)]
struct Delivery {
    at: f64,
    seq: u64,
    server: usize,
    record: UserRecord,
}

impl PartialEq for Delivery {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Delivery {}

impl Ord for Delivery {
    fn cmp(&self, other: &Self) -> Ordering {
        self.at.total_cmp(&other.at).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Delivery {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A set of servers, each holding the latest record per account. Every
/// upload lands on the account's home server immediately and on each other
/// server after an independent uniform delay.
#[derive(Debug, Clone)]
pub struct ServerCluster {
    params: ClusterParams,
    views: Vec<BTreeMap<AccountId, UserRecord>>,
    pending: BinaryHeap<Reverse<Delivery>>,
    seq: u64,
    clock: f64,
    rng: ChaCha8Rng,
}

impl ServerCluster {
    pub fn new(params: ClusterParams) -> Result<Self> {
        if params.server_count == 0 {
            return Err(invalid("cluster needs at least one server"));
        }
        if !(params.sync_delay_min_s >= 0.0) || params.sync_delay_max_s < params.sync_delay_min_s {
            return Err(invalid("sync delay range must be non-negative and ordered"));
        }
        Ok(Self {
            views: vec![BTreeMap::new(); params.server_count],
            pending: BinaryHeap::new(),
            seq: 0,
            clock: f64::NEG_INFINITY,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
        })
    }

    pub fn server_count(&self) -> usize {
        self.views.len()
    }

    pub fn params(&self) -> &ClusterParams {
        &self.params
    }

    pub fn home_server(&self, account: AccountId) -> usize {
        (splitmix64(account.0) % self.views.len() as u64) as usize
    }

    fn apply(view: &mut BTreeMap<AccountId, UserRecord>, record: UserRecord) {
        match view.get(&record.account_created) {
            Some(old) if old.gps_timestamp >= record.gps_timestamp => {}
            _ => {
                view.insert(record.account_created, record);
            }
        }
    }

    /// Applies every replication delivery due at or before `now`.
    pub fn sync(&mut self, now: f64) {
        while self.pending.peek().is_some_and(|Reverse(d)| d.at <= now) {
            let Reverse(d) = self.pending.pop().expect("peeked");
            Self::apply(&mut self.views[d.server], d.record);
        }
        self.clock = self.clock.max(now);
    }

    /// Accepts an upload at `now`.
    pub fn ingest(&mut self, record: UserRecord, now: f64) {
        self.sync(now);
        let home = self.home_server(record.account_created);
        for server in 0..self.views.len() {
            if server == home {
                continue;
            }
            let delay = if self.params.sync_delay_max_s > self.params.sync_delay_min_s {
                self.rng.random_range(self.params.sync_delay_min_s..=self.params.sync_delay_max_s)
            } else {
                self.params.sync_delay_min_s
            };
            self.seq += 1;
            self.pending.push(Reverse(Delivery { at: now + delay, seq: self.seq, server, record: record.clone() }));
        }
        Self::apply(&mut self.views[home], record);
    }

    /// Places a record on every server at once, as if it had been uploaded
    /// long ago.
    pub fn ingest_replicated(&mut self, record: UserRecord) {
        for view in &mut self.views {
            Self::apply(view, record.clone());
        }
    }

    pub fn view(&self, server: usize) -> Option<&BTreeMap<AccountId, UserRecord>> {
        self.views.get(server)
    }

    pub fn record(&self, server: usize, account: AccountId) -> Option<&UserRecord> {
        self.views.get(server).and_then(|v| v.get(&account))
    }

    /// Every visible user inside `area` on one server, before downsampling.
    pub fn visible_in(&self, server: usize, area: &SearchArea) -> Result<Vec<&UserRecord>> {
        let view = self.views.get(server).ok_or_else(|| invalid(format!("no server {server}")))?;
        Ok(view.values().filter(|r| r.visible && area.contains(&r.gps)).collect())
    }

    /// One area query against one server: all visible users in the area if
    /// there are at most 20, else a uniform random 20-subset.
    pub fn query<R: Rng + ?Sized>(&self, server: usize, area: &SearchArea, rng: &mut R) -> Result<Vec<UserRecord>> {
        let candidates = self.visible_in(server, area)?;
        Ok(downsample(&candidates, rng))
    }
}

/// Uniform 20-subset of `candidates` (all of them when there are fewer).
pub fn downsample<R: Rng + ?Sized>(candidates: &[&UserRecord], rng: &mut R) -> Vec<UserRecord> {
    if candidates.len() <= QUERY_CAP {
        return candidates.iter().map(|r| (*r).clone()).collect();
    }
    index::sample(rng, candidates.len(), QUERY_CAP).into_iter().map(|i| candidates[i].clone()).collect()
}

/// Union of `queries_per_server` queries on every server, keyed by account
/// creation time. The freshest record per account wins.
pub fn merge_server_views<R: Rng + ?Sized>(
    cluster: &ServerCluster,
    area: &SearchArea,
    queries_per_server: usize,
    rng: &mut R,
) -> Result<BTreeMap<AccountId, UserRecord>> {
    if queries_per_server == 0 {
        return Err(invalid("queries_per_server must be at least 1"));
    }
    let mut out: BTreeMap<AccountId, UserRecord> = BTreeMap::new();
    for server in 0..cluster.server_count() {
        let candidates = cluster.visible_in(server, area)?;
        for _ in 0..queries_per_server {
            for r in downsample(&candidates, rng) {
                ServerCluster::apply(&mut out, r);
            }
        }
    }
    Ok(out)
}

/// Writes `time_s,server,area,returned_count,account_ids` rows.
pub struct QueryLog<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> QueryLog<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["time_s", "server", "area", "returned_count", "account_ids"])?;
        Ok(Self { inner })
    }

    pub fn record(&mut self, now: f64, server: usize, area: &SearchArea, returned: &[UserRecord]) -> Result<()> {
        let ids: Vec<String> = returned.iter().map(|r| r.account_created.to_string()).collect();
        self.inner.write_record([format!("{now}"), server.to_string(), area.to_string(), returned.len().to_string(), ids.join(";")])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn record(account: u64, lat: f64, lon: f64, t: f64) -> UserRecord {
        UserRecord {
            session_user_id: SessionId(account * 7),
            nickname: format!("u{account}"),
            account_created: AccountId(account),
            gps: GeoPoint::new(lat, lon),
            gps_timestamp: t,
            visible: true,
        }
    }

    fn area() -> SearchArea {
        SearchArea::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn populated(n: u64) -> ServerCluster {
        let mut c = ServerCluster::new(ClusterParams { server_count: 1, ..Default::default() }).unwrap();
        for i in 0..n {
            c.ingest(record(i, 0.5, (i as f64 + 0.5) / n as f64, 0.0), 0.0);
        }
        c
    }

    #[test]
    fn below_cap_returns_everyone() {
        let c = populated(15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(c.query(0, &area(), &mut rng).unwrap().len(), 15);
    }

    #[test]
    fn above_cap_returns_twenty_distinct() {
        let c = populated(100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = c.query(0, &area(), &mut rng).unwrap();
        let ids: BTreeSet<_> = got.iter().map(|r| r.account_created).collect();
        assert_eq!(got.len(), 20);
        assert_eq!(ids.len(), 20);
    }

    #[test]
    fn repeated_queries_cover_everyone() {
        let c = populated(100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = BTreeSet::new();
        for _ in 0..400 {
            for r in c.query(0, &area(), &mut rng).unwrap() {
                seen.insert(r.account_created);
            }
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn invisible_and_outside_users_are_never_returned() {
        let mut c = ServerCluster::new(ClusterParams { server_count: 1, ..Default::default() }).unwrap();
        let mut hidden = record(1, 0.5, 0.5, 0.0);
        hidden.visible = false;
        c.ingest(hidden, 0.0);
        c.ingest(record(2, 1.5, 0.5, 0.0), 0.0);
        c.ingest(record(3, 1.0, 1.0, 0.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = c.query(0, &area(), &mut rng).unwrap();
        assert_eq!(got.iter().map(|r| r.account_created.0).collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn degenerate_areas_rejected() {
        assert!(SearchArea::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(SearchArea::centered(GeoPoint::new(34.0, -118.0), 0.0, 8.0).is_err());
        let a = SearchArea::centered(GeoPoint::new(34.0, -118.0), 6.0, 8.0).unwrap();
        assert!(((a.lat_max - a.lat_min) * MILES_PER_DEGREE_LAT - 8.0).abs() < 1e-9);
    }

    #[test]
    fn replication_lag() {
        let mut c = ServerCluster::new(ClusterParams { server_count: 2, seed: 5, ..Default::default() }).unwrap();
        let r = record(42, 0.5, 0.5, 0.0);
        let home = c.home_server(r.account_created);
        let other = 1 - home;
        c.ingest(r, 0.0);
        c.sync(119.0);
        assert!(c.record(home, AccountId(42)).is_some());
        assert!(c.record(other, AccountId(42)).is_none());
        c.sync(300.0);
        assert!(c.record(other, AccountId(42)).is_some());
    }

    #[test]
    fn merged_views_respect_lag() {
        let mut c = ServerCluster::new(ClusterParams { server_count: 2, seed: 5, ..Default::default() }).unwrap();
        c.ingest(record(42, 0.5, 0.5, 0.0), 0.0);
        c.sync(60.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let merged = merge_server_views(&c, &area(), 1, &mut rng).unwrap();
        assert_eq!(merged.len(), 1);
        let home = c.home_server(AccountId(42));
        let fresh_only_home = (0..2).filter(|s| c.record(*s, AccountId(42)).is_some()).collect::<Vec<_>>();
        assert_eq!(fresh_only_home, vec![home]);
    }

    #[test]
    fn newer_records_win() {
        let mut c = ServerCluster::new(ClusterParams { server_count: 1, ..Default::default() }).unwrap();
        c.ingest(record(1, 0.5, 0.5, 10.0), 10.0);
        c.ingest(record(1, 0.6, 0.5, 5.0), 11.0);
        assert_eq!(c.record(0, AccountId(1)).unwrap().gps_timestamp, 10.0);
    }

    #[test]
    fn query_log_rows() {
        let c = populated(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = c.query(0, &area(), &mut rng).unwrap();
        let mut log = QueryLog::new(Vec::new()).unwrap();
        log.record(3.0, 0, &area(), &got).unwrap();
        let text = String::from_utf8(log.finish().unwrap()).unwrap();
        assert_eq!(text, "time_s,server,area,returned_count,account_ids\n3,0,0.000000:0.000000:1.000000:1.000000,2,0;1\n");
    }
}
