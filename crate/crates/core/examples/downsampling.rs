//! Repeated queries on one area see every user despite the 20-user cap.
//!
//! 100 users sit in an area; 100 queries each return a uniform sample of 20.
//! Prints the growth of distinct users seen against the closed form and the
//! binomial goodness-of-fit of the per-user appearance counts.
//!
//!     cargo run --example downsampling -- [seed]

use ghostmap::geo::GeoPoint;
use ghostmap::query::{
    appearance_counts, appearance_distribution_check, expected_unique_users, AccountId, ClusterParams, SearchArea, ServerCluster,
    SessionId, UserRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ghostmap::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = GeoPoint { lat: 34.4140, lon: -119.8489 };
    let area = SearchArea::centered(center, 2.0, 2.0)?;
    let mut cluster = ServerCluster::new(ClusterParams { seed, ..Default::default() })?;
    let m = 100u64;
    for i in 0..m {
        let gps = GeoPoint {
            lat: center.lat + (i as f64 / m as f64 - 0.5) * 0.02,
            lon: center.lon + ((i * 37 % m) as f64 / m as f64 - 0.5) * 0.02,
        };
        cluster.ingest_replicated(UserRecord {
            session_user_id: SessionId(i),
            nickname: format!("user{i}"),
            account_created: AccountId(1_300_000_000 + i),
            gps,
            gps_timestamp: 0.0,
            visible: true,
        });
    }

    let mut responses = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    println!("{:>8} {:>8} {:>10}", "queries", "unique", "expected");
    for q in 1..=100u64 {
        let r = cluster.query(0, &area, &mut rng)?;
        seen.extend(r.iter().map(|u| u.account_created));
        responses.push(r);
        if q % 10 == 0 || q <= 5 {
            println!("{q:>8} {:>8} {:>10.2}", seen.len(), expected_unique_users(m, q)?);
        }
    }
    let counts = appearance_counts(responses.iter().map(|r| r.as_slice()));
    let observed: Vec<u64> = (0..m).map(|i| counts.get(&AccountId(1_300_000_000 + i)).copied().unwrap_or(0)).collect();
    let gof = appearance_distribution_check(&observed, m as usize, 100)?;
    println!(
        "appearances vs Binomial(100, 0.2): chi2 {:.2} on {} dof, p = {:.3}, pass = {}",
        gof.statistic, gof.dof, gof.p_value, gof.passed
    );
    Ok(())
}
