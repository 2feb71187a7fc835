//! Closed-form coverage of repeated downsampled queries, and a goodness-of-fit
//! check of per-user appearance counts against the Binomial model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use super::{AccountId, UserRecord, QUERY_CAP};
use crate::error::{invalid, Result};

/// Expected number of distinct users seen after `n` queries over `m` users,
/// each query returning a uniform `min(20, m)`-subset.
pub fn expected_unique_users(m: u64, n: u64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let m_f = m as f64;
    let p = (QUERY_CAP as u64).min(m) as f64 / m_f;
    Ok(m_f * (1.0 - (1.0 - p).powf(n as f64)))
}

/// Appearance count per account across a batch of query responses.
pub fn appearance_counts<'a>(responses: impl IntoIterator<Item = &'a [UserRecord]>) -> BTreeMap<AccountId, u64> {
    let mut counts = BTreeMap::new();
    for resp in responses {
        for r in resp {
            *counts.entry(r.account_created).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub passed: bool,
    /// True when there was nothing to test (every user returned by every
    /// query).
    pub vacuous: bool,
}

const ALPHA: f64 = 0.01;
const MIN_EXPECTED: f64 = 5.0;

/// Pearson chi-square test of `observed` (one count per user, including
/// users that never appeared) against Binomial(n, 20/m).
///
/// Adjacent count bins are merged until each expects at least five users.
pub fn appearance_distribution_check(observed: &[u64], m: usize, n: u64) -> Result<GofReport> {
    if observed.len() != m || m == 0 {
        return Err(invalid(format!("expected {m} per-user counts, got {}", observed.len())));
    }
    if observed.iter().any(|&c| c > n) {
        return Err(invalid("a user appeared more often than there were queries"));
    }
    if m <= QUERY_CAP || n == 0 {
        let passed = observed.iter().all(|&c| c == n);
        return Ok(GofReport { statistic: 0.0, dof: 0, p_value: if passed { 1.0 } else { 0.0 }, passed, vacuous: true });
    }

    let dist = Binomial::new(QUERY_CAP as f64 / m as f64, n).map_err(|e| invalid(e.to_string()))?;
    let mut hist = vec![0u64; n as usize + 1];
    for &c in observed {
        hist[c as usize] += 1;
    }
    let expected: Vec<f64> = (0..=n).map(|k| dist.pmf(k) * m as f64).collect();

    // Greedy left-to-right merge, then fold an undersized tail into the last bin.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (e, o) in expected.iter().zip(&hist) {
        e_acc += e;
        o_acc += *o as f64;
        if e_acc >= MIN_EXPECTED {
            bins.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += e_acc;
            last.1 += o_acc;
        }
        None => bins.push((e_acc, o_acc)),
    }
    if bins.len() < 2 {
        return Err(invalid("too few users for a chi-square test after bin merging"));
    }

    let statistic: f64 = bins.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    let p_value = chi.sf(statistic);
    Ok(GofReport { statistic, dof, p_value, passed: p_value >= ALPHA, vacuous: false })
}
