//! Server-side speed aggregation.
//!
//! The server does not average reported speeds. It takes a weighted average
//! that leans towards whichever group of cars is the majority:
//!
//! ```text
//! S = (S_major * max(N_s, N_f) + S_avg * min(N_s, N_f)) / (N_s + N_f)
//! ```
//!
//! where `S_avg` is the plain mean over all cars and `S_major` is the speed of
//! the larger group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedCohorts {
    pub n_slow: u32,
    pub s_slow: f64,
    pub n_fast: u32,
    pub s_fast: f64,
}

/// Which group supplies the majority speed when both groups are equal in size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    Slow,
    Fast,
}

impl SpeedCohorts {
    pub fn new(n_slow: u32, s_slow: f64, n_fast: u32, s_fast: f64) -> Self {
        Self { n_slow, s_slow, n_fast, s_fast }
    }

    pub fn total(&self) -> u32 {
        self.n_slow + self.n_fast
    }

    pub fn mean_speed(&self) -> f64 {
        let n = f64::from(self.total());
        (self.s_slow * f64::from(self.n_slow) + self.s_fast * f64::from(self.n_fast)) / n
    }
}

/// Majority-weighted aggregate speed in mph.
pub fn aggregate_speed(c: &SpeedCohorts, tie: TieBreak) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::EmptyCohorts);
    }
    let (ns, nf) = (f64::from(c.n_slow), f64::from(c.n_fast));
    let s_avg = c.mean_speed();
    let s_major = match c.n_slow.cmp(&c.n_fast) {
        std::cmp::Ordering::Greater => c.s_slow,
        std::cmp::Ordering::Less => c.s_fast,
        std::cmp::Ordering::Equal => match tie {
            TieBreak::Slow => c.s_slow,
            TieBreak::Fast => c.s_fast,
        },
    };
    Ok((s_major * ns.max(nf) + s_avg * ns.min(nf)) / (ns + nf))
}

/// How raw samples are split into a slow and a fast group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CohortSplit {
    /// Below the road's congestion threshold is slow.
    #[default]
    Threshold,
    /// Below the midpoint of the sample range is slow. Separates two scripted
    /// groups even when both drive below the threshold.
    RangeMidpoint,
}

pub fn partition_cohorts(samples: &[f64], split: CohortSplit, threshold: f64) -> Result<SpeedCohorts> {
    if samples.is_empty() {
        return Err(Error::EmptyCohorts);
    }
    let cut = match split {
        CohortSplit::Threshold => threshold,
        CohortSplit::RangeMidpoint => {
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                f64::NEG_INFINITY
            } else {
                (lo + hi) / 2.0
            }
        }
    };
    let (mut ns, mut ss, mut nf, mut sf) = (0u32, 0.0, 0u32, 0.0);
    for &s in samples {
        if s < cut {
            ns += 1;
            ss += s;
        } else {
            nf += 1;
            sf += s;
        }
    }
    let s_slow = if ns > 0 { ss / f64::from(ns) } else { f64::NAN };
    let s_fast = if nf > 0 { sf / f64::from(nf) } else { f64::NAN };
    // an empty group borrows the other group's speed so that s_slow <= s_fast holds
    let (s_slow, s_fast) = match (ns, nf) {
        (0, _) => (s_fast, s_fast),
        (_, 0) => (s_slow, s_slow),
        _ => (s_slow, s_fast),
    };
    Ok(SpeedCohorts { n_slow: ns, s_slow, n_fast: nf, s_fast })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agg(ns: u32, ss: f64, nf: u32, sf: f64) -> f64 {
        aggregate_speed(&SpeedCohorts::new(ns, ss, nf, sf), TieBreak::Slow).unwrap()
    }

    #[test]
    fn hand_evaluated_majority_slow() {
        // S_avg = (40 + 30) / 5 = 14; S = (10*4 + 14*1) / 5 = 10.8
        assert!((agg(4, 10.0, 1, 30.0) - 10.8).abs() < 1e-12);
    }

    #[test]
    fn single_cohort_collapses() {
        assert_eq!(agg(0, 99.0, 3, 30.0), 30.0);
        assert_eq!(agg(2, 17.0, 2, 17.0), 17.0);
    }

    #[test]
    fn tie_uses_the_slow_group_by_default() {
        // S_avg = 20, S_major = 10 -> (10 + 20) / 2
        assert!((agg(1, 10.0, 1, 30.0) - 15.0).abs() < 1e-12);
        let fast = aggregate_speed(&SpeedCohorts::new(1, 10.0, 1, 30.0), TieBreak::Fast).unwrap();
        assert!((fast - 25.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cohorts_rejected() {
        assert!(aggregate_speed(&SpeedCohorts::new(0, 1.0, 0, 2.0), TieBreak::Slow).is_err());
        assert!(partition_cohorts(&[], CohortSplit::Threshold, 40.0).is_err());
    }

    #[test]
    fn threshold_split() {
        let c = partition_cohorts(&[10.0, 10.0, 30.0], CohortSplit::Threshold, 40.0).unwrap();
        assert_eq!((c.n_slow, c.n_fast), (3, 0));
        assert!((c.s_slow - 50.0 / 3.0).abs() < 1e-12);
        let c = partition_cohorts(&[45.0, 60.0], CohortSplit::Threshold, 40.0).unwrap();
        assert_eq!((c.n_slow, c.n_fast, c.s_fast), (0, 2, 52.5));
        let c = partition_cohorts(&[25.0], CohortSplit::Threshold, 40.0).unwrap();
        assert_eq!((c.n_slow, c.s_slow, c.total()), (1, 25.0, 1));
    }

    #[test]
    fn midpoint_split_separates_scripted_groups() {
        let c = partition_cohorts(&[10.0, 10.0, 30.0], CohortSplit::RangeMidpoint, 40.0).unwrap();
        assert_eq!(c, SpeedCohorts::new(2, 10.0, 1, 30.0));
        let c = partition_cohorts(&[7.0, 7.0], CohortSplit::RangeMidpoint, 40.0).unwrap();
        assert_eq!(c.total(), 2);
        assert_eq!(c.mean_speed(), 7.0);
    }

    fn cohorts() -> impl Strategy<Value = SpeedCohorts> {
        (0u32..50, 0.0f64..80.0, 0u32..50, 0.0f64..80.0)
            .prop_filter("non-empty", |(a, _, b, _)| a + b > 0)
            .prop_map(|(ns, a, nf, b)| SpeedCohorts::new(ns, a.min(b), nf, a.max(b)))
    }

    proptest! {
        #[test]
        fn bounded_by_cohort_speeds(c in cohorts()) {
            let s = aggregate_speed(&c, TieBreak::Slow).unwrap();
            prop_assert!(s >= c.s_slow - 1e-9 && s <= c.s_fast + 1e-9);
        }

        #[test]
        fn scale_equivariant(c in cohorts(), k in 0.1f64..10.0) {
            let s = aggregate_speed(&c, TieBreak::Slow).unwrap();
            let scaled = SpeedCohorts::new(c.n_slow, c.s_slow * k, c.n_fast, c.s_fast * k);
            let sk = aggregate_speed(&scaled, TieBreak::Slow).unwrap();
            prop_assert!((sk - s * k).abs() <= 1e-9 * (1.0 + s * k));
        }

        #[test]
        fn closer_to_majority_than_the_mean(c in cohorts()) {
            prop_assume!(c.n_slow != c.n_fast);
            let major = if c.n_slow > c.n_fast { c.s_slow } else { c.s_fast };
            let s = aggregate_speed(&c, TieBreak::Slow).unwrap();
            prop_assert!((s - major).abs() <= (c.mean_speed() - major).abs() + 1e-9);
        }
    }

    #[test]
    fn nonincreasing_as_slow_share_grows() {
        for (ss, sf) in [(10.0, 30.0), (5.0, 15.0), (5.0, 10.0)] {
            let total = 12;
            let mut prev = f64::INFINITY;
            for ns in 0..=total {
                let s = agg(ns, ss, total - ns, sf);
                assert!(s <= prev + 1e-12, "({ss},{sf}) ns={ns}");
                prev = s;
            }
        }
    }
}
