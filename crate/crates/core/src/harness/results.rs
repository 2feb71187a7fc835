use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One sweep point of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
}

impl PointResult {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), params: BTreeMap::new(), metrics: BTreeMap::new() }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: String,
    pub trial: usize,
    pub seed: u64,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single observation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, std: var.sqrt(), min, max, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub trials: usize,
    pub points: Vec<AggregatePoint>,
    pub checks: Vec<Check>,
}

impl ScenarioSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn point(&self, label: &str) -> Option<&AggregatePoint> {
        self.points.iter().find(|p| p.label == label)
    }

    /// Mean of `metric` at `label`.
    pub fn mean(&self, label: &str, metric: &str) -> Option<f64> {
        self.point(label)?.metrics.get(metric).map(|s| s.mean)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Groups points by label across trials, keeping first-seen label order.
pub fn aggregate_points(trials: &[TrialResult]) -> Vec<AggregatePoint> {
    let mut order: Vec<String> = Vec::new();
    let mut params: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut values: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for t in trials {
        for p in &t.points {
            if !params.contains_key(&p.label) {
                order.push(p.label.clone());
                params.insert(p.label.clone(), p.params.clone());
            }
            let slot = values.entry(p.label.clone()).or_default();
            for (k, v) in &p.metrics {
                slot.entry(k.clone()).or_default().push(*v);
            }
        }
    }
    order
        .into_iter()
        .map(|label| {
            let metrics = values.remove(&label).unwrap_or_default().into_iter().filter_map(|(k, v)| Stat::of(&v).map(|s| (k, s))).collect();
            AggregatePoint { params: params.remove(&label).unwrap_or_default(), label, metrics }
        })
        .collect()
}
