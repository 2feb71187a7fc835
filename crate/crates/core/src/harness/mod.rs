//! Experiment orchestration: named scenarios, seeded trials, result files
//! and summaries.

mod query;
mod results;
mod sybil;
mod traffic;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use query::{DownsampleConverge, TrackOverrides, TrackPreset};
pub use results::{aggregate_points, AggregatePoint, Check, PointResult, ScenarioSummary, Stat, TrialResult};
pub use sybil::{linear_fit, AucVsAttackEdges, CostCurve, FpFnSweep, HonestWorld, SeedsSweep, SmallGroups, SybilSetup};
pub use traffic::{AggregationSweep, JamOutcome, PersistentJam};

use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "GHOSTMAP_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Scenario {
    AggregationSweep(AggregationSweep),
    PersistentJam(PersistentJam),
    DownsampleConverge(DownsampleConverge),
    TrackCity(TrackOverrides),
    TrackHighway(TrackOverrides),
    AucVsAttackEdges(AucVsAttackEdges),
    SeedsSweep(SeedsSweep),
    FpFnSweep(FpFnSweep),
    CostCurve(CostCurve),
    SmallGroups(SmallGroups),
}

const CATALOGUE: &[(&str, &str)] = &[
    ("aggregation-sweep", "displayed speed vs slow:fast ratio for each road class"),
    ("persistent-jam", "three looping ghost riders hold a hotspot against two real drivers"),
    ("downsample-converge", "per-user appearance counts and distinct-user growth under the 20-user cap"),
    ("track-city", "follow one driver through a dense city crowd"),
    ("track-highway", "follow one driver along a sparse highway"),
    ("auc-vs-attack-edges", "SybilRank AUC against attack-edge budget for several gateway counts"),
    ("seeds-sweep", "SybilRank AUC against the number of trusted seeds"),
    ("fp-fn-sweep", "false positives and negatives at several ranking cutoffs"),
    ("cost-curve", "attack edges needed to push AUC below a target, by Sybil count"),
    ("small-groups", "SybilRank AUC for small Sybil groups behind one gateway"),
];

/// Scenario names with one-line descriptions.
pub fn list_scenarios() -> &'static [(&'static str, &'static str)] {
    CATALOGUE
}

impl Scenario {
    /// Default parameters for a named scenario.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "aggregation-sweep" => Scenario::AggregationSweep(Default::default()),
            "persistent-jam" => Scenario::PersistentJam(Default::default()),
            "downsample-converge" => Scenario::DownsampleConverge(Default::default()),
            "track-city" => Scenario::TrackCity(Default::default()),
            "track-highway" => Scenario::TrackHighway(Default::default()),
            "auc-vs-attack-edges" => Scenario::AucVsAttackEdges(Default::default()),
            "seeds-sweep" => Scenario::SeedsSweep(Default::default()),
            "fp-fn-sweep" => Scenario::FpFnSweep(Default::default()),
            "cost-curve" => Scenario::CostCurve(Default::default()),
            "small-groups" => Scenario::SmallGroups(Default::default()),
            other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::AggregationSweep(_) => "aggregation-sweep",
            Scenario::PersistentJam(_) => "persistent-jam",
            Scenario::DownsampleConverge(_) => "downsample-converge",
            Scenario::TrackCity(_) => "track-city",
            Scenario::TrackHighway(_) => "track-highway",
            Scenario::AucVsAttackEdges(_) => "auc-vs-attack-edges",
            Scenario::SeedsSweep(_) => "seeds-sweep",
            Scenario::FpFnSweep(_) => "fp-fn-sweep",
            Scenario::CostCurve(_) => "cost-curve",
            Scenario::SmallGroups(_) => "small-groups",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = match self {
            Scenario::AggregationSweep(s) => s.validate(),
            Scenario::PersistentJam(s) => s.validate(),
            Scenario::DownsampleConverge(s) => s.validate(),
            Scenario::TrackCity(s) => s.scenario(TrackPreset::City).config.validate(),
            Scenario::TrackHighway(s) => s.scenario(TrackPreset::Highway).config.validate(),
            Scenario::AucVsAttackEdges(s) => s.validate(),
            Scenario::SeedsSweep(s) => s.validate(),
            Scenario::FpFnSweep(s) => s.validate(),
            Scenario::CostCurve(s) => s.validate(),
            Scenario::SmallGroups(s) => s.validate(),
        };
        r.map_err(|e| Error::Config(format!("{}: {e}", self.name())))
    }

    pub fn run_trial(&self, seed: u64) -> Result<Vec<PointResult>> {
        match self {
            Scenario::AggregationSweep(s) => s.run_trial(),
            Scenario::PersistentJam(s) => s.run_trial(),
            Scenario::DownsampleConverge(s) => s.run_trial(seed),
            Scenario::TrackCity(s) => s.run_trial(TrackPreset::City, seed),
            Scenario::TrackHighway(s) => s.run_trial(TrackPreset::Highway, seed),
            Scenario::AucVsAttackEdges(s) => s.run_trial(seed),
            Scenario::SeedsSweep(s) => s.run_trial(seed),
            Scenario::FpFnSweep(s) => s.run_trial(seed),
            Scenario::CostCurve(s) => s.run_trial(seed),
            Scenario::SmallGroups(s) => s.run_trial(seed),
        }
    }

    /// Acceptance checks embedded in the scenario, evaluated on aggregates.
    pub fn checks(&self, points: &[AggregatePoint], trials: usize) -> Vec<Check> {
        match self {
            Scenario::AggregationSweep(s) => s.checks(points),
            Scenario::PersistentJam(s) => s.checks(points, trials),
            Scenario::DownsampleConverge(s) => s.checks(points),
            Scenario::TrackCity(s) => s.checks(TrackPreset::City, points, trials),
            Scenario::TrackHighway(s) => s.checks(TrackPreset::Highway, points, trials),
            Scenario::AucVsAttackEdges(s) => s.checks(points),
            Scenario::SeedsSweep(s) => s.checks(points),
            Scenario::FpFnSweep(s) => s.checks(points),
            Scenario::CostCurve(s) => s.checks(points),
            Scenario::SmallGroups(s) => s.checks(points),
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    50
}

/// One experiment: a scenario, a master seed and a trial count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub scenario: Scenario,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, seed: u64, trials: usize) -> Self {
        Self { seed, trials, output_dir: None, scenario }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.scenario.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.seed, trial as u64)
    }

    /// Output directory: explicit argument, then the environment override,
    /// then the config file, then `results/<scenario>`.
    pub fn resolve_output_dir(&self, explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir.clone().unwrap_or_else(|| Path::new("results").join(self.scenario.name()))
    }
}

/// Runs every trial (in parallel, results in trial order) without touching
/// the filesystem.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = config.trial_seed(trial);
            let points = config.scenario.run_trial(seed)?;
            Ok(TrialResult { scenario: config.scenario.name().to_string(), trial, seed, points })
        })
        .collect()
}

pub fn summarize_trials(config: &ExperimentConfig, trials: &[TrialResult]) -> ScenarioSummary {
    let points = aggregate_points(trials);
    let checks = config.scenario.checks(&points, trials.len());
    ScenarioSummary { scenario: config.scenario.name().to_string(), trials: trials.len(), points, checks }
}

/// In-memory run: trials plus their summary.
pub fn run_in_memory(config: &ExperimentConfig) -> Result<(Vec<TrialResult>, ScenarioSummary)> {
    let trials = run_trials(config)?;
    let summary = summarize_trials(config, &trials);
    Ok((trials, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub trial_files: Vec<String>,
    pub config: ExperimentConfig,
}

fn trial_stem(trial: usize) -> String {
    format!("trial-{trial:04}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_points_csv(path: &Path, trials: &[TrialResult]) -> Result<()> {
    let mut param_keys = std::collections::BTreeSet::new();
    let mut metric_keys = std::collections::BTreeSet::new();
    for t in trials {
        for p in &t.points {
            param_keys.extend(p.params.keys().cloned());
            metric_keys.extend(p.metrics.keys().cloned());
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["trial".to_string(), "seed".to_string(), "label".to_string()];
    header.extend(param_keys.iter().cloned());
    header.extend(metric_keys.iter().cloned());
    w.write_record(&header)?;
    for t in trials {
        for p in &t.points {
            let mut row = vec![t.trial.to_string(), t.seed.to_string(), p.label.clone()];
            row.extend(param_keys.iter().map(|k| p.params.get(k).map(|v| v.to_string()).unwrap_or_default()));
            row.extend(metric_keys.iter().map(|k| p.metrics.get(k).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_summary_csv(path: &Path, summary: &ScenarioSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "label", "metric", "mean", "std", "min", "max", "n"])?;
    for p in &summary.points {
        for (m, s) in &p.metrics {
            w.write_record([
                summary.scenario.clone(),
                p.label.clone(),
                m.clone(),
                s.mean.to_string(),
                s.std.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                s.n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the experiment and writes `manifest.json`, one JSON and one CSV per
/// trial, and `aggregate.json` / `aggregate.csv` into `out_dir`.
pub fn run_scenario(config: &ExperimentConfig, out_dir: &Path) -> Result<ScenarioSummary> {
    let (trials, summary) = run_in_memory(config)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for t in &trials {
        let stem = trial_stem(t.trial);
        write_json(&out_dir.join(format!("{stem}.json")), t)?;
        write_points_csv(&out_dir.join(format!("{stem}.csv")), std::slice::from_ref(t))?;
        files.push(format!("{stem}.json"));
    }
    let manifest = Manifest {
        scenario: config.scenario.name().to_string(),
        seed: config.seed,
        trials: config.trials,
        trial_files: files,
        config: ExperimentConfig { output_dir: None, ..config.clone() },
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_json(&out_dir.join("aggregate.json"), &summary)?;
    write_summary_csv(&out_dir.join("aggregate.csv"), &summary)?;
    Ok(summary)
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_manifests(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "manifest.json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Re-reads every run under `dir` (the directory itself or any
/// subdirectory), regroups trials by scenario and recomputes the summaries.
///
/// Runs of the same scenario are merged only when their configs agree.
pub fn summarize(dir: &Path) -> Result<Vec<ScenarioSummary>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let mut manifests = Vec::new();
    find_manifests(dir, &mut manifests)?;
    if manifests.is_empty() {
        return Err(Error::Config(format!("no results (manifest.json) under {}", dir.display())));
    }
    let mut groups: Vec<(ExperimentConfig, Vec<TrialResult>)> = Vec::new();
    for path in manifests {
        let run_dir = path.parent().unwrap_or(Path::new("."));
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
        if manifest.trial_files.len() != manifest.trials {
            return Err(Error::Config(format!(
                "{}: manifest lists {} of {} trials",
                path.display(),
                manifest.trial_files.len(),
                manifest.trials
            )));
        }
        let mut trials = Vec::with_capacity(manifest.trials);
        for f in &manifest.trial_files {
            let p = run_dir.join(f);
            let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("missing trial file {}: {e}", p.display())))?;
            trials.push(serde_json::from_str::<TrialResult>(&text)?);
        }
        let cfg = ExperimentConfig { trials: 0, seed: 0, ..manifest.config };
        match groups.iter_mut().find(|(c, _)| *c == cfg) {
            Some((_, existing)) => existing.extend(trials),
            None => groups.push((cfg, trials)),
        }
    }
    groups.sort_by(|a, b| a.0.scenario.name().cmp(b.0.scenario.name()));
    Ok(groups.iter().map(|(cfg, trials)| summarize_trials(cfg, trials)).collect())
}

/// Fixed-width text table of a summary.
pub fn render_summary(summary: &ScenarioSummary) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "== {} ({} trials)", summary.scenario, summary.trials);
    let _ = writeln!(s, "{:<24} {:<20} {:>14} {:>12} {:>6}", "label", "metric", "mean", "sigma", "n");
    for p in &summary.points {
        for (m, st) in &p.metrics {
            let _ = writeln!(s, "{:<24} {:<20} {:>14.6} {:>12.6} {:>6}", p.label, m, st.mean, st.std, st.n);
        }
    }
    for c in &summary.checks {
        let _ = writeln!(s, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}
