use std::fs;
use std::path::Path;

use ghostmap::harness::{list_scenarios, run_scenario, summarize, ExperimentConfig, Scenario, OUT_DIR_ENV};

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn quick(name: &str, trials: usize) -> ExperimentConfig {
    ExperimentConfig::new(Scenario::from_name(name).unwrap(), 42, trials)
}

#[test]
fn every_scenario_round_trips_through_toml() {
    for (name, _) in list_scenarios() {
        let mut cfg = quick(name, 3);
        cfg.output_dir = Some("out/somewhere".into());
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{name}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, list_scenarios().len());
}

#[test]
fn unknown_scenario_and_bad_parameters_are_config_errors() {
    assert!(Scenario::from_name("no-such-thing").is_err());
    assert!(ExperimentConfig::from_toml("seed = 1\n[scenario]\nname = \"warp-drive\"\n").is_err());
    let err = ExperimentConfig::from_toml("trials = 0\n[scenario]\nname = \"persistent-jam\"\n").unwrap_err();
    assert!(err.to_string().contains("trials"), "{err}");
    let err = ExperimentConfig::from_toml("[scenario]\nname = \"small-groups\"\ngroup_sizes = [0]\n").unwrap_err();
    assert!(err.to_string().contains("small-groups"), "{err}");
    assert!(ExperimentConfig::from_toml("[scenario]\nname = \"persistent-jam\"\nwarp = 9\n").is_err());
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let cfg = quick("persistent-jam", 1);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(
        fa.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
        ["aggregate.csv", "aggregate.json", "manifest.json", "trial-0000.csv", "trial-0000.json"]
    );
    assert_eq!(fa, fb);

    let c = tempfile::tempdir().unwrap();
    run_scenario(&quick("downsample-converge", 3), c.path()).unwrap();
    let d = tempfile::tempdir().unwrap();
    run_scenario(&quick("downsample-converge", 3), d.path()).unwrap();
    assert_eq!(read_all(c.path()), read_all(d.path()));
}

#[test]
fn summarize_recomputes_what_run_reported() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_scenario(&quick("downsample-converge", 4), dir.path()).unwrap();
    let again = summarize(dir.path()).unwrap();
    assert_eq!(again, vec![summary]);
}

#[test]
fn mixed_results_are_grouped_by_scenario() {
    let root = tempfile::tempdir().unwrap();
    run_scenario(&quick("persistent-jam", 2), &root.path().join("jam")).unwrap();
    run_scenario(&quick("downsample-converge", 2), &root.path().join("ds/a")).unwrap();
    // A second batch of the same experiment with another seed merges in.
    let mut more = quick("downsample-converge", 3);
    more.seed = 7;
    run_scenario(&more, &root.path().join("ds/b")).unwrap();
    let s = summarize(root.path()).unwrap();
    let names: Vec<_> = s.iter().map(|x| (x.scenario.as_str(), x.trials)).collect();
    assert_eq!(names, [("downsample-converge", 5), ("persistent-jam", 2)]);
    assert!(s.iter().all(|x| x.points.iter().all(|p| p.metrics.values().all(|m| m.std.is_finite()))));
}

#[test]
fn summarize_rejects_empty_and_incomplete_directories() {
    let empty = tempfile::tempdir().unwrap();
    assert!(summarize(empty.path()).is_err());
    assert!(summarize(&empty.path().join("missing")).is_err());

    let dir = tempfile::tempdir().unwrap();
    run_scenario(&quick("persistent-jam", 2), dir.path()).unwrap();
    fs::remove_file(dir.path().join("trial-0001.json")).unwrap();
    let err = summarize(dir.path()).unwrap_err();
    assert!(err.to_string().contains("trial-0001.json"), "{err}");
}

#[test]
fn output_directory_precedence() {
    let mut cfg = quick("persistent-jam", 1);
    cfg.output_dir = Some("from-config".into());
    assert_eq!(cfg.resolve_output_dir(Some(Path::new("explicit"))), Path::new("explicit"));
    // Only this test touches the variable.
    std::env::set_var(OUT_DIR_ENV, "from-env");
    assert_eq!(cfg.resolve_output_dir(None), Path::new("from-env"));
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(cfg.resolve_output_dir(None), Path::new("from-config"));
    cfg.output_dir = None;
    assert_eq!(cfg.resolve_output_dir(None), Path::new("results/persistent-jam"));
}

#[test]
fn trial_seeds_are_independent_of_trial_count() {
    let a = quick("persistent-jam", 3);
    let b = quick("persistent-jam", 10);
    assert_eq!((0..3).map(|t| a.trial_seed(t)).collect::<Vec<_>>(), (0..3).map(|t| b.trial_seed(t)).collect::<Vec<_>>());
    assert_ne!(a.trial_seed(0), a.trial_seed(1));
}
