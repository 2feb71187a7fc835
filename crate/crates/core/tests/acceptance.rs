//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs every experiment at the trial counts the criteria call for, so it
//! takes several minutes on one core. By default it only reports; set
//! `GHOSTMAP_ACCEPTANCE_STRICT=1` to exit non-zero when any criterion fails.

use std::time::{Duration, Instant};

use approx::abs_diff_eq;
use ghostmap::attacks::{attach_gateways, build_sybil_region, SybilPlan};
use ghostmap::geo::Point;
use ghostmap::harness::{
    run_in_memory, run_scenario, AggregationSweep, AucVsAttackEdges, CostCurve, DownsampleConverge, ExperimentConfig, FpFnSweep,
    PersistentJam, Scenario, ScenarioSummary, SeedsSweep, SmallGroups, TrackOverrides,
};
use ghostmap::proximity::{grow_honest_graph, seed_trusted, EncounterModel, NodeId, NodeKind, ProximityGraph, TrustedPlacement};
use ghostmap::query::AccountId;
use ghostmap::sybilrank::{auc, propagate_trust, rank_nodes, SybilRankParams};
use ghostmap::traffic::{TrafficEngine, TrafficParams};
use ghostmap::world::{
    AgentKind, AgentSpec, JunctionId, MotionScript, RoadClass, RoadNetwork, SegmentId, SegmentSpec, SpeedProfile, VehicleId, World,
    WorldParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
/// Trials for the graph experiments and the tracking runs.
const TRIALS: usize = 50;
/// Seeds for the downsampling statistics (criterion asks for at least 30).
const DOWNSAMPLE_SEEDS: usize = 30;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, passed: bool, detail: String) {
        println!("{} {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        self.lines.push((passed, id.to_string()));
    }
}

fn run(scenario: Scenario, trials: usize) -> (ScenarioSummary, Duration) {
    let start = Instant::now();
    let (_, summary) = run_in_memory(&ExperimentConfig::new(scenario, SEED, trials)).expect("experiment runs");
    (summary, start.elapsed())
}

fn check(summary: &ScenarioSummary, name: &str) -> (bool, String) {
    match summary.check(name) {
        Some(c) => (c.passed, c.detail.clone()),
        None => (false, format!("check {name} missing")),
    }
}

fn aggregation_oracle(r: &mut Report) {
    let (s, t) = run(Scenario::AggregationSweep(AggregationSweep::default()), 1);
    let (ok, detail) = check(&s, "aggregate-matches-closed-form");
    let monotone = ["highway", "local", "residential"].iter().all(|c| check(&s, &format!("{c}-nonincreasing-in-slow-share")).0);
    let fast = t < Duration::from_secs(1);
    r.record("1 aggregation-oracle", ok && fast, format!("{detail}; monotone per class {monotone}; runtime {t:.2?} (< 1 s)"));
}

/// Whether one vehicle at `mph` on a 2-mile segment of `class` raises a
/// hotspot through the full report → window → state-machine path.
fn single_vehicle_hotspot(class: RoadClass, mph: f64) -> bool {
    let net = RoadNetwork::from_parts(
        [(JunctionId(0), Point::new(0.0, 0.0)), (JunctionId(1), Point::new(2.0, 0.0))],
        [SegmentSpec { id: SegmentId(1), road_class: class, from: JunctionId(0), to: JunctionId(1), speed_limit: None, length: None }],
    )
    .unwrap();
    let route = net.route_through(&[JunctionId(0), JunctionId(1)]).unwrap();
    let mut world = World::new(net.clone(), WorldParams::default());
    world
        .add_agent(
            AgentSpec::new(VehicleId(1), AgentKind::Honest, AccountId(1), MotionScript::drive(route, SpeedProfile::constant(mph)))
                .first_report_at(5.0),
        )
        .unwrap();
    let mut engine = TrafficEngine::new(&net, TrafficParams::default());
    let mut seen = false;
    for _ in 0..60 {
        let reports = world.advance(1.0).unwrap();
        engine.ingest(&reports);
        engine.tick(&net, world.now()).unwrap();
        seen |= engine.state(SegmentId(1)).unwrap().hotspot;
    }
    seen
}

fn hotspot_thresholds(r: &mut Report) {
    let highway = single_vehicle_hotspot(RoadClass::Highway, 15.0);
    let local = single_vehicle_hotspot(RoadClass::Local, 15.0);
    let residential = single_vehicle_hotspot(RoadClass::Residential, 16.0);
    r.record(
        "2 hotspot-thresholds",
        highway && local && !residential,
        format!("15 mph on highway -> {highway}, 15 mph on local -> {local}, 16 mph on residential -> {residential}"),
    );
}

fn persistent_jam(r: &mut Report) {
    let (s, _) = run(Scenario::PersistentJam(PersistentJam::default()), 5);
    let (held, d1) = check(&s, "hotspot-held-for-whole-attack");
    let (cleared, d2) = check(&s, "clears-after-dismissal-delay");
    r.record("3 persistent-jam", held && cleared, format!("{d1}; {d2}"));
}

fn downsampling(r: &mut Report) {
    let (s, _) = run(Scenario::DownsampleConverge(DownsampleConverge::default()), DOWNSAMPLE_SEEDS);
    let (gof, d1) = check(&s, "binomial-fit-pass-rate");
    let (curve, d2) = check(&s, "unique-users-follow-closed-form");
    r.record("4 downsampling-statistics", gof && curve, format!("{d1}; {d2}"));
}

fn tracking(r: &mut Report) {
    for (id, scenario) in [
        ("5a tracking-highway", Scenario::TrackHighway(TrackOverrides::default())),
        ("5b tracking-city", Scenario::TrackCity(TrackOverrides::default())),
    ] {
        let (s, t) = run(scenario, TRIALS);
        let per_seed = t / TRIALS as u32;
        let mut ok = per_seed < Duration::from_secs(60);
        let mut detail = Vec::new();
        for c in &s.checks {
            ok &= c.passed;
            detail.push(c.detail.clone());
        }
        r.record(id, ok, format!("{} over {TRIALS} seeds; {per_seed:.2?} per seed (< 60 s)", detail.join("; ")));
    }
}

fn gateway_sweeps(r: &mut Report) {
    let (s, t) = run(Scenario::AucVsAttackEdges(AucVsAttackEdges::default()), TRIALS);
    let points = s.points.len().max(1) as u32;
    let per_point = t / points;
    let (a5, d5) = check(&s, "single-gateway-5000-auc");
    let (a50, d50) = check(&s, "single-gateway-50000-auc");
    r.record(
        "6 single-gateway-auc",
        a5 && a50,
        format!("5k edges: {d5}; 50k edges: {d50}; {per_point:.2?} per sweep point for {TRIALS} trials"),
    );

    let (low, d1) = check(&s, "500-gateways-50000-auc");
    let (mono, d2) = check(&s, "auc-decreases-with-gateways");
    let (rebound, d3) = check(&s, "all-gateway-curve-rebounds");
    r.record("7 multi-gateway-degradation", low && mono && rebound, format!("{d1}; {d2}; {d3}"));
}

fn fp_fn(r: &mut Report) {
    let (s, _) = run(Scenario::FpFnSweep(FpFnSweep::default()), TRIALS);
    let (ok, d) = check(&s, "ten-percent-cutoff-rates");
    r.record("8 fp-fn-at-10-percent", ok, d);
}

fn small_groups(r: &mut Report) {
    let (s, _) = run(Scenario::SmallGroups(SmallGroups::default()), TRIALS);
    let mut ok = true;
    let mut detail = Vec::new();
    for size in [20, 50, 100] {
        let (p, d) = check(&s, &format!("group-{size}-auc"));
        ok &= p;
        detail.push(format!("{size}: {d}"));
    }
    r.record("9 small-sybil-groups", ok, detail.join("; "));
}

fn seeds_sweep(r: &mut Report) {
    let (s, _) = run(Scenario::SeedsSweep(SeedsSweep::default()), TRIALS);
    let (ok, d) = check(&s, "auc-stable-across-seed-counts");
    let (_, note) = check(&s, "more-seeds-do-not-help");
    r.record("10 trusted-seed-sweep", ok, format!("{d}; {note}"));
}

/// Dense reference iteration for the small-graph oracle.
fn dense_trust(n: usize, edges: &[(usize, usize, u64)], seed: usize, mass: f64, iterations: usize) -> Vec<f64> {
    let mut w = vec![vec![0.0f64; n]; n];
    for &(u, v, x) in edges {
        w[u][v] += x as f64;
        w[v][u] += x as f64;
    }
    let deg: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let mut t = vec![0.0; n];
    t[seed] = mass;
    for _ in 0..iterations {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += t[i] * w[i][j] / deg[i];
            }
        }
        t = next;
    }
    t
}

fn property_suite(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();

    // Conservation and isolation on a full-size attacked graph.
    let mut g = grow_honest_graph(&EncounterModel::default(), &mut rng).unwrap();
    seed_trusted(&mut g, 10, TrustedPlacement::Random, &mut rng).unwrap();
    let plan = SybilPlan { gateway_count: 100, attack_edge_total: 20_000, ..Default::default() };
    let region = build_sybil_region(&plan, &mut rng).unwrap();
    attach_gateways(&mut g, &region, &plan, &mut rng).unwrap();
    let connected: Vec<_> = g.nodes().filter(|(id, _)| g.degree(*id) > 0).map(|(id, _)| id).collect();
    let tv = propagate_trust(&g, &SybilRankParams::default()).unwrap();
    let lost: f64 = g.nodes().filter(|(id, _)| g.degree(*id) == 0).map(|(id, _)| tv.trust[id.0 as usize]).sum();
    let honest = g.count_of(NodeKind::Honest) as f64;
    let conserved = ((tv.total() - honest) / honest).abs() <= 1e-9 && lost == 0.0;
    if !conserved {
        failures.push(format!("trust total {} vs {honest}", tv.total()));
    }
    let bad_edges = g
        .edges()
        .filter(|(u, v, _)| {
            let (a, b) = (g.node(*u).unwrap(), g.node(*v).unwrap());
            a.kind != b.kind && !(if a.kind == NodeKind::Sybil { a.gateway } else { b.gateway })
        })
        .count();
    if bad_edges > 0 {
        failures.push(format!("{bad_edges} non-gateway Sybil-honest edges"));
    }

    // Small-graph oracle and weight scaling on random graphs with n <= 8.
    let mut worst: f64 = 0.0;
    let mut scaling_ok = true;
    for case in 0..200 {
        let n = rng.random_range(2..=8usize);
        let mut edges: Vec<(usize, usize, u64)> = (0..n - 1).map(|i| (i, i + 1, rng.random_range(1..20))).collect();
        for _ in 0..rng.random_range(0..12) {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            if u != v {
                edges.push((u, v, rng.random_range(1..20)));
            }
        }
        let iterations = 1 + case % 10;
        let build = |k: u64| {
            let mut s = ProximityGraph::with_honest(n);
            for &(u, v, w) in &edges {
                s.add_weight(NodeId(u as u32), NodeId(v as u32), w * k).unwrap();
            }
            s.set_trusted(NodeId(0), true).unwrap();
            s
        };
        let params = SybilRankParams { iterations: Some(iterations), lazy: false };
        let small = build(1);
        let got = propagate_trust(&small, &params).unwrap();
        let want = dense_trust(n, &edges, 0, n as f64, iterations);
        for (a, b) in got.trust.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        let scaled = build(7);
        // Scaling every weight by 7 must scale every score by exactly 1/7,
        // which leaves the order unchanged up to float ties.
        let ra = rank_nodes(&small, &got).unwrap();
        let rb = rank_nodes(&scaled, &propagate_trust(&scaled, &params).unwrap()).unwrap();
        let score = |list: &ghostmap::sybilrank::RankedList, id: NodeId| list.entries.iter().find(|e| e.node == id).unwrap().score;
        for e in &ra.entries {
            let b = 7.0 * score(&rb, e.node);
            scaling_ok &= abs_diff_eq!(e.score, b, epsilon = 1e-12 * e.score.abs().max(1e-300));
        }
    }
    if worst > 1e-12 {
        failures.push(format!("matrix oracle gap {worst:e}"));
    }
    if !scaling_ok {
        failures.push("weight scaling changed the ranking".into());
    }

    // Zero attack edges separate perfectly.
    let model = EncounterModel { connectivity_target: 1.0, ..EncounterModel::new(1_000) };
    let mut h = grow_honest_graph(&model, &mut rng).unwrap();
    seed_trusted(&mut h, 10, TrustedPlacement::Random, &mut rng).unwrap();
    let plan = SybilPlan { sybil_count: 100, attack_edge_total: 0, ..Default::default() };
    let region = build_sybil_region(&plan, &mut rng).unwrap();
    attach_gateways(&mut h, &region, &plan, &mut rng).unwrap();
    let isolated_auc = auc(&rank_nodes(&h, &propagate_trust(&h, &SybilRankParams::default()).unwrap()).unwrap()).unwrap();
    if isolated_auc != 1.0 {
        failures.push(format!("AUC {isolated_auc} with no attack edges"));
    }

    // Byte-identical reruns of a harness experiment.
    let cfg = ExperimentConfig::new(Scenario::FpFnSweep(FpFnSweep::default()), SEED, 1);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_scenario(&cfg, d.path()).unwrap();
    }
    let files = |p: &std::path::Path| {
        let mut v: Vec<_> = std::fs::read_dir(p)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    if files(dirs[0].path()) != files(dirs[1].path()) {
        failures.push("reruns differ".into());
    }

    r.record(
        "11 property-suite",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "conservation 1e-9 over {} connected nodes, oracle max gap {worst:.1e} (<= 1e-12), scaling invariant, gateway isolation, AUC 1 without attack edges, byte-identical reruns",
                connected.len()
            )
        } else {
            failures.join("; ")
        },
    );
}

fn cost_curve(r: &mut Report) {
    let (s, _) = run(Scenario::CostCurve(CostCurve::default()), TRIALS);
    let (ok, d) = check(&s, "cost-grows-linearly");
    let crossed: Vec<String> = s
        .points
        .iter()
        .map(|p| format!("{} crossed in {:.0}% of trials", p.label, 100.0 * p.metrics.get("crossed").map_or(0.0, |m| m.mean)))
        .collect();
    r.record("12 cost-curve-shape", ok, format!("{d}; {}", crossed.join(", ")));
}

fn main() {
    // Ignore libtest-style arguments such as `--nocapture` or a filter.
    let mut report = Report { lines: Vec::new() };
    aggregation_oracle(&mut report);
    hotspot_thresholds(&mut report);
    persistent_jam(&mut report);
    downsampling(&mut report);
    tracking(&mut report);
    gateway_sweeps(&mut report);
    fp_fn(&mut report);
    small_groups(&mut report);
    seeds_sweep(&mut report);
    property_suite(&mut report);
    cost_curve(&mut report);

    let failed: Vec<&str> = report.lines.iter().filter(|(ok, _)| !ok).map(|(_, id)| id.as_str()).collect();
    println!("acceptance: {} of {} criteria passed; failed: {failed:?}", report.lines.len() - failed.len(), report.lines.len());
    if !failed.is_empty() && std::env::var_os("GHOSTMAP_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
