//! Weighted SybilRank: early-terminated power iteration from trusted seeds,
//! degree-normalised ranking, and detection metrics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::proximity::{NodeId, NodeKind, ProximityGraph};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SybilRankParams {
    /// Power-iteration rounds; `None` means `ceil(log2 n)`.
    pub iterations: Option<usize>,
    /// Keep half of each node's trust at home every round.
    pub lazy: bool,
}

impl SybilRankParams {
    pub fn iterations_for(&self, n: usize) -> usize {
        self.iterations.unwrap_or_else(|| default_iterations(n))
    }
}

pub fn default_iterations(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustVector {
    pub trust: Vec<f64>,
    pub iterations: usize,
    /// Trusted nodes with no edges; their seed trust could not move.
    pub isolated_seeds: Vec<NodeId>,
}

impl TrustVector {
    pub fn total(&self) -> f64 {
        self.trust.iter().sum()
    }
}

/// Compressed adjacency for the hot loop.
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    degree: Vec<f64>,
}

impl Csr {
    fn new(graph: &ProximityGraph) -> Self {
        let n = graph.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut degree = Vec::with_capacity(n);
        offsets.push(0);
        for u in 0..n as u32 {
            let mut d = 0.0;
            for (v, w) in graph.neighbors(NodeId(u)) {
                targets.push(v.0);
                weights.push(w as f64);
                d += w as f64;
            }
            degree.push(d);
            offsets.push(targets.len());
        }
        Self { offsets, targets, weights, degree }
    }
}

/// Seeds `|honest|` units of trust equally over the trusted nodes and runs
/// the configured number of rounds. Each round a node hands its trust to its
/// neighbours in proportion to edge weight.
///
/// The graph is undirected, so each node can pull its new value from its own
/// neighbour list; rounds are therefore computed in parallel without
/// changing the result.
pub fn propagate_trust(graph: &ProximityGraph, params: &SybilRankParams) -> Result<TrustVector> {
    let trusted = graph.trusted();
    if trusted.is_empty() {
        return Err(invalid("at least one trusted node is required"));
    }
    let n = graph.len();
    let iterations = params.iterations_for(n);
    let csr = Csr::new(graph);
    let mass = graph.count_of(NodeKind::Honest) as f64;
    let mut trust = vec![0.0; n];
    for &t in &trusted {
        trust[t.0 as usize] = mass / trusted.len() as f64;
    }
    let isolated_seeds: Vec<NodeId> = trusted.iter().copied().filter(|t| csr.degree[t.0 as usize] == 0.0).collect();

    let keep = if params.lazy { 0.5 } else { 0.0 };
    for _ in 0..iterations {
        let share: Vec<f64> = trust.iter().zip(&csr.degree).map(|(t, d)| if *d > 0.0 { (1.0 - keep) * t / d } else { 0.0 }).collect();
        trust = (0..n)
            .into_par_iter()
            .map(|v| {
                let (lo, hi) = (csr.offsets[v], csr.offsets[v + 1]);
                let inflow: f64 = (lo..hi).map(|e| share[csr.targets[e] as usize] * csr.weights[e]).sum();
                inflow + keep * trust[v]
            })
            .collect();
    }
    Ok(TrustVector { trust, iterations, isolated_seeds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub node: NodeId,
    pub kind: NodeKind,
    pub trusted: bool,
    pub trust: f64,
    pub weighted_degree: u64,
    pub score: f64,
    /// 0-based position, lowest score first.
    pub rank: usize,
}

/// Nodes in ascending score order; ties broken by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

pub fn rank_nodes(graph: &ProximityGraph, trust: &TrustVector) -> Result<RankedList> {
    if trust.trust.len() != graph.len() {
        return Err(invalid("trust vector does not match the graph"));
    }
    let mut entries: Vec<RankedEntry> = graph
        .nodes()
        .map(|(id, info)| {
            let deg = graph.weighted_degree(id);
            let t = trust.trust[id.0 as usize];
            RankedEntry {
                node: id,
                kind: info.kind,
                trusted: info.trusted,
                trust: t,
                weighted_degree: deg,
                score: if deg == 0 { 0.0 } else { t / deg as f64 },
                rank: 0,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.node.cmp(&b.node)));
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i;
    }
    Ok(RankedList { entries })
}

/// Probability that a random Sybil scores below a random honest node, ties
/// counting one half (Mann–Whitney U with midranks).
pub fn auc(ranked: &RankedList) -> Result<f64> {
    let e = &ranked.entries;
    let n_sybil = e.iter().filter(|x| x.kind == NodeKind::Sybil).count();
    let n_honest = e.len() - n_sybil;
    if n_sybil == 0 || n_honest == 0 {
        return Err(Error::MetricUndefined("AUC needs both honest and Sybil nodes".into()));
    }
    // Entries are sorted by score; walk tie groups and give each its midrank.
    let mut honest_rank_sum = 0.0;
    let mut i = 0;
    while i < e.len() {
        let mut j = i;
        while j < e.len() && e[j].score == e[i].score {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let honest_here = e[i..j].iter().filter(|x| x.kind == NodeKind::Honest).count();
        honest_rank_sum += midrank * honest_here as f64;
        i = j;
    }
    let h = n_honest as f64;
    let u = honest_rank_sum - h * (h + 1.0) / 2.0;
    Ok(u / (h * n_sybil as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    pub false_positive: f64,
    pub false_negative: f64,
}

/// Labels the lowest-scoring `round(cutoff * N)` nodes as Sybil.
pub fn fp_fn_at_cutoff(ranked: &RankedList, cutoff: f64) -> Result<DetectionRates> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(invalid(format!("cutoff must lie in (0, 1), got {cutoff}")));
    }
    let e = &ranked.entries;
    let n_sybil = e.iter().filter(|x| x.kind == NodeKind::Sybil).count();
    let n_honest = e.len() - n_sybil;
    if n_sybil == 0 || n_honest == 0 {
        return Err(Error::MetricUndefined("FP/FN need both honest and Sybil nodes".into()));
    }
    let flagged = (cutoff * e.len() as f64).round() as usize;
    let honest_flagged = e[..flagged].iter().filter(|x| x.kind == NodeKind::Honest).count();
    let sybil_flagged = flagged - honest_flagged;
    Ok(DetectionRates {
        false_positive: honest_flagged as f64 / n_honest as f64,
        false_negative: (n_sybil - sybil_flagged) as f64 / n_sybil as f64,
    })
}

/// `{auc, fp, fn, cutoff, iterations}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub auc: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub cutoff: f64,
    pub iterations: usize,
}

impl DetectionMetrics {
    pub fn evaluate(ranked: &RankedList, trust: &TrustVector, cutoff: f64) -> Result<Self> {
        let rates = fp_fn_at_cutoff(ranked, cutoff)?;
        Ok(Self { auc: auc(ranked)?, fp: rates.false_positive, fn_: rates.false_negative, cutoff, iterations: trust.iterations })
    }
}

/// Writes `node_id,kind,trusted,trust,weighted_degree,score,rank`.
pub fn write_ranked_csv<W: Write>(out: W, ranked: &RankedList) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "kind", "trusted", "trust", "weighted_degree", "score", "rank"])?;
    for e in &ranked.entries {
        w.write_record([
            e.node.to_string(),
            e.kind.to_string(),
            u8::from(e.trusted).to_string(),
            format!("{:.12e}", e.trust),
            e.weighted_degree.to_string(),
            format!("{:.12e}", e.score),
            e.rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(u32, u32, u64)]) -> ProximityGraph {
        let mut g = ProximityGraph::with_honest(n);
        for &(u, v, w) in edges {
            g.add_weight(NodeId(u), NodeId(v), w).unwrap();
        }
        g
    }

    fn run(g: &ProximityGraph, iters: usize) -> Vec<f64> {
        propagate_trust(g, &SybilRankParams { iterations: Some(iters), lazy: false }).unwrap().trust
    }

    #[test]
    fn default_iteration_count() {
        assert_eq!(default_iterations(2), 1);
        assert_eq!(default_iterations(8), 3);
        assert_eq!(default_iterations(9), 4);
        assert_eq!(default_iterations(11_000), 14);
    }

    #[test]
    fn path_by_hand() {
        // Three honest nodes, so total trust is 3; scale the expectations.
        let mut g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        g.set_trusted(NodeId(0), true).unwrap();
        assert_eq!(run(&g, 1), vec![0.0, 3.0, 0.0]);
        assert_eq!(run(&g, 2), vec![1.5, 0.0, 1.5]);
    }

    #[test]
    fn star_splits_by_weight() {
        let mut g = graph(3, &[(0, 1, 1), (0, 2, 3)]);
        g.set_trusted(NodeId(0), true).unwrap();
        let t = run(&g, 1);
        assert_eq!(t[1] / 3.0, 0.25);
        assert_eq!(t[2] / 3.0, 0.75);
    }

    #[test]
    fn disconnected_component_gets_nothing() {
        let mut g = graph(4, &[(0, 1, 1), (2, 3, 1)]);
        g.set_trusted(NodeId(0), true).unwrap();
        let t = run(&g, 5);
        assert_eq!(t[2], 0.0);
        assert_eq!(t[3], 0.0);
        assert!((t[0] + t[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_seed_is_reported() {
        let mut g = graph(3, &[(0, 1, 1)]);
        g.set_trusted(NodeId(2), true).unwrap();
        let tv = propagate_trust(&g, &SybilRankParams::default()).unwrap();
        assert_eq!(tv.isolated_seeds, vec![NodeId(2)]);
        assert_eq!(tv.total(), 0.0);
    }

    #[test]
    fn lazy_walk_conserves_trust() {
        let mut g = graph(3, &[(0, 1, 1), (1, 2, 2)]);
        g.set_trusted(NodeId(0), true).unwrap();
        let tv = propagate_trust(&g, &SybilRankParams { iterations: Some(7), lazy: true }).unwrap();
        assert!((tv.total() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn requires_a_seed() {
        let g = graph(2, &[(0, 1, 1)]);
        assert!(propagate_trust(&g, &SybilRankParams::default()).is_err());
    }

    fn ranked(scores: &[(f64, NodeKind)]) -> RankedList {
        let mut entries: Vec<RankedEntry> = scores
            .iter()
            .enumerate()
            .map(|(i, &(score, kind))| RankedEntry {
                node: NodeId(i as u32),
                kind,
                trusted: false,
                trust: score,
                weighted_degree: 1,
                score,
                rank: 0,
            })
            .collect();
        entries.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.node.cmp(&b.node)));
        RankedList { entries }
    }

    #[test]
    fn auc_extremes() {
        use NodeKind::{Honest as H, Sybil as S};
        assert_eq!(auc(&ranked(&[(0.1, S), (0.2, S), (0.5, H), (0.9, H)])).unwrap(), 1.0);
        assert_eq!(auc(&ranked(&[(0.9, S), (0.8, S), (0.5, H), (0.1, H)])).unwrap(), 0.0);
        assert_eq!(auc(&ranked(&[(1.0, S), (1.0, S), (1.0, H), (1.0, H), (1.0, H)])).unwrap(), 0.5);
        assert!(auc(&ranked(&[(1.0, H)])).is_err());
    }

    #[test]
    fn auc_matches_pairwise_count() {
        use NodeKind::{Honest as H, Sybil as S};
        let data = [(0.3, S), (0.3, H), (0.1, H), (0.7, S), (0.7, H), (0.2, S), (0.9, H)];
        let mut num = 0.0;
        let mut pairs = 0.0;
        for &(a, ka) in &data {
            for &(b, kb) in &data {
                if ka == S && kb == H {
                    pairs += 1.0;
                    num += if a < b {
                        1.0
                    } else if a == b {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((auc(&ranked(&data)).unwrap() - num / pairs).abs() < 1e-15);
    }

    #[test]
    fn cutoff_arithmetic() {
        let mut scores: Vec<(f64, NodeKind)> = (0..1000).map(|i| (i as f64, NodeKind::Sybil)).collect();
        scores.extend((0..10_000).map(|i| (1e6 + i as f64, NodeKind::Honest)));
        let perfect = ranked(&scores);
        let r = fp_fn_at_cutoff(&perfect, 0.10).unwrap();
        assert_eq!((r.false_positive, r.false_negative), (0.01, 0.0));
        let r = fp_fn_at_cutoff(&perfect, 0.5).unwrap();
        assert_eq!((r.false_positive, r.false_negative), (0.45, 0.0));

        let flipped: Vec<(f64, NodeKind)> = scores.iter().map(|&(s, k)| (-s, k)).collect();
        assert_eq!(fp_fn_at_cutoff(&ranked(&flipped), 0.10).unwrap().false_negative, 1.0);
        assert!(fp_fn_at_cutoff(&perfect, 1.0).is_err());
    }

    #[test]
    fn zero_degree_scores_zero_and_ties_by_id() {
        let mut g = graph(4, &[(0, 1, 1)]);
        g.set_trusted(NodeId(0), true).unwrap();
        let tv = propagate_trust(&g, &SybilRankParams { iterations: Some(2), lazy: false }).unwrap();
        let r = rank_nodes(&g, &tv).unwrap();
        let order: Vec<u32> = r.entries.iter().map(|e| e.node.0).collect();
        assert_eq!(order, vec![1, 2, 3, 0]);
    }

    #[test]
    fn ranked_csv_header() {
        let mut g = graph(2, &[(0, 1, 2)]);
        g.set_trusted(NodeId(0), true).unwrap();
        let tv = propagate_trust(&g, &SybilRankParams { iterations: Some(1), lazy: false }).unwrap();
        let mut buf = Vec::new();
        write_ranked_csv(&mut buf, &rank_nodes(&g, &tv).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("node_id,kind,trusted,trust,weighted_degree,score,rank"));
        assert_eq!(lines.next(), Some("0,honest,1,0.000000000000e0,2,0.000000000000e0,0"));
    }

    #[test]
    fn metrics_json_keys() {
        let m = DetectionMetrics { auc: 1.0, fp: 0.01, fn_: 0.0, cutoff: 0.1, iterations: 14 };
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"auc":1.0,"fp":0.01,"fn":0.0,"cutoff":0.1,"iterations":14}"#);
    }
}
