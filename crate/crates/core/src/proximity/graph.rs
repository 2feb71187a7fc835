use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Honest,
    Sybil,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Honest => "honest",
            NodeKind::Sybil => "sybil",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeInfo {
    pub kind: NodeKind,
    pub trusted: bool,
    /// A Sybil account backed by a physical radio.
    pub gateway: bool,
}

/// Weighted undirected collocation graph. Edge weight counts successful
/// proximity challenges between the two devices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProximityGraph {
    nodes: Vec<NodeInfo>,
    adj: Vec<BTreeMap<u32, u64>>,
    edge_count: usize,
    total_weight: u64,
}

impl ProximityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_honest(n: usize) -> Self {
        let mut g = Self::new();
        g.add_nodes(NodeKind::Honest, n);
        g
    }

    pub fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeInfo { kind, trusted: false, gateway: false });
        self.adj.push(BTreeMap::new());
        id
    }

    /// Appends `count` nodes and returns the first new id.
    pub fn add_nodes(&mut self, kind: NodeKind, count: usize) -> NodeId {
        let first = NodeId(self.nodes.len() as u32);
        for _ in 0..count {
            self.add_node(kind);
        }
        first
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, id: NodeId) -> Result<usize> {
        let i = id.0 as usize;
        if i < self.nodes.len() {
            Ok(i)
        } else {
            Err(Error::UnknownNode(id))
        }
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeInfo> {
        Ok(&self.nodes[self.check(id)?])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeInfo)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn ids_of(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes().filter(|(_, n)| n.kind == kind).map(|(id, _)| id).collect()
    }

    pub fn count_of(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn trusted(&self) -> Vec<NodeId> {
        self.nodes().filter(|(_, n)| n.trusted).map(|(id, _)| id).collect()
    }

    pub fn set_trusted(&mut self, id: NodeId, trusted: bool) -> Result<()> {
        let i = self.check(id)?;
        if trusted && self.nodes[i].kind != NodeKind::Honest {
            return Err(invalid(format!("node {id} is not honest and cannot be trusted")));
        }
        self.nodes[i].trusted = trusted;
        Ok(())
    }

    pub fn clear_trusted(&mut self) {
        for n in &mut self.nodes {
            n.trusted = false;
        }
    }

    pub fn set_gateway(&mut self, id: NodeId, gateway: bool) -> Result<()> {
        let i = self.check(id)?;
        if gateway && self.nodes[i].kind != NodeKind::Sybil {
            return Err(invalid(format!("node {id} is not a Sybil and cannot be a gateway")));
        }
        self.nodes[i].gateway = gateway;
        Ok(())
    }

    /// Adds `w` to the weight of edge `u`–`v`, creating it if needed.
    pub fn add_weight(&mut self, u: NodeId, v: NodeId, w: u64) -> Result<()> {
        let (a, b) = (self.check(u)?, self.check(v)?);
        if a == b {
            return Err(invalid(format!("self-loop on node {u}")));
        }
        if w == 0 {
            return Err(invalid("edge weight increment must be positive"));
        }
        let e = self.adj[a].entry(b as u32).or_insert(0);
        if *e == 0 {
            self.edge_count += 1;
        }
        *e += w;
        *self.adj[b].entry(a as u32).or_insert(0) += w;
        self.total_weight += w;
        Ok(())
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> u64 {
        self.adj.get(u.0 as usize).and_then(|m| m.get(&v.0)).copied().unwrap_or(0)
    }

    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.adj[u.0 as usize].iter().map(|(&v, &w)| (NodeId(v), w))
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u.0 as usize].len()
    }

    pub fn weighted_degree(&self, u: NodeId) -> u64 {
        self.adj[u.0 as usize].values().sum()
    }

    /// Every edge once, as `(u, v, weight)` with `u < v`, in id order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, m)| m.range(u as u32 + 1..).map(move |(&v, &w)| (NodeId(u as u32), NodeId(v), w)))
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Size of the largest connected component.
    pub fn largest_component(&self) -> usize {
        let mut dsu = Dsu::new(self.len());
        for (u, v, _) in self.edges() {
            dsu.union(u.0 as usize, v.0 as usize);
        }
        dsu.largest()
    }

    /// Fails if any honest node is adjacent to a Sybil that is not a gateway.
    pub fn check_gateway_isolation(&self) -> Result<()> {
        for (u, v, _) in self.edges() {
            let (a, b) = (self.nodes[u.0 as usize], self.nodes[v.0 as usize]);
            let bad = match (a.kind, b.kind) {
                (NodeKind::Honest, NodeKind::Sybil) => !b.gateway,
                (NodeKind::Sybil, NodeKind::Honest) => !a.gateway,
                _ => false,
            };
            if bad {
                return Err(invalid(format!("edge {u}-{v} joins an honest node to a non-gateway Sybil")));
            }
        }
        Ok(())
    }

    /// Plain-text form: node lines `node_id kind trusted_flag` (kind one of
    /// `honest`, `sybil`, `gateway`), then edge lines `src dst weight`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes: node_id kind trusted_flag")?;
        for (id, n) in self.nodes() {
            let kind = match (n.kind, n.gateway) {
                (NodeKind::Sybil, true) => "gateway",
                (k, _) => {
                    if k == NodeKind::Honest {
                        "honest"
                    } else {
                        "sybil"
                    }
                }
            };
            writeln!(out, "{id} {kind} {}", u8::from(n.trusted))?;
        }
        writeln!(out, "# edges: src_id dst_id weight")?;
        for (u, v, w) in self.edges() {
            writeln!(out, "{u} {v} {w}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut g = Self::new();
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let err = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [a, b, c] = fields[..] else { return Err(err("expected three fields")) };
            let first: u32 = a.parse().map_err(|_| err("bad node id"))?;
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err("trusted flag must be 0 or 1")),
            };
            let (kind, gateway) = match b {
                "honest" => (Some(NodeKind::Honest), false),
                "sybil" => (Some(NodeKind::Sybil), false),
                "gateway" => (Some(NodeKind::Sybil), true),
                _ => (None, false),
            };
            match kind {
                Some(kind) => {
                    if first as usize != g.len() {
                        return Err(err("node ids must be listed densely from 0"));
                    }
                    let id = g.add_node(kind);
                    g.nodes[id.0 as usize].gateway = gateway;
                    g.nodes[id.0 as usize].trusted = flag(c)?;
                }
                None => {
                    let v: u32 = b.parse().map_err(|_| err("bad node kind or destination id"))?;
                    let w: u64 = c.parse().map_err(|_| err("bad weight"))?;
                    edges.push((lineno, first, v, w));
                }
            }
        }
        for (line, u, v, w) in edges {
            if g.weight(NodeId(u), NodeId(v)) != 0 {
                return Err(Error::Parse { line, msg: format!("duplicate edge {u}-{v}") });
            }
            g.add_weight(NodeId(u), NodeId(v), w).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        Ok(g)
    }
}

/// Union-find with union by size.
#[derive(Debug, Clone)]
pub(crate) struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: usize,
    components: usize,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n], largest: n.min(1), components: n }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    /// Returns true if two components were merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        self.largest = self.largest.max(self.size[a] as usize);
        self.components -= 1;
        true
    }

    pub(crate) fn largest(&self) -> usize {
        self.largest
    }

    pub(crate) fn components(&self) -> usize {
        self.components
    }
}
