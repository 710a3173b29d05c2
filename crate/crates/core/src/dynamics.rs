//! State transition graphs and Morse graphs of parameter nodes.
//!
//! Phase space is cut by one threshold per out-edge of each variable; a
//! self-edge contributes two adjacent thresholds `θ⁻ < θ⁺`. Within the band
//! between them the self-input is read from the wall being evaluated: low at
//! `θ⁻`, high at `θ⁺`. Where the thresholds of a variable sit relative to each
//! other comes from the parameter node, so the layout is per parameter node.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use thiserror::Error;

use crate::network::RegulatoryNetwork;
use crate::paramgraph::{NumericParameters, ParamGraphError, ParameterGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    ParamGraph(#[from] ParamGraphError),
}

/// Direction a wall is crossed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Flow {
    TowardLower,
    TowardHigher,
}

/// A phase-space threshold of one variable, named by its out-slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseThreshold {
    Slot(usize),
    SelfLower(usize),
    SelfUpper(usize),
}

impl PhaseThreshold {
    pub fn slot(self) -> usize {
        match self {
            PhaseThreshold::Slot(s)
            | PhaseThreshold::SelfLower(s)
            | PhaseThreshold::SelfUpper(s) => s,
        }
    }
}

/// Rectangular domains of phase space, indexed mixed-radix with variable 0
/// least significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainComplex {
    /// Phase thresholds per variable (self-edges counted twice).
    pub thresholds: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl DomainComplex {
    pub fn new(network: &crate::network::RegulatoryNetwork) -> Self {
        let thresholds: Vec<usize> = (0..network.len())
            .map(|n| network.threshold_count(n) + usize::from(network.self_slot(n).is_some()))
            .collect();
        let mut strides = Vec::with_capacity(thresholds.len());
        let mut len = 1;
        for &t in &thresholds {
            strides.push(len);
            len *= t + 1;
        }
        DomainComplex {
            thresholds,
            strides,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dimension(&self) -> usize {
        self.thresholds.len()
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        self.thresholds
            .iter()
            .zip(&self.strides)
            .map(|(&t, &s)| index / s % (t + 1))
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn stride(&self, n: usize) -> usize {
        self.strides[n]
    }
}

/// Phase thresholds of each variable in increasing order, for one parameter node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseLayout {
    pub thresholds: Vec<Vec<PhaseThreshold>>,
    /// Per variable and out-slot: position of its (lower) phase threshold.
    position: Vec<Vec<usize>>,
}

impl PhaseLayout {
    pub fn new(pg: &ParameterGraph, coords: &[usize]) -> Self {
        Self::from_threshold_orders(pg.network(), |n| {
            pg.factor_node(n, coords).threshold_order.clone()
        })
    }

    /// Layout from each variable's out-slots listed lowest first.
    pub fn from_threshold_orders(
        net: &RegulatoryNetwork,
        order: impl Fn(usize) -> Vec<usize>,
    ) -> Self {
        let mut thresholds = Vec::new();
        let mut position = Vec::new();
        for n in 0..net.len() {
            let self_slot = net.self_slot(n);
            let slots = order(n);
            let mut list = Vec::new();
            let mut pos = vec![0; slots.len()];
            for &t in &slots {
                pos[t] = list.len();
                if Some(t) == self_slot {
                    list.push(PhaseThreshold::SelfLower(t));
                    list.push(PhaseThreshold::SelfUpper(t));
                } else {
                    list.push(PhaseThreshold::Slot(t));
                }
            }
            thresholds.push(list);
            position.push(pos);
        }
        PhaseLayout {
            thresholds,
            position,
        }
    }

    pub fn position(&self, n: usize, slot: usize) -> usize {
        self.position[n][slot]
    }

    /// Value index of variable `n`'s inputs at the wall of phase threshold
    /// `p` of `n`, next to domain `d`.
    pub fn value_at_wall(&self, pg: &ParameterGraph, d: &[usize], n: usize, p: usize) -> usize {
        pg.factors()[n].inputs.value_index(|m| {
            let q = self.position(m.source, m.slot);
            if m.source == n {
                p > q
            } else {
                d[m.source] > q
            }
        })
    }
}

/// Everything needed to evaluate walls of one parameter node.
#[derive(Debug, Clone)]
pub struct WallContext<'a> {
    pub pg: &'a ParameterGraph,
    pub coords: Vec<usize>,
    pub layout: PhaseLayout,
}

impl<'a> WallContext<'a> {
    pub fn new(pg: &'a ParameterGraph, index: u64) -> Result<Self, DynamicsError> {
        let coords = pg.decode(index)?;
        let layout = PhaseLayout::new(pg, &coords);
        Ok(WallContext { pg, coords, layout })
    }

    /// Value index of variable `n`'s inputs at the wall of phase threshold
    /// `p` of `n`, next to domain `d`.
    pub fn value_at_wall(&self, d: &[usize], n: usize, p: usize) -> usize {
        self.layout.value_at_wall(self.pg, d, n, p)
    }

    /// Which way variable `n` crosses its phase threshold `p` next to `d`.
    pub fn wall_sign(&self, d: &[usize], n: usize, p: usize) -> Flow {
        let v = self.value_at_wall(d, n, p);
        let slot = self.layout.thresholds[n][p].slot();
        if self.pg.factor_node(n, &self.coords).is_below(v, slot) {
            Flow::TowardLower
        } else {
            Flow::TowardHigher
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateTransitionGraph {
    pub index: u64,
    pub complex: DomainComplex,
    pub layout: PhaseLayout,
    /// Sorted successors per domain; a self edge marks an R1 domain.
    pub edges: Vec<Vec<usize>>,
}

pub fn build_stg(pg: &ParameterGraph, index: u64) -> Result<StateTransitionGraph, DynamicsError> {
    let ctx = WallContext::new(pg, index)?;
    let complex = DomainComplex::new(pg.network());
    let edges = stg_edges(&complex, |d, n, p| ctx.wall_sign(d, n, p));
    Ok(StateTransitionGraph {
        index,
        complex,
        layout: ctx.layout,
        edges,
    })
}

/// STG read off concrete parameters alone: thresholds are ordered by value
/// and each wall compares the numeric target with the numeric threshold.
pub fn build_stg_numeric(pg: &ParameterGraph, params: &NumericParameters) -> StateTransitionGraph {
    let net = pg.network();
    let layout = PhaseLayout::from_threshold_orders(net, |n| {
        let theta = &params.nodes[n].theta;
        let mut order: Vec<usize> = (0..theta.len()).collect();
        order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
        order
    });
    let complex = DomainComplex::new(net);
    let edges = stg_edges(&complex, |d, n, p| {
        let v = layout.value_at_wall(pg, d, n, p);
        let node = &params.nodes[n];
        let (num, den) = node.point.sides(&pg.factors()[n].inputs.structure, v);
        if num / (node.gamma * den) > node.theta[layout.thresholds[n][p].slot()] {
            Flow::TowardHigher
        } else {
            Flow::TowardLower
        }
    });
    StateTransitionGraph {
        index: params.index,
        complex,
        layout,
        edges,
    }
}

fn stg_edges(
    complex: &DomainComplex,
    sign: impl Fn(&[usize], usize, usize) -> Flow,
) -> Vec<Vec<usize>> {
    let mut edges = Vec::with_capacity(complex.len());
    for i in 0..complex.len() {
        let d = complex.coords(i);
        let mut out = Vec::new();
        for n in 0..complex.dimension() {
            let s = complex.stride(n);
            if d[n] > 0 && sign(&d, n, d[n] - 1) == Flow::TowardLower {
                out.push(i - s);
            }
            if d[n] < complex.thresholds[n] && sign(&d, n, d[n]) == Flow::TowardHigher {
                out.push(i + s);
            }
        }
        if out.is_empty() {
            out.push(i);
        }
        out.sort_unstable();
        edges.push(out);
    }
    edges
}

impl StateTransitionGraph {
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Variable whose coordinate differs between two adjacent domains.
    fn crossed(&self, a: usize, b: usize) -> Option<usize> {
        let (ca, cb) = (self.complex.coords(a), self.complex.coords(b));
        (0..ca.len()).find(|&n| ca[n] != cb[n])
    }

    fn label(&self, i: usize) -> String {
        let c: Vec<String> = self
            .complex
            .coords(i)
            .iter()
            .map(usize::to_string)
            .collect();
        format!("({})", c.join(","))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph stg {\n");
        for i in 0..self.edges.len() {
            let _ = writeln!(out, "  {i} [label=\"{}\"];", self.label(i));
        }
        for (i, succ) in self.edges.iter().enumerate() {
            for &j in succ {
                let _ = writeln!(out, "  {i} -> {j};");
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "index": self.index,
            "thresholds": self.complex.thresholds,
            "domains": (0..self.edges.len()).map(|i| self.complex.coords(i)).collect::<Vec<_>>(),
            "edges": self.edges,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MorseKind {
    /// Single domain with a self edge.
    FP,
    /// Recurrent set crossing a threshold of every variable.
    FC,
    /// Any other recurrent set.
    PC,
}

impl std::fmt::Display for MorseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MorseKind::FP => "FP",
            MorseKind::FC => "FC",
            MorseKind::PC => "PC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorseNode {
    /// Sorted domain indices of the strongly connected component.
    pub domains: Vec<usize>,
    pub kind: MorseKind,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorseGraph {
    /// Ordered by smallest domain index.
    pub nodes: Vec<MorseNode>,
    /// Hasse diagram of reachability, `(from, to)` sorted.
    pub edges: Vec<(usize, usize)>,
}

/// Stable Morse node counts by annotation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct StableCounts {
    pub fp: usize,
    pub fc: usize,
    pub pc: usize,
}

pub fn morse_graph(stg: &StateTransitionGraph) -> MorseGraph {
    let n = stg.edges.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, stg.edge_count());
    for _ in 0..n {
        g.add_node(());
    }
    for (i, succ) in stg.edges.iter().enumerate() {
        for &j in succ {
            g.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
        }
    }
    // sinks first
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let nontrivial: Vec<bool> = sccs
        .iter()
        .map(|m| m.len() > 1 || stg.has_edge(m[0].index(), m[0].index()))
        .collect();
    let morse_ids: Vec<usize> = (0..sccs.len()).filter(|&c| nontrivial[c]).collect();
    let slot_of = |c: usize| morse_ids.binary_search(&c).ok();
    // reach[c]: nontrivial components reachable from c, excluding c itself
    let mut reach: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sccs.len()];
    for c in 0..sccs.len() {
        let mut r = BTreeSet::new();
        for v in &sccs[c] {
            for &w in &stg.edges[v.index()] {
                let cw = comp[w];
                if cw != c {
                    if nontrivial[cw] {
                        r.insert(cw);
                    }
                    r.extend(reach[cw].iter().copied());
                }
            }
        }
        reach[c] = r;
    }
    let all_vars = stg.complex.dimension();
    let mut nodes: Vec<(usize, MorseNode)> = morse_ids
        .iter()
        .map(|&c| {
            let mut domains: Vec<usize> = sccs[c].iter().map(|v| v.index()).collect();
            domains.sort_unstable();
            let kind = if domains.len() == 1 {
                MorseKind::FP
            } else {
                let mut vars = BTreeSet::new();
                for &u in &domains {
                    for &w in &stg.edges[u] {
                        if comp[w] == c && w != u {
                            vars.extend(stg.crossed(u, w));
                        }
                    }
                }
                if vars.len() == all_vars {
                    MorseKind::FC
                } else {
                    MorseKind::PC
                }
            };
            (
                c,
                MorseNode {
                    domains,
                    kind,
                    stable: reach[c].is_empty(),
                },
            )
        })
        .collect();
    nodes.sort_by_key(|(_, m)| m.domains[0]);
    let mut renumber = vec![0usize; morse_ids.len()];
    for (new, (c, _)) in nodes.iter().enumerate() {
        renumber[slot_of(*c).unwrap()] = new;
    }
    let mut edges = Vec::new();
    for &(a, _) in &nodes {
        for &b in &reach[a] {
            let covered = reach[a].iter().any(|&c| c != b && reach[c].contains(&b));
            if !covered {
                edges.push((renumber[slot_of(a).unwrap()], renumber[slot_of(b).unwrap()]));
            }
        }
    }
    edges.sort_unstable();
    MorseGraph {
        nodes: nodes.into_iter().map(|(_, m)| m).collect(),
        edges,
    }
}

impl MorseGraph {
    pub fn stable_counts(&self) -> StableCounts {
        let mut s = StableCounts::default();
        for n in self.nodes.iter().filter(|n| n.stable) {
            match n.kind {
                MorseKind::FP => s.fp += 1,
                MorseKind::FC => s.fc += 1,
                MorseKind::PC => s.pc += 1,
            }
        }
        s
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph morse {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = if n.stable { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  {i} [label=\"{}\", shape={shape}];", n.kind);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  {a} -> {b};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "nodes": self.nodes.iter().map(|n| serde_json::json!({
                "kind": n.kind.to_string(),
                "stable": n.stable,
                "domains": n.domains,
            })).collect::<Vec<_>>(),
            "edges": self.edges,
        })
    }

    /// One line per Morse node, e.g. `0: FP stable [3]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let stable = if n.stable { " stable" } else { "" };
            let _ = writeln!(out, "{i}: {}{stable} {:?}", n.kind, n.domains);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} -> {b}");
        }
        out
    }
}

/// STG and Morse graph of one parameter node.
pub fn analyze(
    pg: &ParameterGraph,
    index: u64,
) -> Result<(StateTransitionGraph, MorseGraph), DynamicsError> {
    let stg = build_stg(pg, index)?;
    let mg = morse_graph(&stg);
    Ok((stg, mg))
}
