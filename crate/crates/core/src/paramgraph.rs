//! Factor graphs and the parameter graph.
//!
//! A factor-graph node is a parameter region of one network node: which value
//! groups lie below each of its thresholds, and the order of its thresholds.
//! Regions are enumerated from (admissible order, threshold interleaving)
//! sequences; sequences that give the same region are merged and the region
//! keeps the lexicographically first `(order_index, slots)` representative.
//! The parameter graph is the mixed-radix product of the factor graphs,
//! network node 0 least significant.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    evaluate_polynomials, find_witness, AdmissibleOrderSet, AlgebraError, ParameterPoint,
    Signature, Solver, Structure,
};
use crate::network::{InputTerm, RegulatoryNetwork, Side, Sign};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamGraphError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("index {index} out of range for parameter graph of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("coordinate {coordinate} of node {node} out of range (factor size {size})")]
    CoordinateOutOfRange {
        node: usize,
        coordinate: usize,
        size: usize,
    },
    #[error("parameter graph size overflows 64 bits")]
    SizeOverflow,
    #[error("region verification failed: {0}")]
    VerificationFailed(String),
}

/// One formal input of a node: a single edge or the two members of a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormalInput {
    pub side: Side,
    pub members: Vec<FormalMember>,
    /// Name used in inequalities: source name, or `[a,b]` for pairs.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormalMember {
    pub source: usize,
    /// Effective sign, open-dot flip already applied.
    pub sign: Sign,
    /// Out-threshold slot of `source` used by this edge.
    pub slot: usize,
}

/// How a network node's terms map onto its canonical formal inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeInputs {
    #[serde(serialize_with = "ser_display")]
    pub signature: Signature,
    #[serde(skip)]
    pub structure: Structure,
    pub formal: Vec<FormalInput>,
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn canonical_terms(spec: &[Vec<InputTerm>]) -> Vec<(usize, usize)> {
    let mut fidx: Vec<usize> = (0..spec.len()).collect();
    fidx.sort_by_key(|&f| {
        crate::algebra::FactorShape::from_terms(spec[f].iter().map(InputTerm::is_pair)).sort_key()
    });
    let mut out = Vec::new();
    for f in fidx {
        let mut tidx: Vec<usize> = (0..spec[f].len()).collect();
        tidx.sort_by_key(|&t| !spec[f][t].is_pair());
        out.extend(tidx.into_iter().map(|t| (f, t)));
    }
    out
}

impl NodeInputs {
    pub fn new(network: &RegulatoryNetwork, n: usize) -> Self {
        let node = network.node(n);
        let signature = network.signature(n);
        let structure = Structure::from_signature(&signature);
        let mut formal = Vec::new();
        for (side, spec) in [
            (Side::Production, &node.production),
            (Side::Decay, &node.decay),
        ] {
            for (f, t) in canonical_terms(&spec.factors) {
                let term = &spec.factors[f][t];
                let members = term
                    .members()
                    .into_iter()
                    .enumerate()
                    .map(|(mi, m)| FormalMember {
                        source: m.source,
                        sign: m.sign,
                        slot: network.out_slot(m.source, n, side, f, t, mi),
                    })
                    .collect();
                let label = match term {
                    InputTerm::Single(r) => network.node(r.source).name.clone(),
                    InputTerm::Pair { first, second, .. } => format!(
                        "[{},{}]",
                        network.node(first.source).name,
                        network.node(second.source).name
                    ),
                };
                formal.push(FormalInput {
                    side,
                    members,
                    label,
                });
            }
        }
        debug_assert_eq!(formal.len(), structure.order());
        NodeInputs {
            signature,
            structure,
            formal,
        }
    }

    /// Value index given, per formal member, whether its source is above the
    /// threshold the member reads.
    pub fn value_index(&self, mut source_high: impl FnMut(&FormalMember) -> bool) -> usize {
        let mut v = 0;
        for (i, f) in self.formal.iter().enumerate() {
            if f.members.iter().all(|m| m.sign.value_bit(source_high(m))) {
                v |= 1 << i;
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorNode {
    pub order_index: usize,
    /// Position of each threshold in the combined sequence of values and thresholds.
    pub threshold_slots: Vec<usize>,
    /// Bit mask of value indices below each threshold.
    pub below: Vec<u64>,
    /// Thresholds from lowest to highest.
    pub threshold_order: Vec<usize>,
}

impl FactorNode {
    /// True when value index `v` lies below threshold `t`.
    pub fn is_below(&self, v: usize, t: usize) -> bool {
        self.below[t] >> v & 1 == 1
    }

    /// Rank of threshold `t` among this node's thresholds.
    pub fn rank_of(&self, t: usize) -> usize {
        self.threshold_order.iter().position(|&x| x == t).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Element {
    Value(usize),
    Threshold(usize),
}

#[derive(Debug, Clone)]
pub struct FactorGraph {
    pub signature: Signature,
    pub m: usize,
    pub orders: Arc<AdmissibleOrderSet>,
    pub nodes: Vec<FactorNode>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<usize>>,
}

type RegionKey = (Vec<u64>, Vec<usize>);

fn sequence(values: &[usize], slots: &[usize]) -> Vec<Element> {
    let len = values.len() + slots.len();
    let mut seq = Vec::with_capacity(len);
    let mut at = vec![None; len];
    for (t, &p) in slots.iter().enumerate() {
        at[p] = Some(t);
    }
    let mut vi = 0;
    for slot in at {
        match slot {
            Some(t) => seq.push(Element::Threshold(t)),
            None => {
                seq.push(Element::Value(values[vi]));
                vi += 1;
            }
        }
    }
    seq
}

fn region_key(seq: &[Element], m: usize) -> RegionKey {
    let mut below = vec![0u64; m];
    let mut order = Vec::with_capacity(m);
    let mut acc = 0u64;
    for e in seq {
        match *e {
            Element::Value(v) => acc |= 1 << v,
            Element::Threshold(t) => {
                below[t] = acc;
                order.push(t);
            }
        }
    }
    (below, order)
}

/// Calls `f` on every injective slot assignment in lexicographic order.
fn for_each_slots(len: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        len: usize,
        m: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if cur.len() == m {
            f(cur);
            return;
        }
        for p in 0..len {
            if !used[p] {
                used[p] = true;
                cur.push(p);
                rec(len, m, used, cur, f);
                cur.pop();
                used[p] = false;
            }
        }
    }
    rec(len, m, &mut vec![false; len], &mut Vec::with_capacity(m), f);
}

/// Regions of one node's parameter slice for `m` thresholds.
pub fn build_factor_graph(orders: Arc<AdmissibleOrderSet>, m: usize) -> FactorGraph {
    assert!(m >= 1, "a node needs at least one threshold");
    assert!(orders.structure.n_values() <= 64);
    let mut index: HashMap<RegionKey, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut sequences: Vec<(Vec<Element>, usize)> = Vec::new();
    for (oi, o) in orders.orders.iter().enumerate() {
        let len = o.values.len() + m;
        for_each_slots(len, m, &mut |slots| {
            let seq = sequence(&o.values, slots);
            let key = region_key(&seq, m);
            let id = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(FactorNode {
                    order_index: oi,
                    threshold_slots: slots.to_vec(),
                    below: key.0.clone(),
                    threshold_order: key.1.clone(),
                });
                nodes.len() - 1
            });
            sequences.push((seq, id));
        });
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
    for (seq, id) in &sequences {
        let mut s = seq.clone();
        for p in 0..s.len() - 1 {
            let one_threshold =
                matches!(s[p], Element::Threshold(_)) || matches!(s[p + 1], Element::Threshold(_));
            if !one_threshold {
                continue;
            }
            s.swap(p, p + 1);
            let other = index[&region_key(&s, m)];
            s.swap(p, p + 1);
            if other != *id {
                adj[*id].insert(other);
                adj[other].insert(*id);
            }
        }
    }
    FactorGraph {
        signature: orders.signature.clone(),
        m,
        orders,
        nodes,
        adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
    }
}

impl FactorGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Representative combined sequence of factor node `i`.
    fn representative(&self, i: usize) -> Vec<Element> {
        let fnode = &self.nodes[i];
        sequence(
            &self.orders.orders[fnode.order_index].values,
            &fnode.threshold_slots,
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "signature": self.signature.to_string(),
            "thresholds": self.m,
            "nodes": self.nodes.iter().enumerate().map(|(i, n)| serde_json::json!({
                "id": i,
                "order_index": n.order_index,
                "order": self.orders.orders[n.order_index].values,
                "threshold_slots": n.threshold_slots,
                "threshold_order": n.threshold_order,
            })).collect::<Vec<_>>(),
            "adjacency": self.adjacency,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph factor {\n  node [shape=box];\n");
        for (i, _) in self.nodes.iter().enumerate() {
            let label: Vec<String> = self
                .representative(i)
                .iter()
                .map(|e| match e {
                    Element::Value(v) => format!("p{v}"),
                    Element::Threshold(t) => format!("T{t}"),
                })
                .collect();
            out.push_str(&format!("  {i} [label=\"{}\"];\n", label.join(" < ")));
        }
        for (i, ns) in self.adjacency.iter().enumerate() {
            for &j in ns {
                if i < j {
                    out.push_str(&format!("  {i} -- {j};\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Per-node data of a parameter graph.
#[derive(Debug, Clone)]
pub struct NodeFactor {
    pub inputs: NodeInputs,
    pub graph: Arc<FactorGraph>,
}

#[derive(Debug, Clone)]
pub struct ParameterGraph {
    network: Arc<RegulatoryNetwork>,
    factors: Vec<NodeFactor>,
    size: u64,
}

/// A strict inequality `lhs < rhs` between region quantities of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// Input polynomial (or ratio) with the given value index.
    Value(usize),
    /// The threshold in out-slot `t`, scaled by `γ` on classical nodes.
    Threshold(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inequality {
    pub node: usize,
    pub lhs: Quantity,
    pub rhs: Quantity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionInequalities {
    pub index: u64,
    pub inequalities: Vec<Inequality>,
}

/// Numeric parameters of one network node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeParameters {
    pub gamma: f64,
    /// Witness point over the node's formal inputs (decay side included).
    pub point: ParameterPoint<f64>,
    /// Threshold value per out-slot.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericParameters {
    pub index: u64,
    pub nodes: Vec<NodeParameters>,
}

/// Minimum relative margin required of instantiated parameters.
pub const INSTANTIATION_MARGIN: f64 = 1e-9;

impl ParameterGraph {
    pub fn build(network: &RegulatoryNetwork, solver: &Solver) -> Result<Self, ParamGraphError> {
        let mut memo: HashMap<(String, usize), Arc<FactorGraph>> = HashMap::new();
        let mut factors = Vec::new();
        let mut size: u64 = 1;
        for n in 0..network.len() {
            let inputs = NodeInputs::new(network, n);
            let m = network.threshold_count(n);
            let key = (inputs.signature.to_string(), m);
            let graph = match memo.get(&key) {
                Some(g) => g.clone(),
                None => {
                    let orders = solver.solve_psd(&inputs.signature)?;
                    let g = Arc::new(build_factor_graph(orders, m));
                    memo.insert(key, g.clone());
                    g
                }
            };
            size = size
                .checked_mul(graph.len() as u64)
                .ok_or(ParamGraphError::SizeOverflow)?;
            factors.push(NodeFactor { inputs, graph });
        }
        Ok(ParameterGraph {
            network: Arc::new(network.clone()),
            factors,
            size,
        })
    }

    pub fn network(&self) -> &RegulatoryNetwork {
        &self.network
    }

    pub fn factors(&self) -> &[NodeFactor] {
        &self.factors
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn factor_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.graph.len()).collect()
    }

    /// Nodes with candidate orders that witness search could not settle.
    pub fn unresolved_nodes(&self) -> Vec<usize> {
        (0..self.factors.len())
            .filter(|&n| !self.factors[n].graph.orders.unresolved.is_empty())
            .collect()
    }

    pub fn decode(&self, index: u64) -> Result<Vec<usize>, ParamGraphError> {
        if index >= self.size {
            return Err(ParamGraphError::IndexOutOfRange {
                index,
                size: self.size,
            });
        }
        let mut rest = index;
        Ok(self
            .factors
            .iter()
            .map(|f| {
                let r = f.graph.len() as u64;
                let c = (rest % r) as usize;
                rest /= r;
                c
            })
            .collect())
    }

    pub fn encode(&self, coords: &[usize]) -> Result<u64, ParamGraphError> {
        assert_eq!(coords.len(), self.factors.len());
        let mut index = 0u64;
        for (n, (f, &c)) in self.factors.iter().zip(coords).enumerate().rev() {
            if c >= f.graph.len() {
                return Err(ParamGraphError::CoordinateOutOfRange {
                    node: n,
                    coordinate: c,
                    size: f.graph.len(),
                });
            }
            index = index * f.graph.len() as u64 + c as u64;
        }
        Ok(index)
    }

    /// Factor node of network node `n` at parameter coordinates.
    pub fn factor_node(&self, n: usize, coords: &[usize]) -> &FactorNode {
        &self.factors[n].graph.nodes[coords[n]]
    }

    /// Indices of parameter nodes adjacent to `index` (one factor changes).
    pub fn neighbors(&self, index: u64) -> Result<Vec<u64>, ParamGraphError> {
        let coords = self.decode(index)?;
        let mut out = Vec::new();
        for (n, f) in self.factors.iter().enumerate() {
            for &j in &f.graph.adjacency[coords[n]] {
                let mut c = coords.clone();
                c[n] = j;
                out.push(self.encode(&c)?);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn region_inequalities(&self, index: u64) -> Result<RegionInequalities, ParamGraphError> {
        let coords = self.decode(index)?;
        let mut inequalities = Vec::new();
        for (n, f) in self.factors.iter().enumerate() {
            let seq = f.graph.representative(coords[n]);
            for w in seq.windows(2) {
                let q = |e: Element| match e {
                    Element::Value(v) => Quantity::Value(v),
                    Element::Threshold(t) => Quantity::Threshold(t),
                };
                inequalities.push(Inequality {
                    node: n,
                    lhs: q(w[0]),
                    rhs: q(w[1]),
                });
            }
        }
        Ok(RegionInequalities {
            index,
            inequalities,
        })
    }

    /// Text form of a quantity, e.g. `gamma_1*theta_2,1` or `l_1,2+d_1,2`.
    pub fn render_quantity(&self, n: usize, q: Quantity) -> String {
        let net = &self.network;
        let name = &net.node(n).name;
        let f = &self.factors[n];
        match q {
            Quantity::Threshold(t) => {
                let target = match net.out_edges(n)[t].target {
                    Some(tg) => net.node(tg).name.clone(),
                    None => "out".to_string(),
                };
                if f.inputs.structure.is_joint() {
                    format!("theta_{target},{name}")
                } else {
                    format!("gamma_{name}*theta_{target},{name}")
                }
            }
            Quantity::Value(v) => {
                let st = &f.inputs.structure;
                let side = |decay: bool| -> Vec<String> {
                    st.factors
                        .iter()
                        .filter(|fs| fs.decay == decay)
                        .map(|fs| {
                            let (l, d) = if decay { ("lt", "dt") } else { ("l", "d") };
                            fs.inputs
                                .iter()
                                .map(|&i| {
                                    let label = &f.inputs.formal[i].label;
                                    if v >> i & 1 == 1 {
                                        format!("{l}_{name},{label}+{d}_{name},{label}")
                                    } else {
                                        format!("{l}_{name},{label}")
                                    }
                                })
                                .collect::<Vec<_>>()
                                .join("+")
                        })
                        .collect()
                };
                let wrap = |parts: Vec<String>| -> String {
                    if parts.len() == 1 {
                        parts[0].clone()
                    } else {
                        parts
                            .iter()
                            .map(|p| {
                                if p.contains('+') {
                                    format!("({p})")
                                } else {
                                    p.clone()
                                }
                            })
                            .collect::<Vec<_>>()
                            .join("*")
                    }
                };
                let num = side(false);
                let den = side(true);
                let num_s = if num.is_empty() {
                    format!("l_{name}")
                } else {
                    wrap(num)
                };
                if den.is_empty() {
                    num_s
                } else {
                    let d = wrap(den);
                    let d = if d.contains('+') || d.contains('*') {
                        format!("({d})")
                    } else {
                        d
                    };
                    let n_s = if num_s.contains('+') && !num_s.starts_with('(') {
                        format!("({num_s})")
                    } else {
                        num_s
                    };
                    format!("{n_s}/{d}")
                }
            }
        }
    }

    pub fn render_inequalities(&self, ineq: &RegionInequalities) -> Vec<String> {
        ineq.inequalities
            .iter()
            .map(|i| {
                format!(
                    "{} < {}",
                    self.render_quantity(i.node, i.lhs),
                    self.render_quantity(i.node, i.rhs)
                )
            })
            .collect()
    }

    /// Numeric value of a region quantity under `params`.
    pub fn quantity_value(&self, n: usize, q: Quantity, params: &NumericParameters) -> f64 {
        let p = &params.nodes[n];
        match q {
            Quantity::Threshold(t) => {
                if self.factors[n].inputs.structure.is_joint() {
                    p.theta[t]
                } else {
                    p.gamma * p.theta[t]
                }
            }
            Quantity::Value(v) => {
                let st = &self.factors[n].inputs.structure;
                let (num, den) = p.point.sides(st, v);
                num / den
            }
        }
    }

    /// Smallest relative margin over all region inequalities.
    pub fn check_parameters(&self, params: &NumericParameters) -> Result<f64, ParamGraphError> {
        let ineq = self.region_inequalities(params.index)?;
        let mut worst = f64::INFINITY;
        for i in &ineq.inequalities {
            let a = self.quantity_value(i.node, i.lhs, params);
            let b = self.quantity_value(i.node, i.rhs, params);
            worst = worst.min(b / a - 1.0);
        }
        Ok(worst)
    }

    /// Numeric parameters inside the region, from the stored witnesses.
    pub fn instantiate_parameters(&self, index: u64) -> Result<NumericParameters, ParamGraphError> {
        let coords = self.decode(index)?;
        let witnesses: Vec<ParameterPoint<f64>> = self
            .factors
            .iter()
            .zip(&coords)
            .map(|(f, &c)| {
                let oi = f.graph.nodes[c].order_index;
                f.graph.orders.orders[oi].witness.clone()
            })
            .collect();
        self.instantiate_with(index, &witnesses)
    }

    /// Like [`Self::instantiate_parameters`] with a fresh witness per node,
    /// found by a new search seeded with `seed`.
    pub fn instantiate_alternate(
        &self,
        index: u64,
        seed: u64,
    ) -> Result<NumericParameters, ParamGraphError> {
        let coords = self.decode(index)?;
        let mut witnesses = Vec::new();
        for (n, (f, &c)) in self.factors.iter().zip(&coords).enumerate() {
            let oi = f.graph.nodes[c].order_index;
            let order = &f.graph.orders.orders[oi].values;
            let st = &f.graph.orders.structure;
            let w = find_witness(
                st,
                order,
                &f.graph.orders.config,
                seed ^ (n as u64 + 1) * 0x2545_f491,
            )
            .ok_or_else(|| {
                ParamGraphError::VerificationFailed(format!(
                    "no second witness for node {n} order {oi}"
                ))
            })?;
            witnesses.push(w);
        }
        self.instantiate_with(index, &witnesses)
    }

    /// Places thresholds inside the region for the given per-node witnesses,
    /// which must realize each node's representative order.
    pub fn instantiate_with(
        &self,
        index: u64,
        witnesses: &[ParameterPoint<f64>],
    ) -> Result<NumericParameters, ParamGraphError> {
        let coords = self.decode(index)?;
        let mut nodes = Vec::new();
        for (n, f) in self.factors.iter().enumerate() {
            let st = &f.inputs.structure;
            let point = witnesses[n].clone();
            let values = evaluate_polynomials(st, &point)?;
            let seq = f.graph.representative(coords[n]);
            let mut theta = vec![0.0; f.graph.m];
            // group thresholds by the gap they sit in
            let mut i = 0;
            let mut prev: Option<f64> = None;
            while i < seq.len() {
                match seq[i] {
                    Element::Value(v) => {
                        prev = Some(values[v]);
                        i += 1;
                    }
                    Element::Threshold(_) => {
                        let start = i;
                        while i < seq.len() && matches!(seq[i], Element::Threshold(_)) {
                            i += 1;
                        }
                        let next = match seq.get(i) {
                            Some(Element::Value(v)) => Some(values[*v]),
                            _ => None,
                        };
                        let k = i - start;
                        for (j, e) in seq[start..i].iter().enumerate() {
                            let Element::Threshold(t) = *e else {
                                unreachable!()
                            };
                            let r = (j + 1) as f64;
                            theta[t] = match (prev, next) {
                                (Some(lo), Some(hi)) => lo * (hi / lo).powf(r / (k + 1) as f64),
                                (None, Some(hi)) => hi / 2f64.powf(k as f64 + 1.0 - r),
                                (Some(lo), None) => lo * 2f64.powf(r),
                                (None, None) => 2f64.powf(r),
                            };
                        }
                    }
                }
            }
            nodes.push(NodeParameters {
                gamma: 1.0,
                point,
                theta,
            });
        }
        let params = NumericParameters { index, nodes };
        let margin = self.check_parameters(&params)?;
        if !(margin >= INSTANTIATION_MARGIN) {
            return Err(ParamGraphError::VerificationFailed(format!(
                "index {index}: margin {margin} below {INSTANTIATION_MARGIN}"
            )));
        }
        Ok(params)
    }

    /// JSON description of one parameter node.
    pub fn node_json(&self, index: u64) -> Result<serde_json::Value, ParamGraphError> {
        let coords = self.decode(index)?;
        let ineq = self.region_inequalities(index)?;
        let params = self.instantiate_parameters(index)?;
        let rendered = self.render_inequalities(&ineq);
        let mut per_node = Vec::new();
        for (n, f) in self.factors.iter().enumerate() {
            let p = &params.nodes[n];
            per_node.push(serde_json::json!({
                "name": self.network.node(n).name,
                "signature": f.inputs.signature.to_string(),
                "coordinate": coords[n],
                "order": f.graph.orders.orders[f.graph.nodes[coords[n]].order_index].values,
                "inequalities": ineq.inequalities.iter().zip(&rendered)
                    .filter(|(i, _)| i.node == n).map(|(_, s)| s.clone()).collect::<Vec<_>>(),
                "gamma": p.gamma.to_string(),
                "ell": p.point.ell.iter().map(f64::to_string).collect::<Vec<_>>(),
                "delta": p.point.delta.iter().map(f64::to_string).collect::<Vec<_>>(),
                "theta": p.theta.iter().map(f64::to_string).collect::<Vec<_>>(),
            }));
        }
        Ok(serde_json::json!({
            "schema_version": 1,
            "index": index,
            "size": self.size,
            "coordinates": coords,
            "nodes": per_node,
        }))
    }
}

/// Factor graph of a single network node.
pub fn node_factor_graph(
    network: &RegulatoryNetwork,
    n: usize,
    solver: &Solver,
) -> Result<FactorGraph, ParamGraphError> {
    let orders = solver.solve_psd(&network.signature(n))?;
    Ok(build_factor_graph(orders, network.threshold_count(n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver() -> Solver {
        Solver::default()
    }

    fn fg(sig: &str, m: usize) -> FactorGraph {
        let orders = solver().solve_psd(&Signature::parse(sig).unwrap()).unwrap();
        build_factor_graph(orders, m)
    }

    #[test]
    fn single_input_single_threshold() {
        let g = fg("x", 1);
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn region_counts() {
        assert_eq!(fg("x", 2).len(), 12);
        assert_eq!(fg("x", 3).len(), 60);
        assert_eq!(fg("xy", 1).len(), 6);
        assert_eq!(fg("xy", 2).len(), 40);
        assert_eq!(fg("<x>+y", 2).len(), 40);
        assert_eq!(fg("[x,y]", 1).len(), 3);
        assert_eq!(fg("xyz", 3).len(), 4242);
        assert_eq!(fg("x(y+z)", 2).len(), 310);
    }

    #[test]
    fn toggle_switch_graph() {
        let net = RegulatoryNetwork::parse("1 : : (~2)\n2 : : (1)").unwrap();
        let pg = ParameterGraph::build(&net, &solver()).unwrap();
        assert_eq!(pg.size(), 9);
        assert_eq!(pg.decode(0).unwrap(), vec![0, 0]);
        assert_eq!(pg.decode(8).unwrap(), vec![2, 2]);
        assert!(matches!(
            pg.decode(9),
            Err(ParamGraphError::IndexOutOfRange { .. })
        ));
        for i in 0..9 {
            assert_eq!(pg.encode(&pg.decode(i).unwrap()).unwrap(), i);
            let p = pg.instantiate_parameters(i).unwrap();
            assert!(pg.check_parameters(&p).unwrap() >= INSTANTIATION_MARGIN);
        }
    }

    #[test]
    fn inequality_text() {
        let net = RegulatoryNetwork::parse("1 : : (2)\n2 : : (~1)").unwrap();
        let pg = ParameterGraph::build(&net, &solver()).unwrap();
        let ineq = pg.region_inequalities(pg.encode(&[0, 0]).unwrap()).unwrap();
        let text = pg.render_inequalities(&ineq);
        assert_eq!(text[0], "gamma_1*theta_2,1 < l_1,2");
        assert_eq!(text[1], "l_1,2 < l_1,2+d_1,2");
    }

    #[test]
    fn joint_lowest_threshold() {
        let net = RegulatoryNetwork::parse("a : <b> : (c)\nb : : (a)\nc : : (a)").unwrap();
        let pg = ParameterGraph::build(&net, &solver()).unwrap();
        let ineq = pg.region_inequalities(0).unwrap();
        let text = pg.render_inequalities(&ineq);
        assert_eq!(text[0], "theta_b,a < theta_c,a");
        assert_eq!(text[1], "theta_c,a < l_a,c/(lt_a,b+dt_a,b)");
    }

    #[test]
    fn lowest_gap_placement_is_half() {
        let net = RegulatoryNetwork::parse("1 : : (1)").unwrap();
        let pg = ParameterGraph::build(&net, &solver()).unwrap();
        let p = pg.instantiate_parameters(0).unwrap();
        assert!((p.nodes[0].theta[0] - p.nodes[0].point.ell[0] / 2.0).abs() < 1e-12);
    }
}
