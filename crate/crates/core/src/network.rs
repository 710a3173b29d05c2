//! Regulatory network data model and the line-oriented specification format.
//!
//! A specification has one node per line:
//!
//! ```text
//! name[!] : <decay factor><decay factor>... : (production factor)(production factor)...
//! ```
//!
//! Terms inside a factor are summed and factors are multiplied. A term is either
//! a single input `x` / `~x` (activating / repressing) or an activity pair
//! `[x,y]` / `[x,~y]` where the inner `~` flips the sign of the second member
//! (open-dot modification). A trailing `!` on the name marks a terminal node
//! without out-edges. `#` starts a comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::signature::{FactorShape, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: node `{name}` declared twice")]
    DuplicateNode { line: usize, name: String },
    #[error("node `{target}`: input `{source_name}` appears more than once")]
    DuplicateInput { target: String, source_name: String },
    #[error("node `{target}`: input `{source_name}` controls both decay and production")]
    Overlap { target: String, source_name: String },
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("node `{0}` has no out-edges; mark it terminal with `!`")]
    TerminalWithoutMark(String),
    #[error("node `{0}` is marked terminal but has out-edges")]
    TerminalWithOutEdges(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Activating,
    Repressing,
}

impl Sign {
    pub fn flipped(self) -> Sign {
        match self {
            Sign::Activating => Sign::Repressing,
            Sign::Repressing => Sign::Activating,
        }
    }

    /// Value bit of a step function given whether its source is above threshold.
    pub fn value_bit(self, source_high: bool) -> bool {
        match self {
            Sign::Activating => source_high,
            Sign::Repressing => !source_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRef {
    /// Index of the source node in network order.
    pub source: usize,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputTerm {
    Single(InputRef),
    Pair {
        first: InputRef,
        second: InputRef,
        second_flipped: bool,
    },
}

impl InputTerm {
    pub fn is_pair(&self) -> bool {
        matches!(self, InputTerm::Pair { .. })
    }

    /// Member edges with their effective signs (flip applied to the second member).
    pub fn members(&self) -> Vec<InputRef> {
        match self {
            InputTerm::Single(r) => vec![r.clone()],
            InputTerm::Pair {
                first,
                second,
                second_flipped,
            } => {
                let mut s = second.clone();
                if *second_flipped {
                    s.sign = s.sign.flipped();
                }
                vec![first.clone(), s]
            }
        }
    }

    pub fn sources(&self) -> Vec<usize> {
        match self {
            InputTerm::Single(r) => vec![r.source],
            InputTerm::Pair { first, second, .. } => vec![first.source, second.source],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InteractionSpec {
    pub factors: Vec<Vec<InputTerm>>,
}

impl InteractionSpec {
    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &InputTerm> {
        self.factors.iter().flatten()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.terms().flat_map(|t| t.sources()).collect()
    }

    pub fn shape(&self) -> Vec<FactorShape> {
        self.factors
            .iter()
            .map(|f| FactorShape::from_terms(f.iter().map(InputTerm::is_pair)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkNode {
    pub name: String,
    pub terminal: bool,
    pub decay: InteractionSpec,
    pub production: InteractionSpec,
}

impl NetworkNode {
    pub fn has_decay_control(&self) -> bool {
        !self.decay.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Decay,
    Production,
}

/// One occurrence of a node as an input somewhere in the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutEdge {
    /// `None` for the synthetic threshold of a terminal node.
    pub target: Option<usize>,
    pub side: Side,
    pub factor: usize,
    pub term: usize,
    /// 0 for singles and first pair members, 1 for second pair members.
    pub member: usize,
    pub sign: Sign,
    pub is_self: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegulatoryNetwork {
    nodes: Vec<NetworkNode>,
    out_edges: Vec<Vec<OutEdge>>,
}

impl RegulatoryNetwork {
    /// Validates nodes and derives out-edge lists.
    pub fn new(nodes: Vec<NetworkNode>) -> Result<Self, NetworkError> {
        if nodes.is_empty() {
            return Err(NetworkError::EmptyNetwork);
        }
        let n = nodes.len();
        for node in &nodes {
            let mut seen = HashMap::new();
            for (side, spec) in [
                (Side::Decay, &node.decay),
                (Side::Production, &node.production),
            ] {
                for s in spec.sources() {
                    if s >= n {
                        return Err(NetworkError::UnknownNode {
                            line: 0,
                            name: format!("#{s}"),
                        });
                    }
                    match seen.insert(s, side) {
                        None => {}
                        Some(prev) if prev == side => {
                            return Err(NetworkError::DuplicateInput {
                                target: node.name.clone(),
                                source_name: nodes[s].name.clone(),
                            })
                        }
                        Some(_) => {
                            return Err(NetworkError::Overlap {
                                target: node.name.clone(),
                                source_name: nodes[s].name.clone(),
                            })
                        }
                    }
                }
            }
        }

        let mut out_edges: Vec<Vec<OutEdge>> = vec![Vec::new(); n];
        for (t, node) in nodes.iter().enumerate() {
            for (side, spec) in [
                (Side::Decay, &node.decay),
                (Side::Production, &node.production),
            ] {
                for (fi, factor) in spec.factors.iter().enumerate() {
                    for (ti, term) in factor.iter().enumerate() {
                        for (mi, m) in term.members().into_iter().enumerate() {
                            out_edges[m.source].push(OutEdge {
                                target: Some(t),
                                side,
                                factor: fi,
                                term: ti,
                                member: mi,
                                sign: m.sign,
                                is_self: m.source == t,
                            });
                        }
                    }
                }
            }
        }
        for (i, node) in nodes.iter().enumerate() {
            match (out_edges[i].is_empty(), node.terminal) {
                (true, false) => return Err(NetworkError::TerminalWithoutMark(node.name.clone())),
                (false, true) => return Err(NetworkError::TerminalWithOutEdges(node.name.clone())),
                (true, true) => out_edges[i].push(OutEdge {
                    target: None,
                    side: Side::Production,
                    factor: 0,
                    term: 0,
                    member: 0,
                    sign: Sign::Activating,
                    is_self: false,
                }),
                (false, false) => {}
            }
        }
        Ok(RegulatoryNetwork { nodes, out_edges })
    }

    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        parse_network(text)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NetworkNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn out_edges(&self, i: usize) -> &[OutEdge] {
        &self.out_edges[i]
    }

    /// Threshold parameters of node `i` (one per out-edge occurrence).
    pub fn threshold_count(&self, i: usize) -> usize {
        self.out_edges[i].len()
    }

    /// Slot of the out-edge of `source` feeding member `member` of term
    /// `(side, factor, term)` of `target`.
    pub fn out_slot(
        &self,
        source: usize,
        target: usize,
        side: Side,
        factor: usize,
        term: usize,
        member: usize,
    ) -> usize {
        self.out_edges[source]
            .iter()
            .position(|e| {
                e.target == Some(target)
                    && e.side == side
                    && e.factor == factor
                    && e.term == term
                    && e.member == member
            })
            .expect("out-edge registered at construction")
    }

    pub fn self_slot(&self, i: usize) -> Option<usize> {
        self.out_edges[i].iter().position(|e| e.is_self)
    }

    pub fn has_self_edges(&self) -> bool {
        (0..self.len()).any(|i| self.self_slot(i).is_some())
    }

    pub fn signature(&self, i: usize) -> Signature {
        interaction_signature(&self.nodes[i])
    }

    /// Renders the network back into canonical specification text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            out.push_str(&node.name);
            if node.terminal {
                out.push('!');
            }
            out.push_str(" :");
            if !node.decay.is_empty() {
                out.push(' ');
                for f in &node.decay.factors {
                    out.push('<');
                    out.push_str(&self.render_sum(f));
                    out.push('>');
                }
            }
            out.push_str(" :");
            if !node.production.is_empty() {
                out.push(' ');
                for f in &node.production.factors {
                    out.push('(');
                    out.push_str(&self.render_sum(f));
                    out.push(')');
                }
            }
            out.push('\n');
        }
        out
    }

    fn render_ref(&self, r: &InputRef) -> String {
        match r.sign {
            Sign::Activating => self.nodes[r.source].name.clone(),
            Sign::Repressing => format!("~{}", self.nodes[r.source].name),
        }
    }

    fn render_sum(&self, terms: &[InputTerm]) -> String {
        terms
            .iter()
            .map(|t| match t {
                InputTerm::Single(r) => self.render_ref(r),
                InputTerm::Pair {
                    first,
                    second,
                    second_flipped,
                } => format!(
                    "[{},{}{}]",
                    self.render_ref(first),
                    if *second_flipped { "~" } else { "" },
                    self.render_ref(second)
                ),
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Canonical JSON description for downstream tools.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                serde_json::json!({
                    "name": n.name,
                    "terminal": n.terminal,
                    "decay": self.spec_json(&n.decay),
                    "production": self.spec_json(&n.production),
                    "signature": interaction_signature(n).to_string(),
                    "out_edges": self.out_edges[i].iter().map(|e| serde_json::json!({
                        "target": e.target.map(|t| self.nodes[t].name.clone()),
                        "side": e.side,
                        "sign": e.sign,
                        "self": e.is_self,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "schema_version": 1, "nodes": nodes })
    }

    fn spec_json(&self, spec: &InteractionSpec) -> serde_json::Value {
        let name = |r: &InputRef| serde_json::json!({ "source": self.nodes[r.source].name, "sign": r.sign });
        serde_json::Value::Array(
            spec.factors
                .iter()
                .map(|f| {
                    serde_json::Value::Array(
                        f.iter()
                            .map(|t| match t {
                                InputTerm::Single(r) => {
                                    serde_json::json!({ "kind": "single", "input": name(r) })
                                }
                                InputTerm::Pair {
                                    first,
                                    second,
                                    second_flipped,
                                } => serde_json::json!({
                                    "kind": "pair",
                                    "first": name(first),
                                    "second": name(second),
                                    "second_flipped": second_flipped,
                                }),
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

impl fmt::Display for RegulatoryNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Canonical, name-free signature of a node's input structure.
pub fn interaction_signature(node: &NetworkNode) -> Signature {
    Signature::new(node.decay.shape(), node.production.shape())
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone)]
struct RawRef {
    name: String,
    repressing: bool,
    column: usize,
}

#[derive(Debug, Clone)]
enum RawTerm {
    Single(RawRef),
    Pair(RawRef, RawRef, bool),
}

struct RawNode {
    name: String,
    terminal: bool,
    decay: Vec<Vec<RawTerm>>,
    production: Vec<Vec<RawTerm>>,
    line: usize,
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().enumerate().map(|(i, c)| (i + 1, c)).collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn column(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(c, _)| c)
            .unwrap_or(self.chars.len() + 1)
    }

    fn error(&self, message: impl Into<String>) -> NetworkError {
        NetworkError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), NetworkError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String, NetworkError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            let ok = if self.pos == start {
                c.is_ascii_alphabetic() || c == '_' || c.is_ascii_digit()
            } else {
                c.is_ascii_alphanumeric() || c == '_'
            };
            if !ok {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected a node name"));
        }
        Ok(self.chars[start..self.pos]
            .iter()
            .map(|&(_, c)| c)
            .collect())
    }

    fn input(&mut self) -> Result<RawRef, NetworkError> {
        let repressing = self.eat('~');
        self.skip_ws();
        let column = self.column();
        let name = self.name()?;
        Ok(RawRef {
            name,
            repressing,
            column,
        })
    }

    fn term(&mut self) -> Result<RawTerm, NetworkError> {
        if self.eat('[') {
            let first = self.input()?;
            self.expect(',')?;
            let flipped = self.eat('~');
            let second = self.input()?;
            self.expect(']')?;
            Ok(RawTerm::Pair(first, second, flipped))
        } else {
            Ok(RawTerm::Single(self.input()?))
        }
    }

    fn sum(&mut self, close: char) -> Result<Vec<RawTerm>, NetworkError> {
        let mut terms = vec![self.term()?];
        while self.eat('+') {
            terms.push(self.term()?);
        }
        self.expect(close)?;
        Ok(terms)
    }

    fn factors(&mut self, open: char, close: char) -> Result<Vec<Vec<RawTerm>>, NetworkError> {
        let mut out = Vec::new();
        while self.eat(open) {
            out.push(self.sum(close)?);
        }
        Ok(out)
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

/// Node names may start with a digit in practice (`1 : : (2)`); the grammar's
/// identifier rule is relaxed accordingly.
pub fn parse_network(text: &str) -> Result<RegulatoryNetwork, NetworkError> {
    let mut raw = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        if content.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(content, line_no);
        let name = cur.name()?;
        let terminal = cur.eat('!');
        cur.expect(':')?;
        let decay = cur.factors('<', '>')?;
        cur.expect(':')?;
        let production = cur.factors('(', ')')?;
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing input"));
        }
        raw.push(RawNode {
            name,
            terminal,
            decay,
            production,
            line: line_no,
        });
    }
    if raw.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }

    let mut index = BTreeMap::new();
    for (i, r) in raw.iter().enumerate() {
        if index.insert(r.name.clone(), i).is_some() {
            return Err(NetworkError::DuplicateNode {
                line: r.line,
                name: r.name.clone(),
            });
        }
    }
    let resolve = |r: &RawRef, line: usize| -> Result<InputRef, NetworkError> {
        let _ = r.column;
        index
            .get(&r.name)
            .map(|&source| InputRef {
                source,
                sign: if r.repressing {
                    Sign::Repressing
                } else {
                    Sign::Activating
                },
            })
            .ok_or_else(|| NetworkError::UnknownNode {
                line,
                name: r.name.clone(),
            })
    };
    let convert =
        |factors: &[Vec<RawTerm>], line: usize| -> Result<InteractionSpec, NetworkError> {
            let mut out = Vec::new();
            for f in factors {
                let mut terms = Vec::new();
                for t in f {
                    terms.push(match t {
                        RawTerm::Single(r) => InputTerm::Single(resolve(r, line)?),
                        RawTerm::Pair(a, b, flip) => InputTerm::Pair {
                            first: resolve(a, line)?,
                            second: resolve(b, line)?,
                            second_flipped: *flip,
                        },
                    });
                }
                out.push(terms);
            }
            Ok(InteractionSpec { factors: out })
        };

    let mut nodes = Vec::new();
    for r in &raw {
        nodes.push(NetworkNode {
            name: r.name.clone(),
            terminal: r.terminal,
            decay: convert(&r.decay, r.line)?,
            production: convert(&r.production, r.line)?,
        });
    }
    RegulatoryNetwork::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggle_switch() {
        let net = parse_network("1 : : (2)\n2 : : (~1)").unwrap();
        assert_eq!(net.len(), 2);
        let n1 = net.node(0);
        assert_eq!(
            n1.production.factors[0][0],
            InputTerm::Single(InputRef {
                source: 1,
                sign: Sign::Activating
            })
        );
        let n2 = net.node(1);
        assert_eq!(
            n2.production.factors[0][0],
            InputTerm::Single(InputRef {
                source: 0,
                sign: Sign::Repressing
            })
        );
        assert_eq!(net.threshold_count(0), 1);
        assert_eq!(net.threshold_count(1), 1);
    }

    #[test]
    fn decay_and_pair_network() {
        let net = parse_network("1 : : (3)\n2 : <1> : (~3)\n3 : : ([1,2])").unwrap();
        assert!(net.node(1).has_decay_control());
        assert!(net.node(2).production.factors[0][0].is_pair());
        // node 1 feeds the decay of 2 and the pair of 3
        assert_eq!(net.threshold_count(0), 2);
        assert_eq!(net.threshold_count(1), 1);
        assert_eq!(net.threshold_count(2), 2);
        assert_eq!(net.signature(1).to_string(), "<x>+y");
        assert_eq!(net.signature(2).to_string(), "[x1,x2]");
    }

    #[test]
    fn lone_node_needs_terminal_mark() {
        assert_eq!(
            parse_network("1 : : "),
            Err(NetworkError::TerminalWithoutMark("1".into()))
        );
        let net = parse_network("1! : : ").unwrap();
        assert_eq!(net.threshold_count(0), 1);
        assert_eq!(net.out_edges(0)[0].target, None);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            parse_network("# nothing\n"),
            Err(NetworkError::EmptyNetwork)
        );
        assert!(matches!(
            parse_network("1 : : (2)"),
            Err(NetworkError::UnknownNode { line: 1, .. })
        ));
        assert!(matches!(
            parse_network("1 : : (1+1)"),
            Err(NetworkError::DuplicateInput { .. })
        ));
        assert!(matches!(
            parse_network("1 : <1> : (1)"),
            Err(NetworkError::Overlap { .. })
        ));
        assert!(matches!(
            parse_network("1 : : (1\n"),
            Err(NetworkError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_network("1 : : (1) x"),
            Err(NetworkError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_network("a : : (a)\na : : (a)"),
            Err(NetworkError::DuplicateNode { line: 2, .. })
        ));
        assert!(matches!(
            parse_network("a! : : (a)"),
            Err(NetworkError::TerminalWithOutEdges(_))
        ));
    }

    #[test]
    fn self_edges_count_once_per_occurrence() {
        let net = parse_network("a : : (a)(~b)\nb : : (a)").unwrap();
        assert_eq!(net.self_slot(0), Some(0));
        assert_eq!(net.threshold_count(0), 2);
        assert!(net.has_self_edges());
    }

    #[test]
    fn signature_examples() {
        let net = parse_network("x : : (y)(z+w)\ny : : (x)\nz : : (x)\nw : : ([x,~y])(z)").unwrap();
        assert_eq!(net.signature(0).to_string(), "x(y+z)");
        assert_eq!(net.signature(3).to_string(), "[x1,x2]y");
        assert_eq!(net.signature(1).interaction_type(), vec![1]);
    }

    #[test]
    fn comments_and_whitespace() {
        let net = parse_network("# toggle\n  1 : : ( 2 ) # rep\n\n2:: (~1)\n").unwrap();
        assert_eq!(net.len(), 2);
    }

    #[test]
    fn render_roundtrip() {
        let text = "1 : : (3)\n2 : <1> : (~3)\n3 : : ([1,~2])\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.render(), text);
        assert_eq!(parse_network(&net.render()).unwrap(), net);
    }
}
