//! Canonical interaction signatures.
//!
//! A signature records only the shape of a node's input structure: for each
//! decay and production factor, how many pair terms and single terms it sums.
//! Text form uses letters for formal inputs, `[x1,x2]` for pairs, juxtaposition
//! for products and `<...>` for the decay side, e.g. `<x>+y`, `x(y+z)`,
//! `<[x1,x2]>+y`.

use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::AlgebraError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactorShape {
    pub pairs: usize,
    pub singles: usize,
}

impl FactorShape {
    pub fn from_terms(is_pair: impl IntoIterator<Item = bool>) -> Self {
        let mut s = FactorShape {
            pairs: 0,
            singles: 0,
        };
        for p in is_pair {
            if p {
                s.pairs += 1;
            } else {
                s.singles += 1;
            }
        }
        s
    }

    /// Number of formal inputs (a pair counts once).
    pub fn terms(&self) -> usize {
        self.pairs + self.singles
    }

    /// Canonical sort key: fewer terms first, then more pairs first.
    pub fn sort_key(&self) -> (usize, Reverse<usize>) {
        (self.terms(), Reverse(self.pairs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    decay: Vec<FactorShape>,
    production: Vec<FactorShape>,
}

impl Signature {
    pub fn new(mut decay: Vec<FactorShape>, mut production: Vec<FactorShape>) -> Self {
        decay.retain(|f| f.terms() > 0);
        production.retain(|f| f.terms() > 0);
        decay.sort_by_key(FactorShape::sort_key);
        production.sort_by_key(FactorShape::sort_key);
        Signature { decay, production }
    }

    /// Classical signature of a plain product of sums with the given sizes.
    pub fn classical(sizes: &[usize]) -> Self {
        Signature::new(
            Vec::new(),
            sizes
                .iter()
                .map(|&k| FactorShape {
                    pairs: 0,
                    singles: k,
                })
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self, AlgebraError> {
        SigParser::new(text).signature()
    }

    pub fn decay(&self) -> &[FactorShape] {
        &self.decay
    }

    pub fn production(&self) -> &[FactorShape] {
        &self.production
    }

    pub fn is_joint(&self) -> bool {
        !self.decay.is_empty()
    }

    pub fn has_pairs(&self) -> bool {
        self.decay
            .iter()
            .chain(&self.production)
            .any(|f| f.pairs > 0)
    }

    /// Sorted summand sizes of the production side after pair contraction.
    pub fn interaction_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.production.iter().map(FactorShape::terms).collect();
        t.sort_unstable();
        t
    }

    pub fn decay_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.decay.iter().map(FactorShape::terms).collect();
        t.sort_unstable();
        t
    }

    /// Formal input count after pair contraction, both sides.
    pub fn order(&self) -> usize {
        self.decay
            .iter()
            .chain(&self.production)
            .map(FactorShape::terms)
            .sum()
    }

    /// Incoming edge count (pairs count twice).
    pub fn edge_count(&self) -> usize {
        self.decay
            .iter()
            .chain(&self.production)
            .map(|f| 2 * f.pairs + f.singles)
            .sum()
    }

    /// The classical signature of the product of all factors with pairs contracted.
    pub fn product_signature(&self) -> Signature {
        let sizes: Vec<usize> = self
            .production
            .iter()
            .chain(&self.decay)
            .map(FactorShape::terms)
            .collect();
        Signature::classical(&sizes)
    }

    /// Type label such as `(1,2)` or `(1;1)`.
    pub fn type_label(&self) -> String {
        let join = |v: Vec<usize>| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        if self.is_joint() {
            format!(
                "({};{})",
                join(self.decay_type()),
                join(self.interaction_type())
            )
        } else {
            format!("({})", join(self.interaction_type()))
        }
    }
}

const LETTERS: &[u8] = b"xyzuvwabcdefghijklmnopqrst";

fn letter(i: usize) -> String {
    match LETTERS.get(i) {
        Some(&c) => (c as char).to_string(),
        None => format!("a{i}"),
    }
}

fn render_side(factors: &[FactorShape], next: &mut usize) -> String {
    let rendered: Vec<(usize, String)> = factors
        .iter()
        .map(|f| {
            let mut terms = Vec::new();
            for _ in 0..f.pairs {
                let l = letter(*next);
                *next += 1;
                terms.push(format!("[{l}1,{l}2]"));
            }
            for _ in 0..f.singles {
                terms.push(letter(*next));
                *next += 1;
            }
            (f.terms(), terms.join("+"))
        })
        .collect();
    if rendered.len() == 1 {
        return rendered.into_iter().next().unwrap().1;
    }
    rendered
        .into_iter()
        .map(|(n, s)| if n > 1 { format!("({s})") } else { s })
        .collect()
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut next = 0;
        match (self.decay.is_empty(), self.production.is_empty()) {
            (true, true) => f.write_str("1"),
            (true, false) => f.write_str(&render_side(&self.production, &mut next)),
            (false, prod_empty) => {
                let d = render_side(&self.decay, &mut next);
                write!(f, "<{d}>")?;
                if !prod_empty {
                    write!(f, "+{}", render_side(&self.production, &mut next))?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for Signature {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Signature::parse(s)
    }
}

struct SigParser {
    chars: Vec<char>,
    pos: usize,
}

impl SigParser {
    fn new(text: &str) -> Self {
        SigParser {
            chars: text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '⟨' => '<',
                    '⟩' => '>',
                    '∼' => '~',
                    c => c,
                })
                .collect(),
            pos: 0,
        }
    }

    fn err(&self, msg: &str) -> AlgebraError {
        AlgebraError::SignatureSyntax {
            position: self.pos,
            message: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), AlgebraError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn signature(mut self) -> Result<Signature, AlgebraError> {
        if self.chars.is_empty() {
            return Err(self.err("empty signature"));
        }
        if self.chars == ['1'] {
            return Ok(Signature::new(Vec::new(), Vec::new()));
        }
        let mut decay = Vec::new();
        while self.eat('<') {
            decay.extend(self.expression('>')?);
            self.expect('>')?;
        }
        let production = if decay.is_empty() {
            self.expression('\0')?
        } else if self.eat('+') {
            self.expression('\0')?
        } else {
            Vec::new()
        };
        if self.pos != self.chars.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(Signature::new(decay, production))
    }

    /// A product of factors, or a single top-level sum of bare terms.
    fn expression(&mut self, close: char) -> Result<Vec<FactorShape>, AlgebraError> {
        let first = self.product(close)?;
        if self.peek() != Some('+') {
            return Ok(first.into_iter().map(|(_, f)| f).collect());
        }
        let mut terms = Vec::new();
        let mut push = |p: Vec<(bool, FactorShape)>, at: usize| {
            if p.len() != 1 || !p[0].0 {
                return Err(AlgebraError::SignatureSyntax {
                    position: at,
                    message: "a top-level sum may only contain single terms".into(),
                });
            }
            terms.push(p[0].1.pairs == 1);
            Ok(())
        };
        push(first, self.pos)?;
        while self.eat('+') {
            let p = self.product(close)?;
            push(p, self.pos)?;
        }
        Ok(vec![FactorShape::from_terms(terms)])
    }

    /// Returns factors, each flagged whether it was a bare term.
    fn product(&mut self, close: char) -> Result<Vec<(bool, FactorShape)>, AlgebraError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    let mut terms = vec![self.term()?];
                    while self.eat('+') {
                        terms.push(self.term()?);
                    }
                    self.expect(')')?;
                    out.push((false, FactorShape::from_terms(terms)));
                }
                Some('·') | Some('*') => {
                    self.pos += 1;
                    continue;
                }
                Some(c) if c == '[' || c == '~' || c.is_ascii_alphabetic() => {
                    let t = self.term()?;
                    out.push((true, FactorShape::from_terms([t])));
                }
                Some(c) if c == close || c == '+' => break,
                None => break,
                Some(_) => return Err(self.err("unexpected character")),
            }
        }
        if out.is_empty() {
            return Err(self.err("expected a term"));
        }
        Ok(out)
    }

    /// Parses a term; returns true for pairs.
    fn term(&mut self) -> Result<bool, AlgebraError> {
        if self.eat('[') {
            self.input()?;
            self.expect(',')?;
            self.input()?;
            self.expect(']')?;
            Ok(true)
        } else {
            self.input()?;
            Ok(false)
        }
    }

    fn input(&mut self) -> Result<(), AlgebraError> {
        self.eat('~');
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => self.pos += 1,
            _ => return Err(self.err("expected an input name")),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
            self.pos += 1;
        }
        Ok(())
    }
}
