//! Contracted formal layout of a signature and polynomial evaluation.
//!
//! Formal inputs are laid out production side first (factors in canonical
//! order, pairs before singles inside a factor), then the decay side. A value
//! index has bit `i` set when formal input `i` takes its high value. Full input
//! combinations use one bit per incoming edge, a pair occupying two
//! consecutive bits with its first member in the lower one.

use serde::{Deserialize, Serialize};

use super::signature::{FactorShape, Signature};
use super::AlgebraError;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpec {
    /// Formal input indices summed by this factor.
    pub inputs: Vec<usize>,
    pub decay: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub factors: Vec<FactorSpec>,
    pub n_production: usize,
    pub n_decay: usize,
    pub is_pair: Vec<bool>,
    /// First full-combination bit of each formal input.
    pub edge_offset: Vec<usize>,
    pub n_edges: usize,
}

fn push_side(
    shapes: &[FactorShape],
    decay: bool,
    factors: &mut Vec<FactorSpec>,
    is_pair: &mut Vec<bool>,
) {
    for s in shapes {
        let start = is_pair.len();
        is_pair.extend(std::iter::repeat(true).take(s.pairs));
        is_pair.extend(std::iter::repeat(false).take(s.singles));
        factors.push(FactorSpec {
            inputs: (start..is_pair.len()).collect(),
            decay,
        });
    }
}

impl Structure {
    pub fn from_signature(sig: &Signature) -> Self {
        let mut factors = Vec::new();
        let mut is_pair = Vec::new();
        push_side(sig.production(), false, &mut factors, &mut is_pair);
        let n_production = is_pair.len();
        push_side(sig.decay(), true, &mut factors, &mut is_pair);
        let n_decay = is_pair.len() - n_production;
        let mut edge_offset = Vec::with_capacity(is_pair.len());
        let mut n_edges = 0;
        for &p in &is_pair {
            edge_offset.push(n_edges);
            n_edges += if p { 2 } else { 1 };
        }
        Structure {
            factors,
            n_production,
            n_decay,
            is_pair,
            edge_offset,
            n_edges,
        }
    }

    /// Plain product-of-sums structure over the given factor partition.
    pub fn from_partition(parts: &[Vec<usize>]) -> Self {
        let k: usize = parts.iter().map(Vec::len).sum();
        Structure {
            factors: parts
                .iter()
                .map(|p| FactorSpec {
                    inputs: p.clone(),
                    decay: false,
                })
                .collect(),
            n_production: k,
            n_decay: 0,
            is_pair: vec![false; k],
            edge_offset: (0..k).collect(),
            n_edges: k,
        }
    }

    /// Number of formal inputs, both sides.
    pub fn order(&self) -> usize {
        self.n_production + self.n_decay
    }

    pub fn n_values(&self) -> usize {
        1 << self.order()
    }

    pub fn is_joint(&self) -> bool {
        self.n_decay > 0
    }

    pub fn has_pairs(&self) -> bool {
        self.is_pair.iter().any(|&p| p)
    }

    pub fn is_decay_input(&self, i: usize) -> bool {
        i >= self.n_production
    }

    /// Same factors with every sign positive (the product `f·f̃`).
    pub fn as_product(&self) -> Structure {
        let mut s = self.clone();
        for f in &mut s.factors {
            f.decay = false;
        }
        s.n_production += s.n_decay;
        s.n_decay = 0;
        s
    }

    /// Pair-contracted classical version: every formal input a single edge.
    pub fn contracted(&self) -> Structure {
        let mut s = self.clone();
        s.is_pair = vec![false; s.order()];
        s.edge_offset = (0..s.order()).collect();
        s.n_edges = s.order();
        s
    }

    /// Value index reached by a full input combination (pairs AND their members).
    pub fn value_of_combination(&self, q: usize) -> usize {
        let mut v = 0;
        for (i, (&p, &off)) in self.is_pair.iter().zip(&self.edge_offset).enumerate() {
            let hi = if p {
                (q >> off) & 3 == 3
            } else {
                (q >> off) & 1 == 1
            };
            if hi {
                v |= 1 << i;
            }
        }
        v
    }

    /// Full combinations grouped by value index.
    pub fn value_groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_values()];
        for q in 0..(1usize << self.n_edges) {
            groups[self.value_of_combination(q)].push(q);
        }
        groups
    }

    /// Bit mask of the formal inputs in factor `j`.
    pub fn factor_mask(&self, j: usize) -> usize {
        self.factors[j].inputs.iter().fold(0, |m, &i| m | (1 << i))
    }

    /// True when `a` is forced below `b` by monotonicity.
    pub fn dominates(&self, a: usize, b: usize) -> bool {
        let pmask = (1 << self.n_production) - 1;
        let dmask = (self.n_values() - 1) & !pmask;
        (a & pmask) & !(b & pmask) == 0 && (b & dmask) & !(a & dmask) == 0
    }
}

/// Parameter values per formal input, in [`Structure`] order. Decay-side
/// inputs carry the decay family (ℓ̃, δ̃).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint<S> {
    pub ell: Vec<S>,
    pub delta: Vec<S>,
}

impl<S: Scalar> ParameterPoint<S> {
    pub fn new(ell: Vec<S>, delta: Vec<S>) -> Self {
        ParameterPoint { ell, delta }
    }

    pub fn is_positive(&self) -> bool {
        self.ell.iter().chain(&self.delta).all(|x| *x > S::zero())
    }

    /// Value of factor `j` when value index `c` selects low/high per input.
    pub fn factor_value(&self, structure: &Structure, j: usize, c: usize) -> S {
        structure.factors[j]
            .inputs
            .iter()
            .fold(S::zero(), |acc, &i| {
                let z = if c >> i & 1 == 1 {
                    self.ell[i].clone() + self.delta[i].clone()
                } else {
                    self.ell[i].clone()
                };
                acc + z
            })
    }

    /// Production and decay products at value index `c`.
    pub fn sides(&self, structure: &Structure, c: usize) -> (S, S) {
        let mut num = S::one();
        let mut den = S::one();
        for (j, f) in structure.factors.iter().enumerate() {
            let v = self.factor_value(structure, j, c);
            if f.decay {
                den = den * v;
            } else {
                num = num * v;
            }
        }
        (num, den)
    }
}

impl ParameterPoint<f64> {
    pub fn to_decimal_strings(&self) -> (Vec<String>, Vec<String>) {
        (
            self.ell.iter().map(|x| x.to_string()).collect(),
            self.delta.iter().map(|x| x.to_string()).collect(),
        )
    }
}

/// Values of every input polynomial (or production/decay ratio) by value index.
pub fn evaluate_polynomials<S: Scalar>(
    structure: &Structure,
    point: &ParameterPoint<S>,
) -> Result<Vec<S>, AlgebraError> {
    let k = structure.order();
    if point.ell.len() != k || point.delta.len() != k {
        return Err(AlgebraError::ParameterLength {
            expected: k,
            found: point.ell.len().min(point.delta.len()),
        });
    }
    if !point.is_positive() {
        return Err(AlgebraError::NonPositiveParameter);
    }
    Ok((0..structure.n_values())
        .map(|c| {
            let (num, den) = point.sides(structure, c);
            num / den
        })
        .collect())
}

/// Coordinatewise dominance order over value indices, with pair tie groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceOrder {
    pub n_values: usize,
    /// Covering relations `(a, b)` meaning `a ≺ b`.
    pub covers: Vec<(usize, usize)>,
    /// Full input combinations forced to share a value, for groups of size > 1.
    pub ties: Vec<Vec<usize>>,
}

impl DominanceOrder {
    pub fn less(&self, structure: &Structure, a: usize, b: usize) -> bool {
        a != b && structure.dominates(a, b)
    }
}

pub fn dominance_order(structure: &Structure) -> DominanceOrder {
    let n = structure.n_values();
    let mut covers = Vec::new();
    for a in 0..n {
        for i in 0..structure.order() {
            let b = a ^ (1 << i);
            let raises = if structure.is_decay_input(i) {
                a & (1 << i) != 0
            } else {
                a & (1 << i) == 0
            };
            if raises {
                covers.push((a, b));
            }
        }
    }
    covers.sort_unstable();
    let ties = structure
        .value_groups()
        .into_iter()
        .filter(|g| g.len() > 1)
        .collect();
    DominanceOrder {
        n_values: n,
        covers,
        ties,
    }
}
