//! Candidate orders: linear extensions of the dominance order that also
//! respect the cancellation identities of products of sums.
//!
//! For value indices `a`, `b` the comparison of `f(a)` and `f(b)` only depends
//! on the factors where they differ; when exactly one factor differs it only
//! depends on the inputs set in one and not the other. Pairs of comparisons
//! with the same key must therefore go the same way.

use super::structure::Structure;

pub(crate) struct Candidates {
    n: usize,
    /// Bit mask of dominance predecessors per value.
    preds: Vec<u64>,
    /// Key index of the ordered comparison `(a, b)`.
    key: Vec<u32>,
    /// Key index of the reversed comparison.
    rev: Vec<u32>,
    /// 0 undecided, 1 key means "first below second", -1 the opposite.
    table: Vec<i8>,
}

impl Candidates {
    pub(crate) fn new(structure: &Structure) -> Self {
        let k = structure.order();
        assert!(k <= 6, "enumeration supports at most 64 values");
        let n = 1usize << k;
        let mut preds = vec![0u64; n];
        for b in 0..n {
            for a in 0..n {
                if a != b && structure.dominates(a, b) {
                    preds[b] |= 1 << a;
                }
            }
        }
        let masks: Vec<usize> = (0..structure.factors.len())
            .map(|j| structure.factor_mask(j))
            .collect();
        let mut key = vec![0u32; n * n];
        let mut rev = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                let diff: Vec<usize> = masks.iter().copied().filter(|m| (a ^ b) & m != 0).collect();
                let (x, y) = if diff.len() == 1 {
                    (a & !b, b & !a)
                } else {
                    let m = diff.iter().fold(0, |acc, m| acc | m);
                    (a & m, b & m)
                };
                key[a * n + b] = (x * n + y) as u32;
                rev[a * n + b] = (y * n + x) as u32;
            }
        }
        Candidates {
            n,
            preds,
            key,
            rev,
            table: vec![0; n * n],
        }
    }

    /// All candidate orders in lexicographic order.
    pub(crate) fn collect(mut self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut seq = Vec::with_capacity(self.n);
        self.search(0, &mut seq, &mut out);
        out
    }

    fn search(&mut self, placed: u64, seq: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if seq.len() == self.n {
            out.push(seq.clone());
            return;
        }
        let n = self.n;
        for x in 0..n {
            if placed >> x & 1 == 1 || self.preds[x] & !placed != 0 {
                continue;
            }
            let mut undo = Vec::new();
            let mut ok = true;
            for z in 0..n {
                if z == x || placed >> z & 1 == 1 {
                    continue;
                }
                let k = self.key[x * n + z] as usize;
                match self.table[k] {
                    1 => {}
                    -1 => {
                        ok = false;
                        break;
                    }
                    _ => {
                        let r = self.rev[x * n + z] as usize;
                        if k == r {
                            // a comparison equal to its own reverse cannot be strict
                            ok = false;
                            break;
                        }
                        self.table[k] = 1;
                        self.table[r] = -1;
                        undo.push((k, r));
                    }
                }
            }
            if ok {
                seq.push(x);
                self.search(placed | 1 << x, seq, out);
                seq.pop();
            }
            for (k, r) in undo {
                self.table[k] = 0;
                self.table[r] = 0;
            }
        }
    }
}

/// Candidate orders for a structure, lexicographically sorted.
pub fn candidate_orders(structure: &Structure) -> Vec<Vec<usize>> {
    Candidates::new(structure).collect()
}

/// True when `order` is a linear extension of the dominance order.
pub fn extends_dominance(structure: &Structure, order: &[usize]) -> bool {
    let n = structure.n_values();
    if order.len() != n {
        return false;
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &c) in order.iter().enumerate() {
        if c >= n || pos[c] != usize::MAX {
            return false;
        }
        pos[c] = i;
    }
    (0..n).all(|a| (0..n).all(|b| a == b || !structure.dominates(a, b) || pos[a] < pos[b]))
}
