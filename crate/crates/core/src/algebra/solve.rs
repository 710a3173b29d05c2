//! Admissible order sets and the classical, joint and pair solvers.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::LogicCache;
use super::certify::{decide, Decision};
use super::enumerate::{candidate_orders, extends_dominance};
use super::relax::{relax, slice_search, Relaxation};
use super::signature::Signature;
use super::structure::{dominance_order, evaluate_polynomials, ParameterPoint, Structure};
use super::witness::{find_witness_from, relative_margin, sample_pool};
use super::{AlgebraError, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleOrder {
    /// Value indices from smallest to largest.
    pub values: Vec<usize>,
    pub witness: ParameterPoint<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleOrderSet {
    pub signature: Signature,
    pub structure: Structure,
    pub orders: Vec<AdmissibleOrder>,
    /// Candidates for which witness search ran out of budget.
    pub unresolved: Vec<Vec<usize>>,
    pub config: SolverConfig,
}

impl AdmissibleOrderSet {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn value_orders(&self) -> Vec<Vec<usize>> {
        self.orders.iter().map(|o| o.values.clone()).collect()
    }

    /// Order `i` as ascending blocks of tied full input combinations.
    pub fn blocks(&self, i: usize) -> Vec<Vec<usize>> {
        let groups = self.structure.value_groups();
        self.orders[i]
            .values
            .iter()
            .map(|&v| groups[v].clone())
            .collect()
    }

    /// Position of each value index in order `i`.
    pub fn ranks(&self, i: usize) -> Vec<usize> {
        let mut r = vec![0; self.structure.n_values()];
        for (p, &v) in self.orders[i].values.iter().enumerate() {
            r[v] = p;
        }
        r
    }

    /// Re-evaluates every witness and checks dominance and margins.
    pub fn verify(&self) -> Result<(), String> {
        for (i, o) in self.orders.iter().enumerate() {
            if !extends_dominance(&self.structure, &o.values) {
                return Err(format!("order {i} does not extend the dominance order"));
            }
            let m = relative_margin(&self.structure, &o.witness, &o.values);
            if !(m >= self.config.tolerance) {
                return Err(format!("order {i} witness margin {m} below tolerance"));
            }
        }
        Ok(())
    }
}

/// Entry point for PSD problems, backed by a logic cache.
#[derive(Debug, Clone)]
pub struct Solver {
    pub config: SolverConfig,
    pub cache: Arc<LogicCache>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(SolverConfig::default(), LogicCache::in_memory())
    }
}

impl Solver {
    pub fn new(config: SolverConfig, cache: LogicCache) -> Self {
        Solver {
            config,
            cache: Arc::new(cache),
        }
    }

    fn check_cap(&self, sig: &Signature) -> Result<(), AlgebraError> {
        let order = sig.order();
        if order > self.config.cap || order > 6 {
            return Err(AlgebraError::OrderTooLarge {
                order,
                cap: self.config.cap.min(6),
            });
        }
        Ok(())
    }

    /// Any signature: contract pairs, solve the classical or joint problem,
    /// then attach tie groups.
    pub fn solve_psd(&self, sig: &Signature) -> Result<Arc<AdmissibleOrderSet>, AlgebraError> {
        self.check_cap(sig)?;
        if let Some(hit) = self.cache.get(sig)? {
            return Ok(hit);
        }
        let structure = Structure::from_signature(sig);
        let contracted_sig = contract(sig);
        let base = if sig.is_joint() {
            self.solve_psd_type1(&contracted_sig)?
        } else {
            self.solve_psd_classical(&contracted_sig)?
        };
        let out = if structure.has_pairs() {
            Arc::new(collapse_type2(&base, sig))
        } else {
            base
        };
        self.cache.put(out.clone())
    }

    /// Plain product-of-sums signature.
    pub fn solve_psd_classical(
        &self,
        sig: &Signature,
    ) -> Result<Arc<AdmissibleOrderSet>, AlgebraError> {
        self.check_cap(sig)?;
        let sig = contract(sig);
        if sig.is_joint() {
            return Err(AlgebraError::Inconsistent(format!(
                "{sig} has a decay side; use the joint solver"
            )));
        }
        if let Some(hit) = self.cache.get(&sig)? {
            return Ok(hit);
        }
        let structure = Structure::from_signature(&sig);
        let (orders, unresolved) = solve_structure(&structure, &self.config);
        let set = AdmissibleOrderSet {
            signature: sig,
            structure,
            orders,
            unresolved,
            config: self.config.clone(),
        };
        self.cache.put(Arc::new(set))
    }

    /// Joint production/decay signature, through the classical product problem.
    pub fn solve_psd_type1(
        &self,
        sig: &Signature,
    ) -> Result<Arc<AdmissibleOrderSet>, AlgebraError> {
        self.check_cap(sig)?;
        let sig = contract(sig);
        if !sig.is_joint() {
            return self.solve_psd_classical(&sig);
        }
        if let Some(hit) = self.cache.get(&sig)? {
            return Ok(hit);
        }
        let joint = Structure::from_signature(&sig);
        let product = joint.as_product();
        let classical = self.solve_psd_classical(&sig.product_signature())?;
        let remapped = remap(&classical, &product);

        let mut orders = Vec::with_capacity(remapped.len());
        for (values, witness) in &remapped {
            let combinatorial = joint_order_from_product(&joint, values);
            let ratios = evaluate_polynomials(&joint, witness)?;
            let mut numeric: Vec<usize> = (0..joint.n_values()).collect();
            numeric.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
            if relative_margin(&joint, witness, &numeric) < self.config.tolerance {
                return Err(AlgebraError::WitnessDegenerate(sig.to_string()));
            }
            if numeric != combinatorial {
                return Err(AlgebraError::Inconsistent(format!(
                    "joint order of {sig} differs between witness and product order"
                )));
            }
            orders.push(AdmissibleOrder {
                values: numeric,
                witness: witness.clone(),
            });
        }
        orders.sort_by(|a, b| a.values.cmp(&b.values));
        if orders.windows(2).any(|w| w[0].values == w[1].values) {
            return Err(AlgebraError::Inconsistent(format!(
                "two product orders of {sig} map to the same joint order"
            )));
        }
        let mut unresolved: Vec<Vec<usize>> = remap_unresolved(&classical, &product)
            .iter()
            .map(|v| joint_order_from_product(&joint, v))
            .collect();
        unresolved.sort();
        let set = AdmissibleOrderSet {
            signature: sig,
            structure: joint,
            orders,
            unresolved,
            config: self.config.clone(),
        };
        self.cache.put(Arc::new(set))
    }
}

/// Replaces every pair by a single input.
pub fn contract(sig: &Signature) -> Signature {
    let strip = |f: &[super::FactorShape]| {
        f.iter()
            .map(|s| super::FactorShape {
                pairs: 0,
                singles: s.terms(),
            })
            .collect::<Vec<_>>()
    };
    Signature::new(strip(sig.decay()), strip(sig.production()))
}

/// Attaches the pair structure of `sig` to a solved contracted set. Orders
/// over value indices are unchanged; each value index becomes the tie group
/// of full input combinations that reach it.
pub fn collapse_type2(set: &AdmissibleOrderSet, sig: &Signature) -> AdmissibleOrderSet {
    let structure = Structure::from_signature(sig);
    assert_eq!(structure.contracted(), set.structure.contracted());
    AdmissibleOrderSet {
        signature: sig.clone(),
        structure,
        orders: set.orders.clone(),
        unresolved: set.unresolved.clone(),
        config: set.config.clone(),
    }
}

/// Joint order induced by a product order: `r_a < r_b` exactly when the
/// product value with `a`'s production bits and `b`'s decay bits is below the
/// one with `b`'s production bits and `a`'s decay bits.
pub fn joint_order_from_product(joint: &Structure, product_order: &[usize]) -> Vec<usize> {
    let n = joint.n_values();
    let pmask = (1 << joint.n_production) - 1;
    let dmask = (n - 1) & !pmask;
    let mut pos = vec![0; n];
    for (i, &c) in product_order.iter().enumerate() {
        pos[c] = i;
    }
    let mut out: Vec<usize> = (0..n).collect();
    out.sort_by(|&a, &b| {
        if a == b {
            return Ordering::Equal;
        }
        pos[(a & pmask) | (b & dmask)].cmp(&pos[(b & pmask) | (a & dmask)])
    });
    out
}

/// Linear programs spent per candidate by the slice search.
const SLICE_BUDGET: usize = 400;

fn solve_structure(
    structure: &Structure,
    config: &SolverConfig,
) -> (Vec<AdmissibleOrder>, Vec<Vec<usize>>) {
    let relaxed: Vec<(Vec<usize>, Option<ParameterPoint<f64>>)> = candidate_orders(structure)
        .into_par_iter()
        .filter_map(|c| match relax(structure, &c) {
            Relaxation::Infeasible => None,
            Relaxation::Feasible(w) => {
                let w = w.filter(|p| relative_margin(structure, p, &c) >= config.tolerance);
                Some((c, w))
            }
        })
        .collect();
    let pool = if relaxed.iter().any(|(_, w)| w.is_none()) {
        sample_pool(structure, config.pool, config.seed)
    } else {
        Default::default()
    };
    let no_restarts = SolverConfig {
        restarts: 0,
        ..config.clone()
    };
    // Some(None): proved infeasible
    let results: Vec<(Vec<usize>, Option<Option<ParameterPoint<f64>>>)> = relaxed
        .into_par_iter()
        .enumerate()
        .map(|(i, (cand, direct))| {
            if direct.is_some() {
                return (cand, Some(direct));
            }
            let seed = config
                .seed
                .wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let quick = pool
                .get(&cand)
                .and_then(|(x, _)| find_witness_from(structure, &cand, &no_restarts, seed, Some(x)))
                .or_else(|| {
                    slice_search(structure, &cand, SLICE_BUDGET)
                        .filter(|p| relative_margin(structure, p, &cand) >= config.tolerance)
                });
            if quick.is_some() {
                return (cand, Some(quick));
            }
            let w = match decide(structure, &cand, config.tolerance, config.cells) {
                Decision::Witness(p) => Some(Some(p)),
                Decision::Infeasible => Some(None),
                Decision::Unknown => {
                    find_witness_from(structure, &cand, config, seed, None).map(Some)
                }
            };
            (cand, w)
        })
        .collect();
    let mut orders = Vec::new();
    let mut unresolved = Vec::new();
    for (cand, w) in results {
        match w {
            Some(Some(witness)) => orders.push(AdmissibleOrder {
                values: cand,
                witness,
            }),
            Some(None) => {}
            None => unresolved.push(cand),
        }
    }
    (orders, unresolved)
}

/// Bit permutation from canonical formal inputs to those of `local`, which
/// must be a product structure with the same factor sizes.
fn canonical_permutation(canonical: &Structure, local: &Structure) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..local.factors.len()).collect();
    idx.sort_by_key(|&j| local.factors[j].inputs.len());
    let mut perm = vec![0; canonical.order()];
    for (cf, &lj) in canonical.factors.iter().zip(&idx) {
        assert_eq!(cf.inputs.len(), local.factors[lj].inputs.len());
        for (&ci, &li) in cf.inputs.iter().zip(&local.factors[lj].inputs) {
            perm[ci] = li;
        }
    }
    perm
}

fn permute_bits(c: usize, perm: &[usize]) -> usize {
    perm.iter().enumerate().fold(
        0,
        |acc, (i, &p)| if c >> i & 1 == 1 { acc | 1 << p } else { acc },
    )
}

fn remap(set: &AdmissibleOrderSet, local: &Structure) -> Vec<(Vec<usize>, ParameterPoint<f64>)> {
    let perm = canonical_permutation(&set.structure, local);
    set.orders
        .iter()
        .map(|o| {
            let values = o.values.iter().map(|&c| permute_bits(c, &perm)).collect();
            let mut ell = vec![0.0; perm.len()];
            let mut delta = vec![0.0; perm.len()];
            for (i, &p) in perm.iter().enumerate() {
                ell[p] = o.witness.ell[i];
                delta[p] = o.witness.delta[i];
            }
            (values, ParameterPoint::new(ell, delta))
        })
        .collect()
}

fn remap_unresolved(set: &AdmissibleOrderSet, local: &Structure) -> Vec<Vec<usize>> {
    let perm = canonical_permutation(&set.structure, local);
    set.unresolved
        .iter()
        .map(|o| o.iter().map(|&c| permute_bits(c, &perm)).collect())
        .collect()
}

/// Dominance covering pairs of a solved set, as stored in the logic cache.
pub fn dominance_edges(set: &AdmissibleOrderSet) -> Vec<(usize, usize)> {
    dominance_order(&set.structure).covers
}

/// Solves a PSD problem with a fresh in-memory cache.
pub fn solve_psd(
    sig: &Signature,
    config: &SolverConfig,
) -> Result<Arc<AdmissibleOrderSet>, AlgebraError> {
    Solver::new(config.clone(), LogicCache::in_memory()).solve_psd(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(s: &str) -> Arc<AdmissibleOrderSet> {
        solve_psd(&Signature::parse(s).unwrap(), &SolverConfig::default()).unwrap()
    }

    #[test]
    fn two_input_orders() {
        let set = solve("xy");
        assert_eq!(set.value_orders(), vec![vec![0, 1, 2, 3], vec![0, 2, 1, 3]]);
        assert!(set.unresolved.is_empty());
        set.verify().unwrap();
        assert_eq!(solve("x+y").len(), 2);
        assert_eq!(solve("x").value_orders(), vec![vec![0, 1]]);
    }

    #[test]
    fn joint_two_orders() {
        let set = solve("<x>+y");
        // (r01, r00, r11, r10) and (r01, r11, r00, r10)
        assert_eq!(set.value_orders(), vec![vec![2, 0, 3, 1], vec![2, 3, 0, 1]]);
        set.verify().unwrap();
    }

    #[test]
    fn pair_tie_groups() {
        let set = solve("[x,y]z");
        assert_eq!(set.len(), 2);
        assert_eq!(
            set.blocks(0),
            vec![vec![0, 1, 2], vec![3], vec![4, 5, 6], vec![7]]
        );
        assert_eq!(
            set.blocks(1),
            vec![vec![0, 1, 2], vec![4, 5, 6], vec![3], vec![7]]
        );
        let pure = solve("[x,y]");
        assert_eq!(pure.blocks(0), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = solve_psd(
            &Signature::parse("xyzuv").unwrap(),
            &SolverConfig::default(),
        );
        assert!(matches!(
            err,
            Err(AlgebraError::OrderTooLarge { order: 5, cap: 4 })
        ));
    }

    #[test]
    fn joint_with_non_canonical_product_layout() {
        // production (y+z) comes first in the joint layout but second canonically
        let set = solve("<x>+y+z");
        assert_eq!(set.len(), 20);
        set.verify().unwrap();
    }

    #[test]
    fn combined_modalities() {
        assert_eq!(solve("<[x,y]>+z").len(), 2);
        assert_eq!(solve("[x,y]+z").len(), 2);
    }
}
