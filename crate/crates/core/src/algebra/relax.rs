//! Linear programs used to discard candidate orders and to build witnesses.
//!
//! Each factor `j` gets one variable `φ_j(s) = ln S_j(s) − ln S_j(∅)` per state
//! `s` of its inputs. A candidate order becomes homogeneous linear inequalities
//! on these variables, normalized to gaps of at least 1. A sum factor adds
//! necessary conditions:
//!
//! ```text
//! φ(A ∪ B) < φ(A) + φ(B)                                  (A ∩ B = ∅)
//! S(A) < S(C)  ⇒  φ(A ∪ B) − φ(A) > φ(C ∪ B) − φ(C)      (B ∩ A = B ∩ C = ∅)
//! ```
//!
//! For a two-input sum the first condition together with monotonicity is also
//! sufficient up to scale: every ray `(u, v, w)` with `max(u, v) < w < u + v`
//! meets the surface `e^w = e^u + e^v − 1` exactly once. So when every factor
//! but at most one is a single input and the remaining one has two inputs,
//! the program is exact and its solution rescales to a witness.
//!
//! Structures outside that class are searched by slicing: all factors but
//! the widest sum are fixed on a log grid, which leaves a linear program in
//! the widest sum's parameters.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};

use super::structure::{ParameterPoint, Structure};

/// Outcome of the log-space program for one candidate order.
#[derive(Debug, Clone, PartialEq)]
pub enum Relaxation {
    /// No parameters realize the order.
    Infeasible,
    /// Not ruled out; carries a witness when one could be built directly.
    Feasible(Option<ParameterPoint<f64>>),
}

fn local(structure: &Structure, j: usize, c: usize) -> usize {
    structure.factors[j]
        .inputs
        .iter()
        .enumerate()
        .fold(0, |s, (t, &i)| if c >> i & 1 == 1 { s | 1 << t } else { s })
}

fn global(structure: &Structure, j: usize, s: usize) -> usize {
    structure.factors[j]
        .inputs
        .iter()
        .enumerate()
        .fold(0, |c, (t, &i)| if s >> t & 1 == 1 { c | 1 << i } else { c })
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0usize; order.len()];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    pos
}

/// Calls `f(a, c)` for every ordered pair of distinct subsets of `mask`.
fn subset_pairs(mask: usize, mut f: impl FnMut(usize, usize)) {
    let mut a = mask;
    loop {
        let mut c = mask;
        loop {
            if a != c {
                f(a, c);
            }
            if c == 0 {
                break;
            }
            c = (c - 1) & mask;
        }
        if a == 0 {
            break;
        }
        a = (a - 1) & mask;
    }
}

/// True unless the log-space program proves `order` unrealizable.
pub fn relaxation_feasible(structure: &Structure, order: &[usize]) -> bool {
    relax(structure, order) != Relaxation::Infeasible
}

pub fn relax(structure: &Structure, order: &[usize]) -> Relaxation {
    let pos = positions(order);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<Variable>> = structure
        .factors
        .iter()
        .map(|f| {
            (0..1usize << f.inputs.len())
                .map(|s| {
                    if s == 0 {
                        lp.add_var(0.0, (0.0, 0.0))
                    } else {
                        // small solutions keep the rescaled values in range
                        lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY))
                    }
                })
                .collect()
        })
        .collect();

    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut terms: Vec<(Variable, f64)> = Vec::new();
        for (j, f) in structure.factors.iter().enumerate() {
            let (sa, sb) = (local(structure, j, a), local(structure, j, b));
            if sa != sb {
                let sign = if f.decay { -1.0 } else { 1.0 };
                terms.push((vars[j][sb], sign));
                terms.push((vars[j][sa], -sign));
            }
        }
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, 1.0);
    }

    for (j, f) in structure.factors.iter().enumerate() {
        let k = f.inputs.len();
        if k < 2 {
            continue;
        }
        let full = (1usize << k) - 1;
        let v = &vars[j];
        for a in 1..full {
            // disjoint nonempty pairs, each unordered pair once
            let rest = full & !a;
            let mut b = rest;
            while b > 0 {
                if a < b {
                    lp.add_constraint(
                        &[(v[a | b], -1.0), (v[a], 1.0), (v[b], 1.0)],
                        ComparisonOp::Ge,
                        1.0,
                    );
                }
                b = (b - 1) & rest;
            }
        }
        // S(A) < S(C) read off the order with all other factors low
        let below = |sa: usize, sc: usize| {
            let (ca, cc) = (global(structure, j, sa), global(structure, j, sc));
            (pos[ca] < pos[cc]) != f.decay
        };
        for bset in 1..=full {
            subset_pairs(full & !bset, |a, c| {
                if below(a, c) {
                    lp.add_constraint(
                        &[
                            (v[a | bset], 1.0),
                            (v[a], -1.0),
                            (v[c | bset], -1.0),
                            (v[c], 1.0),
                        ],
                        ComparisonOp::Ge,
                        1.0,
                    );
                }
            });
        }
    }
    match lp.solve() {
        Err(microlp::Error::Infeasible) => Relaxation::Infeasible,
        Err(_) | Ok(SolveOutcome::Interrupted(_)) => Relaxation::Feasible(None),
        Ok(SolveOutcome::Solution(sol)) => {
            let phi: Vec<Vec<f64>> = vars
                .iter()
                .map(|vs| vs.iter().map(|&x| sol[x]).collect())
                .collect();
            Relaxation::Feasible(rescale(structure, &phi))
        }
    }
}

/// `ln(e^u + e^v − 1)`, the log value of a two-input sum.
fn sum2(u: f64, v: f64) -> f64 {
    (u.exp() + v.exp_m1()).ln()
}

/// Turns a solution of the exact program into a parameter point.
fn rescale(structure: &Structure, phi: &[Vec<f64>]) -> Option<ParameterPoint<f64>> {
    if structure.factors.iter().any(|f| f.decay) {
        return None;
    }
    let wide: Vec<usize> = (0..structure.factors.len())
        .filter(|&j| structure.factors[j].inputs.len() >= 2)
        .collect();
    let largest = phi.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut s = if largest > 20.0 { 20.0 / largest } else { 1.0 };
    match wide.as_slice() {
        [] => {}
        [j] if structure.factors[*j].inputs.len() == 2 => {
            let (u, v, w) = (phi[*j][1], phi[*j][2], phi[*j][3]);
            // h(s) = sum2(su, sv) − sw is concave with h(0) = 0, h'(0) > 0
            let h = |s: f64| sum2(s * u, s * v) - s * w;
            let (mut lo, mut hi) = (1e-12f64, 1.0f64);
            while h(hi) > 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    return None;
                }
            }
            if h(lo) <= 0.0 {
                return None;
            }
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if h(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            s = (lo * hi).sqrt();
        }
        _ => return None,
    }
    let k = structure.order();
    let mut ell = vec![1.0; k];
    let mut delta = vec![0.0; k];
    for (j, f) in structure.factors.iter().enumerate() {
        match f.inputs.as_slice() {
            [i] => delta[*i] = (s * phi[j][1]).exp_m1(),
            [a, b] => {
                ell[*a] = 0.5;
                ell[*b] = 0.5;
                delta[*a] = (s * phi[j][1]).exp_m1();
                delta[*b] = (s * phi[j][2]).exp_m1();
            }
            _ => return None,
        }
    }
    let p = ParameterPoint::new(ell, delta);
    p.is_positive().then_some(p)
}

/// Margin demanded by the linear programs, above the solver tolerance.
const LP_MARGIN: f64 = 1e-4;

/// Linear program in the parameters of factor `jl`, every other factor fixed
/// to the values `fixed[j][s]`. `Some` is a point whose factor `jl` inputs are
/// set; the caller fills the others.
fn slice_lp(
    structure: &Structure,
    order: &[usize],
    jl: usize,
    fixed: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let f = &structure.factors[jl];
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let d: Vec<Variable> = f
        .inputs
        .iter()
        .map(|_| lp.add_var(1.0, (1e-9, 1e9)))
        .collect();
    let rest = |c: usize| -> f64 {
        structure
            .factors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != jl)
            .map(|(j, _)| fixed[j][local(structure, j, c)])
            .product()
    };
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ra, rb) = (rest(a) * (1.0 + LP_MARGIN), rest(b));
        let (sa, sb) = (local(structure, jl, a), local(structure, jl, b));
        // rb·(1 + Σ_{sb} d) − ra·(1 + Σ_{sa} d) ≥ 0
        let mut terms = Vec::new();
        for (t, &var) in d.iter().enumerate() {
            let coef = rb * f64::from((sb >> t & 1) as u8) - ra * f64::from((sa >> t & 1) as u8);
            if coef != 0.0 {
                terms.push((var, coef));
            }
        }
        lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, ra - rb);
    }
    let Ok(SolveOutcome::Solution(sol)) = lp.solve() else {
        return None;
    };
    Some(d.iter().map(|&v| sol[v]).collect())
}

/// Point with the fixed factors at grid parameters `p` and factor `jl` at
/// increments `d`, each sum normalized to `Σℓ = 1`.
fn assemble(structure: &Structure, jl: usize, params: &[f64], d: &[f64]) -> ParameterPoint<f64> {
    let k = structure.order();
    let mut ell = vec![0.0; k];
    let mut delta = vec![0.0; k];
    let mut next = 0;
    for (j, f) in structure.factors.iter().enumerate() {
        let share = 1.0 / f.inputs.len() as f64;
        for (t, &i) in f.inputs.iter().enumerate() {
            ell[i] = share;
            delta[i] = if j == jl {
                d[t]
            } else {
                next += 1;
                params[next - 1]
            };
        }
    }
    ParameterPoint::new(ell, delta)
}

/// Grid search over all factors but the widest, each step an exact linear
/// program in the widest factor. Spends at most `budget` programs.
pub fn slice_search(
    structure: &Structure,
    order: &[usize],
    budget: usize,
) -> Option<ParameterPoint<f64>> {
    if structure.factors.iter().any(|f| f.decay) || structure.factors.is_empty() {
        return None;
    }
    let jl = (0..structure.factors.len())
        .max_by_key(|&j| (structure.factors[j].inputs.len(), std::cmp::Reverse(j)))
        .unwrap();
    let dims: usize = structure
        .factors
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != jl)
        .map(|(_, f)| f.inputs.len())
        .sum();
    let per_dim = if dims == 0 {
        1
    } else {
        ((budget as f64).powf(1.0 / dims as f64).floor() as usize).max(2)
    };
    // log-spaced increments relative to Σℓ = 1, moderate values first
    let grid: Vec<f64> = {
        let mut idx: Vec<usize> = (0..per_dim).collect();
        idx.sort_by_key(|&i| ((2 * i + 1).abs_diff(per_dim), i));
        idx.into_iter()
            .map(|i| {
                let t = (i as f64 + 0.5) / per_dim as f64;
                (1e-3f64).powf(1.0 - t) * (1e3f64).powf(t)
            })
            .collect()
    };
    let total = per_dim.pow(dims as u32);
    let mut params = vec![0.0; dims];
    for flat in 0..total {
        let mut r = flat;
        for p in params.iter_mut() {
            *p = grid[r % per_dim];
            r /= per_dim;
        }
        let mut fixed: Vec<Vec<f64>> = Vec::with_capacity(structure.factors.len());
        let mut next = 0;
        for (j, f) in structure.factors.iter().enumerate() {
            if j == jl {
                fixed.push(Vec::new());
                continue;
            }
            let k = f.inputs.len();
            let mine = &params[next..next + k];
            next += k;
            fixed.push(
                (0..1usize << k)
                    .map(|s| {
                        1.0 + (0..k)
                            .filter(|t| s >> t & 1 == 1)
                            .map(|t| mine[t])
                            .sum::<f64>()
                    })
                    .collect(),
            );
        }
        if let Some(d) = slice_lp(structure, order, jl, &fixed) {
            return Some(assemble(structure, jl, &params, &d));
        }
    }
    None
}
