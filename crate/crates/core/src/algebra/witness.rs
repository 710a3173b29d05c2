//! Numeric witness search in log-parameter space.
//!
//! A point is `(ln ℓ_i, ln δ_i)` per formal input. The loss is a squared hinge
//! on the log-gaps between consecutive elements of the target order; it is
//! minimised by gradient descent with an adaptive step from log-uniform
//! restarts.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::structure::{evaluate_polynomials, ParameterPoint, Structure};
use super::SolverConfig;

/// Target log-gap of the hinge loss.
const HINGE: f64 = 0.1;
/// Log-gap accepted as realized; far above the relative margin tolerance.
const ACCEPT: f64 = 1e-3;
const LOG_RANGE: f64 = 6.907_755_278_982_137; // ln 1000
const CLAMP: f64 = 40.0;

struct LogModel<'a> {
    structure: &'a Structure,
    k: usize,
}

impl<'a> LogModel<'a> {
    fn new(structure: &'a Structure) -> Self {
        LogModel {
            structure,
            k: structure.order(),
        }
    }

    /// Log values per value index, optionally with gradients (row-major, 2k wide).
    fn eval(&self, x: &[f64], grad: Option<&mut Vec<f64>>) -> Vec<f64> {
        let n = self.structure.n_values();
        let k = self.k;
        let ell: Vec<f64> = x[..k].iter().map(|u| u.exp()).collect();
        let del: Vec<f64> = x[k..].iter().map(|v| v.exp()).collect();
        let mut out = vec![0.0; n];
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.clear();
            g.resize(n * 2 * k, 0.0);
        }
        for (c, o) in out.iter_mut().enumerate() {
            for f in &self.structure.factors {
                let s: f64 = f
                    .inputs
                    .iter()
                    .map(|&i| ell[i] + if c >> i & 1 == 1 { del[i] } else { 0.0 })
                    .sum();
                let sign = if f.decay { -1.0 } else { 1.0 };
                *o += sign * s.ln();
                if let Some(g) = g.as_deref_mut() {
                    let row = &mut g[c * 2 * k..(c + 1) * 2 * k];
                    for &i in &f.inputs {
                        row[i] += sign * ell[i] / s;
                        if c >> i & 1 == 1 {
                            row[k + i] += sign * del[i] / s;
                        }
                    }
                }
            }
        }
        out
    }

    fn min_gap(&self, x: &[f64], order: &[usize]) -> f64 {
        let v = self.eval(x, None);
        order
            .windows(2)
            .map(|w| v[w[1]] - v[w[0]])
            .fold(f64::INFINITY, f64::min)
    }

    fn loss(&self, x: &[f64], order: &[usize], grad: Option<&mut Vec<f64>>) -> (f64, f64) {
        let mut jac = Vec::new();
        let want_grad = grad.is_some();
        let v = self.eval(x, if want_grad { Some(&mut jac) } else { None });
        let w = 2 * self.k;
        let mut loss = 0.0;
        let mut min_gap = f64::INFINITY;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.clear();
            g.resize(w, 0.0);
        }
        for p in order.windows(2) {
            let gap = v[p[1]] - v[p[0]];
            min_gap = min_gap.min(gap);
            let h = HINGE - gap;
            if h > 0.0 {
                loss += h * h;
                if let Some(g) = g.as_deref_mut() {
                    for t in 0..w {
                        g[t] -= 2.0 * h * (jac[p[1] * w + t] - jac[p[0] * w + t]);
                    }
                }
            }
        }
        (loss, min_gap)
    }

    fn descend(&self, x: &mut Vec<f64>, order: &[usize], steps: usize) -> bool {
        let mut grad = Vec::new();
        let mut eta = 0.5;
        let (mut loss, mut gap) = self.loss(x, order, Some(&mut grad));
        for _ in 0..steps {
            if gap >= ACCEPT {
                return true;
            }
            let trial: Vec<f64> = x
                .iter()
                .zip(&grad)
                .map(|(a, g)| (a - eta * g).clamp(-CLAMP, CLAMP))
                .collect();
            let mut tgrad = Vec::new();
            let (tl, tg) = self.loss(&trial, order, Some(&mut tgrad));
            if tl < loss {
                *x = trial;
                loss = tl;
                gap = tg;
                grad = tgrad;
                eta *= 1.2;
            } else {
                eta *= 0.5;
                if eta < 1e-12 {
                    break;
                }
            }
        }
        gap >= ACCEPT
    }

    fn point(&self, x: &[f64]) -> ParameterPoint<f64> {
        ParameterPoint::new(
            x[..self.k].iter().map(|u| u.exp()).collect(),
            x[self.k..].iter().map(|v| v.exp()).collect(),
        )
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..2 * self.k)
            .map(|_| rng.gen_range(-LOG_RANGE..LOG_RANGE))
            .collect()
    }

    fn order_at(&self, x: &[f64]) -> (Vec<usize>, f64) {
        let v = self.eval(x, None);
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let gap = idx
            .windows(2)
            .map(|w| v[w[1]] - v[w[0]])
            .fold(f64::INFINITY, f64::min);
        (idx, gap)
    }
}

/// Relative margin of `order` at `point`: min over consecutive pairs of `v[b]/v[a] - 1`.
pub fn relative_margin(structure: &Structure, point: &ParameterPoint<f64>, order: &[usize]) -> f64 {
    match evaluate_polynomials(structure, point) {
        Ok(v) => order
            .windows(2)
            .map(|w| v[w[1]] / v[w[0]] - 1.0)
            .fold(f64::INFINITY, f64::min),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Searches for a point realizing `order`. Returns `None` after the budget is spent.
pub fn find_witness(
    structure: &Structure,
    order: &[usize],
    config: &SolverConfig,
    seed: u64,
) -> Option<ParameterPoint<f64>> {
    find_witness_from(structure, order, config, seed, None)
}

pub(crate) fn find_witness_from(
    structure: &Structure,
    order: &[usize],
    config: &SolverConfig,
    seed: u64,
    start: Option<&[f64]>,
) -> Option<ParameterPoint<f64>> {
    let n = structure.n_values();
    if order.len() != n || !super::enumerate::extends_dominance(structure, order) {
        return None;
    }
    let model = LogModel::new(structure);
    let accept = |x: &[f64]| {
        let p = model.point(x);
        (relative_margin(structure, &p, order) >= config.tolerance).then_some(p)
    };
    if let Some(s) = start {
        let mut x = s.to_vec();
        if model.descend(&mut x, order, config.steps) {
            if let Some(p) = accept(&x) {
                return Some(p);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..config.restarts {
        let mut x = model.random(&mut rng);
        if model.min_gap(&x, order) >= ACCEPT || model.descend(&mut x, order, config.steps) {
            if let Some(p) = accept(&x) {
                return Some(p);
            }
        }
    }
    None
}

/// Orders met by random sampling, each with the first sampled log-point.
pub(crate) fn sample_pool(
    structure: &Structure,
    samples: usize,
    seed: u64,
) -> HashMap<Vec<usize>, (Vec<f64>, f64)> {
    let model = LogModel::new(structure);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: HashMap<Vec<usize>, (Vec<f64>, f64)> = HashMap::new();
    for _ in 0..samples {
        let x = model.random(&mut rng);
        let (order, gap) = model.order_at(&x);
        match pool.get_mut(&order) {
            None => {
                pool.insert(order, (x, gap));
            }
            Some(entry) if entry.1 < ACCEPT && gap > entry.1 => *entry = (x, gap),
            Some(_) => {}
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::signature::Signature;

    fn st(s: &str) -> Structure {
        Structure::from_signature(&Signature::parse(s).unwrap())
    }

    #[test]
    fn stated_witness_realizes_order() {
        let s = st("xy");
        let p: ParameterPoint<f64> = ParameterPoint::new(vec![1.0, 1.0], vec![0.1, 10.0]);
        let v = evaluate_polynomials(&s, &p).unwrap();
        assert!((v[1] - 1.1).abs() < 1e-12 && (v[2] - 11.0).abs() < 1e-12);
        assert!((v[3] - 12.1).abs() < 1e-12);
        assert!(relative_margin(&s, &p, &[0, 1, 2, 3]) > 0.0);
    }

    #[test]
    fn finds_both_orders_of_two_inputs() {
        let s = st("xy");
        let cfg = SolverConfig::default();
        for o in [[0, 1, 2, 3], [0, 2, 1, 3]] {
            let p = find_witness(&s, &o, &cfg, 7).unwrap();
            assert!(relative_margin(&s, &p, &o) >= cfg.tolerance);
        }
    }

    #[test]
    fn rejects_order_against_dominance() {
        let s = st("xy");
        let cfg = SolverConfig::default();
        assert!(find_witness(&s, &[0, 3, 1, 2], &cfg, 1).is_none());
    }

    #[test]
    fn joint_witness() {
        let s = st("<x>+y");
        let cfg = SolverConfig::default();
        let p = find_witness(&s, &[2, 0, 3, 1], &cfg, 3).unwrap();
        assert!(relative_margin(&s, &p, &[2, 0, 3, 1]) >= cfg.tolerance);
        // the hand point ℓ=δ=1 on the decay side, ℓ=1, δ=2 on production
        let hand = ParameterPoint::new(vec![1.0, 1.0], vec![2.0, 1.0]);
        assert!(relative_margin(&s, &hand, &[2, 0, 3, 1]) >= 1.0 / 3.0 - 1e-12);
    }

    #[test]
    fn infeasible_candidate_exhausts_budget() {
        // 1 < 2 needs δx < δy while 6 < 5 needs δy < δx
        let s = st("x+y+z");
        let cfg = SolverConfig {
            restarts: 20,
            ..SolverConfig::default()
        };
        assert!(find_witness(&s, &[0, 1, 2, 3, 4, 6, 5, 7], &cfg, 1).is_none());
    }
}
