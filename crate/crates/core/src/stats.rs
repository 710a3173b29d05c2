//! Surveys of stable dynamics over a whole parameter graph.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::Solver;
use crate::dynamics::{analyze, DynamicsError};
use crate::network::{InteractionSpec, RegulatoryNetwork};
use crate::paramgraph::{build_factor_graph, ParamGraphError, ParameterGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("parameter node {index}: {source}")]
    Index {
        index: u64,
        #[source]
        source: DynamicsError,
    },
    #[error("nodes {0:?} have unresolved candidate orders; percentages would be unreliable")]
    Unresolved(Vec<String>),
    #[error("index range {start}..{end} exceeds parameter graph size {size}")]
    Range { start: u64, end: u64, size: u64 },
    #[error(transparent)]
    ParamGraph(#[from] ParamGraphError),
    #[error("no grouping reaches size {target}; sizes found: {found:?}")]
    CalibrationFailed { target: u64, found: Vec<u64> },
}

/// Number of stable-FP buckets: 0, 1, 2, 3 and 4 or more.
pub const FP_BUCKETS: usize = 5;

/// Aggregated stable Morse node counts over a range of parameter nodes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SurveyRow {
    pub network: String,
    pub total: u64,
    /// Parameter nodes with at least one stable full cycle.
    pub fc: u64,
    /// Parameter nodes with at least one stable partial cycle.
    pub pc: u64,
    /// Parameter nodes by number of stable fixed points; last bucket is 4+.
    pub fp: [u64; FP_BUCKETS],
}

/// `100·count/total` rounded half-up to hundredths, as an integer count of hundredths.
pub fn hundredths(count: u64, total: u64) -> u64 {
    if total == 0 {
        return 0;
    }
    let (c, t) = (count as u128, total as u128);
    ((c * 20_000 + t) / (2 * t)) as u64
}

fn fmt_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

impl SurveyRow {
    fn merge(mut self, other: SurveyRow) -> SurveyRow {
        self.total += other.total;
        self.fc += other.fc;
        self.pc += other.pc;
        for (a, b) in self.fp.iter_mut().zip(other.fp) {
            *a += b;
        }
        self
    }

    /// Exact percentage.
    pub fn percent(&self, count: u64) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.total as f64
        }
    }

    pub fn fc_percent(&self) -> f64 {
        self.percent(self.fc)
    }

    pub fn pc_percent(&self) -> f64 {
        self.percent(self.pc)
    }

    pub fn fp_percent(&self, k: usize) -> f64 {
        self.percent(self.fp[k])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pct = |c: u64| fmt_hundredths(hundredths(c, self.total));
        serde_json::json!({
            "schema_version": 1,
            "network": self.network,
            "parameters": self.total,
            "counts": { "fc": self.fc, "pc": self.pc, "fp": self.fp },
            "percent": {
                "fc": pct(self.fc),
                "pc": pct(self.pc),
                "fp": self.fp.iter().map(|&c| pct(c)).collect::<Vec<_>>(),
            },
        })
    }
}

impl fmt::Display for SurveyRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |c: u64| fmt_hundredths(hundredths(c, self.total));
        writeln!(f, "{:<18}{}", "network", self.network)?;
        writeln!(f, "{:<18}{}", "parameters", self.total)?;
        writeln!(f, "{:<18}{:>7}", "stable FC %", pct(self.fc))?;
        writeln!(f, "{:<18}{:>7}", "stable PC %", pct(self.pc))?;
        for k in 0..FP_BUCKETS {
            let label = if k + 1 == FP_BUCKETS {
                format!("{k}+ stable FP %")
            } else {
                format!("{k} stable FP %")
            };
            writeln!(f, "{label:<18}{:>7}", pct(self.fp[k]))?;
        }
        Ok(())
    }
}

/// Classifies every parameter node in `range`. The result does not depend
/// on thread count or scheduling.
pub fn survey(pg: &ParameterGraph, name: &str, range: Range<u64>) -> Result<SurveyRow, StatsError> {
    let unresolved = pg.unresolved_nodes();
    if !unresolved.is_empty() {
        return Err(StatsError::Unresolved(
            unresolved
                .iter()
                .map(|&n| pg.network().node(n).name.clone())
                .collect(),
        ));
    }
    if range.end > pg.size() || range.start > range.end {
        return Err(StatsError::Range {
            start: range.start,
            end: range.end,
            size: pg.size(),
        });
    }
    let row = range
        .into_par_iter()
        .try_fold(
            SurveyRow::default,
            |mut acc, index| -> Result<SurveyRow, StatsError> {
                let (_, mg) =
                    analyze(pg, index).map_err(|source| StatsError::Index { index, source })?;
                let s = mg.stable_counts();
                acc.total += 1;
                acc.fc += u64::from(s.fc > 0);
                acc.pc += u64::from(s.pc > 0);
                acc.fp[s.fp.min(FP_BUCKETS - 1)] += 1;
                Ok(acc)
            },
        )
        .try_reduce(SurveyRow::default, |a, b| Ok(a.merge(b)))?;
    Ok(SurveyRow {
        network: name.to_string(),
        ..row
    })
}

/// Survey of the full parameter graph.
pub fn survey_all(pg: &ParameterGraph, name: &str) -> Result<SurveyRow, StatsError> {
    survey(pg, name, 0..pg.size())
}

/// All set partitions of `0..n`, blocks in order of first element.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// Result of choosing production groupings for a network.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub network: RegulatoryNetwork,
    pub size: u64,
    /// Every candidate grouping's parameter graph size, in enumeration order.
    pub sizes: Vec<u64>,
}

/// Regroups each node's production terms into factors so that the
/// parameter graph has `target` nodes. Groupings with more factors are
/// preferred (products over sums); ties keep enumeration order.
pub fn calibrate(
    network: &RegulatoryNetwork,
    target: u64,
    solver: &Solver,
) -> Result<Calibration, StatsError> {
    // per node: candidate production specs with their factor graph sizes
    let mut memo: HashMap<(String, usize), usize> = HashMap::new();
    let mut options: Vec<Vec<(InteractionSpec, usize)>> = Vec::new();
    for n in 0..network.len() {
        let node = network.node(n);
        let terms: Vec<_> = node.production.terms().cloned().collect();
        let mut opts = Vec::new();
        let mut parts = set_partitions(terms.len());
        parts.sort_by_key(|p| std::cmp::Reverse(p.len()));
        for p in parts {
            let spec = InteractionSpec {
                factors: p
                    .iter()
                    .map(|b| b.iter().map(|&i| terms[i].clone()).collect())
                    .collect(),
            };
            let mut probe = node.clone();
            probe.production = spec.clone();
            let sig = crate::network::interaction_signature(&probe);
            let m = network.threshold_count(n);
            let key = (sig.to_string(), m);
            let size = match memo.get(&key) {
                Some(&s) => s,
                None => {
                    let orders = solver.solve_psd(&sig).map_err(ParamGraphError::from)?;
                    let s = build_factor_graph(orders, m).len();
                    memo.insert(key, s);
                    s
                }
            };
            opts.push((spec, size));
        }
        options.push(opts);
    }
    let mut sizes = Vec::new();
    let mut choice = vec![0usize; options.len()];
    let mut found: Option<(usize, Vec<usize>)> = None;
    loop {
        let size = choice
            .iter()
            .enumerate()
            .try_fold(1u64, |acc, (n, &c)| acc.checked_mul(options[n][c].1 as u64));
        if let Some(size) = size {
            sizes.push(size);
            if size == target {
                let factors: usize = choice
                    .iter()
                    .enumerate()
                    .map(|(n, &c)| options[n][c].0.factors.len())
                    .sum();
                if found.as_ref().is_none_or(|(f, _)| factors > *f) {
                    found = Some((factors, choice.clone()));
                }
            }
        }
        // odometer, node 0 fastest
        let mut n = 0;
        while n < choice.len() {
            choice[n] += 1;
            if choice[n] < options[n].len() {
                break;
            }
            choice[n] = 0;
            n += 1;
        }
        if n == choice.len() {
            break;
        }
    }
    let Some((_, choice)) = found else {
        return Err(StatsError::CalibrationFailed {
            target,
            found: sizes,
        });
    };
    let mut nodes = network.nodes().to_vec();
    for (n, &c) in choice.iter().enumerate() {
        nodes[n].production = options[n][c].0.clone();
    }
    let network = RegulatoryNetwork::new(nodes).expect("regrouping keeps the network valid");
    Ok(Calibration {
        network,
        size: target,
        sizes,
    })
}

/// Parameter graph sizes the six benchmark fixtures are calibrated to, in
/// the order solid dot (PTM, classical), open dot (PTM, classical), decay
/// pair (PTM, classical).
pub const BENCHMARK_TOTALS: [u64; 6] = [864, 2880, 864, 2880, 21600, 305424];

/// Calibrates each network to its target size, failing on the first
/// network no grouping fits.
pub fn calibrate_benchmarks(
    networks: &[(RegulatoryNetwork, u64)],
    solver: &Solver,
) -> Result<Vec<Calibration>, StatsError> {
    networks
        .iter()
        .map(|(net, target)| calibrate(net, *target, solver))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_half_up() {
        assert_eq!(hundredths(1, 8), 1250);
        assert_eq!(hundredths(1, 3), 3333);
        assert_eq!(hundredths(2, 3), 6667);
        // 12/864 = 1.3888..%
        assert_eq!(hundredths(12, 864), 139);
        assert_eq!(hundredths(1, 80_000), 0);
        assert_eq!(hundredths(1, 20_000), 1);
        assert_eq!(hundredths(1, 20_001), 0);
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn toggle_survey() {
        let net = RegulatoryNetwork::parse("1 : : (~2)\n2 : : (~1)").unwrap();
        let pg = ParameterGraph::build(&net, &Solver::default()).unwrap();
        let row = survey_all(&pg, "toggle").unwrap();
        assert_eq!(row.total, 9);
        assert_eq!(row.fp, [0, 8, 1, 0, 0]);
        assert_eq!((row.fc, row.pc), (0, 0));
    }

    #[test]
    fn range_is_checked() {
        let net = RegulatoryNetwork::parse("1 : : (~2)\n2 : : (~1)").unwrap();
        let pg = ParameterGraph::build(&net, &Solver::default()).unwrap();
        assert!(matches!(
            survey(&pg, "t", 0..10),
            Err(StatsError::Range { .. })
        ));
    }
}
