//! Switching-system simulation at instantiated parameters, used to check
//! state transition graphs and Morse graphs against actual trajectories.
//!
//! Within a domain every coordinate relaxes independently toward its target
//! `Λ/Γ`, so wall crossing times are closed form and no numerical stepping is
//! involved. A self-edge acts at its threshold `θ`; the two phase walls
//! `θ·e^(∓ρ)` around it are placed closer to `θ` than any value or other
//! threshold of that variable, so crossing them never changes the dynamics.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::evaluate_polynomials;
use crate::dynamics::{
    build_stg, morse_graph, DomainComplex, DynamicsError, Flow, MorseGraph, PhaseLayout,
    PhaseThreshold, StateTransitionGraph, WallContext,
};
use crate::paramgraph::{NumericParameters, ParamGraphError, ParameterGraph};

/// Relative step taken past a wall after crossing it.
pub const NUDGE: f64 = 1e-12;
/// Two crossing times closer than this (relative) abort the trajectory.
pub const TANGENCY: f64 = 1e-9;
/// Domain transitions allowed per trajectory in a cross-check.
pub const CROSSCHECK_EVENTS: usize = 1000;
/// Fresh initial conditions tried per sample after tangency aborts.
const RESAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error(transparent)]
    ParamGraph(#[from] ParamGraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("parameter node {index}: variable {variable} flows {numeric:?} at wall {wall} of domain {domain}, graph says {combinatorial:?}")]
    SignMismatch {
        index: u64,
        domain: usize,
        variable: usize,
        wall: usize,
        numeric: Flow,
        combinatorial: Flow,
    },
    #[error("crossing times {first} and {second} are too close to order")]
    TangencyAbort { first: f64, second: f64 },
    #[error("initial condition of variable {variable} lies on a wall")]
    OnWall { variable: usize },
    #[error("initial condition needs {expected} positive coordinates")]
    BadInitialCondition { expected: usize },
}

/// Piecewise-constant production and decay at one parameter point.
#[derive(Debug, Clone)]
pub struct SwitchingSystem<'a> {
    pg: &'a ParameterGraph,
    pub params: NumericParameters,
    pub complex: DomainComplex,
    pub layout: PhaseLayout,
    /// Phase walls per variable, ascending.
    pub walls: Vec<Vec<f64>>,
    /// Threshold at which a variable's own input switches.
    pub self_theta: Vec<Option<f64>>,
}

/// One domain transition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub variable: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// No coordinate reaches a wall: the last domain traps the trajectory.
    Converged,
    MaxEvents,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub start: usize,
    pub events: Vec<Event>,
    pub status: Termination,
    /// Domain the trajectory ends in.
    pub last: usize,
}

impl TrajectoryReport {
    /// Domains visited, starting domain first.
    pub fn domains(&self) -> Vec<usize> {
        std::iter::once(self.start)
            .chain(self.events.iter().map(|e| e.to))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,variable,from,to\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{},{},{}", e.time, e.variable, e.from, e.to);
        }
        out
    }
}

impl<'a> SwitchingSystem<'a> {
    /// System at the stored witnesses of `index`, checked wall by wall
    /// against the combinatorial flow directions.
    pub fn new(pg: &'a ParameterGraph, index: u64) -> Result<Self, OdeError> {
        let params = pg.instantiate_parameters(index)?;
        Self::with_parameters(pg, params)
    }

    pub fn with_parameters(
        pg: &'a ParameterGraph,
        params: NumericParameters,
    ) -> Result<Self, OdeError> {
        let ctx = WallContext::new(pg, params.index)?;
        let net = pg.network();
        let mut walls = Vec::with_capacity(net.len());
        let mut self_theta = Vec::with_capacity(net.len());
        for n in 0..net.len() {
            let theta = &params.nodes[n].theta;
            let own = net.self_slot(n).map(|s| theta[s]);
            let rho = match own {
                Some(t) => {
                    let st = &pg.factors()[n].inputs.structure;
                    let values = evaluate_polynomials(st, &params.nodes[n].point)
                        .map_err(ParamGraphError::from)?;
                    let gamma = params.nodes[n].gamma;
                    values
                        .iter()
                        .map(|v| v / gamma)
                        .chain(theta.iter().copied().filter(|&q| q != t))
                        .map(|q| (q / t).ln().abs())
                        .fold(f64::INFINITY, f64::min)
                        .min(1.0)
                        / 3.0
                }
                None => 0.0,
            };
            walls.push(
                ctx.layout.thresholds[n]
                    .iter()
                    .map(|p| match *p {
                        PhaseThreshold::Slot(s) => theta[s],
                        PhaseThreshold::SelfLower(s) => theta[s] * (-rho).exp(),
                        PhaseThreshold::SelfUpper(s) => theta[s] * rho.exp(),
                    })
                    .collect(),
            );
            self_theta.push(own);
        }
        let system = SwitchingSystem {
            pg,
            params,
            complex: DomainComplex::new(net),
            layout: ctx.layout.clone(),
            walls,
            self_theta,
        };
        system.check_signs(&ctx)?;
        Ok(system)
    }

    pub fn dimension(&self) -> usize {
        self.walls.len()
    }

    /// Target and rate of variable `n` when its inputs take value index `v`.
    fn target_of_value(&self, n: usize, v: usize) -> (f64, f64) {
        let p = &self.params.nodes[n];
        let (num, den) = p.point.sides(&self.pg.factors()[n].inputs.structure, v);
        let rate = p.gamma * den;
        (num / rate, rate)
    }

    /// Target `Λ/Γ` and rate `Γ` of variable `n` at state `x`.
    pub fn target(&self, n: usize, x: &[f64]) -> (f64, f64) {
        let v = self.pg.factors()[n]
            .inputs
            .value_index(|m| x[m.source] > self.params.nodes[m.source].theta[m.slot]);
        self.target_of_value(n, v)
    }

    fn check_signs(&self, ctx: &WallContext<'_>) -> Result<(), OdeError> {
        for i in 0..self.complex.len() {
            let d = self.complex.coords(i);
            for n in 0..self.dimension() {
                let lo = d[n].checked_sub(1);
                let hi = (d[n] < self.complex.thresholds[n]).then_some(d[n]);
                for p in lo.into_iter().chain(hi) {
                    let (t, _) = self.target_of_value(n, ctx.value_at_wall(&d, n, p));
                    let slot = self.layout.thresholds[n][p].slot();
                    let numeric = if t > self.params.nodes[n].theta[slot] {
                        Flow::TowardHigher
                    } else {
                        Flow::TowardLower
                    };
                    let combinatorial = ctx.wall_sign(&d, n, p);
                    if numeric != combinatorial {
                        return Err(OdeError::SignMismatch {
                            index: self.params.index,
                            domain: i,
                            variable: n,
                            wall: p,
                            numeric,
                            combinatorial,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Domain containing `x`.
    pub fn domain_of(&self, x: &[f64]) -> usize {
        let d: Vec<usize> = self
            .walls
            .iter()
            .zip(x)
            .map(|(w, &xi)| w.iter().filter(|&&t| t < xi).count())
            .collect();
        self.complex.index(&d)
    }

    /// Exact event-driven integration from `x0` for up to `max_events`
    /// domain transitions.
    pub fn integrate(&self, x0: &[f64], max_events: usize) -> Result<TrajectoryReport, OdeError> {
        let dim = self.dimension();
        if x0.len() != dim || x0.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(OdeError::BadInitialCondition { expected: dim });
        }
        for (n, &v) in x0.iter().enumerate() {
            let near = |t: f64| ((v - t) / t).abs() <= TANGENCY;
            if self.walls[n]
                .iter()
                .copied()
                .chain(self.self_theta[n])
                .any(near)
            {
                return Err(OdeError::OnWall { variable: n });
            }
        }
        let mut x = x0.to_vec();
        let mut domain = self.domain_of(&x);
        let start = domain;
        let mut pinned = vec![false; dim];
        let mut events = Vec::new();
        let mut now = 0.0;
        loop {
            if events.len() == max_events {
                return Ok(TrajectoryReport {
                    start,
                    events,
                    status: Termination::MaxEvents,
                    last: domain,
                });
            }
            let rates: Vec<(f64, f64)> = (0..dim).map(|n| self.target(n, &x)).collect();
            // earliest wall per variable: (time, wall value, is phase wall)
            let mut first: Option<(f64, usize, f64, bool)> = None;
            let mut second = f64::INFINITY;
            for n in (0..dim).filter(|&n| !pinned[n]) {
                let (t, g) = rates[n];
                let Some((w, phase)) = self.next_wall(n, x[n], t) else {
                    continue;
                };
                let time = ((x[n] - t) / (w - t)).ln() / g;
                match first {
                    Some((f, ..)) if time >= f => second = second.min(time),
                    _ => {
                        if let Some((f, ..)) = first {
                            second = second.min(f);
                        }
                        first = Some((time, n, w, phase));
                    }
                }
            }
            let Some((dt, n, w, phase)) = first else {
                return Ok(TrajectoryReport {
                    start,
                    events,
                    status: Termination::Converged,
                    last: domain,
                });
            };
            if second.is_finite() && second - dt <= TANGENCY * dt {
                return Err(OdeError::TangencyAbort { first: dt, second });
            }
            for m in (0..dim).filter(|&m| !pinned[m] && m != n) {
                let (t, g) = rates[m];
                x[m] = t + (x[m] - t) * (-g * dt).exp();
            }
            now += dt;
            let up = rates[n].0 > x[n];
            x[n] = if up {
                w * (1.0 + NUDGE)
            } else {
                w * (1.0 - NUDGE)
            };
            if phase {
                let from = domain;
                domain = self.domain_of(&x);
                events.push(Event {
                    time: now,
                    variable: n,
                    from,
                    to: domain,
                });
            } else {
                // own threshold: slides along it when the flow turns back
                let (t, _) = self.target(n, &x);
                if (t > w) != up {
                    pinned[n] = true;
                    x[n] = w;
                }
            }
        }
    }

    /// Nearest wall between `x` and target `t`, and whether it bounds a domain.
    fn next_wall(&self, n: usize, x: f64, t: f64) -> Option<(f64, bool)> {
        let phase = self.walls[n].iter().map(|&w| (w, true));
        let own = self.self_theta[n].map(|w| (w, false));
        let candidates = phase.chain(own);
        if t > x {
            candidates
                .filter(|&(w, _)| w > x && w < t)
                .min_by(|a, b| a.0.total_cmp(&b.0))
        } else {
            candidates
                .filter(|&(w, _)| w < x && w > t)
                .max_by(|a, b| a.0.total_cmp(&b.0))
        }
    }

    /// Log-uniform sampling box per variable, covering every wall and target.
    fn sampling_box(&self) -> Vec<(f64, f64)> {
        (0..self.dimension())
            .map(|n| {
                let st = &self.pg.factors()[n].inputs.structure;
                let targets = (0..st.n_values()).map(|v| self.target_of_value(n, v).0);
                let (lo, hi) = self.walls[n]
                    .iter()
                    .copied()
                    .chain(targets)
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| {
                        (lo.min(q), hi.max(q))
                    });
                ((lo / 4.0).ln(), (hi * 4.0).ln())
            })
            .collect()
    }
}

/// Outcome of simulating many trajectories at one parameter node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub index: u64,
    pub samples: usize,
    pub transitions: usize,
    /// Simulated transitions missing from the state transition graph.
    pub edge_violations: usize,
    /// Trapping domains without a self edge or outside every stable Morse node.
    pub trap_violations: usize,
    pub tangency_resamples: usize,
    /// Samples abandoned after repeated tangencies.
    pub abandoned: usize,
    pub converged: usize,
    pub max_events: usize,
}

impl CrosscheckReport {
    pub fn violations(&self) -> usize {
        self.edge_violations + self.trap_violations
    }

    pub fn merge(mut self, other: &CrosscheckReport) -> Self {
        self.samples += other.samples;
        self.transitions += other.transitions;
        self.edge_violations += other.edge_violations;
        self.trap_violations += other.trap_violations;
        self.tangency_resamples += other.tangency_resamples;
        self.abandoned += other.abandoned;
        self.converged += other.converged;
        self.max_events += other.max_events;
        self
    }
}

/// Simulates `samples` trajectories at parameter node `index` and checks them
/// against its state transition graph and Morse graph.
pub fn crosscheck(
    pg: &ParameterGraph,
    index: u64,
    samples: usize,
    seed: u64,
) -> Result<CrosscheckReport, OdeError> {
    let system = SwitchingSystem::new(pg, index)?;
    let stg = build_stg(pg, index)?;
    let mg = morse_graph(&stg);
    Ok(crosscheck_against(&system, &stg, &mg, samples, seed))
}

/// Like [`crosscheck`] with the graphs supplied by the caller.
pub fn crosscheck_against(
    system: &SwitchingSystem<'_>,
    stg: &StateTransitionGraph,
    mg: &MorseGraph,
    samples: usize,
    seed: u64,
) -> CrosscheckReport {
    let stable: Vec<bool> = {
        let mut s = vec![false; stg.complex.len()];
        for node in mg.nodes.iter().filter(|m| m.stable) {
            for &d in &node.domains {
                s[d] = true;
            }
        }
        s
    };
    let bounds = system.sampling_box();
    let index = system.params.index;
    let parts: Vec<CrosscheckReport> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    ^ (k as u64).wrapping_mul(0xd1b5_4a32_d192_ed03),
            );
            let mut part = CrosscheckReport {
                samples: 1,
                ..Default::default()
            };
            for _ in 0..RESAMPLES {
                let x0: Vec<f64> = bounds
                    .iter()
                    .map(|&(a, b)| rng.gen_range(a..b).exp())
                    .collect();
                match system.integrate(&x0, CROSSCHECK_EVENTS) {
                    Ok(report) => {
                        part.transitions += report.events.len();
                        part.edge_violations += report
                            .events
                            .iter()
                            .filter(|e| !stg.has_edge(e.from, e.to))
                            .count();
                        match report.status {
                            Termination::Converged => {
                                part.converged += 1;
                                if !stg.has_edge(report.last, report.last) || !stable[report.last] {
                                    part.trap_violations += 1;
                                }
                            }
                            Termination::MaxEvents => part.max_events += 1,
                        }
                        return part;
                    }
                    Err(_) => part.tangency_resamples += 1,
                }
            }
            part.abandoned += 1;
            part
        })
        .collect();
    parts.iter().fold(
        CrosscheckReport {
            index,
            ..Default::default()
        },
        CrosscheckReport::merge,
    )
}
