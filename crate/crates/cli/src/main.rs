//! `regdyn`: parameter graphs and combinatorial dynamics of regulatory networks.

mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regdyn::algebra::{cache, LogicCache, Signature, Solver, SolverConfig};
use regdyn::dynamics::analyze;
use regdyn::network::RegulatoryNetwork;
use regdyn::odecheck::{crosscheck, CrosscheckReport};
use regdyn::paramgraph::{build_factor_graph, ParameterGraph};
use regdyn::stats::{calibrate, survey_all};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "regdyn",
    version,
    about = "Parameter graphs and combinatorial dynamics of regulatory networks"
)]
struct Cli {
    #[command(flatten)]
    config: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Logic cache directory [default: per-user data directory]
    #[arg(long, global = true, env = "REGDYN_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Keep solved order sets in memory only
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads (0: one per core)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for witness search and trajectory sampling
    #[arg(long, global = true, default_value_t = SolverConfig::default().seed)]
    seed: u64,
    /// Largest interaction order (after pair contraction) that will be solved
    #[arg(long, global = true, default_value_t = SolverConfig::default().cap)]
    cap: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Admissible orders of an interaction signature, e.g. "x(y+z)" or "<x>+y"
    Psd { signature: String },
    /// Parameter graph size, or one parameter node with its inequalities
    Pg {
        network: PathBuf,
        index: Option<u64>,
    },
    /// State transition graph and Morse graph of one parameter node
    Dynamics {
        network: PathBuf,
        index: u64,
        /// Graph written in DOT format
        #[arg(long, value_enum, default_value_t = Graph::Morse)]
        graph: Graph,
    },
    /// Stable attractor statistics over the whole parameter graph
    Stats {
        network: PathBuf,
        /// Regroup production terms so the parameter graph has this size
        #[arg(long)]
        calibrate: Option<u64>,
    },
    /// Simulate the switching system and check it against the combinatorics
    Validate {
        network: PathBuf,
        /// Parameter node; all nodes when omitted
        index: Option<u64>,
        /// Trajectories per parameter node
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Factor graph of a signature with a number of out-thresholds
    Export {
        signature: String,
        #[arg(long, default_value_t = 1)]
        thresholds: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Graph {
    Morse,
    Stg,
}

fn default_cache_dir() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_DATA_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".local/share")))?;
    Some(base.join("regdyn").join("logic"))
}

fn solver(cfg: &GlobalArgs) -> Result<Solver, CliError> {
    let config = SolverConfig {
        seed: cfg.seed,
        cap: cfg.cap,
        ..SolverConfig::default()
    };
    let dir = if cfg.no_cache {
        None
    } else {
        cfg.cache_dir.clone().or_else(default_cache_dir)
    };
    let cache = match dir {
        Some(d) => {
            std::fs::create_dir_all(&d)
                .map_err(|e| CliError::Usage(format!("cache directory {}: {e}", d.display())))?;
            LogicCache::on_disk(d)
        }
        None => LogicCache::in_memory(),
    };
    Ok(Solver::new(config, cache))
}

fn read_network(path: &Path) -> Result<RegulatoryNetwork, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(RegulatoryNetwork::parse(&text)?)
}

fn network_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn no_dot(command: &str) -> CliError {
    CliError::Usage(format!(
        "`{command}` has no DOT output; use --format text or json"
    ))
}

/// Parameter graph, warning about nodes whose order sets are incomplete.
fn parameter_graph(net: &RegulatoryNetwork, solver: &Solver) -> Result<ParameterGraph, CliError> {
    let pg = ParameterGraph::build(net, solver)?;
    for n in pg.unresolved_nodes() {
        eprintln!(
            "warning: node {} has unresolved candidate orders; only witnessed orders are used",
            net.node(n).name
        );
    }
    Ok(pg)
}

fn cmd_psd(cfg: &GlobalArgs, signature: &str) -> Result<String, CliError> {
    let sig = Signature::parse(signature)?;
    let set = solver(cfg)?.solve_psd(&sig)?;
    let out = match cfg.format {
        Format::Json => json(&cache::to_json(&set)),
        Format::Dot => return Err(no_dot("psd")),
        Format::Text => {
            let mut out = format!(
                "signature {}\ntype {}\norders {}\n",
                set.signature,
                set.signature.type_label(),
                set.len()
            );
            let tied = set.structure.has_pairs();
            for i in 0..set.len() {
                let line: Vec<String> = if tied {
                    set.blocks(i)
                        .iter()
                        .map(|b| {
                            let items: Vec<String> = b.iter().map(usize::to_string).collect();
                            if b.len() == 1 {
                                items[0].clone()
                            } else {
                                format!("{{{}}}", items.join(","))
                            }
                        })
                        .collect()
                } else {
                    set.orders[i].values.iter().map(usize::to_string).collect()
                };
                out.push_str(&format!("{i}: {}\n", line.join(" < ")));
            }
            if !set.unresolved.is_empty() {
                out.push_str(&format!("unresolved {}\n", set.unresolved.len()));
            }
            out
        }
    };
    if !set.unresolved.is_empty() {
        print!("{out}");
        return Err(CliError::Unresolved(format!(
            "{} candidate orders of {} have neither a witness nor a proof of infeasibility",
            set.unresolved.len(),
            set.signature
        )));
    }
    Ok(out)
}

fn cmd_pg(cfg: &GlobalArgs, path: &Path, index: Option<u64>) -> Result<String, CliError> {
    let net = read_network(path)?;
    let pg = parameter_graph(&net, &solver(cfg)?)?;
    match (index, cfg.format) {
        (_, Format::Dot) => Err(no_dot("pg")),
        (None, Format::Json) => Ok(json(&serde_json::json!({
            "schema_version": 1,
            "network": network_name(path),
            "size": pg.size(),
            "factor_sizes": pg.factor_sizes(),
        }))),
        (None, Format::Text) => {
            let mut out = format!("size {}\n", pg.size());
            for (n, s) in pg.factor_sizes().iter().enumerate() {
                out.push_str(&format!(
                    "node {} {} factor graph {s}\n",
                    net.node(n).name,
                    net.signature(n)
                ));
            }
            Ok(out)
        }
        (Some(i), Format::Json) => Ok(json(&pg.node_json(i)?)),
        (Some(i), Format::Text) => {
            let coords = pg.decode(i)?;
            let coords: Vec<String> = coords.iter().map(usize::to_string).collect();
            let ineq = pg.region_inequalities(i)?;
            let mut out = format!("index {i}\ncoords ({})\n", coords.join(","));
            for line in pg.render_inequalities(&ineq) {
                out.push_str(&line);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

fn cmd_dynamics(
    cfg: &GlobalArgs,
    path: &Path,
    index: u64,
    graph: Graph,
) -> Result<String, CliError> {
    let net = read_network(path)?;
    let pg = parameter_graph(&net, &solver(cfg)?)?;
    let (stg, mg) = analyze(&pg, index)?;
    Ok(match cfg.format {
        Format::Dot => match graph {
            Graph::Morse => mg.to_dot(),
            Graph::Stg => stg.to_dot(),
        },
        Format::Json => json(&serde_json::json!({
            "schema_version": 1,
            "network": network_name(path),
            "index": index,
            "stg": stg.to_json(),
            "morse_graph": mg.to_json(),
        })),
        Format::Text => {
            let s = mg.stable_counts();
            format!(
                "index {index}\ndomains {}\nstg edges {}\nstable fp {} fc {} pc {}\n{}",
                stg.complex.len(),
                stg.edge_count(),
                s.fp,
                s.fc,
                s.pc,
                mg.to_text()
            )
        }
    })
}

fn cmd_stats(cfg: &GlobalArgs, path: &Path, target: Option<u64>) -> Result<String, CliError> {
    let net = read_network(path)?;
    let solver = solver(cfg)?;
    let net = match target {
        Some(t) => calibrate(&net, t, &solver)?.network,
        None => net,
    };
    let pg = ParameterGraph::build(&net, &solver)?;
    let row = survey_all(&pg, &network_name(path))?;
    match cfg.format {
        Format::Dot => Err(no_dot("stats")),
        Format::Json => Ok(json(&row.to_json())),
        Format::Text => Ok(row.to_string()),
    }
}

fn cmd_validate(
    cfg: &GlobalArgs,
    path: &Path,
    index: Option<u64>,
    samples: usize,
) -> Result<String, CliError> {
    let net = read_network(path)?;
    let pg = parameter_graph(&net, &solver(cfg)?)?;
    let indices: Vec<u64> = match index {
        Some(i) => vec![i],
        None => (0..pg.size()).collect(),
    };
    let mut reports = Vec::with_capacity(indices.len());
    for i in indices {
        reports.push(crosscheck(&pg, i, samples, cfg.seed)?);
    }
    let total = reports
        .iter()
        .fold(CrosscheckReport::default(), |a, r| a.merge(r));
    let out = match cfg.format {
        Format::Dot => return Err(no_dot("validate")),
        Format::Json => json(&serde_json::json!({
            "schema_version": 1,
            "network": network_name(path),
            "samples_per_node": samples,
            "nodes": reports,
            "violations": total.violations(),
            "tangency_resamples": total.tangency_resamples,
        })),
        Format::Text => {
            let mut out = String::new();
            for r in &reports {
                out.push_str(&format!(
                    "index {} samples {} transitions {} edge violations {} trap violations {} tangency resamples {}\n",
                    r.index, r.samples, r.transitions, r.edge_violations, r.trap_violations, r.tangency_resamples
                ));
            }
            out.push_str(&format!(
                "nodes {} samples {} violations {} tangency resamples {}\n",
                reports.len(),
                total.samples,
                total.violations(),
                total.tangency_resamples
            ));
            out
        }
    };
    if total.violations() > 0 {
        print!("{out}");
        return Err(CliError::Internal(format!(
            "{} simulated behaviours contradict the state transition graph",
            total.violations()
        )));
    }
    Ok(out)
}

fn cmd_export(cfg: &GlobalArgs, signature: &str, m: usize) -> Result<String, CliError> {
    let sig = Signature::parse(signature)?;
    let orders = solver(cfg)?.solve_psd(&sig)?;
    let fg = build_factor_graph(orders, m);
    Ok(match cfg.format {
        Format::Dot => fg.to_dot(),
        Format::Json => json(&fg.to_json()),
        Format::Text => format!(
            "signature {}\nthresholds {m}\nnodes {}\nedges {}\n",
            fg.signature,
            fg.len(),
            fg.edge_count()
        ),
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    if cli.config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.config.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let cfg = &cli.config;
    match &cli.command {
        Command::Psd { signature } => cmd_psd(cfg, signature),
        Command::Pg { network, index } => cmd_pg(cfg, network, *index),
        Command::Dynamics {
            network,
            index,
            graph,
        } => cmd_dynamics(cfg, network, *index, *graph),
        Command::Stats { network, calibrate } => cmd_stats(cfg, network, *calibrate),
        Command::Validate {
            network,
            index,
            samples,
        } => cmd_validate(cfg, network, *index, *samples),
        Command::Export {
            signature,
            thresholds,
        } => cmd_export(cfg, signature, *thresholds),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
