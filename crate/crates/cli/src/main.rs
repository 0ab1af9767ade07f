mod grid;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rbmp::estimators::{
    balanced_estimate, baseline_estimate, closed_unbalanced_estimate, dispatch_estimate,
    recursive_estimate, Estimate, Method,
};
use rbmp::exact::{feasible_removal, optimal_match_1d, optimal_removal};
use rbmp::montecarlo::{
    relative_error_table, run_experiment, write_csv, write_json, Column, ExperimentConfig,
    ExperimentKind, GridPoint, SummaryRecord, DEFAULT_REPLICATIONS,
};
use rbmp::network::{build_regular_network, network_estimate, DEFAULT_KAPPA};
use rbmp::presets::{preset, PRESET_NAMES};
use rbmp::{EdgeParams, Instance1D};

/// Estimate and simulate expected matching distances for random bipartite
/// matching on segments and regular networks.
#[derive(Debug, Parser)]
#[command(name = "rbmp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate estimators for one parameter set.
    Estimate(EstimateArgs),
    /// Run a seeded simulation sweep.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Run one of the published figure sweeps.
    Compare {
        /// One of fig4a, fig4b, fig4c, fig4d, fig5, fig6.
        preset: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write or replay a single segment instance.
    Instance {
        #[command(subcommand)]
        action: InstanceAction,
    },
    /// Network descriptions.
    Network {
        #[command(subcommand)]
        action: NetworkAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Balanced,
    Closed,
    Recursive,
    Baseline,
    Edge,
    Network,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Demand and supply counts on a segment.
    #[arg(long, num_args = 2, value_names = ["M", "N"], group = "problem")]
    segment: Option<Vec<u64>>,
    /// Demand density, supply density and length of one edge.
    #[arg(long, num_args = 3, value_names = ["MU", "LAMBDA", "L"], group = "problem")]
    edge: Option<Vec<f64>>,
    /// Degree, demand density, supply density and edge length of a network.
    #[arg(long, num_args = 4, value_names = ["D", "MU", "LAMBDA", "L"], group = "problem")]
    network: Option<Vec<f64>>,
    /// Only evaluate this estimator.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Report values without the step-length correction.
    #[arg(long)]
    no_correction: bool,
    /// Search layers for the network estimator.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: usize,
    /// Segment length for --segment.
    #[arg(long, default_value_t = 1.0)]
    length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Replications per grid point.
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: RBMP_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Search layers for the network estimator.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: usize,
    /// Write records to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of --out.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum SimulateKind {
    /// Fixed counts on a segment; every (m, n) pair with n >= m is run.
    Segment {
        #[arg(long)]
        m: String,
        #[arg(long)]
        n: String,
        #[arg(long, default_value = "1")]
        length: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fixed counts mu L and lambda L on one edge.
    Edge {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        length: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Poisson points on a regular lattice.
    Network {
        #[arg(long)]
        degree: String,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = "1")]
        length: String,
        #[arg(long, default_value_t = 36)]
        edges: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Subcommand)]
enum InstanceAction {
    /// Draw a uniform instance and print it as JSON.
    Dump {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance read from a JSON file.
    Replay { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum NetworkAction {
    /// Print the lattice used for a degree and edge count as JSON.
    Export {
        #[arg(long)]
        degree: usize,
        #[arg(long, default_value_t = 36)]
        edges: usize,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad flags or arguments, reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(Usage(e.to_string()))
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<Usage>().is_some()
            || c.downcast_ref::<rbmp::Error>().is_some_and(rbmp::Error::is_usage)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Simulate { kind } => cmd_simulate(kind),
        Command::Compare { preset: name, run } => cmd_compare(&name, &run),
        Command::Instance { action } => cmd_instance(action),
        Command::Network { action } => cmd_network(action),
    }
}

fn print_estimate(e: &Estimate) {
    let note = if e.corrected { " (corrected)" } else { "" };
    println!("{:<10} {:.10}{note}", e.method.tag(), e.value);
}

fn segment_estimate(method: MethodArg, m: u64, n: u64, length: f64, corrected: bool) -> Result<Estimate> {
    Ok(match method {
        MethodArg::Balanced => {
            if n != m {
                return Err(usage(format!("balanced estimator needs n = m (got m = {m}, n = {n})")));
            }
            balanced_estimate(n, length)?
        }
        MethodArg::Closed => closed_unbalanced_estimate(m, n, length, corrected)?,
        MethodArg::Recursive => recursive_estimate(m, n, length, corrected)?,
        MethodArg::Baseline => baseline_estimate(m, n, length)?,
        MethodArg::Edge | MethodArg::Network => {
            return Err(usage(format!(
                "method {method:?} needs --edge or --network parameters"
            )))
        }
    })
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let corrected = !args.no_correction;
    if let Some(v) = &args.segment {
        let (m, n) = (v[0], v[1]);
        let methods = match args.method {
            Some(x) => vec![x],
            None if n == m => vec![MethodArg::Balanced, MethodArg::Baseline],
            None => vec![MethodArg::Closed, MethodArg::Recursive, MethodArg::Baseline],
        };
        for method in methods {
            print_estimate(&segment_estimate(method, m, n, args.length, corrected)?);
        }
        return Ok(());
    }
    if let Some(v) = &args.edge {
        let params = EdgeParams::new(v[0], v[1], v[2])?;
        match args.method {
            None | Some(MethodArg::Edge) => {
                let e = dispatch_estimate(&params)?;
                println!("{:<10} {:.10} via {}", Method::EdgeScaled.tag(), e.value, e.method.tag());
            }
            Some(MethodArg::Network) => return Err(usage("method network needs --network parameters")),
            Some(method) => {
                let m = (params.mu * params.length).round() as u64;
                let n = (params.lambda * params.length).round() as u64;
                dispatch_estimate(&params)?;
                print_estimate(&segment_estimate(method, m, n, params.length, corrected)?);
            }
        }
        return Ok(());
    }
    if let Some(v) = &args.network {
        if v[0] < 1.0 || v[0].fract() != 0.0 {
            return Err(usage(format!("degree must be a positive integer, got {}", v[0])));
        }
        if !matches!(args.method, None | Some(MethodArg::Network)) {
            return Err(usage("only the network method applies to --network"));
        }
        let parts = network_estimate(v[0] as usize, v[1], v[2], v[3], args.kappa)?;
        println!("{:<10} {:.10}", "network", parts.total);
        println!("{:<10} {:.10}", "alpha", parts.alpha);
        println!("{:<10} {:.10}", "local", parts.local);
        println!("{:<10} {:.10}", "d1", parts.d1);
        println!("{:<10} {:.10}", "d2", parts.d2);
        println!("{:<10} {:.10}", "d3", parts.d3);
        return Ok(());
    }
    Err(usage("one of --segment, --edge or --network is required"))
}

fn workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("RBMP_WORKERS") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| usage(format!("RBMP_WORKERS must be a positive integer, got '{s}'"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn execute(kind: ExperimentKind, grid: Vec<GridPoint>, run: &RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(kind, grid, run.reps, run.seed).with_workers(workers(run.workers)?);
    cfg.kappa = run.kappa;
    cfg.validate()?;
    let records = run_experiment(&cfg)?;
    if let Some(path) = &run.out {
        write_records(&records, path, run.format)?;
    }
    print_table(&records);
    Ok(())
}

fn write_records(records: &[SummaryRecord], path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(records, &mut w)?,
        Format::Json => write_json(records, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn describe(point: &GridPoint) -> String {
    match *point {
        GridPoint::Segment { m, n, length } => format!("m={m} n={n} L={length}"),
        GridPoint::Edge { mu, lambda, length } => format!("mu={mu} lambda={lambda} L={length}"),
        GridPoint::Network {
            degree,
            edge_count,
            mu,
            lambda,
            length,
        } => format!("D={degree} E={edge_count} mu={mu} lambda={lambda} L={length}"),
    }
}

fn print_table(records: &[SummaryRecord]) {
    let columns: Vec<Column> = Column::ALL
        .into_iter()
        .filter(|&c| records.iter().any(|r| r.estimate(c).is_some()))
        .collect();
    let mut header = format!("{:<40} {:>12} {:>10}", "parameters", "sim_mean", "sim_sem");
    for c in &columns {
        header.push_str(&format!(" {:>22}", c.name()));
    }
    println!("{header}");
    for r in records {
        let mut line = format!("{:<40} {:>12.6} {:>10.2e}", describe(&r.point), r.sim_mean, r.sim_sem);
        for &c in &columns {
            let cell = match (r.estimate(c), r.relative_error(c)) {
                (Some(e), Some(rel)) => format!("{e:.6} ({:+.1}%)", 100.0 * rel),
                (Some(e), None) => format!("{e:.6}"),
                _ => "-".to_string(),
            };
            line.push_str(&format!(" {cell:>22}"));
        }
        println!("{line}");
    }
    if let Ok(table) = relative_error_table(records) {
        println!();
        println!("{:<14} {:>7} {:>16} {:>16}", "estimator", "points", "mean |rel err|", "max |rel err|");
        for s in table {
            println!(
                "{:<14} {:>7} {:>15.2}% {:>15.2}%",
                s.column.name(),
                s.count,
                100.0 * s.mean_abs_relative_error,
                100.0 * s.max_abs_relative_error
            );
        }
    }
}

fn cmd_simulate(kind: SimulateKind) -> Result<()> {
    match kind {
        SimulateKind::Segment { m, n, length, run } => {
            let ms = grid::parse_counts(&m).map_err(usage)?;
            let ns = grid::parse_counts(&n).map_err(usage)?;
            let ls = grid::parse_reals(&length).map_err(usage)?;
            let mut points = Vec::new();
            for &length in &ls {
                for &m in &ms {
                    for &n in ns.iter().filter(|&&n| n >= m) {
                        points.push(GridPoint::Segment { m, n, length });
                    }
                }
            }
            if points.is_empty() {
                return Err(usage("no (m, n) pair in the grid has n >= m"));
            }
            execute(ExperimentKind::Segment, points, &run)
        }
        SimulateKind::Edge {
            mu,
            lambda,
            length,
            run,
        } => {
            let mus = grid::parse_reals(&mu).map_err(usage)?;
            let lambdas = grid::parse_reals(&lambda).map_err(usage)?;
            let ls = grid::parse_reals(&length).map_err(usage)?;
            let mut points = Vec::new();
            for &mu in &mus {
                for &lambda in &lambdas {
                    for &length in &ls {
                        points.push(GridPoint::Edge { mu, lambda, length });
                    }
                }
            }
            execute(ExperimentKind::Edge, points, &run)
        }
        SimulateKind::Network {
            degree,
            mu,
            lambda,
            length,
            edges,
            run,
        } => {
            let ds = grid::parse_counts(&degree).map_err(usage)?;
            let mus = grid::parse_reals(&mu).map_err(usage)?;
            let lambdas = grid::parse_reals(&lambda).map_err(usage)?;
            let ls = grid::parse_reals(&length).map_err(usage)?;
            let mut points = Vec::new();
            for &d in &ds {
                for &mu in &mus {
                    for &lambda in &lambdas {
                        for &length in &ls {
                            points.push(GridPoint::Network {
                                degree: d as usize,
                                edge_count: edges,
                                mu,
                                lambda,
                                length,
                            });
                        }
                    }
                }
            }
            execute(ExperimentKind::Network, points, &run)
        }
    }
}

fn cmd_compare(name: &str, run: &RunArgs) -> Result<()> {
    if !PRESET_NAMES.contains(&name) {
        return Err(usage(format!(
            "unknown preset '{name}' (expected one of {})",
            PRESET_NAMES.join(", ")
        )));
    }
    let cfg = preset(name, run.reps, run.seed)?;
    execute(cfg.kind, cfg.grid, run)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_instance(action: InstanceAction) -> Result<()> {
    match action {
        InstanceAction::Dump {
            m,
            n,
            length,
            seed,
            out,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = Instance1D::random(m, n, length, &mut rng)?;
            emit(&serde_json::to_string(&inst)?, out.as_deref())
        }
        InstanceAction::Replay { path } => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let inst: Instance1D = serde_json::from_str(&text).map_err(usage)?;
            let (m, n) = (inst.m() as u64, inst.n() as u64);
            let r = optimal_match_1d(&inst);
            println!("{:<16} m={m} n={n} L={}", "instance", inst.length());
            println!("{:<16} {:.10}", "optimal_total", r.total_distance);
            println!("{:<16} {:.10}", "optimal_mean", r.mean_distance);
            if n > m {
                println!("{:<16} {:.10}", "removal_area", optimal_removal(&inst)?.post_removal_area);
                println!("{:<16} {:.10}", "scan_area", feasible_removal(&inst, false)?.post_removal_area);
                println!("{:<16} {:.10}", "scan_swap_area", feasible_removal(&inst, true)?.post_removal_area);
            }
            if m >= 1 {
                let methods: &[MethodArg] = if n == m {
                    &[MethodArg::Balanced, MethodArg::Baseline]
                } else {
                    &[MethodArg::Closed, MethodArg::Recursive, MethodArg::Baseline]
                };
                for &method in methods {
                    print_estimate(&segment_estimate(method, m, n, inst.length(), true)?);
                }
            }
            Ok(())
        }
    }
}

fn cmd_network(action: NetworkAction) -> Result<()> {
    match action {
        NetworkAction::Export {
            degree,
            edges,
            length,
            out,
        } => {
            let net = build_regular_network(degree, edges, length)?;
            emit(&serde_json::to_string(&net.description())?, out.as_deref())
        }
    }
}
