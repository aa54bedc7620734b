//! `wdmsim`: two-layer optical network simulator front end.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use wdmsim_core::model::{load_topology, NodeId};
use wdmsim_core::routing::k_shortest_paths;
use wdmsim_core::traffic::load_traffic_matrix;

use wdmsim_cli::config::{load_file_config, ConfigError, RunConfig, RunOverrides};
use wdmsim_cli::emit_reports;

#[derive(Debug, Parser)]
#[command(
    name = "wdmsim",
    about = "Multimedia traffic routing over a two-layer IP-over-WDM network",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a full simulation and write the report files.
    Run(RunArgs),
    /// Check a configuration, topology and traffic matrix without running.
    Validate(RunArgs),
    /// Print the k shortest physical paths between two nodes.
    Ksp(KspArgs),
    /// Print the average packet delay of a saved virtual topology.
    Delay(DelayArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology document (JSON).
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Demand matrix (CSV, N x N Gbps).
    #[arg(long)]
    traffic: Option<PathBuf>,
    /// Model sidecar (JSON); defaults to <traffic>.models.json.
    #[arg(long)]
    traffic_models: Option<PathBuf>,
    /// Candidate physical routes per lightpath establishment.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated hours.
    #[arg(long)]
    hours: Option<u32>,
    /// Enable the hourly flow-deviation pass.
    #[arg(long, overrides_with = "no_fda")]
    fda: bool,
    /// Disable the hourly flow-deviation pass.
    #[arg(long, overrides_with = "fda")]
    no_fda: bool,
    #[arg(long)]
    fda_tol: Option<f64>,
    #[arg(long)]
    fda_max_passes: Option<usize>,
    #[arg(long)]
    fda_period_hours: Option<u32>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mean session holding time, seconds.
    #[arg(long)]
    mean_holding_s: Option<f64>,
    /// Override the per-lightpath line rate, Gbps.
    #[arg(long)]
    lightpath_capacity_gbps: Option<f64>,
    /// Night-time floor of the diurnal demand profile, in [0, 1].
    #[arg(long)]
    hourly_floor: Option<f64>,
    /// Event trace: auto, force or off.
    #[arg(long)]
    trace: Option<String>,
}

#[derive(Debug, Args)]
struct KspArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Debug, Args)]
struct DelayArgs {
    /// A virtual_topology.json written by `run`.
    #[arg(long)]
    state: PathBuf,
}

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match cli.command {
        Command::Run(args) => run(args, false),
        Command::Validate(args) => run(args, true),
        Command::Ksp(args) => ksp(args),
        Command::Delay(args) => delay(args),
    }
}

fn resolve(args: RunArgs) -> Result<RunConfig, (u8, String)> {
    let file = load_file_config(args.config.as_deref())
        .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    let overrides = RunOverrides {
        topology: args.topology,
        traffic: args.traffic,
        traffic_models: args.traffic_models,
        k: args.k,
        seed: args.seed,
        hours: args.hours,
        fda_enabled: match (args.fda, args.no_fda) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        },
        fda_tol: args.fda_tol,
        fda_max_passes: args.fda_max_passes,
        fda_period_hours: args.fda_period_hours,
        out_dir: args.out,
        mean_holding_s: args.mean_holding_s,
        lightpath_capacity_gbps: args.lightpath_capacity_gbps,
        hourly_floor: args.hourly_floor,
        trace: args.trace,
    };
    let config = RunConfig::resolve(file, overrides).map_err(|e| match e {
        ConfigError::MissingRequired(_) => (EXIT_USAGE, e.to_string()),
        ConfigError::Invalid(_) => (EXIT_VALIDATION, e.to_string()),
    })?;
    config
        .validate()
        .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
    Ok(config)
}

fn run(args: RunArgs, validate_only: bool) -> ExitCode {
    let config = match resolve(args) {
        Ok(c) => c,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };

    let loaded = (|| -> Result<_, String> {
        let mut topo =
            load_topology::<f64>(&config.topology).map_err(|e| format!("topology: {e}"))?;
        if let Some(c) = config.lightpath_capacity_gbps {
            topo.set_lightpath_capacity_gbps(c)
                .map_err(|e| e.to_string())?;
        }
        let matrix = load_traffic_matrix::<f64>(&config.traffic, config.traffic_models.as_deref())
            .map_err(|e| format!("traffic: {e}"))?;
        if matrix.num_nodes() != topo.num_nodes() {
            return Err(format!(
                "traffic matrix is {0} x {0} but the topology has {1} nodes",
                matrix.num_nodes(),
                topo.num_nodes()
            ));
        }
        Ok((topo, matrix))
    })();
    let (topo, matrix) = match loaded {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };

    if validate_only {
        println!(
            "ok: topology {} nodes / {} links, matrix {} x {}, {} model(s)",
            topo.num_nodes(),
            topo.num_links(),
            matrix.num_nodes(),
            matrix.num_nodes(),
            matrix.models().len()
        );
        return ExitCode::SUCCESS;
    }

    let output = match wdmsim_core::sim::run(&topo, &matrix, &config.sim_options()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: simulation failed: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match emit_reports(&output, &config, &config.out_dir) {
        Ok(files) => {
            println!(
                "processed {} events over {} h: {} offered, {} admitted, {} blocked",
                output.events_processed,
                config.hours,
                output.totals.offered,
                output.totals.admitted,
                output.totals.blocked
            );
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing reports: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn ksp(args: KspArgs) -> ExitCode {
    if args.k < 1 {
        eprintln!("error: k must be at least 1");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let topo = match load_topology::<f64>(&args.topology) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: topology: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let n = topo.num_nodes();
    if args.from >= n || args.to >= n || args.from == args.to {
        eprintln!("error: node pair must be two distinct ids below {n}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let routes = k_shortest_paths(&topo, NodeId(args.from), NodeId(args.to), args.k);
    if routes.is_empty() {
        println!("no path from {} to {}", args.from, args.to);
        return ExitCode::SUCCESS;
    }
    for (i, route) in routes.iter().enumerate() {
        let links = route
            .links
            .iter()
            .map(|l| l.0.to_string())
            .collect::<Vec<_>>()
            .join(">");
        println!(
            "#{i}: {} hops, {:.1} km, links {links}",
            route.hop_count, route.length_km
        );
    }
    ExitCode::SUCCESS
}

fn delay(args: DelayArgs) -> ExitCode {
    let doc = (|| -> Result<wdmsim_core::report::VirtualTopologyDocument<f64>, String> {
        let text = std::fs::read_to_string(&args.state).map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    })();
    match doc {
        Ok(doc) => match doc.average_packet_delay_s() {
            Ok(t) => {
                println!("{t}");
                ExitCode::SUCCESS
            }
            Err(_) => {
                println!("no traffic");
                ExitCode::SUCCESS
            }
        },
        Err(e) => {
            eprintln!("error: state: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
