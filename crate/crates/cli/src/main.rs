//! `nestpart`: mesh, partition, calibrate, balance, solve, simulate and
//! report from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when inputs fail
//! validation. Every subcommand checks its inputs before writing anything.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nestpart_core::hetsim::{compare_strategies, simulate, validate_model, SimScenario, Strategy};
use nestpart_core::mesh::{build_mesh, Mesh, MeshConfig};
use nestpart_core::partition::{stats_to_csv, PartitionFile};
use nestpart_core::perfmodel::{
    balance, balance_exhaustive, calibrate, invert_profile_for_ratio, DeviceProfile, KernelTimeTable,
};
use nestpart_core::report::build_report;
use nestpart_core::solver::{run, InitialCondition, PartitionConfig, SolveConfig};
use nestpart_core::Error;

#[derive(Parser)]
#[command(name = "nestpart", version, about = "Nested host/accelerator partitioning for DG wave propagation")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a forest mesh and write it as JSON.
    Mesh(MeshArgs),
    /// Splice a mesh over nodes and grow each node's device set.
    Partition(PartitionArgs),
    /// Time the solver kernels on this machine and fit a kernel-time table.
    Calibrate(CalibrateArgs),
    /// Solve the host/device load-balance equation.
    Balance(BalanceArgs),
    /// Run the wave solver.
    Solve(SolveArgs),
    /// Simulate the per-step host/device cycle of a scenario.
    Simulate(SimulateArgs),
    /// Summarize comparison and trace CSVs as markdown and CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct MeshArgs {
    /// Mesh description to validate and normalize, instead of the flags below.
    #[arg(long, conflicts_with_all = ["trees", "level", "element_size"])]
    config: Option<PathBuf>,
    /// Number of trees in a row along x.
    #[arg(long, default_value_t = 1)]
    trees: usize,
    #[arg(long, default_value_t = 2)]
    level: u32,
    #[arg(long, default_value_t = 1.0)]
    element_size: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    nodes: usize,
    /// Device-to-host element ratio on every node.
    #[arg(long, conflicts_with = "fraction")]
    ratio: Option<f64>,
    /// Fraction of every node's elements offloaded.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Per-node statistics CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Polynomial order used for the transfer column of the statistics.
    #[arg(long = "N", default_value_t = 7)]
    order: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Orders as an inclusive range `lo..hi` or a comma list.
    #[arg(long, default_value = "2..8")]
    orders: String,
    #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
    counts: Vec<usize>,
    #[arg(long)]
    profile: PathBuf,
    /// Timed steps per sample; the minimum is kept.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long = "N")]
    order: usize,
    #[arg(long = "K")]
    k: usize,
    /// Replace the table's device fits and link with this profile.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Also scan every split and report the exhaustive optimum.
    #[arg(long)]
    exhaustive: bool,
    /// Write a uniform device profile whose balance point has this
    /// device-to-host ratio (needs --profile-out).
    #[arg(long, requires = "profile_out")]
    fit_ratio: Option<f64>,
    #[arg(long, requires = "fit_ratio")]
    profile_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Seed for a random initial condition, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Per-step, per-node trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Strategy comparison CSV.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Fail unless the trace agrees with the load-balance model.
    #[arg(long)]
    validate: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Strategy comparison CSVs from `simulate --compare`.
    #[arg(long = "comparison")]
    comparisons: Vec<PathBuf>,
    /// Trace CSVs from `simulate --out`.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    /// Directory receiving report.md, strategies.csv and traces.csv.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(Error::InvalidConfig(format!("cannot read {}: {e}", path.display()))))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Invalid(Error::InvalidConfig(format!("{}: {e}", path.display()))))
}

fn write(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    let config: MeshConfig = read_json(path)?;
    Ok(build_mesh(&config)?)
}

fn parse_orders(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("--orders expects `lo..hi` or a comma list, got `{text}`"));
    let orders: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if orders.is_empty() {
        return Err(bad());
    }
    Ok(orders)
}

fn cmd_mesh(a: MeshArgs) -> CliResult {
    let config = match &a.config {
        Some(path) => read_json(path)?,
        None => MeshConfig::row(a.trees, a.level, a.element_size),
    };
    let mesh = build_mesh(&config)?;
    write(&a.out, &serde_json::to_string_pretty(&mesh).map_err(Error::from)?)?;
    println!("{} trees, level {}, {} elements", config.trees.len(), config.level, mesh.len());
    Ok(())
}

fn cmd_partition(a: PartitionArgs) -> CliResult {
    let mesh = load_mesh(&a.mesh)?;
    let p = PartitionConfig { nodes: a.nodes, ratio: a.ratio, fraction: a.fraction }.build(&mesh)?;
    let stats = p.stats(a.order);
    write(&a.out, &serde_json::to_string_pretty(&PartitionFile::from(&p)).map_err(Error::from)?)?;
    if let Some(path) = &a.stats {
        write(path, &stats_to_csv(&stats))?;
    }
    for n in &stats.nodes {
        let ratio = if n.k_host > 0 { n.k_dev as f64 / n.k_host as f64 } else { f64::INFINITY };
        println!(
            "node {}: K = {}, K_dev = {}, K_host = {}, ratio = {:.3}, surface faces = {}{}",
            n.node,
            n.k,
            n.k_dev,
            n.k_host,
            ratio,
            n.surface_faces,
            if n.clamped { " (clamped to the interior)" } else { "" }
        );
    }
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> CliResult {
    let orders = parse_orders(&a.orders)?;
    let profile: DeviceProfile = read_json(&a.profile)?;
    profile.validate()?;
    let table = calibrate(&orders, &a.counts, &profile, a.reps)?;
    write(&a.out, &table.to_json())?;
    let flagged = table.entries.iter().filter(|e| e.flagged).count();
    println!("{} fits for orders {:?}; {} flagged for outlier rejection", table.entries.len(), orders, flagged);
    Ok(())
}

fn cmd_balance(a: BalanceArgs) -> CliResult {
    let mut table = KernelTimeTable::from_json(&read(&a.table)?)?;
    if let Some(path) = &a.profile {
        let profile: DeviceProfile = read_json(path)?;
        table = table.with_device_profile(&profile)?;
    }
    if let Some(ratio) = a.fit_ratio {
        let profile = invert_profile_for_ratio(a.order, a.k, ratio, &table, table.transfer)?;
        table = table.with_device_profile(&profile)?;
        let out = a.profile_out.as_deref().expect("clap requires --profile-out");
        write(out, &serde_json::to_string_pretty(&profile).map_err(Error::from)?)?;
        println!("device factor = {}", profile.default_factor);
    }
    let s = balance(a.order, a.k, &table, &table.transfer)?;
    println!("K_dev = {}", s.k_dev);
    println!("K_host = {}", s.k_host);
    let ratio = if s.k_host > 0 { s.k_dev as f64 / s.k_host as f64 } else { f64::INFINITY };
    println!("ratio = {ratio:.4}");
    println!("T_dev = {:e} s", s.t_dev);
    println!("T_host = {:e} s", s.t_host);
    println!("residual = {:e} s", s.residual);
    if a.exhaustive {
        let e = balance_exhaustive(a.order, a.k, &table, &table.transfer, None)?;
        println!("exhaustive K_dev = {}", e.k_dev);
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let mut config: SolveConfig = read_json(&a.config)?;
    if let (Some(s), InitialCondition::Random { seed, .. }) = (a.seed, &mut config.initial) {
        *seed = s;
    }
    config.validate()?;
    let summary = run(&config, Some(&a.out))?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let (step, time, energy) = summary.energies.last().copied().expect("the initial energy is always recorded");
    println!(
        "{} elements at N = {}: {} steps to t = {:.6}, energy {:e} (initial {:e})",
        summary.elements, summary.order, step, time, energy, summary.energies[0].2
    );
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult {
    let scenario = SimScenario::from_json(&read(&a.scenario)?)?;
    let trace = simulate(&scenario)?;
    if a.validate {
        let v = validate_model(&trace, &scenario)?;
        println!("model agreement: max relative error {:e}", v.max_rel_error);
    }
    let comparison = match &a.compare {
        Some(_) => Some(compare_strategies(&scenario, &Strategy::ALL)?),
        None => None,
    };
    write(&a.out, &trace.to_csv())?;
    if let (Some(path), Some(c)) = (&a.compare, &comparison) {
        write(path, &c.to_csv())?;
        for r in &c.results {
            println!("{:<24} total {:.6e} s, speedup {:.3}", r.strategy.name(), r.total_time, r.speedup);
        }
    }
    println!(
        "step {:.6e} s, total {:.6e} s, host idle {:.4}, device idle {:.4}",
        trace.step_time,
        trace.total_time,
        trace.host_idle_fraction(),
        trace.device_idle_fraction()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let load = |paths: &[PathBuf]| -> Result<Vec<(String, String)>, Failure> {
        paths.iter().map(|p| Ok((p.display().to_string(), read(p)?))).collect()
    };
    let report = build_report(&load(&a.comparisons)?, &load(&a.traces)?)?;
    fs::create_dir_all(&a.out)?;
    write(&a.out.join("report.md"), &report.to_markdown())?;
    if !report.strategies.is_empty() {
        write(&a.out.join("strategies.csv"), &report.strategies_csv())?;
    }
    if !report.traces.is_empty() {
        write(&a.out.join("traces.csv"), &report.traces_csv())?;
    }
    println!("wrote {}", a.out.join("report.md").display());
    Ok(())
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var("NESTPART_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("NESTPART_THREADS must be a non-negative integer, got `{value}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Balance(a) => cmd_balance(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
