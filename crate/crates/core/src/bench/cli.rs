//! Command line front end.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on data errors
//! (infeasible configurations, unreadable or malformed files).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{run_combination, trial_setup, write_table, CodecKind, ExperimentConfig, RadiusRule, RunKey, TableFormat, WeightKind};
use crate::network::{self, Graph};
use crate::schedule::{self, ScheduleInputs};
use crate::{engine, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "progquant", version, about = "Quantized average consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write the aggregated table.
    Simulate(SimulateArgs),
    /// Print the range schedule for one topology.
    Schedule(ScheduleArgs),
    /// Print spectral quantities and bit requirements for one topology.
    Spectral(TopologyArgs),
    /// Re-run an archived trace from its indices and check it.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Fixed connection radius (default: √(ln m / m)).
    #[arg(long)]
    radius: Option<f64>,
    /// Comma-separated bit budgets.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..=32))]
    bits: Option<Vec<u32>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated codecs.
    #[arg(long = "codec", value_delimiter = ',')]
    codecs: Option<Vec<CodecKind>>,
    /// Comma-separated weight rules: metropolis, laplacian, laplacian:<a>.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<WeightKind>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Range floor of the schedules; 0 disables it.
    #[arg(long)]
    clamp_delta: Option<f64>,
    /// Output table path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Directory for trace archives of trial 0, one per combination.
    #[arg(long)]
    archive: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Topology {
    Path,
    Complete,
    Rgg,
}

#[derive(Debug, Args)]
struct TopologyArgs {
    #[arg(long, value_enum, default_value = "rgg")]
    topology: Topology,
    #[arg(long, default_value_t = 40)]
    nodes: usize,
    /// Connection radius for `rgg` (default: √(ln m / m)).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the graph from a JSON file instead of generating it.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the graph used to a JSON file.
    #[arg(long)]
    save_graph: Option<PathBuf>,
    #[arg(long, default_value = "metropolis")]
    weights: WeightKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    Recursive,
    Exponential,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[command(flatten)]
    topology: TopologyArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=32))]
    bits: u32,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, value_enum, default_value = "recursive")]
    source: Source,
    /// ‖z₀‖∞ bound.
    #[arg(long, default_value_t = 1.0)]
    z0_inf: f64,
    /// Initial range size.
    #[arg(long, default_value_t = 1.0)]
    s0: f64,
    #[arg(long, default_value_t = schedule::DEFAULT_CLAMP_DELTA)]
    clamp_delta: f64,
    /// Write the schedule as CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    archive: PathBuf,
    /// Largest accepted state deviation.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

/// Parses `args` (including the program name), runs, and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Schedule(a) => schedule_cmd(a),
        Command::Spectral(a) => spectral_cmd(a),
        Command::Replay(a) => replay_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ParameterOutOfRange { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(other),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn build_config(a: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = a.nodes {
        cfg.nodes = v;
    }
    if let Some(v) = a.radius {
        cfg.radius = RadiusRule::Fixed(v);
    }
    if let Some(v) = &a.bits {
        cfg.bits = v.clone();
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = &a.codecs {
        cfg.codecs = v.clone();
    }
    if let Some(v) = &a.weights {
        cfg.weights = v.clone();
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.clamp_delta {
        cfg.clamp_delta = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: SimulateArgs) -> CliResult {
    let cfg = build_config(&a)?;
    let table = super::run_experiment(&cfg)?;
    for ex in &table.exclusions {
        let need = ex.min_bits.map_or("no feasible bit budget".to_string(), |n| format!("needs at least {n} bits"));
        eprintln!("warning: trial {} excluded for {}: {need}", ex.trial, ex.key);
    }
    if table.rejections > 0 {
        eprintln!("note: {} disconnected graph draws were resampled", table.rejections);
    }
    match &a.out {
        Some(path) => write_table(&table, path, a.format)?,
        None => {
            let text = match a.format {
                TableFormat::Csv => super::to_csv(&table.rows),
                TableFormat::Json => super::to_json(&table.rows)?,
            };
            emit(None, &text)?;
        }
    }
    if let Some(dir) = &a.archive {
        write_archives(&cfg, dir)?;
    }
    Ok(())
}

fn write_archives(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let setup = trial_setup(cfg, 0)?;
    for key in cfg.combinations() {
        let RunKey { weights, .. } = key;
        let w = weights.build(&setup.graph)?;
        if let Ok(trace) = run_combination(cfg, key, &w, &setup.z0)? {
            let name = key.to_string().replace([':', '.'], "_");
            engine::save_archive(&trace, w.matrix(), &dir.join(format!("{name}.pqtrace")))?;
        }
    }
    Ok(())
}

fn load_topology(a: &TopologyArgs) -> Result<Graph> {
    let g = match &a.graph {
        Some(path) => Graph::load(path)?,
        None => match a.topology {
            Topology::Path => Graph::path(a.nodes),
            Topology::Complete => Graph::complete(a.nodes),
            Topology::Rgg => {
                let r = a.radius.unwrap_or_else(|| network::connectivity_radius(a.nodes));
                network::connected_rgg(a.nodes, r, a.seed)?.0
            }
        },
    };
    if let Some(path) = &a.save_graph {
        g.save(path)?;
    }
    Ok(g)
}

fn spectral_cmd(a: TopologyArgs) -> CliResult {
    let g = load_topology(&a)?;
    let w = a.weights.build(&g)?;
    let (l2, lmin) = (w.lambda2(), w.lambda_min());
    let mut out = String::new();
    out.push_str(&format!("nodes       {}\n", g.node_count()));
    out.push_str(&format!("edges       {}\n", g.edges().len()));
    out.push_str(&format!("weights     {}\n", a.weights));
    out.push_str(&format!("lambda2     {l2:.12e}\n"));
    out.push_str(&format!("lambda_min  {lmin:.12e}\n"));
    out.push_str(&format!("threshold   {:.6}\n", schedule::bits_threshold(l2, lmin)));
    match schedule::min_bits(l2, lmin) {
        Some(n) => out.push_str(&format!("min_bits    {n}\n")),
        None => out.push_str("min_bits    none\n"),
    }
    for s in 0..5 {
        out.push_str(&format!("norm_s{s}     {:.12e}\n", w.summary().norm_ws_wi(s)));
    }
    emit(None, &out)?;
    Ok(())
}

fn schedule_cmd(a: ScheduleArgs) -> CliResult {
    let g = load_topology(&a.topology)?;
    let w = a.topology.weights.build(&g)?;
    let summary = w.summary();
    let (l2, lmin) = (w.lambda2(), w.lambda_min());
    let mut head = String::new();
    head.push_str(&format!("# lambda2 {l2:.12e}\n# lambda_min {lmin:.12e}\n"));
    head.push_str(&format!(
        "# stable {} min_bits {}\n",
        schedule::stability_condition(l2, lmin, a.bits),
        schedule::min_bits(l2, lmin).map_or("none".to_string(), |n| n.to_string())
    ));
    let sched = match a.source {
        Source::Recursive => {
            let inp = ScheduleInputs::from_summary(summary, a.bits, a.z0_inf, a.s0, a.horizon).with_clamp(a.clamp_delta);
            schedule::recursive_ranges(&inp, a.horizon)?
        }
        Source::Exponential => {
            let (alpha, gamma) = schedule::exponential_params(l2, lmin, a.bits, a.z0_inf)?;
            head.push_str(&format!("# alpha {alpha:.12e}\n# gamma {gamma:.12e}\n"));
            schedule::exponential_ranges(alpha, gamma, a.horizon, a.clamp_delta, a.s0)?
        }
    };
    let mut csv = Vec::new();
    sched
        .write_csv(&mut csv)
        .map_err(|e| Error::io("<schedule>", e))?;
    let csv = String::from_utf8(csv).expect("ascii csv");
    match &a.out {
        Some(path) => {
            emit(None, &head)?;
            emit(Some(path), &csv)?;
        }
        None => emit(None, &(head + &csv))?,
    }
    Ok(())
}

fn replay_cmd(a: ReplayArgs) -> CliResult {
    let (w, trace) = engine::load_archive(&a.archive)?;
    let deviation = engine::replay(&trace, &w)?;
    if deviation > a.tolerance {
        return Err(Failure::Data(Error::Format {
            what: "trace archive",
            detail: format!("replayed states deviate by {deviation:e}"),
        }));
    }
    emit(
        None,
        &format!(
            "ok: {} nodes, {} steps, {} bits, max deviation {deviation:e}\n",
            trace.node_count(),
            trace.steps(),
            trace.bits
        ),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("progquant").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(code(&["simulate", "--bits", "0"]), 2);
        assert_eq!(code(&["simulate", "--codec", "bogus"]), 2);
        assert_eq!(code(&["simulate", "--trials", "0"]), 2);
        assert_eq!(code(&["frobnicate"]), 2);
    }

    #[test]
    fn data_errors_exit_one() {
        assert_eq!(code(&["replay", "/nonexistent/trace.pqtrace"]), 1);
        assert_eq!(
            code(&["schedule", "--nodes", "20", "--radius", "1.0", "--bits", "1", "--source", "exponential"]),
            1
        );
    }
}
