//! `fnnsom`: train locally interacting self-organizing maps, run parameter
//! sweeps, benchmark scaling and plot results.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration or input contents,
//! 4 file I/O, 5 runtime failure.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fnnsom", version, about = "Locally interacting self-organizing maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Directory for output files (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Fnnsom,
    Nnsom,
    Classical,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// square, clusters2d, spherical_shell, dispersion3d or point_cloud.
    #[arg(long, default_value = "square")]
    dataset: String,
    /// Point-cloud CSV file; implies --dataset point_cloud.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "fnnsom")]
    variant: Variant,
    /// Number of map units; must be a perfect square.
    #[arg(long)]
    size: usize,
    /// Feedback sensitivity c_q (fnnsom, default 0.15).
    #[arg(long)]
    cq: Option<f64>,
    /// Neighbor learning rate l_zeta (nnsom, default 0.1).
    #[arg(long)]
    lzeta: Option<f64>,
    /// ric (random in the data bounding box) or sic (all units at the origin).
    #[arg(long, default_value = "ric")]
    init: String,
    #[arg(long, default_value_t = 3000)]
    iters: u64,
    /// Samples per iteration, as a multiple of the unit count.
    #[arg(long, default_value_t = 10)]
    factor: u64,
    /// A_t is recorded every this many iterations.
    #[arg(long, default_value_t = 50)]
    record_every: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML sweep configuration.
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated unit counts (perfect squares).
    #[arg(long, value_delimiter = ',', default_value = "100,400,900,1600")]
    sizes: Vec<usize>,
    /// Samples per size; the same for every size.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Timed runs per size; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    runs: u32,
    #[arg(long, default_value_t = 0.15)]
    cq: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Results CSV written by `train` or `sweep`.
    results: PathBuf,
    /// Trace JSON; draws the mesh of one trial.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Index of the trace record to draw.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one map and write its result row, A_t trace and mesh drawing.
    Train(TrainArgs),
    /// Run a parameter sweep from a TOML file and summarize each cell.
    Sweep(SweepArgs),
    /// Time training on a fixed sample budget across map sizes and fit a line.
    Bench(BenchArgs),
    /// Draw A_t against the swept parameter, and optionally a map mesh.
    Plot(PlotArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bench(a) => commands::bench(a),
        Command::Plot(a) => commands::plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fnnsom: {e}");
            e.exit_code()
        }
    }
}
