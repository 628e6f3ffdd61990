//! `moneysim`: deterministic closed-economy exchange and redistribution
//! simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{
    cmd_batch, cmd_graph, cmd_ofat, cmd_replay, cmd_report, cmd_run, BatchArgs, GraphArgs,
    OfatArgs, ReplayArgs, ReportArgs, RunArgs,
};

#[derive(Parser)]
#[command(name = "moneysim", version, about = "Closed-economy exchange simulator")]
struct Cli {
    /// Worker threads for batches and sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (overrides the scenario's `outputs.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record statistics every N ticks (overrides the scenario).
    #[arg(long)]
    stats_every: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under one seed and write its output files.
    Run {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Run seed (overrides the scenario's `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one scenario under several seeds; writes per-seed outputs plus a
    /// summary table.
    Batch {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Comma-separated seeds (overrides the scenario's `seeds`).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// One-factor-at-a-time sweep over a config field.
    Ofat {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Config field to vary (e.g. initial_money, charity.d_pct).
        #[arg(long)]
        param: String,
        /// Comma-separated values for the field.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Replicated runs per value.
        #[arg(long, default_value_t = 1)]
        replicates: u32,
        /// Base seed for the derived replicate seeds.
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
    },
    /// Compare return periods and terminal variance across batch
    /// directories (inputs are DIR or LABEL=DIR).
    Report {
        inputs: Vec<String>,
        /// Also write report_summary.csv and report_runs.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a manifest and verify the outputs match its digests.
    Replay {
        /// manifest.json from a previous run.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory for the replayed outputs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a graph and emit its adjacency list.
    Graph {
        /// random, small-world or scale-free.
        #[arg(long)]
        kind: String,
        /// Node count.
        #[arg(long)]
        n: usize,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge probability (random).
        #[arg(long)]
        p: Option<f64>,
        /// Ring-lattice degree (small-world, even).
        #[arg(long)]
        k: Option<usize>,
        /// Rewiring probability (small-world).
        #[arg(long)]
        beta: Option<f64>,
        /// Seed-clique size (scale-free).
        #[arg(long)]
        m0: Option<usize>,
        /// Edges per arriving node (scale-free).
        #[arg(long)]
        m: Option<usize>,
        /// Write the adjacency list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        // Ignore the error if a pool already exists (e.g. repeated in-process
        // invocations under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let outcome = match cli.command {
        Command::Run { scenario, seed } => cmd_run(RunArgs {
            scenario: scenario.scenario,
            seed,
            out: scenario.out,
            stats_every: scenario.stats_every,
        }),
        Command::Batch { scenario, seeds } => cmd_batch(BatchArgs {
            scenario: scenario.scenario,
            seeds,
            out: scenario.out,
            stats_every: scenario.stats_every,
        }),
        Command::Ofat {
            scenario,
            param,
            values,
            replicates,
            seed_base,
        } => cmd_ofat(OfatArgs {
            scenario: scenario.scenario,
            parameter: param,
            values,
            replicates,
            seed_base,
            out: scenario.out,
            stats_every: scenario.stats_every,
        }),
        Command::Report { inputs, out } => cmd_report(ReportArgs { inputs, out }),
        Command::Replay { manifest, out } => cmd_replay(ReplayArgs { manifest, out }),
        Command::Graph {
            kind,
            n,
            seed,
            p,
            k,
            beta,
            m0,
            m,
            out,
        } => cmd_graph(GraphArgs {
            kind,
            n,
            seed,
            p,
            k,
            beta,
            m0,
            m,
            out,
        }),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
