//! `oodbench`: build semantic OOD benchmarks, score matrices, and evaluate.
//!
//! Exit codes: 0 success, 1 user error (bad flags or inputs), 2 internal
//! invariant violation.

mod commands;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "oodbench",
    version,
    about = "Semantic-similarity OOD benchmark toolkit"
)]
struct Cli {
    /// Global seed for every randomized operation; the OODBENCH_SEED
    /// environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse WordNet data files and query similarity metrics.
    #[command(subcommand)]
    Wordnet(commands::wordnet::WordnetCmd),
    /// Class mapping, distance tables, ID/OOD assignment, manifests.
    #[command(subcommand)]
    Bench(commands::bench::BenchCmd),
    /// Confidence-based scoring of logit matrices.
    Score(commands::score::ScoreArgs),
    /// One-class detector training, scoring, and layer selection.
    #[command(subcommand)]
    Oodl(commands::oodl::OodlCmd),
    /// Compute AUROC, FPR@95%TPR, and detection error for a score file.
    Eval(commands::eval::EvalArgs),
    /// Build, prune, and lay out misclassification graphs.
    #[command(subcommand)]
    Graph(commands::graph::GraphCmd),
    /// Generate synthetic fixtures in the external formats.
    #[command(subcommand)]
    Fixtures(commands::fixtures::FixturesCmd),
    /// Render evaluation reports as a results table.
    Report(commands::report_cmd::ReportArgs),
}

fn resolve_seed(flag: u64) -> anyhow::Result<u64> {
    match std::env::var("OODBENCH_SEED") {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| anyhow::anyhow!("OODBENCH_SEED must be an integer, got {raw:?}")),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Wordnet(cmd) => commands::wordnet::run(cmd),
        Command::Bench(cmd) => commands::bench::run(cmd, seed),
        Command::Score(args) => commands::score::run(args),
        Command::Oodl(cmd) => commands::oodl::run(cmd, seed),
        Command::Eval(args) => commands::eval::run(args),
        Command::Graph(cmd) => commands::graph::run(cmd, seed),
        Command::Fixtures(cmd) => commands::fixtures::run(cmd, seed),
        Command::Report(args) => commands::report_cmd::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders its own usage/help text; help requests are not
            // errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
        Err(_) => {
            eprintln!("internal error: invariant violated");
            std::process::exit(2);
        }
    }
}
