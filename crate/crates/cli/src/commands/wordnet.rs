use std::path::PathBuf;

use clap::{Args, Subcommand};
use oodbench_core::wordnet::Pos;

use super::{load_taxonomy, resolve_synsets};

#[derive(Subcommand)]
pub enum WordnetCmd {
    /// Parse data files and print taxonomy statistics.
    Stats(StatsArgs),
    /// Similarity between two synsets or lemmas (max over synset pairs).
    Sim(SimArgs),
}

#[derive(Args)]
pub struct StatsArgs {
    /// WordNet data files (`data.noun` and friends).
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
}

#[derive(Args)]
pub struct SimArgs {
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Synset id (`n00001740`) or noun lemma.
    #[arg(long)]
    a: String,

    #[arg(long)]
    b: String,

    /// path | wup | lch | combined | all
    #[arg(long, default_value = "all")]
    metric: String,
}

pub fn run(cmd: WordnetCmd) -> anyhow::Result<()> {
    match cmd {
        WordnetCmd::Stats(args) => stats(args),
        WordnetCmd::Sim(args) => sim(args),
    }
}

fn stats(args: StatsArgs) -> anyhow::Result<()> {
    let t = load_taxonomy(&args.data)?;
    println!("synsets: {}", t.len());
    for pos in Pos::ALL {
        let d = t.max_depth(pos);
        if d > 0 {
            println!("max depth ({pos}): {d}");
        }
    }
    Ok(())
}

fn sim(args: SimArgs) -> anyhow::Result<()> {
    let t = load_taxonomy(&args.data)?;
    let xs = resolve_synsets(&t, &args.a)?;
    let ys = resolve_synsets(&t, &args.b)?;

    let metrics: Vec<&str> = match args.metric.as_str() {
        "all" => vec!["path", "wup", "lch", "combined"],
        m @ ("path" | "wup" | "lch" | "combined") => vec![m],
        other => anyhow::bail!("unknown metric {other:?} (path|wup|lch|combined|all)"),
    };

    for metric in metrics {
        let mut best = f64::NEG_INFINITY;
        let mut best_pair = (xs[0], ys[0]);
        for &a in &xs {
            for &b in &ys {
                let v = match metric {
                    "path" => t.path_similarity(a, b)?,
                    "wup" => t.wup_similarity(a, b)?,
                    "lch" => t.lch_similarity(a, b)?,
                    _ => t.combined_similarity(a, b)?,
                };
                if v > best {
                    best = v;
                    best_pair = (a, b);
                }
            }
        }
        println!("{metric}: {best:.6} ({} vs {})", best_pair.0, best_pair.1);
    }
    Ok(())
}
