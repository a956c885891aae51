use std::path::PathBuf;

use clap::{Args, Subcommand};
use oodbench_core::predgraph::{
    layout_forceatlas2, prune_graph, write_stage_log, LayoutParams, PredictionGraph, PruneConfig,
};

#[derive(Subcommand)]
pub enum GraphCmd {
    /// Build the weighted prediction graph from `gt<TAB>pred` rows.
    Build(BuildArgs),
    /// Apply the staged pruning pipeline.
    Prune(PruneArgs),
    /// ForceAtlas2 layout of a graph.
    Layout(LayoutArgs),
}

#[derive(Args)]
pub struct BuildArgs {
    /// Prediction pairs: `gt_class<TAB>predicted_class` rows, namespaced
    /// like `dataset:class`.
    #[arg(long)]
    predictions: PathBuf,

    /// Output TSV edge list.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct PruneArgs {
    /// Input TSV edge list.
    #[arg(long)]
    graph: PathBuf,

    #[arg(long, default_value_t = 3)]
    min_weight: u64,

    #[arg(long)]
    keep_self_loops: bool,

    #[arg(long)]
    keep_intra_dataset: bool,

    #[arg(long)]
    keep_same_name: bool,

    #[arg(long)]
    keep_isolated: bool,

    /// Output TSV edge list.
    #[arg(long)]
    out: PathBuf,

    /// Stage-by-stage node/edge count log (JSON array).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
pub struct LayoutArgs {
    #[arg(long)]
    graph: PathBuf,

    #[arg(long, default_value_t = 200)]
    iterations: usize,

    #[arg(long, default_value_t = 1.0)]
    gravity: f64,

    #[arg(long, default_value_t = 2.0)]
    scaling: f64,

    #[arg(long)]
    linlog: bool,

    /// Output JSON `{node: [x, y]}`.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: GraphCmd, seed: u64) -> anyhow::Result<()> {
    match cmd {
        GraphCmd::Build(args) => build(args),
        GraphCmd::Prune(args) => prune(args),
        GraphCmd::Layout(args) => layout(args, seed),
    }
}

fn build(args: BuildArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.predictions)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.predictions.display()))?;
    let mut pairs = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match trimmed.split_once('\t') {
            Some((gt, pred)) if !gt.is_empty() && !pred.is_empty() => {
                pairs.push((gt.to_string(), pred.to_string()));
            }
            _ => anyhow::bail!(
                "{}:{}: expected gt<TAB>pred",
                args.predictions.display(),
                no + 1
            ),
        }
    }
    let g = PredictionGraph::build(&pairs);
    g.write_tsv(&args.out)?;
    println!(
        "{} nodes, {} edges ({} predictions) -> {}",
        g.node_count(),
        g.edge_count(),
        g.total_weight(),
        args.out.display()
    );
    Ok(())
}

fn prune(args: PruneArgs) -> anyhow::Result<()> {
    let g = PredictionGraph::read_tsv(&args.graph)?;
    let cfg = PruneConfig {
        drop_self_loops: !args.keep_self_loops,
        drop_intra_dataset: !args.keep_intra_dataset,
        drop_same_name: !args.keep_same_name,
        min_weight: args.min_weight,
        drop_isolated: !args.keep_isolated,
    };
    let (pruned, log) = prune_graph(&g, &cfg);
    pruned.write_tsv(&args.out)?;
    for stage in &log {
        println!(
            "{:<14} {:>6} nodes {:>6} edges",
            stage.stage, stage.nodes, stage.edges
        );
    }
    if let Some(path) = &args.log {
        write_stage_log(&log, path)?;
    }
    println!("-> {}", args.out.display());
    Ok(())
}

fn layout(args: LayoutArgs, seed: u64) -> anyhow::Result<()> {
    let g = PredictionGraph::read_tsv(&args.graph)?;
    let params = LayoutParams {
        gravity: args.gravity,
        scaling: args.scaling,
        lin_log: args.linlog,
    };
    let layout = layout_forceatlas2(&g, args.iterations, seed, &params);
    layout.save(&args.out)?;
    println!(
        "{} nodes, {} iterations, final swing {:.6} -> {}",
        layout.positions.len(),
        layout.iterations,
        layout.total_swing,
        args.out.display()
    );
    Ok(())
}
