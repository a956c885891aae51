use std::path::PathBuf;

use clap::{Args, Subcommand};
use oodbench_core::refdata::{
    gen_classifier_problem, gen_taxonomy, write_gaussians, ClassifierSpec, GaussianSpec,
    TaxonomyKind, TaxonomySpec,
};

#[derive(Subcommand)]
pub enum FixturesCmd {
    /// WordNet-format toy taxonomy (chain / diamond / star).
    Taxonomy(TaxonomyArgs),
    /// ID and displaced OOD Gaussian clouds as matrix stores.
    Gaussians(GaussiansArgs),
    /// Trained toy classifier with logits and per-layer features.
    Classifier(ClassifierArgs),
}

#[derive(Args)]
pub struct TaxonomyArgs {
    /// chain | diamond | star
    #[arg(long)]
    kind: String,

    #[arg(long, default_value_t = 3)]
    nodes: u32,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct GaussiansArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,

    #[arg(long, default_value_t = 2000)]
    n_train: usize,

    #[arg(long, default_value_t = 500)]
    n_val_id: usize,

    #[arg(long, default_value_t = 500)]
    n_val_ood: usize,

    /// Per-dimension mean of the OOD cluster.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,

    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// Output directory; writes `train/` and `val/` stores.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ClassifierArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,

    #[arg(long, default_value_t = 3)]
    classes: usize,

    #[arg(long, default_value_t = 60)]
    n_per_class: usize,

    #[arg(long, default_value_t = 6.0)]
    separation: f64,

    #[arg(long, default_value_t = 16)]
    hidden: usize,

    /// Output directory; writes `net.json`, `inputs/`, `logits/`, `layers/`.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: FixturesCmd, seed: u64) -> anyhow::Result<()> {
    match cmd {
        FixturesCmd::Taxonomy(args) => taxonomy(args),
        FixturesCmd::Gaussians(args) => gaussians(args, seed),
        FixturesCmd::Classifier(args) => classifier(args, seed),
    }
}

fn taxonomy(args: TaxonomyArgs) -> anyhow::Result<()> {
    let kind = match args.kind.as_str() {
        "chain" => TaxonomyKind::Chain,
        "diamond" => TaxonomyKind::Diamond,
        "star" => TaxonomyKind::Star,
        other => anyhow::bail!("unknown taxonomy kind {other:?} (chain|diamond|star)"),
    };
    let path = gen_taxonomy(
        &TaxonomySpec {
            kind,
            nodes: args.nodes,
        },
        &args.out,
    )?;
    println!("{} nodes -> {}", args.nodes, path.display());
    Ok(())
}

fn gaussians(args: GaussiansArgs, seed: u64) -> anyhow::Result<()> {
    let spec = GaussianSpec {
        seed,
        dim: args.dim,
        n_train: args.n_train,
        n_val_id: args.n_val_id,
        n_val_ood: args.n_val_ood,
        id_mean: 0.0,
        ood_mean: args.separation,
        sigma: args.sigma,
    };
    write_gaussians(&spec, &args.out)?;
    println!(
        "train {} + val {} ({} ID / {} OOD) -> {}",
        args.n_train,
        args.n_val_id + args.n_val_ood,
        args.n_val_id,
        args.n_val_ood,
        args.out.display()
    );
    Ok(())
}

fn classifier(args: ClassifierArgs, seed: u64) -> anyhow::Result<()> {
    let spec = ClassifierSpec {
        seed,
        dim: args.dim,
        classes: args.classes,
        n_per_class: args.n_per_class,
        separation: args.separation,
        hidden: args.hidden,
        ..ClassifierSpec::default()
    };
    let problem = gen_classifier_problem(&spec)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.out.display()))?;
    problem.net.save(&args.out.join("net.json"))?;
    problem.inputs.write_store(&args.out.join("inputs"))?;
    problem.logits.write_store(&args.out.join("logits"))?;
    problem.layers.save(&args.out.join("layers"))?;
    println!(
        "classifier at train accuracy {:.3} -> {}",
        problem.train_accuracy,
        args.out.display()
    );
    Ok(())
}
