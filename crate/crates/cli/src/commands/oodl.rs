use std::path::PathBuf;

use clap::{Args, Subcommand};
use oodbench_core::oodl::{select_layer, train_detector, OodlConfig, OodlModel};
use oodbench_core::store::{FeatureArchive, SampleMatrix};

#[derive(Subcommand)]
pub enum OodlCmd {
    /// Train the detector grid on ID features and pick by validation AUROC.
    Train(TrainArgs),
    /// Score a feature matrix with a trained model.
    Score(ScoreArgs),
    /// Train one detector per archive layer and pick the best layer.
    SelectLayer(SelectLayerArgs),
}

#[derive(Args)]
pub struct CommonConfig {
    #[arg(long, default_value_t = 5)]
    epochs: usize,

    #[arg(long, default_value_t = 256)]
    batch_size: usize,

    #[arg(long, default_value_t = 256)]
    rff_dim: usize,

    #[arg(long, default_value_t = 64)]
    landmarks: usize,

    #[arg(long, default_value_t = 0.01)]
    eta0: f64,
}

impl CommonConfig {
    fn to_config(&self) -> OodlConfig {
        OodlConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            rff_dim: self.rff_dim,
            nystroem_landmarks: self.landmarks,
            eta0: self.eta0,
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training feature store (ID only).
    #[arg(long)]
    features: PathBuf,

    /// Validation feature store with both ID and OOD rows.
    #[arg(long)]
    val: PathBuf,

    #[command(flatten)]
    config: CommonConfig,

    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    features: PathBuf,

    /// Output CSV `sample_id,score,z`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct SelectLayerArgs {
    /// Directory of per-layer training stores.
    #[arg(long)]
    archive: PathBuf,

    /// Directory of per-layer validation stores.
    #[arg(long)]
    val_archive: PathBuf,

    #[command(flatten)]
    config: CommonConfig,

    /// Optionally save the winning layer's model.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(cmd: OodlCmd, seed: u64) -> anyhow::Result<()> {
    match cmd {
        OodlCmd::Train(args) => train(args, seed),
        OodlCmd::Score(args) => score(args),
        OodlCmd::SelectLayer(args) => select(args, seed),
    }
}

fn train(args: TrainArgs, seed: u64) -> anyhow::Result<()> {
    let train = SampleMatrix::read_auto(&args.features)?;
    let val = SampleMatrix::read_auto(&args.val)?;
    let outcome = train_detector(&train, &val, &args.config.to_config(), seed)?;
    for c in &outcome.candidates {
        println!(
            "nu {:<5} kernel {:<8} averaged {:<5} auroc {:.4}",
            c.nu,
            c.kernel.name(),
            c.averaged,
            c.auroc
        );
    }
    println!(
        "selected: nu {} kernel {} averaged {} (auroc {:.4}) -> {}",
        outcome.model.svm.nu,
        outcome.model.kernel.kind().name(),
        outcome.model.svm.averaged,
        outcome.model.validation_auroc,
        args.out.display()
    );
    outcome.model.save(&args.out)?;
    Ok(())
}

fn score(args: ScoreArgs) -> anyhow::Result<()> {
    let model = OodlModel::load(&args.model)?;
    let features = SampleMatrix::read_auto(&args.features)?;
    let scores = model.score(&features)?;
    scores.write_csv(&args.out)?;
    println!("{} scores -> {}", scores.len(), args.out.display());
    Ok(())
}

fn select(args: SelectLayerArgs, seed: u64) -> anyhow::Result<()> {
    let train_archive = FeatureArchive::load(&args.archive)?;
    let val_archive = FeatureArchive::load(&args.val_archive)?;
    let selection = select_layer(&train_archive, &val_archive, &args.config.to_config(), seed)?;
    for (layer, auroc) in &selection.per_layer {
        println!("layer {layer:<12} auroc {auroc:.4}");
    }
    println!("selected: {} (auroc {:.4})", selection.layer, selection.auroc);
    if let Some(out) = &args.out {
        selection.model.save(out)?;
        println!("model -> {}", out.display());
    }
    Ok(())
}
