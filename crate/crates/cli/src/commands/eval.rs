use std::path::PathBuf;

use clap::Args;
use oodbench_core::metrics::{evaluate_at, EvalRecord};
use oodbench_core::scorers::ScoreVector;

#[derive(Args)]
pub struct EvalArgs {
    /// Score CSV `sample_id,score,z`.
    #[arg(long)]
    scores: PathBuf,

    /// Method label for the report row; defaults to the score file stem.
    #[arg(long)]
    method: Option<String>,

    #[arg(long, default_value = "default")]
    dataset: String,

    #[arg(long, default_value_t = 0.95)]
    target_tpr: f64,

    /// Output report JSON.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let scores = ScoreVector::read_csv(&args.scores)?;
    let report = evaluate_at(&scores, args.target_tpr)?;
    let method = args.method.clone().unwrap_or_else(|| {
        args.scores
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scores".into())
    });
    let record = EvalRecord::from_report(method, &args.dataset, &report);
    record.save(&args.out)?;
    println!(
        "{}/{}: auroc {:.4} fpr@{:.0}%tpr {:.4} det_err {:.4} ({} ID / {} OOD) -> {}",
        record.dataset,
        record.method,
        record.auroc,
        args.target_tpr * 100.0,
        record.fpr95,
        record.det_err,
        record.n_id,
        record.n_ood,
        args.out.display()
    );
    Ok(())
}
