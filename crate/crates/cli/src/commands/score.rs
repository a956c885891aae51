use std::path::PathBuf;

use clap::Args;
use oodbench_core::scorers::{
    perturb_and_score, score_mlv, score_msp, score_ts, RefNet, ScoreMethod, ScorerConfig,
};
use oodbench_core::store::SampleMatrix;

#[derive(Args)]
pub struct ScoreArgs {
    /// msp | ts | mlv | odin | ip_ts_mlv
    #[arg(long)]
    method: String,

    /// Temperature for ts / odin / ip_ts_mlv.
    #[arg(long, default_value_t = 1000.0)]
    temperature: f64,

    /// Perturbation magnitude for odin / ip_ts_mlv.
    #[arg(long, default_value_t = 0.0014)]
    eps: f64,

    /// Logit matrix store (directory or CSV), for msp / ts / mlv.
    #[arg(long)]
    logits: Option<PathBuf>,

    /// Reference network JSON, for odin / ip_ts_mlv.
    #[arg(long)]
    net: Option<PathBuf>,

    /// Input matrix store, for odin / ip_ts_mlv.
    #[arg(long)]
    inputs: Option<PathBuf>,

    /// Output CSV `sample_id,score,z`.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ScoreArgs) -> anyhow::Result<()> {
    let method = ScoreMethod::parse(&args.method)?;
    let scores = match method {
        ScoreMethod::Msp | ScoreMethod::Ts | ScoreMethod::Mlv => {
            let path = args
                .logits
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--logits is required for {}", method.name()))?;
            let m = SampleMatrix::read_auto(path)?;
            match method {
                ScoreMethod::Msp => score_msp(&m)?,
                ScoreMethod::Ts => score_ts(&m, args.temperature)?,
                _ => score_mlv(&m)?,
            }
        }
        ScoreMethod::Odin | ScoreMethod::IpTsMlv => {
            let net_path = args
                .net
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--net is required for {}", method.name()))?;
            let inputs_path = args
                .inputs
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("--inputs is required for {}", method.name()))?;
            let net = RefNet::load(net_path)?;
            let inputs = SampleMatrix::read_auto(inputs_path)?;
            let cfg = ScorerConfig {
                method,
                temperature: args.temperature,
                epsilon: args.eps,
            };
            perturb_and_score(&net, &inputs, &cfg)?
        }
    };
    scores.write_csv(&args.out)?;
    println!(
        "{}: {} scores -> {}",
        method.name(),
        scores.len(),
        args.out.display()
    );
    Ok(())
}
