use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use oodbench_core::benchforge::{
    assign_ood_labels, build_distance_table, build_manifest, load_class_mapping, threshold_preset,
    ClassMapping, ClassRef, ManifestInputs, ManifestSpec, OodnessLevel, Recipe,
    SemanticDistanceTable,
};
use oodbench_core::store::atomic_write;

use super::{load_taxonomy, read_class_list};

#[derive(Subcommand)]
pub enum BenchCmd {
    /// Map class labels to synsets (auto lookup + manual overrides).
    Map(MapArgs),
    /// Semantic distance of every source-dataset class to the ID classes.
    Distances(DistancesArgs),
    /// Binary ID/OOD labels from a distance table and threshold.
    Assign(AssignArgs),
    /// Build a benchmark manifest.
    Build(BuildArgs),
}

#[derive(Args)]
pub struct MapArgs {
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Class list: `dataset<TAB>class` rows.
    #[arg(long)]
    classes: PathBuf,

    /// Manual override table: `dataset<TAB>class<TAB>synset_ids[<TAB>level]`.
    #[arg(long)]
    overrides: Option<PathBuf>,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct DistancesArgs {
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    /// Mapping table produced by `bench map`.
    #[arg(long)]
    mapping: PathBuf,

    /// Dataset whose classes get distance rows.
    #[arg(long)]
    source: String,

    /// Dataset whose classes form the ID reference set.
    #[arg(long)]
    id_dataset: String,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct AssignArgs {
    /// Distance table from `bench distances`.
    #[arg(long)]
    table: PathBuf,

    /// Distance threshold in [0, 1]; ID iff distance <= tau.
    #[arg(long, conflicts_with = "preset")]
    tau: Option<f64>,

    /// Named threshold: t40 | t45 | t50.
    #[arg(long)]
    preset: Option<String>,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct BuildArgs {
    /// baseline | inter_dataset | t40 | t45 | t50 | wordnet | facets_t1 | facets_t2
    #[arg(long)]
    recipe: String,

    /// Distance threshold for `--recipe wordnet`.
    #[arg(long)]
    tau: Option<f64>,

    /// Sample inventory: `dataset<TAB>class<TAB>sample_id` rows.
    #[arg(long)]
    samples: PathBuf,

    /// OODness levels (`dataset<TAB>class<TAB>level`), for facets recipes.
    #[arg(long)]
    levels: Option<PathBuf>,

    /// Distance table, for wordnet recipes.
    #[arg(long)]
    table: Option<PathBuf>,

    #[arg(long)]
    id_dataset: String,

    #[arg(long)]
    ood_dataset: String,

    /// Collapsed class name for the baseline recipe.
    #[arg(long, default_value = "number")]
    collapsed_class: String,

    #[arg(long, default_value_t = 50)]
    val_quota: usize,

    #[arg(long, default_value_t = 50)]
    test_quota: usize,

    /// Emit sample id lists, not just counts.
    #[arg(long)]
    include_ids: bool,

    /// Take what is available instead of failing on short classes.
    #[arg(long)]
    cap: bool,

    /// Manifest name; defaults to the recipe name.
    #[arg(long)]
    name: Option<String>,

    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: BenchCmd, seed: u64) -> anyhow::Result<()> {
    match cmd {
        BenchCmd::Map(args) => map(args),
        BenchCmd::Distances(args) => distances(args),
        BenchCmd::Assign(args) => assign(args),
        BenchCmd::Build(args) => build(args, seed),
    }
}

fn map(args: MapArgs) -> anyhow::Result<()> {
    let taxonomy = load_taxonomy(&args.data)?;
    let rows = read_class_list(&args.classes)?;
    let mut grouped: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (dataset, class) in rows {
        grouped.entry(dataset).or_default().push(class);
    }
    let classes: Vec<(String, Vec<String>)> = grouped.into_iter().collect();
    let overrides = match &args.overrides {
        Some(path) => Some(ClassMapping::read_tsv(path)?),
        None => None,
    };
    let mapping = load_class_mapping(&classes, &taxonomy, overrides.as_ref())?;
    mapping.write_tsv(&args.out)?;
    println!("mapped {} classes -> {}", mapping.len(), args.out.display());
    Ok(())
}

fn distances(args: DistancesArgs) -> anyhow::Result<()> {
    let taxonomy = load_taxonomy(&args.data)?;
    let mapping = ClassMapping::read_tsv(&args.mapping)?;
    let id_classes = mapping.classes_of(&args.id_dataset);
    let table = build_distance_table(&mapping, &taxonomy, &args.source, &id_classes)?;
    table.save(&args.out)?;
    println!(
        "{} distance rows for {} -> {}",
        table.rows.len(),
        args.source,
        args.out.display()
    );
    Ok(())
}

fn assign(args: AssignArgs) -> anyhow::Result<()> {
    let tau = match (&args.tau, &args.preset) {
        (Some(tau), None) => *tau,
        (None, Some(name)) => threshold_preset(name)
            .ok_or_else(|| anyhow::anyhow!("unknown preset {name:?} (t40|t45|t50)"))?,
        _ => anyhow::bail!("exactly one of --tau or --preset is required"),
    };
    let table = SemanticDistanceTable::load(&args.table)?;
    let labels = assign_ood_labels(&table, tau)?;
    let mut out = String::new();
    for (class, z) in &labels {
        out.push_str(&format!("{}\t{}\t{}\n", class.dataset, class.class, z));
    }
    atomic_write(&args.out, out.as_bytes())?;
    let id = labels.values().filter(|&&z| z == 0).count();
    println!(
        "tau {tau}: {id} ID / {} OOD classes -> {}",
        labels.len() - id,
        args.out.display()
    );
    Ok(())
}

fn parse_recipe(args: &BuildArgs) -> anyhow::Result<Recipe> {
    Ok(match args.recipe.as_str() {
        "baseline" => Recipe::Baseline {
            collapsed_class: args.collapsed_class.clone(),
        },
        "inter_dataset" => Recipe::InterDataset,
        "facets_t1" => Recipe::FacetsT1,
        "facets_t2" => Recipe::FacetsT2,
        "wordnet" => {
            let tau = args
                .tau
                .ok_or_else(|| anyhow::anyhow!("--recipe wordnet requires --tau"))?;
            Recipe::WordnetThreshold { tau }
        }
        preset @ ("t40" | "t45" | "t50") => Recipe::WordnetThreshold {
            tau: threshold_preset(preset).expect("known preset"),
        },
        other => anyhow::bail!(
            "unknown recipe {other:?} (baseline|inter_dataset|t40|t45|t50|wordnet|facets_t1|facets_t2)"
        ),
    })
}

fn read_samples(path: &PathBuf) -> anyhow::Result<BTreeMap<ClassRef, Vec<String>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut out: BTreeMap<ClassRef, Vec<String>> = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            anyhow::bail!(
                "{}:{}: expected dataset<TAB>class<TAB>sample_id",
                path.display(),
                no + 1
            );
        }
        out.entry(ClassRef::new(fields[0], fields[1]))
            .or_default()
            .push(fields[2].to_string());
    }
    Ok(out)
}

fn read_levels(path: &PathBuf) -> anyhow::Result<BTreeMap<ClassRef, OodnessLevel>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            anyhow::bail!(
                "{}:{}: expected dataset<TAB>class<TAB>level",
                path.display(),
                no + 1
            );
        }
        let level: u8 = fields[2]
            .parse()
            .map_err(|_| anyhow::anyhow!("{}:{}: bad level", path.display(), no + 1))?;
        out.insert(ClassRef::new(fields[0], fields[1]), OodnessLevel::new(level)?);
    }
    Ok(out)
}

fn build(args: BuildArgs, seed: u64) -> anyhow::Result<()> {
    let recipe = parse_recipe(&args)?;
    let samples = read_samples(&args.samples)?;
    let levels = match &args.levels {
        Some(path) => Some(read_levels(path)?),
        None => None,
    };
    let table = match &args.table {
        Some(path) => Some(SemanticDistanceTable::load(path)?),
        None => None,
    };

    let spec = ManifestSpec {
        name: args.name.clone().unwrap_or_else(|| recipe.name()),
        recipe,
        seed,
        id_dataset: args.id_dataset.clone(),
        ood_dataset: args.ood_dataset.clone(),
        val_quota: args.val_quota,
        test_quota: args.test_quota,
        include_sample_ids: args.include_ids,
        cap_to_available: args.cap,
    };
    let inputs = ManifestInputs {
        samples: &samples,
        levels: levels.as_ref(),
        distances: table.as_ref(),
    };
    let manifest = build_manifest(&spec, &inputs)?;
    manifest.write_jsonl(&args.out)?;

    use oodbench_core::benchforge::Split;
    let (id_val, ood_val) = manifest.split_totals(Split::Val);
    let (id_test, ood_test) = manifest.split_totals(Split::Test);
    println!(
        "{}: val {id_val} ID / {ood_val} OOD, test {id_test} ID / {ood_test} OOD -> {}",
        spec.name,
        args.out.display()
    );
    Ok(())
}
