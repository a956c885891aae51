//! Synthetic fixtures: toy taxonomies in WordNet text format, Gaussian
//! feature clouds in the matrix-store format, and a small trainable
//! classification problem with per-layer feature export. Every generator is
//! a pure function of its spec, so outputs are byte-identical across runs.

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::scorers::{softmax, RefNet};
use crate::store::{atomic_write, FeatureArchive, Matrix, SampleMatrix};

/// Toy taxonomy shapes used across the wordnet tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxonomyKind {
    /// `node_k -> ... -> node_1` single path.
    Chain,
    /// Two length-3 paths sharing top and bottom.
    Diamond,
    /// One root with `nodes - 1` leaves.
    Star,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TaxonomySpec {
    pub kind: TaxonomyKind,
    pub nodes: u32,
}

/// Emit a `data.noun` file encoding the requested shape; node `i` carries
/// lemma `a`, `b`, ... and offset `i`. Round-trips through the parser.
pub fn gen_taxonomy(spec: &TaxonomySpec, out_dir: &Path) -> Result<PathBuf> {
    let parents: Vec<Vec<u32>> = match spec.kind {
        TaxonomyKind::Chain => {
            if spec.nodes < 1 {
                return Err(Error::Fixture("chain needs at least 1 node".into()));
            }
            (1..=spec.nodes)
                .map(|i| if i == 1 { vec![] } else { vec![i - 1] })
                .collect()
        }
        TaxonomyKind::Diamond => {
            if spec.nodes != 4 {
                return Err(Error::Fixture("diamond is a 4-node shape".into()));
            }
            vec![vec![], vec![1], vec![1], vec![2, 3]]
        }
        TaxonomyKind::Star => {
            if spec.nodes < 2 {
                return Err(Error::Fixture(
                    "star needs a root and at least one leaf".into(),
                ));
            }
            (1..=spec.nodes)
                .map(|i| if i == 1 { vec![] } else { vec![1] })
                .collect()
        }
    };

    let mut text = String::new();
    for (idx, ps) in parents.iter().enumerate() {
        let offset = idx as u32 + 1;
        text.push_str(&format!(
            "{offset:08} 03 n 01 {} 0 {:03}",
            lemma_for(idx),
            ps.len()
        ));
        for p in ps {
            text.push_str(&format!(" @ {p:08} n 0000"));
        }
        text.push_str(&format!(" | synthetic node {}\n", lemma_for(idx)));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("data.noun");
    atomic_write(&path, text.as_bytes())?;
    Ok(path)
}

fn lemma_for(idx: usize) -> String {
    if idx < 26 {
        char::from(b'a' + idx as u8).to_string()
    } else {
        format!("n{idx}")
    }
}

/// Two seeded Gaussian clouds: an ID cluster and a displaced OOD cluster.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub seed: u64,
    pub dim: usize,
    pub n_train: usize,
    pub n_val_id: usize,
    pub n_val_ood: usize,
    /// Per-dimension mean of the ID cluster.
    pub id_mean: f64,
    /// Per-dimension mean of the OOD cluster.
    pub ood_mean: f64,
    pub sigma: f64,
}

/// `(train, val)` feature matrices: train is pure ID (z = 0), val carries
/// both clusters with ground-truth z.
pub fn gen_gaussians(spec: &GaussianSpec) -> Result<(SampleMatrix, SampleMatrix)> {
    if spec.dim == 0 || spec.sigma <= 0.0 {
        return Err(Error::Fixture(
            "gaussian spec needs dim >= 1 and sigma > 0".into(),
        ));
    }
    if spec.n_train == 0 || spec.n_val_id == 0 || spec.n_val_ood == 0 {
        return Err(Error::Fixture("gaussian spec needs non-empty splits".into()));
    }

    let sample_cloud = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, mean: f64, sigma: f64| {
        let normal = Normal::new(mean, sigma).expect("finite parameters");
        let data: Vec<f64> = (0..n * spec.dim).map(|_| normal.sample(rng)).collect();
        Matrix::from_vec(n, spec.dim, data)
    };

    let mut rng = derive_rng(spec.seed, "fixtures/gaussians/train");
    let train_values = sample_cloud(&mut rng, spec.n_train, spec.id_mean, spec.sigma)?;
    let train = SampleMatrix::new(
        "features",
        train_values,
        (0..spec.n_train).map(|i| format!("train-{i:06}")).collect(),
        vec![0; spec.n_train],
    )?;

    let mut rng = derive_rng(spec.seed, "fixtures/gaussians/val");
    let id_values = sample_cloud(&mut rng, spec.n_val_id, spec.id_mean, spec.sigma)?;
    let ood_values = sample_cloud(&mut rng, spec.n_val_ood, spec.ood_mean, spec.sigma)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n_val_id + spec.n_val_ood);
    rows.extend(id_values.iter_rows().map(<[f64]>::to_vec));
    rows.extend(ood_values.iter_rows().map(<[f64]>::to_vec));
    let val = SampleMatrix::new(
        "features",
        Matrix::from_rows(rows)?,
        (0..spec.n_val_id + spec.n_val_ood)
            .map(|i| format!("val-{i:06}"))
            .collect(),
        (0..spec.n_val_id + spec.n_val_ood)
            .map(|i| u8::from(i >= spec.n_val_id))
            .collect(),
    )?;

    Ok((train, val))
}

/// Write the pair as `train/` and `val/` stores under `out_dir`.
pub fn write_gaussians(spec: &GaussianSpec, out_dir: &Path) -> Result<()> {
    let (train, val) = gen_gaussians(spec)?;
    train.write_store(&out_dir.join("train"))?;
    val.write_store(&out_dir.join("val"))
}

/// Seeded multi-class Gaussian problem plus a reference network trained on
/// it to a required accuracy.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub seed: u64,
    pub dim: usize,
    pub classes: usize,
    pub n_per_class: usize,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    pub sigma: f64,
    pub hidden: usize,
    pub max_iters: usize,
    pub target_accuracy: f64,
    pub learning_rate: f64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            seed: 0,
            dim: 2,
            classes: 3,
            n_per_class: 60,
            separation: 6.0,
            sigma: 1.0,
            hidden: 16,
            max_iters: 800,
            target_accuracy: 0.95,
            learning_rate: 0.5,
        }
    }
}

/// A trained desk-scale classifier with its data, logits, and per-layer
/// activations ("dense1" = hidden tanh, "dense2" = logits).
#[derive(Clone, Debug)]
pub struct ClassifierProblem {
    pub net: RefNet,
    pub inputs: SampleMatrix,
    pub labels: Vec<u32>,
    pub logits: SampleMatrix,
    pub layers: FeatureArchive,
    pub train_accuracy: f64,
}

pub const CLASSIFIER_LAYER_KEYS: [&str; 2] = ["dense1", "dense2"];

pub fn gen_classifier_problem(spec: &ClassifierSpec) -> Result<ClassifierProblem> {
    if spec.dim < 2 || spec.classes < 2 {
        return Err(Error::Fixture(
            "classifier spec needs dim >= 2 and classes >= 2".into(),
        ));
    }
    if spec.n_per_class == 0 {
        return Err(Error::Fixture("classifier spec needs samples per class".into()));
    }

    // Class means on a circle in the first two dimensions.
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / spec.classes as f64;
            let mut m = vec![0.0; spec.dim];
            m[0] = spec.separation * angle.cos();
            m[1] = spec.separation * angle.sin();
            m
        })
        .collect();

    let mut rng = derive_rng(spec.seed, "fixtures/classifier/data");
    let normal = Normal::new(0.0, spec.sigma).expect("finite parameters");
    let n = spec.classes * spec.n_per_class;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (k, mean) in means.iter().enumerate() {
        for _ in 0..spec.n_per_class {
            let row: Vec<f64> = mean.iter().map(|m| m + normal.sample(&mut rng)).collect();
            rows.push(row);
            labels.push(k as u32);
        }
    }
    let values = Matrix::from_rows(rows)?;

    let mut net_rng = derive_rng(spec.seed, "fixtures/classifier/init");
    let mut net = RefNet::random(&mut net_rng, spec.dim, spec.hidden, spec.classes);
    let reached = train_cross_entropy(&mut net, &values, &labels, spec)?;
    if reached < spec.target_accuracy {
        return Err(Error::Fixture(format!(
            "classifier fixture reached accuracy {reached:.3} < target {:.3} within {} iterations",
            spec.target_accuracy, spec.max_iters
        )));
    }
    let accuracy = measure_accuracy(&net, &values, &labels)?;

    let ids: Vec<String> = (0..n).map(|i| format!("clf-{i:06}")).collect();
    let z = vec![0u8; n];
    let inputs = SampleMatrix::new("inputs", values.clone(), ids.clone(), z.clone())?
        .with_labels(labels.clone())?;

    let mut hidden_rows = Vec::with_capacity(n);
    let mut logit_rows = Vec::with_capacity(n);
    for row in values.iter_rows() {
        hidden_rows.push(net.hidden(row)?);
        logit_rows.push(net.forward(row)?);
    }
    let logits = SampleMatrix::new(
        "logits",
        Matrix::from_rows(logit_rows.clone())?,
        ids.clone(),
        z.clone(),
    )?
    .with_labels(labels.clone())?;

    let mut layers = FeatureArchive::new();
    layers.push(SampleMatrix::new(
        CLASSIFIER_LAYER_KEYS[0],
        Matrix::from_rows(hidden_rows)?,
        ids.clone(),
        z.clone(),
    )?)?;
    layers.push(SampleMatrix::new(
        CLASSIFIER_LAYER_KEYS[1],
        Matrix::from_rows(logit_rows)?,
        ids,
        z,
    )?)?;

    Ok(ClassifierProblem {
        net,
        inputs,
        labels,
        logits,
        layers,
        train_accuracy: accuracy,
    })
}

/// Full-batch gradient descent on the cross-entropy loss; stops early once
/// the accuracy target is met.
fn train_cross_entropy(
    net: &mut RefNet,
    x: &Matrix,
    labels: &[u32],
    spec: &ClassifierSpec,
) -> Result<f64> {
    let n = x.rows();
    let inv_n = 1.0 / n as f64;
    let mut accuracy = 0.0;
    for _ in 0..spec.max_iters {
        accuracy = measure_accuracy(net, x, labels)?;
        if accuracy >= spec.target_accuracy {
            return Ok(accuracy);
        }

        let mut gw1 = Matrix::zeros(net.hidden_dim, net.input_dim);
        let mut gb1 = vec![0.0; net.hidden_dim];
        let mut gw2 = Matrix::zeros(net.classes, net.hidden_dim);
        let mut gb2 = vec![0.0; net.classes];

        for (row, &label) in x.iter_rows().zip(labels) {
            let h = net.hidden(row)?;
            let logits = net.forward(row)?;
            let p = softmax(&logits, 1.0)?;
            // dL/dl = (p - onehot(label)) / n.
            let dl: Vec<f64> = (0..net.classes)
                .map(|j| (p[j] - f64::from(u8::from(j == label as usize))) * inv_n)
                .collect();
            for j in 0..net.classes {
                gb2[j] += dl[j];
                for (g, hk) in gw2.row_mut(j).iter_mut().zip(&h) {
                    *g += dl[j] * hk;
                }
            }
            let dh = net.w2.matvec_t(&dl);
            for k in 0..net.hidden_dim {
                let da = dh[k] * (1.0 - h[k] * h[k]);
                gb1[k] += da;
                for (g, xj) in gw1.row_mut(k).iter_mut().zip(row) {
                    *g += da * xj;
                }
            }
        }

        let lr = spec.learning_rate;
        for k in 0..net.hidden_dim {
            for (w, g) in net.w1.row_mut(k).iter_mut().zip(gw1.row(k)) {
                *w -= lr * g;
            }
            net.b1[k] -= lr * gb1[k];
        }
        for j in 0..net.classes {
            for (w, g) in net.w2.row_mut(j).iter_mut().zip(gw2.row(j)) {
                *w -= lr * g;
            }
            net.b2[j] -= lr * gb2[j];
        }
    }
    Ok(accuracy)
}

fn measure_accuracy(net: &RefNet, x: &Matrix, labels: &[u32]) -> Result<f64> {
    let mut correct = 0usize;
    for (row, &label) in x.iter_rows().zip(labels) {
        let logits = net.forward(row)?;
        let pred = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        if pred == label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::oodl::{train_detector, OodlConfig};
    use crate::wordnet::parse_wordnet;

    #[test]
    fn chain_fixture_round_trips_through_the_parser() {
        let dir = tempfile::tempdir().unwrap();
        let path = gen_taxonomy(
            &TaxonomySpec {
                kind: TaxonomyKind::Chain,
                nodes: 3,
            },
            dir.path(),
        )
        .unwrap();
        let t = parse_wordnet(&[&path]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.max_depth(crate::wordnet::Pos::Noun), 3);
    }

    #[test]
    fn diamond_fixture_matches_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = gen_taxonomy(
            &TaxonomySpec {
                kind: TaxonomyKind::Diamond,
                nodes: 4,
            },
            dir.path(),
        )
        .unwrap();
        let t = parse_wordnet(&[&path]).unwrap();
        use crate::wordnet::{Pos, SynsetId};
        let d = SynsetId::new(Pos::Noun, 4);
        assert_eq!(t.depth(d).unwrap(), 3);
        assert_eq!(t.synset(d).unwrap().hypernyms.len(), 2);
    }

    #[test]
    fn taxonomy_files_are_byte_identical_across_runs() {
        let spec = TaxonomySpec {
            kind: TaxonomyKind::Star,
            nodes: 5,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let p1 = gen_taxonomy(&spec, d1.path()).unwrap();
        let p2 = gen_taxonomy(&spec, d2.path()).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn invalid_taxonomy_specs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for spec in [
            TaxonomySpec {
                kind: TaxonomyKind::Diamond,
                nodes: 5,
            },
            TaxonomySpec {
                kind: TaxonomyKind::Star,
                nodes: 1,
            },
            TaxonomySpec {
                kind: TaxonomyKind::Chain,
                nodes: 0,
            },
        ] {
            assert!(gen_taxonomy(&spec, dir.path()).is_err());
        }
    }

    #[test]
    fn indistinguishable_clusters_score_near_chance() {
        let spec = GaussianSpec {
            seed: 31,
            dim: 2,
            n_train: 300,
            n_val_id: 150,
            n_val_ood: 150,
            id_mean: 0.0,
            ood_mean: 0.0,
            sigma: 1.0,
        };
        let (train, val) = gen_gaussians(&spec).unwrap();
        let cfg = OodlConfig {
            epochs: 2,
            batch_size: 128,
            rff_dim: 64,
            nystroem_landmarks: 32,
            eta0: 0.01,
        };
        let outcome = train_detector(&train, &val, &cfg, 1).unwrap();
        let scores = outcome.model.score(&val).unwrap();
        let auroc = metrics::auroc(&scores).unwrap();
        assert!((auroc - 0.5).abs() < 0.12, "auroc {auroc} far from chance");
    }

    #[test]
    fn gaussians_are_seed_deterministic_on_disk() {
        let spec = GaussianSpec {
            seed: 9,
            dim: 3,
            n_train: 50,
            n_val_id: 20,
            n_val_ood: 20,
            id_mean: 0.0,
            ood_mean: 4.0,
            sigma: 1.0,
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_gaussians(&spec, d1.path()).unwrap();
        write_gaussians(&spec, d2.path()).unwrap();
        for sub in ["train", "val"] {
            for file in ["header.json", "values.bin", "ids.txt", "z.txt"] {
                let a = std::fs::read(d1.path().join(sub).join(file)).unwrap();
                let b = std::fs::read(d2.path().join(sub).join(file)).unwrap();
                assert_eq!(a, b, "{sub}/{file} differs");
            }
        }
    }

    #[test]
    fn classifier_problem_trains_and_exports_layers() {
        let spec = ClassifierSpec {
            seed: 2,
            classes: 2,
            n_per_class: 50,
            ..ClassifierSpec::default()
        };
        let problem = gen_classifier_problem(&spec).unwrap();
        assert!(problem.train_accuracy >= 0.99, "{}", problem.train_accuracy);
        assert_eq!(problem.logits.rows(), problem.inputs.rows());
        let keys: Vec<&str> = problem.layers.keys().collect();
        assert_eq!(keys, CLASSIFIER_LAYER_KEYS);
        assert_eq!(problem.layers.get("dense1").unwrap().cols(), spec.hidden);
        assert_eq!(problem.layers.get("dense2").unwrap().cols(), spec.classes);
    }

    #[test]
    fn unreachable_accuracy_is_a_fixture_error() {
        let spec = ClassifierSpec {
            seed: 3,
            separation: 0.0, // classes coincide
            max_iters: 30,
            ..ClassifierSpec::default()
        };
        assert!(matches!(
            gen_classifier_problem(&spec),
            Err(Error::Fixture(_))
        ));
    }
}
