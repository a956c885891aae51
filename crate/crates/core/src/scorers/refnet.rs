//! Two-layer dense reference network with analytic input gradients, used to
//! exercise the perturbation-based scorers at desk scale.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{Matrix, SampleMatrix};

use super::{softmax, ScoreMethod, ScoreVector, ScorerConfig};

/// `logits = W2 tanh(W1 x + b1) + b2`. Forward is deterministic; tanh keeps
/// the input gradient smooth for finite-difference checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefNet {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl RefNet {
    pub fn new(w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Result<Self> {
        let (hidden_dim, input_dim) = (w1.rows(), w1.cols());
        let (classes, w2_cols) = (w2.rows(), w2.cols());
        if w2_cols != hidden_dim || b1.len() != hidden_dim || b2.len() != classes {
            return Err(Error::Shape("inconsistent layer dimensions".into()));
        }
        if !w1.is_finite()
            || !w2.is_finite()
            || b1.iter().chain(&b2).any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(RefNet {
            input_dim,
            hidden_dim,
            classes,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// Random parameters scaled by 1/sqrt(fan-in).
    pub fn random(rng: &mut ChaCha8Rng, input_dim: usize, hidden_dim: usize, classes: usize) -> Self {
        let mut sample = |rows: usize, cols: usize| {
            let scale = 1.0 / (cols as f64).sqrt();
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale)
                .collect();
            Matrix::from_vec(rows, cols, data).unwrap()
        };
        let w1 = sample(hidden_dim, input_dim);
        let w2 = sample(classes, hidden_dim);
        RefNet::new(w1, vec![0.0; hidden_dim], w2, vec![0.0; classes]).unwrap()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input has {} dims, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Hidden tanh activations.
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .w1
            .matvec(x)
            .iter()
            .zip(&self.b1)
            .map(|(a, b)| (a + b).tanh())
            .collect())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.hidden(x)?;
        let logits: Vec<f64> = self
            .w2
            .matvec(&h)
            .iter()
            .zip(&self.b2)
            .map(|(a, b)| a + b)
            .collect();
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits".into()));
        }
        Ok(logits)
    }

    /// Gradient of `-log max_i softmax(l / T)_i` with respect to the input.
    pub fn input_gradient(&self, x: &[f64], temperature: f64) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let a1 = self
            .w1
            .matvec(x)
            .iter()
            .zip(&self.b1)
            .map(|(a, b)| a + b)
            .collect::<Vec<f64>>();
        let h: Vec<f64> = a1.iter().map(|v| v.tanh()).collect();
        let logits: Vec<f64> = self
            .w2
            .matvec(&h)
            .iter()
            .zip(&self.b2)
            .map(|(a, b)| a + b)
            .collect();
        let p = softmax(&logits, temperature)?;
        let target = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("at least one class");

        // dJ/dl_j = (p_j - [j = target]) / T
        let dl: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(j, pj)| (pj - f64::from(u8::from(j == target))) / temperature)
            .collect();
        let dh = self.w2.matvec_t(&dl);
        let da1: Vec<f64> = dh.iter().zip(&h).map(|(g, hi)| g * (1.0 - hi * hi)).collect();
        let grad = self.w1.matvec_t(&da1);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input gradient".into()));
        }
        Ok(grad)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        crate::store::atomic_write(path, &json)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&raw).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn sign(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// ODIN-style scoring: nudge each input against the gradient of the
/// temperature-scaled objective, then score the perturbed logits — max
/// softmax at T for `odin`, max raw logit for `ip_ts_mlv`.
pub fn perturb_and_score(net: &RefNet, inputs: &SampleMatrix, cfg: &ScorerConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    if !matches!(cfg.method, ScoreMethod::Odin | ScoreMethod::IpTsMlv) {
        return Err(Error::InvalidParameter(format!(
            "perturbation scoring supports odin and ip_ts_mlv, got {}",
            cfg.method.name()
        )));
    }
    inputs.validate()?;
    let mut scores = Vec::with_capacity(inputs.rows());
    for row in inputs.values.iter_rows() {
        let grad = net.input_gradient(row, cfg.temperature)?;
        let perturbed: Vec<f64> = row
            .iter()
            .zip(&grad)
            .map(|(x, g)| x - cfg.epsilon * sign(*g))
            .collect();
        let logits = net.forward(&perturbed)?;
        let score = match cfg.method {
            ScoreMethod::Odin => softmax(&logits, cfg.temperature)?
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
            ScoreMethod::IpTsMlv => logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            _ => unreachable!(),
        };
        scores.push(score);
    }
    ScoreVector::new(inputs.sample_ids.clone(), scores, inputs.z.clone())
}
