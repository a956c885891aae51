//! Confidence-based OOD scoring on logit matrices.
//!
//! The score convention throughout is confidence: higher means more ID. The
//! OOD score of the detection literature is the negation; any conversion is
//! explicit at the call site, never implicit.

mod refnet;

pub use refnet::{perturb_and_score, RefNet};

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{atomic_write, SampleMatrix};

/// Scoring method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Msp,
    Ts,
    Mlv,
    Odin,
    IpTsMlv,
}

impl ScoreMethod {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "msp" => Ok(ScoreMethod::Msp),
            "ts" => Ok(ScoreMethod::Ts),
            "mlv" => Ok(ScoreMethod::Mlv),
            "odin" => Ok(ScoreMethod::Odin),
            "ip_ts_mlv" => Ok(ScoreMethod::IpTsMlv),
            other => Err(Error::InvalidParameter(format!(
                "unknown scoring method {other:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreMethod::Msp => "msp",
            ScoreMethod::Ts => "ts",
            ScoreMethod::Mlv => "mlv",
            ScoreMethod::Odin => "odin",
            ScoreMethod::IpTsMlv => "ip_ts_mlv",
        }
    }
}

/// Method plus its hyperparameters. The defaults T = 1000 and eps = 0.0014
/// follow the ODIN lineage; both are grid-searchable on a validation split.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub method: ScoreMethod,
    pub temperature: f64,
    pub epsilon: f64,
}

impl ScorerConfig {
    pub fn new(method: ScoreMethod) -> Self {
        ScorerConfig {
            method,
            temperature: 1000.0,
            epsilon: 0.0014,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "perturbation magnitude must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-sample confidence scores with carried ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub sample_ids: Vec<String>,
    pub scores: Vec<f64>,
    /// 0 = ID, 1 = OOD.
    pub z: Vec<u8>,
}

impl ScoreVector {
    pub fn new(sample_ids: Vec<String>, scores: Vec<f64>, z: Vec<u8>) -> Result<Self> {
        if sample_ids.len() != scores.len() || scores.len() != z.len() {
            return Err(Error::Shape("score vector length mismatch".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score vector".into()));
        }
        Ok(ScoreVector {
            sample_ids,
            scores,
            z,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `sample_id,score,z` CSV with header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("sample_id,score,z\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.sample_ids[i], self.scores[i], self.z[i]
            ));
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        match lines.next().transpose().map_err(|e| Error::io(path, e))? {
            Some(h) if h.trim() == "sample_id,score,z" => {}
            _ => return Err(Error::format("score csv", "expected header sample_id,score,z")),
        }
        let mut sample_ids = Vec::new();
        let mut scores = Vec::new();
        let mut z = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (id, s, flag) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(id), Some(s), Some(flag), None) => (id, s, flag),
                _ => {
                    return Err(Error::format(
                        "score csv",
                        format!("row {}: expected 3 fields", no + 2),
                    ))
                }
            };
            sample_ids.push(id.to_string());
            scores.push(s.parse::<f64>().map_err(|_| {
                Error::format("score csv", format!("row {}: bad score {s:?}", no + 2))
            })?);
            z.push(flag.parse::<u8>().map_err(|_| {
                Error::format("score csv", format!("row {}: bad z {flag:?}", no + 2))
            })?);
        }
        ScoreVector::new(sample_ids, scores, z)
    }
}

/// Temperature-scaled softmax with max subtraction; rows sum to 1 within
/// 1e-12 for finite input.
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| ((l - max) / temperature).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

fn check_logits(m: &SampleMatrix) -> Result<()> {
    m.validate()?;
    if m.cols() < 2 {
        return Err(Error::Shape(format!(
            "logit matrix needs at least 2 classes, got {}",
            m.cols()
        )));
    }
    Ok(())
}

fn max_of(row: &[f64]) -> f64 {
    row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Maximum softmax probability at T = 1.
pub fn score_msp(m: &SampleMatrix) -> Result<ScoreVector> {
    score_ts(m, 1.0)
}

/// Maximum softmax probability after dividing logits by `temperature`.
pub fn score_ts(m: &SampleMatrix, temperature: f64) -> Result<ScoreVector> {
    check_logits(m)?;
    let scores = m
        .values
        .iter_rows()
        .map(|row| softmax(row, temperature).map(|p| max_of(&p)))
        .collect::<Result<Vec<f64>>>()?;
    ScoreVector::new(m.sample_ids.clone(), scores, m.z.clone())
}

/// Maximum raw logit.
pub fn score_mlv(m: &SampleMatrix) -> Result<ScoreVector> {
    check_logits(m)?;
    let scores = m.values.iter_rows().map(max_of).collect();
    ScoreVector::new(m.sample_ids.clone(), scores, m.z.clone())
}
