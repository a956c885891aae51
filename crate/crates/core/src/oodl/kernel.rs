//! RBF kernel approximations: random Fourier features and the Nystroem
//! landmark method.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::store::{dot, Matrix};

const EIGENVALUE_FLOOR: f64 = 1e-12;

/// `exp(-gamma ||x - y||^2)`.
pub fn rbf_kernel(gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

/// Feature map `z(x) = sqrt(2/D) cos(Wx + b)` with `W ~ N(0, 2 gamma)` and
/// `b ~ U[0, 2 pi)`, whose inner products approximate the RBF kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFourierMap {
    pub gamma: f64,
    pub dim: usize,
    pub seed: u64,
    weights: Matrix,
    phases: Vec<f64>,
}

pub fn rff_fit(gamma: f64, dim: usize, input_dim: usize, seed: u64) -> Result<RandomFourierMap> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width gamma must be positive, got {gamma}"
        )));
    }
    if dim < 1 {
        return Err(Error::InvalidParameter("RFF dimension must be >= 1".into()));
    }
    let mut rng = derive_rng(seed, "kernel/rff");
    let normal = Normal::new(0.0, (2.0 * gamma).sqrt()).expect("finite std dev");
    let data: Vec<f64> = (0..dim * input_dim).map(|_| normal.sample(&mut rng)).collect();
    let weights = Matrix::from_vec(dim, input_dim, data)?;
    let phases: Vec<f64> = (0..dim)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    Ok(RandomFourierMap {
        gamma,
        dim,
        seed,
        weights,
        phases,
    })
}

impl RandomFourierMap {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "RFF map expects {} dims, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let scale = (2.0 / self.dim as f64).sqrt();
        let mut out = Matrix::zeros(x.rows(), self.dim);
        for i in 0..x.rows() {
            let row = x.row(i);
            let dst = out.row_mut(i);
            for (d, phase) in self.phases.iter().enumerate() {
                dst[d] = scale * (dot(self.weights.row(d), row) + phase).cos();
            }
        }
        Ok(out)
    }
}

/// Landmark-based approximation: `phi(x) = k(x, L) U diag(lambda^{-1/2})`
/// from the eigendecomposition of the landmark kernel matrix. Eigenvalues at
/// or below the floor are dropped, so the output width can shrink. With all
/// points as landmarks the reconstruction `phi phi^T` equals the exact
/// kernel matrix up to the dropped mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NystroemMap {
    pub gamma: f64,
    pub seed: u64,
    landmarks: Matrix,
    /// `m x m'` matrix `U diag(lambda^{-1/2})` with floored eigenvalues dropped.
    normalization: Matrix,
}

pub fn nystroem_fit(gamma: f64, m: usize, source: &Matrix, seed: u64) -> Result<NystroemMap> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width gamma must be positive, got {gamma}"
        )));
    }
    if m < 1 {
        return Err(Error::InvalidParameter(
            "Nystroem needs at least one landmark".into(),
        ));
    }
    if m > source.rows() {
        return Err(Error::Shape(format!(
            "requested {m} landmarks from a batch of {} rows",
            source.rows()
        )));
    }

    let mut rng = derive_rng(seed, "kernel/nystroem");
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, source.rows(), m).into_vec();
    indices.sort_unstable();
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| source.row(i).to_vec()).collect();
    let landmarks = Matrix::from_rows(rows)?;

    let kernel = DMatrix::from_fn(m, m, |i, j| {
        rbf_kernel(gamma, landmarks.row(i), landmarks.row(j))
    });
    let eigen = kernel.symmetric_eigen();

    // Keep eigenpairs above the floor, in descending eigenvalue order for a
    // stable column layout.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| eigen.eigenvalues[k] > EIGENVALUE_FLOOR)
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidParameter(
            "landmark kernel matrix is numerically rank zero".into(),
        ));
    }
    let mut normalization = Matrix::zeros(m, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let inv_sqrt = 1.0 / eigen.eigenvalues[k].sqrt();
        for row in 0..m {
            normalization.row_mut(row)[col] = eigen.eigenvectors[(row, k)] * inv_sqrt;
        }
    }

    Ok(NystroemMap {
        gamma,
        seed,
        landmarks,
        normalization,
    })
}

impl NystroemMap {
    pub fn input_dim(&self) -> usize {
        self.landmarks.cols()
    }

    /// Output width after eigenvalue dropping.
    pub fn dim(&self) -> usize {
        self.normalization.cols()
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks.rows()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "Nystroem map expects {} dims, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let m = self.landmarks.rows();
        let mut out = Matrix::zeros(x.rows(), self.dim());
        for i in 0..x.rows() {
            let row = x.row(i);
            let k_row: Vec<f64> = (0..m)
                .map(|l| rbf_kernel(self.gamma, row, self.landmarks.row(l)))
                .collect();
            let dst = out.row_mut(i);
            for c in 0..self.normalization.cols() {
                dst[c] = (0..m).map(|l| k_row[l] * self.normalization.row(l)[c]).sum();
            }
        }
        Ok(out)
    }
}
