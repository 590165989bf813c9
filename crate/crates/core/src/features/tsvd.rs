//! Randomized truncated SVD (range finder + small dense SVD).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::matrix::DenseMatrix;
use crate::util::{self, sha256_hex};

const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 2;
/// Extra subspace iterations allowed while the top-k values still move.
const MAX_REFINEMENTS: usize = 64;
const REFINE_TOL: f64 = 1e-12;
const RNG_STREAM: u64 = 0x7473_7664;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsvdModel {
    pub fitted_block: String,
    pub singular_values: Vec<f64>,
    /// k × m, rows are right singular vectors.
    pub components: DenseMatrix,
}

impl TsvdModel {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn input_width(&self) -> usize {
        self.components.cols()
    }

    pub fn named(mut self, block: &str) -> Self {
        self.fitted_block = block.to_string();
        self
    }

    /// Keeps the leading `k` components.
    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.k());
        let m = self.input_width();
        Self {
            fitted_block: self.fitted_block.clone(),
            singular_values: self.singular_values[..k].to_vec(),
            components: DenseMatrix::from_row_major(k, m, self.components.as_slice()[..k * m].to_vec()),
        }
    }

    /// Maps scores back to the input space: scores · components.
    pub fn reconstruct(&self, scores: &DenseMatrix) -> DenseMatrix {
        let s = scores.to_nalgebra();
        DenseMatrix::from_nalgebra(&(s * self.components.to_nalgebra()))
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("model serializes").as_bytes())
    }
}

/// Fits the top `k` right singular vectors of `block` (no centering).
///
/// A Gaussian test matrix with `k + 10` columns seeds the range finder, which
/// runs two power iterations and then keeps iterating until the leading `k`
/// singular values stop changing, so flat spectra still converge.
pub fn fit_tsvd(block: &DenseMatrix, k: usize, seed: u64) -> Result<TsvdModel, FeatureError> {
    let (n, m) = (block.rows(), block.cols());
    if k == 0 || k > n.min(m) {
        return Err(FeatureError::RankError { k, rows: n, cols: m });
    }
    let a = block.to_nalgebra();
    let l = (k + OVERSAMPLE).min(n.min(m));
    let mut rng = util::rng(seed, RNG_STREAM);
    let mut omega = DMatrix::<f64>::zeros(m, l);
    for i in 0..m {
        for j in 0..l {
            omega[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let mut q = orthonormal_basis(&a * omega);
    for _ in 0..POWER_ITERATIONS {
        q = power_step(&a, &q);
    }
    let mut previous = leading_values(&q, &a, k);
    for _ in 0..MAX_REFINEMENTS {
        q = power_step(&a, &q);
        let current = leading_values(&q, &a, k);
        let settled = previous
            .iter()
            .zip(&current)
            .all(|(p, c)| (p - c).abs() <= REFINE_TOL * c.abs().max(f64::MIN_POSITIVE));
        previous = current;
        if settled {
            break;
        }
    }

    let b = q.transpose() * &a;
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));

    let mut singular_values = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k * m);
    for &idx in order.iter().take(k) {
        singular_values.push(svd.singular_values[idx].max(0.0));
        let row: Vec<f64> = (0..m).map(|j| v_t[(idx, j)]).collect();
        // Sign convention: the largest-magnitude entry of each component is positive.
        let pivot = row.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(row.into_iter().map(|v| v * sign));
    }
    Ok(TsvdModel {
        fitted_block: String::new(),
        singular_values,
        components: DenseMatrix::from_row_major(k, m, components),
    })
}

/// Scores `block` against the model: block · componentsᵀ.
pub fn apply_tsvd(model: &TsvdModel, block: &DenseMatrix) -> Result<DenseMatrix, FeatureError> {
    if block.cols() != model.input_width() {
        return Err(FeatureError::ShapeMismatch { expected: model.input_width(), got: block.cols() });
    }
    let a = block.to_nalgebra();
    let c = model.components.to_nalgebra();
    Ok(DenseMatrix::from_nalgebra(&(a * c.transpose())))
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

fn power_step(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let z = orthonormal_basis(a.transpose() * q);
    orthonormal_basis(a * z)
}

fn leading_values(q: &DMatrix<f64>, a: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (q.transpose() * a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s.truncate(k);
    s
}
