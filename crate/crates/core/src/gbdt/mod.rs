//! Newton boosting of oblivious trees on logistic loss.
//!
//! Features are quantile-binned once on the fitting rows. Each tree is grown
//! level by level to the configured depth; a level picks the single
//! (feature, bin) split that maximizes the summed gain over all current nodes.
//! The best split is taken even when its gain is not positive (a zero-gain
//! first split is what lets XOR-like interactions be found); a tree is only
//! shallower when no feature has two bins. A seeded validation slice carved
//! from the training rows picks how many trees the model uses.

mod binning;
mod io;
mod tree;

pub use io::{
    load_model, model_from_json, model_to_json, model_to_json_with, save_model, save_model_with, FORMAT_NAME, FORMAT_VERSION,
};
pub use tree::{ObliviousTree, Split};

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{confusion, metrics_from_cm, zero_prevalence};
use crate::matrix::DenseMatrix;
use crate::util;
use binning::{bin_of, compute_edges};

const VALIDATION_STREAM: u64 = 0x7661_6c69;

#[derive(Debug, thiserror::Error)]
pub enum GbdtError {
    #[error("training rows contain a single class")]
    SingleClassError,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("expected {expected} columns, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid boosting configuration: {0}")]
    ConfigError(String),
    #[error("model file version {found} is not supported (this build reads version {supported})")]
    VersionError { found: u64, supported: u64 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMetric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl EvalMetric {
    /// Metric value for hard labels; an undefined ratio counts as 0.
    pub fn score(self, labels: &[u8], predicted: &[u8]) -> f64 {
        let cm = confusion(labels, predicted).expect("equal lengths of 0/1 labels");
        let m = metrics_from_cm(&cm, zero_prevalence(labels));
        match self {
            EvalMetric::Accuracy => m.accuracy,
            EvalMetric::Precision => m.precision.unwrap_or(0.0),
            EvalMetric::Recall => m.recall.unwrap_or(0.0),
            EvalMetric::F1 => m.f1.unwrap_or(0.0),
        }
    }
}

impl fmt::Display for EvalMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMetric::Accuracy => "accuracy",
            EvalMetric::Precision => "precision",
            EvalMetric::Recall => "recall",
            EvalMetric::F1 => "f1",
        })
    }
}

impl FromStr for EvalMetric {
    type Err = GbdtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(EvalMetric::Accuracy),
            "precision" => Ok(EvalMetric::Precision),
            "recall" => Ok(EvalMetric::Recall),
            "f1" => Ok(EvalMetric::F1),
            _ => Err(GbdtError::ConfigError(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub iterations: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub l2_leaf_reg: f64,
    /// Bins per feature, 2 to 256.
    pub max_bins: usize,
    pub seed: u64,
    pub eval_metric: EvalMetric,
    /// Share of training rows held out to choose the number of trees; 0
    /// disables the slice and every tree is used.
    pub validation_fraction: f64,
    pub early_stopping_rounds: Option<usize>,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            depth: 6,
            learning_rate: 0.1,
            l2_leaf_reg: 3.0,
            max_bins: 255,
            seed: 0,
            eval_metric: EvalMetric::Accuracy,
            validation_fraction: 0.1,
            early_stopping_rounds: None,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |m: String| Err(GbdtError::ConfigError(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(1..=16).contains(&self.depth) {
            return bad(format!("depth {} not in 1..=16", self.depth));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} not in (0, 1]", self.learning_rate));
        }
        if !(self.l2_leaf_reg.is_finite() && self.l2_leaf_reg >= 0.0) {
            return bad(format!("l2_leaf_reg {} must be finite and non-negative", self.l2_leaf_reg));
        }
        if !(2..=256).contains(&self.max_bins) {
            return bad(format!("max_bins {} not in 2..=256", self.max_bins));
        }
        if !(0.0..0.5).contains(&self.validation_fraction) {
            return bad(format!("validation_fraction {} not in [0, 0.5)", self.validation_fraction));
        }
        if self.early_stopping_rounds == Some(0) {
            return bad("early_stopping_rounds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub config: GbdtConfig,
    pub n_features: usize,
    /// Prior log-odds.
    pub base_score: f64,
    /// Number of leading trees used for prediction.
    pub best_iteration: usize,
    /// Per-feature strictly increasing bin edges from the fitting rows.
    pub bin_edges: Vec<Vec<f64>>,
    pub trees: Vec<ObliviousTree>,
}

impl BoostedModel {
    /// Log-odds for one row using the first `best_iteration` trees.
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.trees[..self.best_iteration].iter().fold(self.base_score, |acc, t| acc + t.value(row))
    }
}

/// Per-iteration traces from [`fit_with_history`]; index 0 is the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Mean logistic loss on the fitting rows.
    pub train_loss: Vec<f64>,
    /// Selection metric on the validation slice (empty without a slice).
    pub validation_metric: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn mean_logloss(raw: &[f64], y: &[u8]) -> f64 {
    raw.iter().zip(y).map(|(&f, &t)| softplus(f) - f64::from(t) * f).sum::<f64>() / raw.len() as f64
}

/// 1 iff p ≥ threshold.
pub fn predict_label(probs: &[f64], threshold: f64) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= threshold)).collect()
}

pub fn predict_proba(model: &BoostedModel, x: &DenseMatrix) -> Result<Vec<f64>, GbdtError> {
    if x.cols() != model.n_features {
        return Err(GbdtError::ShapeMismatch { expected: model.n_features, got: x.cols() });
    }
    Ok((0..x.rows()).into_par_iter().map(|i| sigmoid(model.raw_score(x.row(i)))).collect())
}

pub fn fit(x: &DenseMatrix, y: &[u8], config: &GbdtConfig) -> Result<BoostedModel, GbdtError> {
    fit_with_history(x, y, config).map(|(m, _)| m)
}

pub fn fit_with_history(
    x: &DenseMatrix,
    y: &[u8],
    config: &GbdtConfig,
) -> Result<(BoostedModel, TrainingHistory), GbdtError> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(GbdtError::LengthMismatch { rows: x.rows(), labels: y.len() });
    }
    for i in 0..x.rows() {
        if let Some(col) = x.row(i).iter().position(|v| !v.is_finite()) {
            return Err(GbdtError::NonFiniteFeature { row: i, col });
        }
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(GbdtError::ConfigError(format!("label {bad} is not 0 or 1")));
    }

    let n = x.rows();
    let p = x.cols();
    let n_val = (n as f64 * config.validation_fraction).round() as usize;
    let mut is_val = vec![false; n];
    if n_val > 0 && n_val < n {
        let mut rng = util::rng(config.seed, VALIDATION_STREAM);
        for i in index::sample(&mut rng, n, n_val) {
            is_val[i] = true;
        }
    }
    let fit_rows: Vec<usize> = (0..n).filter(|&i| !is_val[i]).collect();
    let val_rows: Vec<usize> = (0..n).filter(|&i| is_val[i]).collect();
    let y_fit: Vec<u8> = fit_rows.iter().map(|&i| y[i]).collect();
    let y_val: Vec<u8> = val_rows.iter().map(|&i| y[i]).collect();
    let positives = y_fit.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == y_fit.len() {
        return Err(GbdtError::SingleClassError);
    }

    let bin_edges: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = fit_rows.iter().map(|&i| x.get(i, j)).collect();
            compute_edges(&col, config.max_bins)
        })
        .collect();
    let bin_rows = |rows: &[usize]| -> Vec<Vec<u8>> {
        (0..p)
            .into_par_iter()
            .map(|j| rows.iter().map(|&i| bin_of(&bin_edges[j], x.get(i, j))).collect())
            .collect()
    };
    let fit_bins = bin_rows(&fit_rows);
    let val_bins = bin_rows(&val_rows);
    let n_bins: Vec<usize> = bin_edges.iter().map(|e| e.len() + 1).collect();

    let p_bar = (positives as f64 / y_fit.len() as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (p_bar / (1.0 - p_bar)).ln();

    let mut raw_fit = vec![base_score; fit_rows.len()];
    let mut raw_val = vec![base_score; val_rows.len()];
    let mut history = TrainingHistory { train_loss: vec![mean_logloss(&raw_fit, &y_fit)], validation_metric: Vec::new(), validation_loss: Vec::new() };
    let has_val = !val_rows.is_empty();
    let val_point = |raw: &[f64]| -> (f64, f64) {
        let probs: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
        (config.eval_metric.score(&y_val, &predict_label(&probs, 0.5)), mean_logloss(raw, &y_val))
    };
    let mut best = (0usize, f64::NEG_INFINITY, f64::INFINITY);
    if has_val {
        let (m, l) = val_point(&raw_val);
        history.validation_metric.push(m);
        history.validation_loss.push(l);
        best = (0, m, l);
    }

    let mut trees = Vec::with_capacity(config.iterations);
    let mut grad = vec![0.0; fit_rows.len()];
    let mut hess = vec![0.0; fit_rows.len()];
    for t in 1..=config.iterations {
        for (k, &r) in raw_fit.iter().enumerate() {
            let pr = sigmoid(r);
            grad[k] = pr - f64::from(y_fit[k]);
            hess[k] = pr * (1.0 - pr);
        }
        let tree = grow_tree(&fit_bins, &n_bins, &bin_edges, &grad, &hess, config);
        for (k, r) in raw_fit.iter_mut().enumerate() {
            *r += tree.leaf_values[binned_leaf(&tree, &fit_bins, k)];
        }
        for (k, r) in raw_val.iter_mut().enumerate() {
            *r += tree.leaf_values[binned_leaf(&tree, &val_bins, k)];
        }
        trees.push(tree);
        history.train_loss.push(mean_logloss(&raw_fit, &y_fit));
        if has_val {
            let (m, l) = val_point(&raw_val);
            history.validation_metric.push(m);
            history.validation_loss.push(l);
            if m > best.1 || (m == best.1 && l < best.2) {
                best = (t, m, l);
            }
            if config.early_stopping_rounds.is_some_and(|r| t - best.0 >= r) {
                break;
            }
        }
    }
    let best_iteration = if has_val { best.0 } else { trees.len() };
    let model = BoostedModel { config: config.clone(), n_features: p, base_score, best_iteration, bin_edges, trees };
    Ok((model, history))
}

#[inline]
fn binned_leaf(tree: &ObliviousTree, bins: &[Vec<u8>], row: usize) -> usize {
    tree.levels.iter().fold(0, |idx, s| (idx << 1) | usize::from(bins[s.feature][row] > s.bin))
}

#[inline]
fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

fn grow_tree(
    bins: &[Vec<u8>],
    n_bins: &[usize],
    edges: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    config: &GbdtConfig,
) -> ObliviousTree {
    let n = grad.len();
    let lambda = config.l2_leaf_reg;
    let mut node = vec![0usize; n];
    let mut levels = Vec::with_capacity(config.depth);
    for d in 0..config.depth {
        let n_nodes = 1usize << d;
        let mut totals = vec![(0.0f64, 0.0f64); n_nodes];
        for i in 0..n {
            totals[node[i]].0 += grad[i];
            totals[node[i]].1 += hess[i];
        }
        let candidates: Vec<Option<(f64, usize)>> = (0..bins.len())
            .into_par_iter()
            .map(|f| {
                let nb = n_bins[f];
                if nb < 2 {
                    return None;
                }
                let mut hist = vec![(0.0f64, 0.0f64); n_nodes * nb];
                let col = &bins[f];
                for i in 0..n {
                    let cell = &mut hist[node[i] * nb + col[i] as usize];
                    cell.0 += grad[i];
                    cell.1 += hess[i];
                }
                let mut gains = vec![0.0f64; nb - 1];
                for (v, &(g, h)) in totals.iter().enumerate() {
                    let parent = score_term(g, h, lambda);
                    let (mut gl, mut hl) = (0.0, 0.0);
                    for b in 0..nb - 1 {
                        let c = hist[v * nb + b];
                        gl += c.0;
                        hl += c.1;
                        gains[b] += score_term(gl, hl, lambda) + score_term(g - gl, h - hl, lambda) - parent;
                    }
                }
                let mut best: Option<(f64, usize)> = None;
                for (b, &g) in gains.iter().enumerate() {
                    if best.is_none_or(|(bg, _)| g > bg) {
                        best = Some((g, b));
                    }
                }
                best
            })
            .collect();
        let mut chosen: Option<(f64, usize, usize)> = None;
        for (f, c) in candidates.into_iter().enumerate() {
            if let Some((g, b)) = c {
                if chosen.is_none_or(|(bg, _, _)| g > bg) {
                    chosen = Some((g, f, b));
                }
            }
        }
        let Some((_, f, b)) = chosen else { break };
        levels.push(Split { feature: f, bin: b as u8, threshold: edges[f][b] });
        for i in 0..n {
            node[i] = (node[i] << 1) | usize::from(bins[f][i] > b as u8);
        }
    }
    let n_leaves = 1usize << levels.len();
    let mut sums = vec![(0.0f64, 0.0f64); n_leaves];
    for i in 0..n {
        sums[node[i]].0 += grad[i];
        sums[node[i]].1 += hess[i];
    }
    let leaf_values = sums
        .into_iter()
        .map(|(g, h)| if h + lambda > 0.0 { -g / (h + lambda) * config.learning_rate } else { 0.0 })
        .collect();
    ObliviousTree { levels, leaf_values }
}
