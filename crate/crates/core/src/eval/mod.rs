//! Confusion matrices, scalar metrics, lift and ROC/PR curves.

mod curves;
mod export;
mod svg;

pub use curves::{pr_curve, roc_auc};
pub use export::{read_curve_csv, write_curve_csv};
pub use svg::{render_curves_svg, PlotSpec, Series};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("both classes are required")]
    SingleClassError,
    #[error("no positive labels")]
    NoPositives,
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("i/o error on {path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

/// Cell counts laid out as in the published tables: rows are the true class,
/// columns the predicted class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// Share of true zeros: (tn + fp) / total.
    pub fn zero_prevalence(&self) -> f64 {
        (self.tn + self.fp) as f64 / self.total() as f64
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tp += other.tp;
    }
}

pub fn confusion(labels: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if labels.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(labels.len(), predicted.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predicted) {
        match (check(y)?, check(p)?) {
            (0, 0) => cm.tn += 1,
            (0, _) => cm.fp += 1,
            (_, 0) => cm.fn_ += 1,
            _ => cm.tp += 1,
        }
    }
    Ok(cm)
}

fn check(v: u8) -> Result<u8, EvalError> {
    if v > 1 {
        Err(EvalError::InvalidLabel(v))
    } else {
        Ok(v)
    }
}

/// Scalar metrics. A ratio with a zero denominator is `None`, never 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Accuracy minus the share of zeros among the evaluation labels.
    pub lift: f64,
}

pub fn metrics_from_cm(cm: &ConfusionMatrix, zero_prevalence: f64) -> Metrics {
    let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
    let accuracy = cm.accuracy();
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Metrics { accuracy, precision, recall, f1, lift: accuracy - zero_prevalence }
}

pub fn zero_prevalence(labels: &[u8]) -> f64 {
    labels.iter().filter(|&&l| l == 0).count() as f64 / labels.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub threshold: f64,
    pub cm: ConfusionMatrix,
    pub metrics: Metrics,
    pub zero_prevalence: f64,
    pub auc_roc: f64,
    /// (false-positive rate, true-positive rate).
    pub roc_points: Vec<(f64, f64)>,
    /// (recall, precision).
    pub pr_points: Vec<(f64, f64)>,
}

/// Full report for probabilities `probs` against `labels`, labelling
/// p ≥ `threshold` as 1.
pub fn evaluate(labels: &[u8], probs: &[f64], threshold: f64) -> Result<EvalReport, EvalError> {
    if labels.len() != probs.len() {
        return Err(EvalError::LengthMismatch(labels.len(), probs.len()));
    }
    let predicted: Vec<u8> = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
    let cm = confusion(labels, &predicted)?;
    let zp = zero_prevalence(labels);
    let (auc_roc, roc_points) = roc_auc(labels, probs)?;
    let pr_points = pr_curve(labels, probs)?;
    Ok(EvalReport {
        n: labels.len(),
        threshold,
        cm,
        metrics: metrics_from_cm(&cm, zp),
        zero_prevalence: zp,
        auc_roc,
        roc_points,
        pr_points,
    })
}
