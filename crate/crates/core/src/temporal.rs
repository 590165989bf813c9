//! Temporal audit: a balanced per-year sample scored by one trained model,
//! Δ-labels per publication and per-decade confusion matrices.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, PublicationRecord};
use crate::eval::{confusion, ConfusionMatrix};
use crate::features::{assemble, EmbeddingMap, FeatureContext, FeatureError, Tier};
use crate::gbdt::{predict_label, predict_proba, BoostedModel, GbdtError};
use crate::util;

const SAMPLE_STREAM: u64 = 0x7965_6172;

#[derive(Debug, thiserror::Error)]
pub enum TemporalError {
    #[error("year {0} is not covered by any decade range")]
    UncoveredYear(i32),
    #[error("invalid decade ranges: {0}")]
    InvalidRanges(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] GbdtError),
    #[error("i/o error on {path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemporalConfig {
    pub n_per_label: usize,
    pub year_min: i32,
    pub year_max: i32,
    pub prefer_test: bool,
    /// Inclusive year ranges, one confusion matrix each.
    pub decades: Vec<(i32, i32)>,
    /// Tier whose model is audited; the pipeline picks the richest tier run
    /// when unset.
    pub tier: Option<Tier>,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self {
            n_per_label: 5,
            year_min: 1990,
            year_max: 2017,
            prefer_test: true,
            decades: vec![(1990, 1999), (2000, 2009), (2010, 2017)],
            tier: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledRecord {
    pub record: PublicationRecord,
    pub label: u8,
    pub from_test: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub year: i32,
    pub label: u8,
    pub wanted: usize,
    pub got: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSample {
    pub samples: Vec<SampledRecord>,
    pub shortfalls: Vec<Shortfall>,
}

/// Draws up to `n_per_label` records per (year, label). With `prefer_test`
/// the test partition is drawn from first and the rest of `dataset` tops up
/// a short year; otherwise the whole dataset is one pool. Years or labels
/// with too few records give everything available plus a shortfall entry.
pub fn sample_per_year(
    dataset: &LabeledDataset,
    test_ids: &BTreeSet<String>,
    n_per_label: usize,
    years: std::ops::RangeInclusive<i32>,
    seed: u64,
    prefer_test: bool,
) -> TemporalSample {
    let mut samples = Vec::new();
    let mut shortfalls = Vec::new();
    for year in years {
        for label in [0u8, 1] {
            let stream = SAMPLE_STREAM ^ ((year as u64) << 1 | u64::from(label)).wrapping_mul(0x100_0000_01b3);
            let mut rng = util::rng(seed, stream);
            let pool: Vec<usize> = (0..dataset.len())
                .filter(|&i| dataset.records[i].year == year && dataset.labels[i] == label)
                .collect();
            let in_test = |i: &usize| test_ids.contains(&dataset.records[*i].id);
            let mut draw = |from: &[usize], k: usize| -> Vec<usize> {
                let mut picked: Vec<usize> = index::sample(&mut rng, from.len(), k.min(from.len())).into_iter().map(|j| from[j]).collect();
                picked.sort_unstable();
                picked
            };
            let chosen: Vec<usize> = if prefer_test {
                let (test, rest): (Vec<usize>, Vec<usize>) = pool.iter().partition(|i| in_test(i));
                let mut c = draw(&test, n_per_label);
                let missing = n_per_label - c.len();
                if missing > 0 {
                    c.extend(draw(&rest, missing));
                }
                c
            } else {
                draw(&pool, n_per_label)
            };
            if chosen.len() < n_per_label {
                shortfalls.push(Shortfall { year, label, wanted: n_per_label, got: chosen.len() });
            }
            for i in chosen {
                samples.push(SampledRecord { record: dataset.records[i].clone(), label, from_test: in_test(&i) });
            }
        }
    }
    TemporalSample { samples, shortfalls }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalPoint {
    pub publication_id: String,
    pub year: i32,
    pub real_label: u8,
    pub predicted_prob: f64,
    /// real_label − predicted_prob.
    pub delta: f64,
    pub from_test_partition: bool,
}

impl TemporalPoint {
    pub fn new(publication_id: String, year: i32, real_label: u8, predicted_prob: f64, from_test_partition: bool) -> Self {
        Self { publication_id, year, real_label, predicted_prob, delta: f64::from(real_label) - predicted_prob, from_test_partition }
    }

    /// Prediction at threshold 0.5 equals the real label. This differs from
    /// |Δ| < 0.5 only at p = 0.5 with real label 1.
    pub fn correct(&self) -> bool {
        predict_label(&[self.predicted_prob], 0.5)[0] == self.real_label
    }
}

/// Scores the sampled records with `model` on `tier` features.
pub fn delta_labels(
    model: &BoostedModel,
    samples: &[SampledRecord],
    context: &FeatureContext,
    embeddings: Option<&EmbeddingMap>,
    tier: Tier,
) -> Result<Vec<TemporalPoint>, TemporalError> {
    let records: Vec<PublicationRecord> = samples.iter().map(|s| s.record.clone()).collect();
    let x = assemble(&records, context, embeddings, tier)?;
    let probs = predict_proba(model, &x.values)?;
    Ok(samples
        .iter()
        .zip(probs)
        .map(|(s, p)| TemporalPoint::new(s.record.id.clone(), s.record.year, s.label, p, s.from_test))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeRow {
    pub start: i32,
    pub end: i32,
    pub cm: ConfusionMatrix,
    /// `None` for a range with no points.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeReport {
    pub decades: Vec<DecadeRow>,
    pub total_points: usize,
}

pub fn decade_confusions(points: &[TemporalPoint], ranges: &[(i32, i32)]) -> Result<DecadeReport, TemporalError> {
    for (i, &(a, b)) in ranges.iter().enumerate() {
        if a > b {
            return Err(TemporalError::InvalidRanges(format!("{a}-{b} is empty")));
        }
        if ranges[..i].iter().any(|&(c, d)| a <= d && c <= b) {
            return Err(TemporalError::InvalidRanges(format!("{a}-{b} overlaps another range")));
        }
    }
    let mut rows: Vec<DecadeRow> = ranges
        .iter()
        .map(|&(start, end)| DecadeRow { start, end, cm: ConfusionMatrix::default(), accuracy: None })
        .collect();
    for p in points {
        let row = rows
            .iter_mut()
            .find(|r| (r.start..=r.end).contains(&p.year))
            .ok_or(TemporalError::UncoveredYear(p.year))?;
        let predicted = predict_label(&[p.predicted_prob], 0.5);
        row.cm.add(&confusion(&[p.real_label], &predicted).expect("single 0/1 label"));
    }
    for r in &mut rows {
        r.accuracy = (r.cm.total() > 0).then(|| r.cm.accuracy());
    }
    Ok(DecadeReport { decades: rows, total_points: points.len() })
}

fn io_err(path: &Path, e: impl ToString) -> TemporalError {
    TemporalError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Columns: id, year, real, p_hat, delta, correct, from_test.
pub fn write_points_csv(path: &Path, points: &[TemporalPoint], comment: Option<&str>) -> Result<(), TemporalError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "year", "real", "p_hat", "delta", "correct", "from_test"]).map_err(|e| io_err(path, e))?;
    for p in points {
        w.write_record([
            p.publication_id.clone(),
            p.year.to_string(),
            p.real_label.to_string(),
            p.predicted_prob.to_string(),
            p.delta.to_string(),
            u8::from(p.correct()).to_string(),
            u8::from(p.from_test_partition).to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Δ against year with a grey band for |Δ| < 0.5; label 1 in red, 0 in blue.
pub fn render_delta_svg(points: &[TemporalPoint], years: (i32, i32), title: &str) -> String {
    let (w, h, m) = (720.0, 400.0, 50.0);
    let span = f64::from((years.1 - years.0).max(1));
    let sx = |y: i32| m + f64::from(y - years.0) / span * (w - 2.0 * m);
    let sy = |d: f64| h / 2.0 - d.clamp(-1.0, 1.0) * (h / 2.0 - m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, title.replace('<', "&lt;"));
    let _ = writeln!(s, r##"<rect x="{m}" y="{:.1}" width="{}" height="{:.1}" fill="#e5e5e5"/>"##, sy(0.5), w - 2.0 * m, sy(-0.5) - sy(0.5));
    let _ = writeln!(s, r#"<line x1="{m}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="black"/>"#, sy(0.0), w - m, sy(0.0));
    for d in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{d}</text>"#, m - 6.0, sy(d) + 4.0);
    }
    let mut y = years.0;
    while y <= years.1 {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{y}</text>"#, sx(y), h - m + 18.0);
        y += 5;
    }
    for p in points {
        let color = if p.real_label == 1 { "#d62728" } else { "#1f77b4" };
        let _ = writeln!(s, r#"<circle class="point" cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(p.year), sy(p.delta));
    }
    s.push_str("</svg>\n");
    s
}
