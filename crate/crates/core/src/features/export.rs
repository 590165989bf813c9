//! CSV export of feature matrices with a JSON sidecar manifest.
//!
//! The CSV has an `id` column, a `label` column and then one column per
//! feature, with a header row. Lines starting with `#` are comments. Floats are
//! written in shortest round-trip form, so reading a file back is exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockTag, FeatureContext, FeatureError, FeatureMatrix, Tier};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestColumn {
    pub name: String,
    pub block: BlockTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub tier: Tier,
    pub columns: Vec<ManifestColumn>,
    pub vocab_hash: String,
    pub tsvd_hashes: BTreeMap<String, String>,
}

impl FeatureManifest {
    pub fn new(matrix: &FeatureMatrix, context: &FeatureContext) -> Self {
        let mut tsvd_hashes = context.tsvd_hashes();
        if !matrix.tier.includes(BlockTag::Abstract) {
            tsvd_hashes.remove("abstract");
        }
        if !matrix.tier.includes(BlockTag::Concepts) {
            tsvd_hashes.remove("concepts");
        }
        Self {
            tier: matrix.tier,
            columns: matrix
                .column_names
                .iter()
                .zip(&matrix.column_blocks)
                .map(|(name, &block)| ManifestColumn { name: name.clone(), block })
                .collect(),
            vocab_hash: context.vocab.hash(),
            tsvd_hashes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
}

fn io_err(path: &Path, e: impl ToString) -> FeatureError {
    FeatureError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes `matrix` with its labels. `comment`, if given, becomes a leading
/// `# ` line.
pub fn write_feature_csv(
    path: &Path,
    matrix: &FeatureMatrix,
    labels: &[u8],
    comment: Option<&str>,
) -> Result<(), FeatureError> {
    if labels.len() != matrix.n_rows() {
        return Err(FeatureError::ShapeMismatch { expected: matrix.n_rows(), got: labels.len() });
    }
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(matrix.column_names.iter().cloned());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for i in 0..matrix.n_rows() {
        let mut rec = vec![matrix.row_ids[i].clone(), labels[i].to_string()];
        rec.extend(matrix.values.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a file written by [`write_feature_csv`]; block tags and tier come
/// from the manifest, whose column list must match the header.
pub fn read_feature_csv(path: &Path, manifest: &FeatureManifest) -> Result<LabeledFeatures, FeatureError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.clone();
    let names: Vec<&str> = header.iter().skip(2).collect();
    let expected: Vec<&str> = manifest.columns.iter().map(|c| c.name.as_str()).collect();
    if header.get(0) != Some("id") || header.get(1) != Some("label") || names != expected {
        return Err(io_err(path, "header does not match the feature manifest"));
    }
    let p = names.len();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        if rec.len() != p + 2 {
            return Err(io_err(path, format!("row {} has {} fields", line + 1, rec.len())));
        }
        ids.push(rec[0].to_string());
        labels.push(match &rec[1] {
            "0" => 0,
            "1" => 1,
            other => return Err(io_err(path, format!("row {}: bad label `{other}`", line + 1))),
        });
        for v in rec.iter().skip(2) {
            values.push(v.parse::<f64>().map_err(|e| io_err(path, format!("row {}: {e}", line + 1)))?);
        }
    }
    let n = ids.len();
    Ok(LabeledFeatures {
        features: FeatureMatrix {
            values: DenseMatrix::from_row_major(n, p, values),
            column_names: names.into_iter().map(String::from).collect(),
            column_blocks: manifest.columns.iter().map(|c| c.block).collect(),
            tier: manifest.tier,
            row_ids: ids,
        },
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};
    use crate::features::{assemble, fit_context, FeatureConfig};

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = synth_corpus(&SynthConfig { n: 200, seed: 2, ..Default::default() }).unwrap();
        let cfg = FeatureConfig { k_concepts: 5, k_rcdc: 3, k_rac: 3, ..Default::default() };
        let ctx = fit_context(&recs, None, &cfg).unwrap();
        let m = assemble(&recs, &ctx, None, Tier::M2).unwrap();
        let labels: Vec<u8> = (0..200).map(|i| (i % 3 == 0) as u8).collect();
        let manifest = FeatureManifest::new(&m, &ctx);
        assert!(!manifest.tsvd_hashes.contains_key("abstract"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_feature_csv(&path, &m, &labels, Some("provenance {}")).unwrap();
        let back = read_feature_csv(&path, &manifest).unwrap();
        assert_eq!(back.features, m);
        assert_eq!(back.labels, labels);
    }
}
