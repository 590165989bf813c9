//! Model container: a JSON object with, in order, `format`, `version`,
//! `config`, `n_features`, `base_score`, `best_iteration`, `bin_edges` and
//! `trees` (each `{levels: [{feature, bin, threshold}], leaf_values}`).
//! Floats are written in shortest round-trip form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoostedModel, GbdtConfig, GbdtError, ObliviousTree};

pub const FORMAT_NAME: &str = "transimpact-gbdt";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u64,
    config: GbdtConfig,
    n_features: usize,
    base_score: f64,
    best_iteration: usize,
    bin_edges: Vec<Vec<f64>>,
    trees: Vec<ObliviousTree>,
    /// Free-form run metadata; ignored when loading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

pub fn model_to_json(model: &BoostedModel) -> String {
    model_to_json_with(model, None)
}

/// Like [`model_to_json`] with a `provenance` object embedded in the container.
pub fn model_to_json_with(model: &BoostedModel, provenance: Option<serde_json::Value>) -> String {
    let c = Container {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        config: model.config.clone(),
        n_features: model.n_features,
        base_score: model.base_score,
        best_iteration: model.best_iteration,
        bin_edges: model.bin_edges.clone(),
        trees: model.trees.clone(),
        provenance,
    };
    serde_json::to_string(&c).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<BoostedModel, GbdtError> {
    let corrupt = |m: String| GbdtError::CorruptModel(m);
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(|v| v.as_str()) != Some(FORMAT_NAME) {
        return Err(corrupt("missing or unknown format tag".into()));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| corrupt("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(GbdtError::VersionError { found: version, supported: FORMAT_VERSION });
    }
    let c: Container = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let model = BoostedModel {
        config: c.config,
        n_features: c.n_features,
        base_score: c.base_score,
        best_iteration: c.best_iteration,
        bin_edges: c.bin_edges,
        trees: c.trees,
    };
    check(&model).map_err(corrupt)?;
    Ok(model)
}

fn check(m: &BoostedModel) -> Result<(), String> {
    if m.best_iteration > m.trees.len() {
        return Err(format!("best_iteration {} exceeds {} trees", m.best_iteration, m.trees.len()));
    }
    if m.bin_edges.len() != m.n_features {
        return Err("bin edge table does not match feature count".into());
    }
    if !m.base_score.is_finite() {
        return Err("non-finite base score".into());
    }
    for (f, e) in m.bin_edges.iter().enumerate() {
        if !e.windows(2).all(|w| w[0] < w[1]) || e.len() > 255 {
            return Err(format!("bin edges of feature {f} are not strictly increasing"));
        }
    }
    for (t, tree) in m.trees.iter().enumerate() {
        if tree.levels.len() > 16 || tree.leaf_values.len() != 1 << tree.levels.len() {
            return Err(format!("tree {t} has {} leaves for {} levels", tree.leaf_values.len(), tree.levels.len()));
        }
        if tree.leaf_values.iter().any(|v| !v.is_finite()) {
            return Err(format!("tree {t} has a non-finite leaf value"));
        }
        for s in &tree.levels {
            let edges = m.bin_edges.get(s.feature).ok_or_else(|| format!("tree {t} splits on unknown feature {}", s.feature))?;
            if edges.get(s.bin as usize) != Some(&s.threshold) {
                return Err(format!("tree {t} split threshold does not match its bin edge"));
            }
        }
    }
    Ok(())
}

pub fn save_model(model: &BoostedModel, path: &Path) -> Result<(), GbdtError> {
    std::fs::write(path, model_to_json(model) + "\n")
        .map_err(|e| GbdtError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn save_model_with(model: &BoostedModel, path: &Path, provenance: serde_json::Value) -> Result<(), GbdtError> {
    std::fs::write(path, model_to_json_with(model, Some(provenance)) + "\n")
        .map_err(|e| GbdtError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_model(path: &Path) -> Result<BoostedModel, GbdtError> {
    let text = std::fs::read_to_string(path).map_err(|e| GbdtError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::{fit, predict_proba};
    use crate::matrix::DenseMatrix;

    fn model() -> (BoostedModel, DenseMatrix) {
        let rows: Vec<[f64; 3]> = (0..120).map(|i| [(i % 7) as f64 * 0.37, (i % 5) as f64, ((i * 13) % 11) as f64 / 3.0]).collect();
        let y: Vec<u8> = (0..120).map(|i| u8::from((i % 7) + (i % 5) > 5)).collect();
        let x = DenseMatrix::from_rows(&rows);
        let cfg = GbdtConfig { iterations: 25, depth: 3, ..Default::default() };
        (fit(&x, &y, &cfg).unwrap(), x)
    }

    #[test]
    fn save_load_predictions_bit_identical() {
        let (m, x) = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let a = predict_proba(&m, &x).unwrap();
        let b = predict_proba(&back, &x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let (m, _) = model();
        let text = model_to_json(&m);
        assert!(matches!(model_from_json(&text[..text.len() / 2]), Err(GbdtError::CorruptModel(_))));
        assert!(matches!(model_from_json("{}"), Err(GbdtError::CorruptModel(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let (m, _) = model();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["version"] = serde_json::json!(2);
        match model_from_json(&v.to_string()) {
            Err(GbdtError::VersionError { found: 2, supported: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_tree_is_corrupt() {
        let (m, _) = model();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        v["best_iteration"] = serde_json::json!(m.trees.len() + 1);
        assert!(matches!(model_from_json(&v.to_string()), Err(GbdtError::CorruptModel(_))));
    }
}
