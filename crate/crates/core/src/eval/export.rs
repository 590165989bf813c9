use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::EvalError;

fn io_err(path: &Path, e: impl ToString) -> EvalError {
    EvalError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Two-column CSV with a header row; `comment`, if given, is a leading `# ` line.
pub fn write_curve_csv(
    path: &Path,
    columns: [&str; 2],
    points: &[(f64, f64)],
    comment: Option<&str>,
) -> Result<(), EvalError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    if let Some(c) = comment {
        writeln!(out, "# {c}").map_err(|e| io_err(path, e))?;
    }
    writeln!(out, "{},{}", columns[0], columns[1]).map_err(|e| io_err(path, e))?;
    for (x, y) in points {
        writeln!(out, "{x},{y}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>, EvalError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| io_err(path, e))?;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let parse = |i: usize| -> Result<f64, EvalError> {
            rec.get(i).ok_or_else(|| io_err(path, "short row"))?.parse::<f64>().map_err(|e| io_err(path, e))
        };
        points.push((parse(0)?, parse(1)?));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        let pts = vec![(0.0, 0.0), (0.1, 1.0 / 3.0), (1.0, 1.0)];
        write_curve_csv(&path, ["fpr", "tpr"], &pts, Some("provenance x")).unwrap();
        assert_eq!(read_curve_csv(&path).unwrap(), pts);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# provenance x\nfpr,tpr\n"));
    }
}
