use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CorpusError, PublicationRecord};

/// Parsed corpus plus the lines that were skipped in lenient mode.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<PublicationRecord>,
    /// `(line number, field, message)` for every skipped line, 1-based.
    pub skipped: Vec<(usize, String, String)>,
}

impl LoadedCorpus {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Loads a JSON-lines record file. Blank lines are ignored. In strict mode the
/// first malformed line aborts the load; otherwise it is skipped and counted.
pub fn load_corpus(path: &Path, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::Io { path: path.to_path_buf(), source: e },
    })?;
    read_corpus(BufReader::new(file), strict).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, strict: bool) -> Result<LoadedCorpus, CorpusError> {
    let mut out = LoadedCorpus::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io { path: Default::default(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(&line, line_no) {
            Ok(r) => out.records.push(r),
            Err(CorpusError::SchemaError { line, field, message }) if !strict => {
                out.skipped.push((line, field, message));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Parses and validates one record line.
pub fn parse_record_line(line: &str, line_no: usize) -> Result<PublicationRecord, CorpusError> {
    let record: PublicationRecord = serde_json::from_str(line).map_err(|e| {
        let message = e.to_string();
        CorpusError::SchemaError { line: line_no, field: field_from_message(&message), message }
    })?;
    record.validate().map_err(|(field, message)| CorpusError::SchemaError {
        line: line_no,
        field: field.to_string(),
        message,
    })?;
    Ok(record)
}

// serde only names the field for "missing field `x`" errors.
fn field_from_message(message: &str) -> String {
    message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next())
        .unwrap_or("<record>")
        .to_string()
}

pub fn write_corpus(path: &Path, records: &[PublicationRecord]) -> Result<(), CorpusError> {
    let io_err = |e| CorpusError::Io { path: path.to_path_buf(), source: e };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| io_err(e.into()))?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
