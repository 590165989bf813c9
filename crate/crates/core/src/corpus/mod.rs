//! Publication records: schema, ingestion, filtering, labelling, descriptive
//! statistics and a synthetic planted-signal generator.

mod filter;
mod io;
mod labels;
mod record;
mod stats;
mod synth;

pub use filter::{filter_corpus, CorpusFilterConfig, FilterReport};
pub use io::{load_corpus, parse_record_line, read_corpus, write_corpus, LoadedCorpus};
pub use labels::{assign_labels, LabelKind, LabeledDataset};
pub use record::{Concept, LeakageFields, OpenAccess, PublicationRecord, RecordField};
pub use stats::{citation_gap_welch_t, delay_stats, DelayStats, WelchTest};
pub use synth::{synth_corpus, SynthConfig};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error on line {line}, field `{field}`: {message}")]
    SchemaError { line: usize, field: String, message: String },
    #[error("unknown record field `{0}`")]
    UnknownField(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid configuration: {0}")]
    ConfigError(String),
}
