//! Translational-impact prediction for research publications.
//!
//! The crate turns bibliometric publication records into per-tier feature
//! matrices, trains boosted ensembles of oblivious trees to predict whether a
//! publication will later be cited by a patent or a clinical trial, and
//! evaluates the resulting models (confusion matrices, lift, ROC/PR curves and
//! a per-year temporal audit).
//!
//! Pipeline stages map onto modules:
//!
//! | stage     | module        |
//! |-----------|---------------|
//! | ingest    | [`corpus`]    |
//! | embed     | [`embed`]     |
//! | featurize | [`features`]  |
//! | rebalance | [`sampling`]  |
//! | train     | [`gbdt`]      |
//! | evaluate  | [`eval`]      |
//! | audit     | [`temporal`]  |
//!
//! [`pipeline`] wires the stages together behind experiment profiles and owns
//! the on-disk run-directory layout used by the command-line tool.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod features;
pub mod gbdt;
pub mod matrix;
pub mod pipeline;
pub mod sampling;
pub mod temporal;
pub(crate) mod util;

pub use corpus::{LabelKind, LabeledDataset, PublicationRecord};
pub use embed::{EmbedderConfig, EmbeddingVector};
pub use eval::{ConfusionMatrix, EvalReport};
pub use features::{FeatureMatrix, Tier};
pub use gbdt::{BoostedModel, GbdtConfig};
pub use matrix::DenseMatrix;
