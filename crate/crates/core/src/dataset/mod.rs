//! Tabular input, the feature table, and applying generated sequences.

mod apply;
mod io;
mod split;
mod table;

pub use apply::{
    apply_exprs, apply_sequence, rejections_jsonl, AcceptancePolicy, ApplyOutcome, RejectReason,
    Rejection,
};
pub use io::{
    load_csv, load_csv_reader, load_features_reader, load_labels_reader, write_csv,
    write_csv_string, DatasetMeta, FeatureDescription, Labels,
};
pub use split::{split, split_indices, LabeledSplit, SplitError, SplitIndices, SplitPart};
pub use table::{Column, FeatureTable, Provenance, TableError};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("metadata error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dataset has no rows or no feature columns")]
    Empty,
    #[error(transparent)]
    Table(#[from] TableError),
}
