use thiserror::Error;

/// Errors produced by dataset handling, pool generation, and model training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dataset contains a single class; at least two are required")]
    SingleClass,

    #[error("label column {0} not found")]
    LabelColumn(String),

    #[error("class {class} has {count} samples; at least {needed} are required to stratify")]
    TooFewSamples {
        class: usize,
        count: usize,
        needed: usize,
    },

    #[error("split fractions must be positive and sum to 1 (got {0})")]
    BadFractions(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reference set too small: {have} samples available, {want} requested")]
    ReferenceTooSmall { have: usize, want: usize },

    #[error("bootstrap redraw cap exceeded; a class is too rare to cover")]
    BootstrapRetry,

    #[error("no samples passed the consensus filter; increase h_C")]
    EmptyMetaSet,

    #[error("meta-training set has a single competence class")]
    SingleClassMetaSet,

    #[error("meta-training set too small: {0} rows, at least {1} required")]
    MetaSetTooSmall(usize, usize),

    #[error("model file does not match the supplied selection dataset (hash mismatch)")]
    ModelHashMismatch,

    #[error("unknown technique name: {0}")]
    UnknownTechnique(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
