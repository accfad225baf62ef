use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown record {0}")]
    UnknownRecord(String),
    #[error("registry is locked by another writer ({})", .0.display())]
    Locked(PathBuf),
    #[error("registry: {0}")]
    Registry(String),
    #[error("heavy verification needs --heavy: {0}")]
    Heavy(String),
    #[error("verification failed: {0}")]
    Failed(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Code(#[from] qmcover::code::CodeError),
    #[error("{0}")]
    Construct(#[from] qmcover::construct::ConstructError),
    #[error("{0}")]
    Verify(#[from] qmcover::verify::VerifyError),
    #[error("{0}")]
    Search(#[from] qmcover::search::SearchError),
    #[error("{0}")]
    Table(#[from] qmcover::tables::TableError),
}
