//! Crate-wide error type and process exit-code mapping.
//!
//! Exit codes are part of the CLI contract: 0 success, 2 configuration or
//! usage error, 3 solver failure, 4 mesh error.

use crate::mesh::CellType;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported cell type {cell_type:?} for nsd = {nsd}")]
    UnsupportedCellType { cell_type: CellType, nsd: usize },

    #[error("degenerate cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("adaptivity error: {0}")]
    Adapt(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 solver, 4 mesh.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::Solver(_) | Error::Adapt(_) => 3,
            Error::UnsupportedCellType { .. }
            | Error::DegenerateCell { .. }
            | Error::Mesh(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
