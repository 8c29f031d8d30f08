use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("OBJ parse error at line {line}: {message}")]
    ObjParse { line: usize, message: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndex {
        face: usize,
        index: isize,
        vertex_count: usize,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("mesh is not normalized: {0}")]
    NotNormalized(String),

    #[error("voxel resolution must be at least 2, got {0}")]
    Resolution(usize),

    #[error("voxel format error: {0}")]
    VoxelFormat(String),

    #[error("voxel resolution mismatch: {a} vs {b}")]
    ResolutionMismatch { a: usize, b: usize },

    #[error("input cuboids overlap: cuboid {a} intersects cuboid {b}")]
    OverlappingCuboids { a: usize, b: usize },

    #[error("validation error on field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no catalog entry with class `{0}`")]
    EmptyClass(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
