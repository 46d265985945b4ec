use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the localization library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("malformed OBJ at line {line}: {message}")]
    ObjParse { line: usize, message: String },

    #[error("covariance is not positive definite even after jitter")]
    NotPositiveDefinite,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("all importance weights vanished at step {step}")]
    DegenerateWeights { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid face subset: {0}")]
    InvalidFaceSubset(String),

    #[error("no measurements to process")]
    NoMeasurements,

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
