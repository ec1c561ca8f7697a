//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box has non-positive extent (x_min < x_max and y_min < y_max required)")]
    EmptyBox,
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("point sets must have equal length >= 2 (got {left} and {right})")]
    BadPointCount { left: usize, right: usize },
    #[error("degenerate input: all source points coincide, rotation undefined")]
    DegenerateInput,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsaError {
    #[error("invalid cost matrix: {0}")]
    InvalidMatrix(String),
    #[error("brute-force enumeration limited to n <= 9, got {0}")]
    TooLarge(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("box count mismatch: {left} vs {right} (registration assumes all individuals visible to both agents)")]
    CountMismatch { left: usize, right: usize },
    #[error("geometry failure during alignment: {0}")]
    Geometry(#[from] GeometryError),
    #[error("assignment failure during alignment: {0}")]
    Lsa(#[from] LsaError),
    #[error("ring step between views {from} and {to} failed: {source}")]
    RingPairFailed {
        from: usize,
        to: usize,
        source: Box<RegistrationError>,
    },
    #[error("ring registration needs at least 2 views, got {0}")]
    TooFewViews(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("coordinate {value} outside [0, {extent}]")]
    OutOfRange { value: f64, extent: f64 },
    #[error("too many boxes for one message: {0} > 255")]
    TooMany(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnnError {
    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },
    #[error("degenerate graph input: {0}")]
    DegenerateInput(String),
    #[error("parameter file corrupt: {0}")]
    BadParamsFile(String),
    #[error("dataset file corrupt: {0}")]
    BadDatasetFile(String),
    #[error("wire failure during decentralized inference: {0}")]
    Wire(#[from] WireError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("detection buffer is empty")]
    EmptyBuffer,
    #[error("scout exhausted the spiral without a detection trigger")]
    ScoutTimeout,
    #[error("registration failed: {0}")]
    RegistrationFailed(#[from] RegistrationError),
    #[error("assignment failed: {0}")]
    AssignmentFailed(#[from] GnnError),
    #[error("scene generation failed: {0}")]
    Scene(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("geometry failure: {0}")]
    Geometry(#[from] GeometryError),
    #[error("wire failure: {0}")]
    Wire(#[from] WireError),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}
