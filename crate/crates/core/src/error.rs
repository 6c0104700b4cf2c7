// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared across the crate.

use std::io;

/// Errors raised by estimation, application, and file IO.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed arguments: wrong lengths, empty inputs, non-finite values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The source sample has zero spread, so a slope cannot be estimated.
    #[error("degenerate source: {0}")]
    DegenerateSource(String),

    /// A linear classifier could not find any direction separating the classes.
    #[error("degenerate classifier: {0}")]
    DegenerateClassifier(String),

    /// Unknown method, layer id, or a model/map shape mismatch.
    #[error("configuration error: {0}")]
    Config(String),

    /// A map with bounded support cannot be folded into a linear layer.
    #[error("cannot fold map {index} into a linear layer: support [{lo}, {hi}] is bounded")]
    FoldUnsupported { index: usize, lo: f64, hi: f64 },

    /// A text file did not follow its declared format.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
