// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("no population crossing inside (0, {max_duration_s} s)")]
    NoCrossing { max_duration_s: f64 },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
