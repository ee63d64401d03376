// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical or numerical input is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("integration failed at t = {t:.6e} s: {reason}")]
    Integration { t: f64, reason: String },

    #[error("periodic steady state not reached after {periods} periods (last residual {residual:.3e})")]
    NotConverged { periods: usize, residual: f64 },

    #[error("Fock cutoff too small: population {population:.3e} in the top level exceeds {limit:.1e}; increase n_max")]
    CutoffViolation { population: f64, limit: f64 },

    #[error("aliasing: {samples} samples per period cannot resolve {harmonics} harmonics")]
    Aliasing { samples: usize, harmonics: usize },

    #[error("no half-maximum crossings found on both sides of the peak")]
    NoHalfCrossing,

    #[error("{0}")]
    NotBracketed(String),

    #[error("objective returned a non-finite value at {params:?}")]
    NonFiniteObjective { params: Vec<f64> },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
