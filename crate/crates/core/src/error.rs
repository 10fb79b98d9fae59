// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the fitting, scoring and sampling routines.
///
/// Positions are reported 0-based (`index`) alongside the 1-based observation
/// number (`position`) used in the mathematical notation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: {len} observations, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("non-finite value at index {index} (observation {position})")]
    NonFiniteValue { index: usize, position: usize },

    #[error("non-positive value {value} at index {index} (observation {position})")]
    NonPositiveValue { index: usize, position: usize, value: f64 },

    #[error("order {order} out of range for series of length {len} (valid: 1..={max})")]
    OrderOutOfRange { order: usize, len: usize, max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("generated series diverged at index {index}: |{value}| exceeds {limit}")]
    Diverged { index: usize, value: f64, limit: f64 },

    #[error("insufficient data: {rows} rows for {cols} columns")]
    InsufficientData { rows: usize, cols: usize },

    #[error("rank-deficient design: numerical rank {rank} of {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("sampled fit at order {order} is rank-deficient after resampling (rank {rank} of {order})")]
    SampledRankDeficient { order: usize, rank: usize },

    #[error("zero residual at order {order}: the fit interpolates the data exactly")]
    ZeroResidual { order: usize },

    #[error("sample size {sample} exceeds the {rows} available rows")]
    SampleExceedsData { sample: usize, rows: usize },

    #[error("sampling distribution has no positive mass")]
    EmptyDistribution,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("exact leverage score is zero at index {index}; relative error undefined")]
    ZeroExactScore { index: usize },
}

impl Error {
    pub(crate) fn at(index: usize) -> (usize, usize) {
        (index, index + 1)
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
