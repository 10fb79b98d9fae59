// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io;
use std::path::PathBuf;

use serde_json::json;

/// Process exit status by error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Usage => "usage",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a finite number")]
    Parse {
        path: PathBuf,
        /// 1-based line number in the file.
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: row {row} has no column {column}")]
    ShortRow { path: PathBuf, row: usize, column: String },

    #[error("{path}: column {wanted:?} not found; available: {}", available.join(", "))]
    MissingColumn {
        path: PathBuf,
        wanted: String,
        available: Vec<String>,
    },

    #[error("{path}: malformed delimited text: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] lsar_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        use lsar_core::Error as E;
        match self {
            CliError::Usage(_) => ErrorClass::Usage,
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::ShortRow { .. }
            | CliError::MissingColumn { .. }
            | CliError::Malformed { .. } => ErrorClass::Data,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } | E::OrderOutOfRange { .. } | E::SampleExceedsData { .. } => {
                    ErrorClass::Usage
                }
                E::SeriesTooShort { .. } | E::NonFiniteValue { .. } | E::NonPositiveValue { .. } => {
                    ErrorClass::Data
                }
                _ => ErrorClass::Numerical,
            },
        }
    }

    /// Stable snake-case identifier of the variant.
    pub fn kind(&self) -> &'static str {
        use lsar_core::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::ShortRow { .. } => "short_row",
            CliError::MissingColumn { .. } => "missing_column",
            CliError::Malformed { .. } => "malformed",
            CliError::Core(e) => match e {
                E::SeriesTooShort { .. } => "series_too_short",
                E::NonFiniteValue { .. } => "non_finite_value",
                E::NonPositiveValue { .. } => "non_positive_value",
                E::OrderOutOfRange { .. } => "order_out_of_range",
                E::InvalidParameter { .. } => "invalid_parameter",
                E::Diverged { .. } => "diverged",
                E::InsufficientData { .. } => "insufficient_data",
                E::RankDeficient { .. } => "rank_deficient",
                E::SampledRankDeficient { .. } => "sampled_rank_deficient",
                E::ZeroResidual { .. } => "zero_residual",
                E::SampleExceedsData { .. } => "sample_exceeds_data",
                E::EmptyDistribution => "empty_distribution",
                E::LengthMismatch { .. } => "length_mismatch",
                E::ZeroExactScore { .. } => "zero_exact_score",
            },
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let class = self.class();
        let mut detail = json!({
            "kind": self.kind(),
            "class": class.name(),
            "exit_code": class.exit_code(),
            "message": self.to_string(),
        });
        let extra = match self {
            CliError::Parse { row, column, .. } | CliError::ShortRow { row, column, .. } => {
                json!({ "row": row, "column": column })
            }
            CliError::MissingColumn { available, .. } => json!({ "available": available }),
            CliError::Core(lsar_core::Error::ZeroResidual { order }) => json!({ "order": order }),
            CliError::Core(lsar_core::Error::SampledRankDeficient { order, rank }) => {
                json!({ "order": order, "rank": rank })
            }
            CliError::Core(lsar_core::Error::NonPositiveValue { index, position, .. }) => {
                json!({ "index": index, "position": position })
            }
            _ => json!({}),
        };
        if let (Some(d), Some(e)) = (detail.as_object_mut(), extra.as_object()) {
            d.extend(e.clone());
        }
        json!({ "error": detail }).to_string()
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
