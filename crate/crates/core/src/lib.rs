// SPDX-License-Identifier: MIT OR Apache-2.0

//! Autoregressive model fitting by leverage-score row sampling.
//!
//! The AR(p) design matrix of a series is never formed; [`ArDesign`] is a
//! lagged view. Leverage scores climb the order ladder one column at a time
//! ([`recursion`]), either exactly or from sampled fits, and [`run_lsar`]
//! uses them to pick the order and fit it.
//!
//! ```
//! use lsar_core::{fixtures, generate_ar, run_lsar, ArGeneratorSpec, LsarConfig, SampleSizeRule};
//!
//! let y = generate_ar(&ArGeneratorSpec::new(fixtures::AR5.to_vec(), 1.0, 20_000, 1)).unwrap();
//! let cfg = LsarConfig { size_rule: SampleSizeRule::Fraction(0.2), bandwidth_multiplier: 2.0, ..LsarConfig::new(10) };
//! let res = run_lsar(&y, &cfg).unwrap();
//! assert_eq!(res.selected_order, 5);
//! ```

#![no_std]

extern crate alloc;

pub mod driver;
pub mod error;
pub mod eval;
pub mod exact;
pub mod generate;
pub mod linalg;
pub mod recursion;
pub mod rng;
pub mod sampling;
pub mod series;

pub use driver::{run_lsar, run_lsar_with_clock, Clock, LsarConfig, LsarResult, LsarWarning, NoClock, OrderLog, PlanMode};
pub use error::{Error, Result};
pub use exact::{exact_leverage, exact_pacf, fit_ols, ArFit, FitSource, LeverageScores, PacfLag, PacfTrace, Provenance};
pub use generate::{fixtures, generate_ar, ArGeneratorSpec};
pub use recursion::{
    exact_recursive_scores, fully_approx_scores, walk_to, DeltaSchedule, FitMode, RecursionState,
    SamplingSettings, ScoreWalk,
};
pub use sampling::{draw_plan, reduced_fit, sample_size, Beta, SampleSize, SampleSizeRule, SamplingPlan};
pub use series::{ArDesign, TimeSeries};
