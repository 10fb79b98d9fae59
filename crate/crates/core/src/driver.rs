// SPDX-License-Identifier: MIT OR Apache-2.0

//! Order selection and fitting by leverage-score sampling.
//!
//! For `p = 1..=max_order` on the growing window `m = n - max_order + p`:
//! fully-approximate scores, their distribution, a sample size with
//! `delta = delta0 / p`, a with-replacement plan, the reduced fit, and the
//! PACF estimate `tau_p` taken as the last coefficient of that fit. The
//! selected order is the largest `p` with `|tau_p| >= k * 1.96 / sqrt(s_p)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::{fit_ols, ArFit, FitSource, PacfLag, PacfTrace};
use crate::recursion::{DeltaSchedule, FitMode, SamplingSettings, ScoreWalk};
use crate::sampling::{Beta, SampleSizeRule};
use crate::series::TimeSeries;

/// A selected lag whose `|tau|` is below this multiple of its band is flagged.
pub const WEAK_SELECTION_MARGIN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlanMode {
    #[default]
    Sampled,
    /// Identity plans; reproduces the exact recursion and full-data fits.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsarConfig {
    pub max_order: usize,
    pub epsilon: f64,
    pub delta0: f64,
    pub delta_schedule: DeltaSchedule,
    pub size_rule: SampleSizeRule,
    /// Band is `bandwidth_multiplier * 1.96 / sqrt(s_p)`.
    pub bandwidth_multiplier: f64,
    pub seed: u64,
    pub plans: PlanMode,
    /// Refit the selected order by full-data least squares.
    pub refit_full: bool,
}

impl LsarConfig {
    pub fn new(max_order: usize) -> Self {
        Self {
            max_order,
            epsilon: 0.5,
            delta0: 0.1,
            delta_schedule: DeltaSchedule::PerOrder,
            size_rule: SampleSizeRule::Fraction(0.001),
            bandwidth_multiplier: 1.0,
            seed: 0,
            plans: PlanMode::Sampled,
            refit_full: false,
        }
    }

    pub fn theoretical(max_order: usize, constant: f64) -> Self {
        Self {
            size_rule: SampleSizeRule::Theoretical {
                constant,
                beta: Beta::default(),
            },
            ..Self::new(max_order)
        }
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.max_order < 1 || series_len <= 2 * self.max_order {
            return Err(Error::OrderOutOfRange {
                order: self.max_order,
                len: series_len,
                max: series_len.saturating_sub(1) / 2,
            });
        }
        let unit = |name, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "must lie in (0, 1)",
                })
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("delta0", self.delta0)?;
        if !(self.bandwidth_multiplier > 0.0 && self.bandwidth_multiplier.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bandwidth_multiplier",
                reason: "must be positive",
            });
        }
        self.size_rule.validate()
    }

    pub fn sampling(&self) -> SamplingSettings {
        SamplingSettings {
            rule: self.size_rule,
            epsilon: self.epsilon,
            delta0: self.delta0,
            schedule: self.delta_schedule,
            seed: self.seed,
        }
    }

    pub(crate) fn fit_mode(&self) -> FitMode {
        match self.plans {
            PlanMode::Sampled => FitMode::Sampled(self.sampling()),
            PlanMode::Full => FitMode::FullSample,
        }
    }
}

/// Wall-clock source for per-order timings; `no_std` callers may use [`NoClock`].
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now(&mut self) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderLog {
    pub order: usize,
    pub window: usize,
    pub sample_size: usize,
    pub requested_sample: usize,
    pub clamp_count: usize,
    pub resampled: bool,
    pub tau: f64,
    pub bandwidth: f64,
    pub residual_norm: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LsarWarning {
    NoSignificantLag,
    /// `|tau|` at the selected lag is within [`WEAK_SELECTION_MARGIN`] of its band.
    WeakSelection { order: usize, ratio: f64 },
    SampleClamped { order: usize, requested: usize, used: usize },
    Resampled { order: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsarResult {
    pub selected_order: usize,
    /// Fit at the selected order on window `n - max_order + p*`; `None` when
    /// no lag is significant.
    pub final_fit: Option<ArFit>,
    pub final_window: usize,
    pub pacf: PacfTrace,
    pub per_order_log: Vec<OrderLog>,
    pub warnings: Vec<LsarWarning>,
}

pub fn run_lsar(series: &TimeSeries, cfg: &LsarConfig) -> Result<LsarResult> {
    run_lsar_with_clock(series, cfg, &mut NoClock)
}

pub fn run_lsar_with_clock(
    series: &TimeSeries,
    cfg: &LsarConfig,
    clock: &mut impl Clock,
) -> Result<LsarResult> {
    let n = series.len();
    cfg.validate(n)?;
    let mut walk = ScoreWalk::new(series, cfg.max_order, cfg.fit_mode())?;
    let mut log = Vec::with_capacity(cfg.max_order);
    let mut coefficients = Vec::with_capacity(cfg.max_order);
    let mut lags = Vec::with_capacity(cfg.max_order);
    let mut warnings = Vec::new();

    loop {
        let start = clock.now();
        let Some(state) = walk.advance()? else { break };
        let wall_time = clock.now() - start;
        let rows = state.scores.len();
        let (requested, used) = state.sample.map_or((rows, rows), |s| (s.requested, s.used));
        let lag = PacfLag::new(
            state.order,
            Some(state.fit.last_coefficient()),
            used,
            cfg.bandwidth_multiplier,
        );
        if requested > used {
            warnings.push(LsarWarning::SampleClamped {
                order: state.order,
                requested,
                used,
            });
        }
        if state.resampled {
            warnings.push(LsarWarning::Resampled { order: state.order });
        }
        log.push(OrderLog {
            order: state.order,
            window: state.window,
            sample_size: used,
            requested_sample: requested,
            clamp_count: state.clamp_count,
            resampled: state.resampled,
            tau: state.fit.last_coefficient(),
            bandwidth: lag.bandwidth,
            residual_norm: state.fit.residual_norm,
            wall_time,
        });
        coefficients.push(state.fit.coefficients.clone());
        lags.push(lag);
    }

    let pacf = PacfTrace::from_lags(lags);
    let selected = pacf.selected_order;
    let final_window = n - cfg.max_order + selected;
    let final_fit = if selected == 0 {
        warnings.push(LsarWarning::NoSignificantLag);
        None
    } else {
        let lag = &pacf.lags[selected - 1];
        let ratio = lag.estimate.unwrap_or(0.0).abs() / lag.bandwidth;
        if ratio < WEAK_SELECTION_MARGIN {
            warnings.push(LsarWarning::WeakSelection {
                order: selected,
                ratio,
            });
        }
        Some(if cfg.refit_full {
            fit_ols(&series.design(selected)?)?
        } else {
            let design = series.window_design(final_window, selected)?;
            let source = match cfg.plans {
                PlanMode::Sampled => FitSource::Sampled,
                PlanMode::Full => FitSource::Full,
            };
            ArFit::from_coefficients(&design, coefficients.swap_remove(selected - 1), source)?
        })
    };

    Ok(LsarResult {
        selected_order: selected,
        final_fit,
        final_window,
        pacf,
        per_order_log: log,
        warnings,
    })
}
