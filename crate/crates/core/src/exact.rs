// SPDX-License-Identifier: MIT OR Apache-2.0

//! Full-data computations: conditional MLE by least squares, hat-matrix
//! leverage scores and the exact sample PACF. Every approximation in the
//! crate is checked against these.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, HouseholderQr};
use crate::series::{ArDesign, TimeSeries};

/// z-value of the two-sided 95% zero-confidence band.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSource {
    Full,
    Sampled,
}

/// Coefficients and residuals of an AR(p) regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub order: usize,
    pub coefficients: Vec<f64>,
    /// `y - X phi` over every row of the design, sampled or not.
    pub residuals: Vec<f64>,
    pub residual_norm: f64,
    /// `||r||^2 / (n - p)`.
    pub noise_variance: f64,
    pub source: FitSource,
}

impl ArFit {
    pub(crate) fn from_coefficients(
        design: &ArDesign<'_>,
        coefficients: Vec<f64>,
        source: FitSource,
    ) -> Result<Self> {
        let residuals = design.residuals(&coefficients)?;
        let rss = norm_sq(&residuals);
        Ok(Self {
            order: design.order(),
            coefficients,
            residual_norm: libm::sqrt(rss),
            noise_variance: rss / design.rows() as f64,
            residuals,
            source,
        })
    }

    pub fn residual_norm_sq(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }

    /// Last coefficient, the PACF estimate at lag `order`.
    pub fn last_coefficient(&self) -> f64 {
        self.coefficients[self.order - 1]
    }
}

pub(crate) fn factor(design: &ArDesign<'_>) -> Result<HouseholderQr> {
    if design.rows() < design.order() {
        return Err(Error::InsufficientData {
            rows: design.rows(),
            cols: design.order(),
        });
    }
    HouseholderQr::new(design.materialize())
}

/// Conditional MLE of the AR coefficients by Householder least squares.
pub fn fit_ols(design: &ArDesign<'_>) -> Result<ArFit> {
    let qr = factor(design)?;
    fit_with(design, &qr)
}

pub(crate) fn fit_with(design: &ArDesign<'_>, qr: &HouseholderQr) -> Result<ArFit> {
    let phi = qr.solve_least_squares(design.response())?;
    ArFit::from_coefficients(design, phi, FitSource::Full)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Quasi,
    FullyApproximate,
}

/// Per-row leverage scores with the sampling distribution they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageScores {
    order: usize,
    scores: Vec<f64>,
    distribution: Vec<f64>,
    provenance: Provenance,
}

impl LeverageScores {
    /// Fails if no score is positive; negative or non-finite entries are
    /// rejected as well.
    pub fn new(order: usize, scores: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let mut total = 0.0;
        for s in &scores {
            if !s.is_finite() || *s < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "scores",
                    reason: "leverage scores must be finite and non-negative",
                });
            }
            total += s;
        }
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let distribution = scores.iter().map(|s| s / total).collect();
        Ok(Self {
            order,
            scores,
            distribution,
            provenance,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// `pi(i) = l(i) / sum(l)`.
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Leverage scores as squared row norms of `X R^{-1}`, an orthonormal basis
/// of `range(X)`.
pub fn exact_leverage(design: &ArDesign<'_>) -> Result<LeverageScores> {
    let qr = factor(design)?;
    leverage_with(design, &qr)
}

pub(crate) fn leverage_with(design: &ArDesign<'_>, qr: &HouseholderQr) -> Result<LeverageScores> {
    qr.ensure_full_rank()?;
    let p = design.order();
    let mut row = vec![0.0; p];
    let mut z = vec![0.0; p];
    let scores = (0..design.rows())
        .map(|i| {
            design.row_into(i, &mut row);
            qr.solve_rt_into(&row, &mut z);
            norm_sq(&z)
        })
        .collect();
    LeverageScores::new(p, scores, Provenance::Exact)
}

/// PACF value at one lag; `None` when the lag is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacfLag {
    pub lag: usize,
    pub estimate: Option<f64>,
    pub effective_sample: usize,
    pub bandwidth: f64,
}

impl PacfLag {
    pub fn new(lag: usize, estimate: Option<f64>, effective_sample: usize, multiplier: f64) -> Self {
        Self {
            lag,
            estimate,
            effective_sample,
            bandwidth: multiplier * Z_95 / libm::sqrt(effective_sample as f64),
        }
    }

    pub fn is_significant(&self) -> bool {
        self.estimate.is_some_and(|t| t.abs() >= self.bandwidth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacfTrace {
    pub lags: Vec<PacfLag>,
    /// Largest lag outside its zero-confidence band, 0 if none.
    pub selected_order: usize,
}

impl PacfTrace {
    pub fn from_lags(lags: Vec<PacfLag>) -> Self {
        let selected_order = lags
            .iter()
            .filter(|l| l.is_significant())
            .map(|l| l.lag)
            .max()
            .unwrap_or(0);
        Self {
            lags,
            selected_order,
        }
    }

    pub fn estimates(&self) -> Vec<Option<f64>> {
        self.lags.iter().map(|l| l.estimate).collect()
    }
}

/// Sample PACF at lags `1..=max_lag` from the last coefficient of each
/// full-data AR(h) fit, with band `1.96 / sqrt(n - max_lag)`.
///
/// A lag whose own regressor is collinear with the shorter lags adds no
/// information and is reported as `0`; any other rank deficiency leaves the
/// lag undefined.
pub fn exact_pacf(series: &TimeSeries, max_lag: usize) -> Result<PacfTrace> {
    exact_pacf_with_band(series, max_lag, 1.0)
}

pub fn exact_pacf_with_band(series: &TimeSeries, max_lag: usize, multiplier: f64) -> Result<PacfTrace> {
    let n = series.len();
    if max_lag < 1 || 2 * max_lag > n {
        return Err(Error::OrderOutOfRange {
            order: max_lag,
            len: n,
            max: n / 2,
        });
    }
    let effective = n - max_lag;
    let lags = (1..=max_lag)
        .map(|h| {
            let design = series.design(h)?;
            let qr = factor(&design)?;
            let estimate = match fit_with(&design, &qr) {
                Ok(fit) => Some(fit.last_coefficient()),
                Err(Error::RankDeficient { .. }) => {
                    if qr.dependent_columns()[h - 1] {
                        Some(0.0)
                    } else {
                        None
                    }
                }
                Err(e) => return Err(e),
            };
            Ok(PacfLag::new(h, estimate, effective, multiplier))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PacfTrace::from_lags(lags))
}
