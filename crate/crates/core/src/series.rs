// SPDX-License-Identifier: MIT OR Apache-2.0

//! Observation vectors, stationarity transforms and the lagged design view.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A finite, real-valued time series `y_1, ..., y_n` with `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub const MIN_LEN: usize = 2;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < Self::MIN_LEN {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                min: Self::MIN_LEN,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            let (index, position) = Error::at(index);
            return Err(Error::NonFiniteValue { index, position });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Leading `len` observations as a series of its own.
    pub fn prefix(&self, len: usize) -> Result<TimeSeries> {
        if len > self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: len,
            });
        }
        TimeSeries::new(self.values[..len].to_vec())
    }

    /// Multiplies every observation by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<TimeSeries> {
        TimeSeries::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Subtracts the sample mean.
    pub fn center(&self) -> TimeSeries {
        let mean = self.mean();
        TimeSeries {
            values: self.values.iter().map(|v| v - mean).collect(),
        }
    }

    /// `log(y_{t+1}) - log(y_t)` for `t = 1..n-1`.
    pub fn log_diff(&self) -> Result<TimeSeries> {
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            let (index, position) = Error::at(index);
            return Err(Error::NonPositiveValue {
                index,
                position,
                value,
            });
        }
        let logs: Vec<f64> = self.values.iter().map(|v| libm::log(*v)).collect();
        TimeSeries::new(logs.windows(2).map(|w| w[1] - w[0]).collect())
    }

    /// Lagged design of order `p` over the whole series.
    pub fn design(&self, order: usize) -> Result<ArDesign<'_>> {
        ArDesign::new(self, order)
    }

    /// Lagged design of order `p` over the first `window` observations.
    pub fn window_design(&self, window: usize, order: usize) -> Result<ArDesign<'_>> {
        if window > self.len() || window < Self::MIN_LEN {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: window,
            });
        }
        ArDesign::from_slice(&self.values[..window], order)
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

/// Zero-copy view of the AR(p) regression problem on a series.
///
/// Row `i` (0-based) is `[y[i+p-1], y[i+p-2], ..., y[i]]` and its response is
/// `y[i+p]`, so there are `n - p` rows. Column `j` is the contiguous slice
/// `y[p-1-j .. n-1-j]`, which is what makes the matrix Toeplitz.
#[derive(Debug, Clone, Copy)]
pub struct ArDesign<'a> {
    values: &'a [f64],
    order: usize,
}

impl<'a> ArDesign<'a> {
    /// Requires `1 <= p <= n - 2` so that at least two rows exist.
    pub fn new(series: &'a TimeSeries, order: usize) -> Result<Self> {
        Self::from_slice(series.values(), order)
    }

    pub(crate) fn from_slice(values: &'a [f64], order: usize) -> Result<Self> {
        let len = values.len();
        let max = len.saturating_sub(2);
        if order < 1 || order > max {
            return Err(Error::OrderOutOfRange { order, len, max });
        }
        Ok(Self { values, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Length of the underlying series window.
    pub fn series_len(&self) -> usize {
        self.values.len()
    }

    pub fn rows(&self) -> usize {
        self.values.len() - self.order
    }

    pub fn series(&self) -> &'a [f64] {
        self.values
    }

    /// Copies row `i` (0-based) into `out`, most recent lag first.
    pub fn row_into(&self, i: usize, out: &mut [f64]) {
        let p = self.order;
        for (j, slot) in out[..p].iter_mut().enumerate() {
            *slot = self.values[i + p - 1 - j];
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.order];
        self.row_into(i, &mut out);
        out
    }

    /// Column `j` (0-based, lag `j + 1`).
    pub fn column(&self, j: usize) -> &'a [f64] {
        let start = self.order - 1 - j;
        &self.values[start..start + self.rows()]
    }

    pub fn response(&self) -> &'a [f64] {
        &self.values[self.order..]
    }

    pub fn response_at(&self, i: usize) -> f64 {
        self.values[self.order + i]
    }

    /// Dense column-major copy; used by factorizations and oracles.
    pub fn materialize(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows(), self.order);
        for j in 0..self.order {
            m.column_mut(j).copy_from_slice(self.column(j));
        }
        m
    }

    /// `y - X phi` evaluated on every row.
    pub fn residuals(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.order {
            return Err(Error::LengthMismatch {
                expected: self.order,
                found: coefficients.len(),
            });
        }
        let mut r = self.response().to_vec();
        for (j, &phi) in coefficients.iter().enumerate() {
            for (ri, x) in r.iter_mut().zip(self.column(j)) {
                *ri -= phi * x;
            }
        }
        Ok(r)
    }
}
