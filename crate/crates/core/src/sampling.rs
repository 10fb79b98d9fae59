// SPDX-License-Identifier: MIT OR Apache-2.0

//! With-replacement row sampling and the reduced least-squares solve.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::exact::{ArFit, FitSource, LeverageScores};
use crate::linalg::{HouseholderQr, Matrix};
use crate::rng::Rng;
use crate::series::ArDesign;

/// Rows drawn i.i.d. from a distribution `pi`, each rescaled by `1/sqrt(s pi_i)`.
///
/// Indices are 0-based row numbers of the design the distribution belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    indices: Vec<usize>,
    weights: Vec<f64>,
    rows: usize,
    checksum: u64,
}

impl SamplingPlan {
    pub fn sample_size(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of rows of the design the plan indexes into.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// FNV-1a digest of the source distribution's bit patterns.
    pub fn source_checksum(&self) -> u64 {
        self.checksum
    }

    /// Every row exactly once with unit weight, i.e. `S = I`.
    pub fn full(rows: usize) -> Self {
        Self {
            indices: (0..rows).collect(),
            weights: alloc::vec![1.0; rows],
            rows,
            checksum: 0,
        }
    }

    /// `s` draws from the uniform distribution over `rows`.
    pub fn uniform(rows: usize, sample_size: usize, rng: &mut Rng) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_size",
                reason: "must be at least 1",
            });
        }
        if rows == 0 {
            return Err(Error::EmptyDistribution);
        }
        let pick = Uniform::new(0, rows).map_err(|_| Error::EmptyDistribution)?;
        let weight = libm::sqrt(rows as f64 / sample_size as f64);
        Ok(Self {
            indices: (0..sample_size).map(|_| pick.sample(rng)).collect(),
            weights: alloc::vec![weight; sample_size],
            rows,
            checksum: 0,
        })
    }
}

fn fnv1a(values: &[f64]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
    hash
}

/// Draws `s` rows with replacement from the scores' distribution.
pub fn draw_plan(scores: &LeverageScores, sample_size: usize, rng: &mut Rng) -> Result<SamplingPlan> {
    draw_from_distribution(scores.distribution(), sample_size, rng)
}

pub fn draw_from_distribution(pi: &[f64], sample_size: usize, rng: &mut Rng) -> Result<SamplingPlan> {
    if sample_size == 0 {
        return Err(Error::InvalidParameter {
            name: "sample_size",
            reason: "must be at least 1",
        });
    }
    let index = WeightedIndex::new(pi).map_err(|_| Error::EmptyDistribution)?;
    let s = sample_size as f64;
    let indices: Vec<usize> = (0..sample_size).map(|_| index.sample(rng)).collect();
    let weights = indices.iter().map(|&i| 1.0 / libm::sqrt(s * pi[i])).collect();
    Ok(SamplingPlan {
        indices,
        weights,
        rows: pi.len(),
        checksum: fnv1a(pi),
    })
}

/// Solves the weighted reduced problem `min ||S X phi - S y||` and evaluates
/// the residual `y - X phi` on the full design.
pub fn reduced_fit(design: &ArDesign<'_>, plan: &SamplingPlan) -> Result<ArFit> {
    if plan.rows() != design.rows() {
        return Err(Error::LengthMismatch {
            expected: design.rows(),
            found: plan.rows(),
        });
    }
    let p = design.order();
    let s = plan.sample_size();
    if s < p {
        return Err(Error::InsufficientData { rows: s, cols: p });
    }
    let mut reduced = Matrix::zeros(s, p);
    let mut rhs = Vec::with_capacity(s);
    let series = design.series();
    for (k, (&i, &w)) in plan.indices().iter().zip(plan.weights()).enumerate() {
        for j in 0..p {
            reduced[(k, j)] = w * series[i + p - 1 - j];
        }
        rhs.push(w * design.response_at(i));
    }
    let qr = HouseholderQr::new(reduced)?;
    let phi = qr.solve_least_squares(&rhs)?;
    ArFit::from_coefficients(design, phi, FitSource::Sampled)
}

/// Misestimation factor used by the theoretical size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Fixed(f64),
    /// `max(floor, 1 - c * p * sqrt(eps))`.
    OrderScaled { c: f64, floor: f64 },
}

impl Default for Beta {
    fn default() -> Self {
        Beta::OrderScaled { c: 1.0, floor: 0.1 }
    }
}

impl Beta {
    pub fn value(&self, order: usize, epsilon: f64) -> f64 {
        match *self {
            Beta::Fixed(b) => b,
            Beta::OrderScaled { c, floor } => floor.max(1.0 - c * order as f64 * libm::sqrt(epsilon)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSizeRule {
    /// `s = ceil(c p ln(p/delta) / (beta eps^2))`; errors when `s` exceeds
    /// the available rows.
    Theoretical { constant: f64, beta: Beta },
    /// `s = ceil(f n)`; clamped to the available rows.
    Fraction(f64),
    /// A fixed `s`; clamped to the available rows.
    Fixed(usize),
}

impl SampleSizeRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SampleSizeRule::Theoretical { constant, beta } => {
                if !(constant > 0.0 && constant.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "constant",
                        reason: "must be positive",
                    });
                }
                match beta {
                    Beta::Fixed(b) if !(b > 0.0 && b <= 1.0) => Err(Error::InvalidParameter {
                        name: "beta",
                        reason: "must lie in (0, 1]",
                    }),
                    Beta::OrderScaled { c, floor } if !(c >= 0.0 && floor > 0.0 && floor <= 1.0) => {
                        Err(Error::InvalidParameter {
                            name: "beta",
                            reason: "corollary form needs c >= 0 and floor in (0, 1]",
                        })
                    }
                    _ => Ok(()),
                }
            }
            SampleSizeRule::Fraction(f) if !(f > 0.0 && f < 1.0) => Err(Error::InvalidParameter {
                name: "fraction",
                reason: "must lie in (0, 1)",
            }),
            SampleSizeRule::Fixed(0) => Err(Error::InvalidParameter {
                name: "sample_size",
                reason: "must be at least 1",
            }),
            _ => Ok(()),
        }
    }

    /// Sample size before clamping, floored at `p + 1`.
    pub fn raw(&self, order: usize, series_len: usize, epsilon: f64, delta: f64) -> Result<usize> {
        self.validate()?;
        let floor = order + 1;
        let s = match *self {
            SampleSizeRule::Theoretical { constant, beta } => {
                check_unit_interval("epsilon", epsilon)?;
                check_unit_interval("delta", delta)?;
                let p = order as f64;
                let b = beta.value(order, epsilon);
                let s = constant * p * libm::log(p / delta) / (b * epsilon * epsilon);
                libm::ceil(s) as usize
            }
            SampleSizeRule::Fraction(f) => libm::ceil(f * series_len as f64) as usize,
            SampleSizeRule::Fixed(s) => s,
        };
        Ok(s.max(floor))
    }
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must lie in (0, 1)",
        })
    }
}

/// Resolved sample size for one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSize {
    pub requested: usize,
    pub used: usize,
}

impl SampleSize {
    pub fn clamped(&self) -> bool {
        self.used < self.requested
    }
}

/// Applies the rule for order `p` on a series of length `n`, where the
/// design being sampled has `rows` rows.
pub fn sample_size(
    rule: &SampleSizeRule,
    order: usize,
    series_len: usize,
    rows: usize,
    epsilon: f64,
    delta: f64,
) -> Result<SampleSize> {
    let requested = rule.raw(order, series_len, epsilon, delta)?;
    if requested <= rows {
        return Ok(SampleSize { requested, used: requested });
    }
    match rule {
        SampleSizeRule::Theoretical { .. } => Err(Error::SampleExceedsData {
            sample: requested,
            rows,
        }),
        _ => Ok(SampleSize { requested, used: rows }),
    }
}
