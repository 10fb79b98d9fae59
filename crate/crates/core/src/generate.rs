// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded AR(p) simulation with Gaussian innovations.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::series::TimeSeries;

/// Any simulated magnitude above this aborts generation.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// `Y_t = sum_k phi_k Y_{t-k} + W_t` with `W_t ~ N(0, sigma^2)`.
///
/// Causality of `phi` is not checked; explosive recurrences trip the
/// divergence guard instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ArGeneratorSpec {
    pub coefficients: Vec<f64>,
    pub noise_std: f64,
    pub len: usize,
    /// Discarded leading samples; `None` means `10 p + 1000`.
    pub burn_in: Option<usize>,
    pub seed: u64,
}

impl ArGeneratorSpec {
    pub fn new(coefficients: Vec<f64>, noise_std: f64, len: usize, seed: u64) -> Self {
        Self {
            coefficients,
            noise_std,
            len,
            burn_in: None,
            seed,
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(10 * self.coefficients.len() + 1000)
    }
}

pub fn generate_ar(spec: &ArGeneratorSpec) -> Result<TimeSeries> {
    if !(spec.noise_std > 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_std",
            reason: "must be positive and finite",
        });
    }
    if spec.len < TimeSeries::MIN_LEN {
        return Err(Error::SeriesTooShort {
            len: spec.len,
            min: TimeSeries::MIN_LEN,
        });
    }
    if spec.coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "coefficients",
            reason: "must be finite",
        });
    }
    let p = spec.coefficients.len();
    let burn = spec.burn_in();
    let total = burn + spec.len;
    let mut rng = stream_rng(spec.seed, 0);
    // p zeros of pre-sample history
    let mut y = vec![0.0; p + total];
    for t in p..p + total {
        let mut v: f64 = spec.noise_std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        for (k, phi) in spec.coefficients.iter().enumerate() {
            v += phi * y[t - 1 - k];
        }
        if v.abs() > DIVERGENCE_LIMIT || !v.is_finite() {
            return Err(Error::Diverged {
                index: t - p,
                value: v,
                limit: DIVERGENCE_LIMIT,
            });
        }
        y[t] = v;
    }
    y.drain(..p + burn);
    TimeSeries::new(y)
}

/// Known-causal coefficient sets used by tests, benchmarks and the CLI.
pub mod fixtures {
    /// AR(5) with inverse characteristic roots `0.5`, `0.6 e^{+-0.8i}`, `0.7 e^{+-2.2i}`.
    pub const AR5: [f64; 5] = [0.5121, -0.1673, 0.1936, -0.2329, 0.0882];

    /// AR(16) with eight conjugate root pairs of modulus 0.80..0.90.
    pub const AR16: [f64; 16] = [
        0.2603, -0.5313, 0.2661, -0.4114, 0.0975, -0.1856, 0.0957, -0.2286, 0.0596, -0.2333,
        0.0685, -0.1346, 0.0136, -0.1148, 0.0167, -0.0884,
    ];

    /// AR(20) with ten conjugate root pairs of modulus 0.93..0.97; the lag-20
    /// partial autocorrelation equals `phi_20 = -0.3732`.
    pub const AR20: [f64; 20] = [
        0.6334, -0.441, 0.416, -0.3159, 0.31, -0.3146, 0.2904, -0.1604, 0.1607, -0.1832, 0.2053,
        -0.2138, 0.1235, -0.1133, 0.1394, -0.1618, 0.1498, -0.185, 0.2105, -0.3732,
    ];
}
