// SPDX-License-Identifier: MIT OR Apache-2.0

//! Wall-clock timing and the parallel ratio study.

use std::time::Instant;

use lsar_core::eval::{cell_seed, check_sizes, ratio_cell, ratio_row, reference_fit, RatioRow, Scheme};
use lsar_core::{Clock, TimeSeries};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Monotonic clock measured from its construction.
#[derive(Debug, Clone, Copy)]
pub struct InstantClock(Instant);

impl InstantClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for InstantClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for InstantClock {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Runs `f` on a dedicated pool; `None` uses rayon's default width.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}"))),
    }
}

/// Same rows as [`lsar_core::eval::ratio_study`], with cells evaluated in
/// parallel on the current rayon pool.
pub fn ratio_study_parallel(
    series: &TimeSeries,
    order: usize,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> lsar_core::Result<Vec<RatioRow>> {
    let reference = reference_fit(series, order)?;
    check_sizes(order, sizes, series.len() - order)?;
    let keys: Vec<(usize, Scheme, usize)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(k, _)| Scheme::ALL.into_iter().flat_map(move |sc| (0..reps).map(move |r| (k, sc, r))))
        .collect();
    let outcomes = keys
        .par_iter()
        .map(|&(k, scheme, rep)| ratio_cell(series, &reference, sizes[k], scheme, cell_seed(seed, k, scheme, rep)))
        .collect::<lsar_core::Result<Vec<_>>>()?;
    Ok(outcomes
        .chunks(reps.max(1))
        .zip(keys.chunks(reps.max(1)))
        .map(|(cells, key)| ratio_row(sizes[key[0].0], key[0].1, cells.iter().copied()))
        .collect())
}
