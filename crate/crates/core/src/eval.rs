// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error metrics, bound curves, sampling-scheme comparisons and timings.

use alloc::vec::Vec;

use rand::RngCore;

use crate::driver::Clock;
use crate::error::{Error, Result};
use crate::exact::{factor, fit_with, leverage_with, ArFit, LeverageScores};
use crate::linalg::{norm, norm_sq, HouseholderQr};
use crate::recursion::{walk_to, FitMode, SamplingSettings, ScoreWalk};
use crate::rng::stream_rng;
use crate::sampling::{reduced_fit, SampleSizeRule, SamplingPlan};
use crate::series::{ArDesign, TimeSeries};

/// Maximum pointwise relative error `max_i |l_hat(i) - l(i)| / l(i)`.
pub fn mpre(exact: &LeverageScores, approx: &LeverageScores) -> Result<f64> {
    mpre_slices(exact.scores(), approx.scores())
}

pub fn mpre_slices(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            found: approx.len(),
        });
    }
    let mut worst = 0.0_f64;
    for (i, (l, a)) in exact.iter().zip(approx).enumerate() {
        if *l <= 0.0 {
            return Err(Error::ZeroExactScore { index: i });
        }
        worst = worst.max((a - l).abs() / l);
    }
    Ok(worst)
}

/// Conditioning and goodness of fit of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub kappa: f64,
    /// `||X phi|| / ||y||` for the full-data fit.
    pub xi: f64,
    /// `kappa * sqrt(xi^-2 - 1)`.
    pub eta: f64,
}

impl BoundInputs {
    pub fn new(kappa: f64, xi: f64) -> Self {
        let eta = kappa * libm::sqrt((1.0 / (xi * xi) - 1.0).max(0.0));
        Self { kappa, xi, eta }
    }
}

pub fn bound_inputs(design: &ArDesign<'_>) -> Result<BoundInputs> {
    let qr = factor(design)?;
    let fit = fit_with(design, &qr)?;
    inputs_with(design, &qr, &fit)
}

fn inputs_with(design: &ArDesign<'_>, qr: &HouseholderQr, fit: &ArFit) -> Result<BoundInputs> {
    let y_sq = norm_sq(design.response());
    let fitted_sq = (y_sq - fit.residual_norm_sq()).max(0.0);
    let xi = if y_sq > 0.0 { libm::sqrt(fitted_sq / y_sq) } else { 1.0 };
    Ok(BoundInputs::new(qr.condition_number()?, xi))
}

/// `(1 + 3 eta_prev kappa^2) (p - 1) sqrt(eps)`, where `eta_prev` belongs to
/// the order `p - 1` design on the shorter window and `kappa` to the order `p` design.
pub fn theorem_bound_linear(order: usize, eta_prev: f64, kappa: f64, epsilon: f64) -> f64 {
    (1.0 + 3.0 * eta_prev * kappa * kappa) * (order as f64 - 1.0) * libm::sqrt(epsilon)
}

/// As [`theorem_bound_linear`] with `p - 1` replaced by `c_log ln p`.
pub fn theorem_bound_log(order: usize, eta_prev: f64, kappa: f64, epsilon: f64, c_log: f64) -> f64 {
    (1.0 + 3.0 * eta_prev * kappa * kappa) * c_log * libm::log(order as f64) * libm::sqrt(epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub order: usize,
    pub window: usize,
    pub inputs: BoundInputs,
    pub eta_prev: f64,
    pub bound_linear: f64,
    pub bound_log: f64,
}

/// Both bound curves for orders `1..=top` on the windows `n - top + p`.
pub fn bound_curves(series: &TimeSeries, top: usize, epsilon: f64, c_log: f64) -> Result<Vec<BoundRow>> {
    let n = series.len();
    if top < 1 || n < 2 * top {
        return Err(Error::OrderOutOfRange {
            order: top,
            len: n,
            max: n / 2,
        });
    }
    let mut eta_prev = 0.0;
    (1..=top)
        .map(|p| {
            let window = n - top + p;
            let inputs = bound_inputs(&series.window_design(window, p)?)?;
            let row = BoundRow {
                order: p,
                window,
                inputs,
                eta_prev,
                bound_linear: theorem_bound_linear(p, eta_prev, inputs.kappa, epsilon),
                bound_log: theorem_bound_log(p, eta_prev, inputs.kappa, epsilon, c_log),
            };
            eta_prev = inputs.eta;
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpreRow {
    pub order: usize,
    pub window: usize,
    pub sample_size: usize,
    pub clamp_count: usize,
    pub mpre: f64,
    pub kappa: f64,
    pub xi: f64,
    pub eta: f64,
    /// `eta` of the previous order; zero at order 1.
    pub eta_prev: f64,
    pub bound_linear: f64,
    pub bound_log: f64,
}

impl MpreRow {
    pub fn within_linear_bound(&self) -> bool {
        self.mpre <= self.bound_linear
    }
}

/// MPRE of the fully-approximate scores against exact scores, with both
/// bound curves, at every order of a walk to `top`.
///
/// One factorization per order serves the exact scores, `kappa` and `eta`.
pub fn mpre_curve(
    series: &TimeSeries,
    top: usize,
    settings: SamplingSettings,
    c_log: f64,
) -> Result<Vec<MpreRow>> {
    let mut walk = ScoreWalk::new(series, top, FitMode::Sampled(settings))?;
    let mut rows = Vec::with_capacity(top);
    let mut eta_prev = 0.0;
    while let Some(state) = walk.advance()? {
        let design = series.window_design(state.window, state.order)?;
        let qr = factor(&design)?;
        let exact = if state.order == 1 {
            // closed form at order 1
            state.scores.clone()
        } else {
            leverage_with(&design, &qr)?
        };
        let fit = fit_with(&design, &qr)?;
        let inputs = inputs_with(&design, &qr, &fit)?;
        let eps = settings.epsilon;
        rows.push(MpreRow {
            order: state.order,
            window: state.window,
            sample_size: state.sample.map_or(design.rows(), |s| s.used),
            clamp_count: state.clamp_count,
            mpre: mpre(&exact, &state.scores)?,
            kappa: inputs.kappa,
            xi: inputs.xi,
            eta: inputs.eta,
            eta_prev,
            bound_linear: theorem_bound_linear(state.order, eta_prev, inputs.kappa, eps),
            bound_log: theorem_bound_log(state.order, eta_prev, inputs.kappa, eps, c_log),
        });
        eta_prev = inputs.eta;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Fully-approximate leverage scores along the order walk.
    Leverage,
    /// `pi(i) = 1 / (m - p)`.
    Uniform,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Leverage, Scheme::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Leverage => "leverage",
            Scheme::Uniform => "uniform",
        }
    }
}

/// One sampled estimate compared against the full-data fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOutcome {
    /// `||phi_hat - phi|| / ||phi||`.
    pub rel_param_err: f64,
    /// `||r_hat|| / ||r||`.
    pub resid_ratio: f64,
}

/// Full-data reference fit for a ratio study.
pub fn reference_fit(series: &TimeSeries, order: usize) -> Result<ArFit> {
    crate::exact::fit_ols(&series.design(order)?)
}

/// One `(s, scheme, rep)` cell; `Ok(None)` when the reduced system was rank-deficient.
pub fn ratio_cell(
    series: &TimeSeries,
    reference: &ArFit,
    sample_size: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<Option<CellOutcome>> {
    let order = reference.order;
    let fitted = match scheme {
        Scheme::Leverage => {
            let settings = SamplingSettings {
                rule: SampleSizeRule::Fixed(sample_size),
                epsilon: 0.5,
                delta0: 0.1,
                schedule: Default::default(),
                seed,
            };
            walk_to(series, order, FitMode::Sampled(settings)).map(|s| s.fit)
        }
        Scheme::Uniform => {
            let design = series.design(order)?;
            let plan = SamplingPlan::uniform(design.rows(), sample_size, &mut stream_rng(seed, 0))?;
            reduced_fit(&design, &plan)
        }
    };
    let fit = match fitted {
        Ok(fit) => fit,
        Err(Error::RankDeficient { .. } | Error::SampledRankDeficient { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let diff: Vec<f64> = fit
        .coefficients
        .iter()
        .zip(&reference.coefficients)
        .map(|(a, b)| a - b)
        .collect();
    Ok(Some(CellOutcome {
        rel_param_err: norm(&diff) / norm(&reference.coefficients),
        resid_ratio: fit.residual_norm / reference.residual_norm,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub sample_size: usize,
    pub scheme: Scheme,
    /// Mean over the usable repetitions.
    pub rel_param_err: f64,
    pub resid_ratio: f64,
    /// Smallest residual ratio seen in any repetition.
    pub min_resid_ratio: f64,
    pub reps: usize,
    pub rank_deficient: usize,
}

/// Seed of repetition `rep` for sample-size index `k` and `scheme`.
pub fn cell_seed(seed: u64, size_index: usize, scheme: Scheme, rep: usize) -> u64 {
    let key = ((size_index as u64) << 32) | ((rep as u64) << 1) | (scheme as u64);
    stream_rng(seed, key).next_u64()
}

/// Aggregates cell outcomes into one row.
pub fn ratio_row(
    sample_size: usize,
    scheme: Scheme,
    outcomes: impl IntoIterator<Item = Option<CellOutcome>>,
) -> RatioRow {
    let (mut err, mut ratio, mut min_ratio) = (0.0, 0.0, f64::INFINITY);
    let (mut reps, mut rank_deficient) = (0, 0);
    for outcome in outcomes {
        match outcome {
            Some(c) => {
                err += c.rel_param_err;
                ratio += c.resid_ratio;
                min_ratio = min_ratio.min(c.resid_ratio);
                reps += 1;
            }
            None => rank_deficient += 1,
        }
    }
    let denom = reps.max(1) as f64;
    RatioRow {
        sample_size,
        scheme,
        rel_param_err: err / denom,
        resid_ratio: ratio / denom,
        min_resid_ratio: min_ratio,
        reps,
        rank_deficient,
    }
}

/// Mean relative parameter error and residual ratio per sample size and
/// scheme, in the order `sizes x [leverage, uniform]`.
pub fn ratio_study(
    series: &TimeSeries,
    order: usize,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<RatioRow>> {
    let reference = reference_fit(series, order)?;
    check_sizes(order, sizes, series.len() - order)?;
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for (k, &s) in sizes.iter().enumerate() {
        for scheme in Scheme::ALL {
            let outcomes = (0..reps)
                .map(|rep| ratio_cell(series, &reference, s, scheme, cell_seed(seed, k, scheme, rep)))
                .collect::<Result<Vec<_>>>()?;
            rows.push(ratio_row(s, scheme, outcomes));
        }
    }
    Ok(rows)
}

pub fn check_sizes(order: usize, sizes: &[usize], rows: usize) -> Result<()> {
    for &s in sizes {
        if s < order + 1 {
            return Err(Error::InvalidParameter {
                name: "sizes",
                reason: "every sample size must be at least p + 1",
            });
        }
        if s > rows {
            return Err(Error::SampleExceedsData { sample: s, rows });
        }
    }
    Ok(())
}

/// Multiplies `ceil(fraction * n)` distinct random entries by `factor`.
pub fn contaminate(series: &TimeSeries, fraction: f64, factor: f64, seed: u64) -> Result<TimeSeries> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "fraction",
            reason: "must lie in (0, 1]",
        });
    }
    let n = series.len();
    let count = (libm::ceil(fraction * n as f64) as usize).min(n);
    let mut values = series.values().to_vec();
    for i in rand::seq::index::sample(&mut stream_rng(seed, 1), n, count) {
        values[i] *= factor;
    }
    TimeSeries::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub order: usize,
    /// Median seconds for the exact scores of the order-`p` design.
    pub time_exact: f64,
    /// Median seconds for one step of the fully-approximate walk.
    pub time_approx: f64,
    /// `(max - min) / median` across repetitions.
    pub spread_exact: f64,
    pub spread_approx: f64,
}

pub const TIMING_REPEATS: usize = 3;
pub const TIMING_WARMUP: usize = 1;

/// Per-order wall time of exact scores versus the fully-approximate walk.
/// One warmup pass is discarded; the median of three is reported.
pub fn timing_study(
    series: &TimeSeries,
    top: usize,
    settings: SamplingSettings,
    clock: &mut impl Clock,
) -> Result<Vec<TimingRow>> {
    let mut exact = Vec::with_capacity(TIMING_REPEATS);
    let mut approx = Vec::with_capacity(TIMING_REPEATS);
    for pass in 0..TIMING_WARMUP + TIMING_REPEATS {
        let mut walk = ScoreWalk::new(series, top, FitMode::Sampled(settings))?;
        let mut t_exact = Vec::with_capacity(top);
        let mut t_approx = Vec::with_capacity(top);
        loop {
            let start = clock.now();
            let Some(state) = walk.advance()? else { break };
            t_approx.push(clock.now() - start);
            let (window, order) = (state.window, state.order);
            let start = clock.now();
            let scores = crate::exact::exact_leverage(&series.window_design(window, order)?)?;
            t_exact.push(clock.now() - start);
            core::hint::black_box(scores);
        }
        if pass >= TIMING_WARMUP {
            exact.push(t_exact);
            approx.push(t_approx);
        }
    }
    Ok((0..top)
        .map(|k| {
            let (me, se) = median_spread(exact.iter().map(|t| t[k]));
            let (ma, sa) = median_spread(approx.iter().map(|t| t[k]));
            TimingRow {
                order: k + 1,
                time_exact: me,
                time_approx: ma,
                spread_exact: se,
                spread_approx: sa,
            }
        })
        .collect())
}

/// Median and `(max - min) / median` of a small sample.
pub fn median_spread(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    let median = if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    };
    let range = v[v.len() - 1] - v[0];
    let spread = if median > 0.0 { range / median } else { 0.0 };
    (median, spread)
}

/// Least-squares slope of `ln y` on `ln x` over points with positive coordinates.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (libm::log(*x), libm::log(*y)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Provenance;
    use crate::generate::{fixtures, generate_ar, ArGeneratorSpec};
    use alloc::vec;

    fn scores(v: &[f64]) -> LeverageScores {
        LeverageScores::new(2, v.to_vec(), Provenance::Exact).unwrap()
    }

    #[test]
    fn mpre_examples() {
        let e = scores(&[0.2, 0.8]);
        assert!((mpre(&e, &scores(&[0.25, 0.7])).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(mpre(&e, &e).unwrap(), 0.0);
        let z = scores(&[0.0, 1.0]);
        assert_eq!(mpre(&z, &e), Err(Error::ZeroExactScore { index: 0 }));
    }

    #[test]
    fn mpre_length_mismatch() {
        assert!(matches!(
            mpre_slices(&[0.5, 0.5], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn bound_examples() {
        let inputs = BoundInputs::new(3.0, 1.0);
        assert_eq!(inputs.eta, 0.0);
        assert!((theorem_bound_linear(2, inputs.eta, 3.0, 0.01) - 0.1).abs() < 1e-15);
        assert_eq!(theorem_bound_linear(1, 2.0, 5.0, 0.5), 0.0);
        assert_eq!(theorem_bound_log(1, 2.0, 5.0, 0.5, 1.0), 0.0);
    }

    #[test]
    fn bound_monotone_in_epsilon() {
        let mut last = 0.0;
        for eps in [0.01, 0.05, 0.1, 0.3, 0.9] {
            let b = theorem_bound_linear(7, 0.4, 12.0, eps);
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn eta_from_fit() {
        // y = 0.5 y_{t-1} + noise: xi < 1 and eta = kappa sqrt(xi^-2 - 1)
        let y = generate_ar(&ArGeneratorSpec::new(vec![0.5], 1.0, 2_000, 4)).unwrap();
        let b = bound_inputs(&y.design(1).unwrap()).unwrap();
        assert!((b.kappa - 1.0).abs() < 1e-9);
        assert!(b.xi > 0.3 && b.xi < 0.7);
        assert!((b.eta - b.kappa * libm::sqrt(1.0 / (b.xi * b.xi) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn full_sample_ratio_is_degenerate() {
        let y = generate_ar(&ArGeneratorSpec::new(fixtures::AR5.to_vec(), 1.0, 600, 4)).unwrap();
        let reference = reference_fit(&y, 5).unwrap();
        let design = y.design(5).unwrap();
        let fit = reduced_fit(&design, &SamplingPlan::full(design.rows())).unwrap();
        let diff: Vec<f64> = fit.coefficients.iter().zip(&reference.coefficients).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) / norm(&reference.coefficients) < 1e-12);
        assert!((fit.residual_norm / reference.residual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_rows_respect_optimality() {
        let y = generate_ar(&ArGeneratorSpec::new(fixtures::AR5.to_vec(), 1.0, 3_000, 4)).unwrap();
        let rows = ratio_study(&y, 5, &[50, 200], 5, 1).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert!(row.min_resid_ratio >= 1.0 - 1e-10, "{row:?}");
            assert!(row.rel_param_err.is_finite() && row.rel_param_err >= 0.0);
            assert_eq!(row.reps + row.rank_deficient, 5);
        }
    }

    #[test]
    fn ratio_study_rejects_small_sizes() {
        let y = generate_ar(&ArGeneratorSpec::new(vec![0.3], 1.0, 300, 4)).unwrap();
        assert!(ratio_study(&y, 5, &[5], 1, 0).is_err());
    }

    #[test]
    fn contamination_count() {
        let y = generate_ar(&ArGeneratorSpec::new(vec![0.3], 1.0, 10_000, 4)).unwrap();
        let c = contaminate(&y, 0.001, 50.0, 9).unwrap();
        let changed = y.values().iter().zip(c.values()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 10);
        assert_eq!(c, contaminate(&y, 0.001, 50.0, 9).unwrap());
    }

    #[test]
    fn median_and_slope() {
        assert_eq!(median_spread([3.0, 1.0, 2.0].into_iter()), (2.0, 1.0));
        let pts: Vec<(f64, f64)> = (1..10).map(|x| (x as f64, 2.0 * (x * x) as f64)).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mpre_curve_rows() {
        let y = generate_ar(&ArGeneratorSpec::new(fixtures::AR5.to_vec(), 1.0, 4_000, 4)).unwrap();
        let settings = SamplingSettings {
            rule: SampleSizeRule::Fraction(0.1),
            epsilon: 0.5,
            delta0: 0.1,
            schedule: Default::default(),
            seed: 2,
        };
        let rows = mpre_curve(&y, 8, settings, 1.0).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].mpre, 0.0);
        assert_eq!(rows[0].bound_linear, 0.0);
        for r in &rows {
            assert!(r.mpre.is_finite() && r.mpre >= 0.0);
            assert!(r.kappa >= 1.0);
        }
        for w in rows.windows(2) {
            assert_eq!(w[1].eta_prev, w[0].eta);
        }
        let bounds = bound_curves(&y, 8, 0.5, 1.0).unwrap();
        for (b, r) in bounds.iter().zip(&rows) {
            assert_eq!(b.bound_linear, r.bound_linear);
            assert_eq!(b.inputs.kappa, r.kappa);
        }
    }
}
