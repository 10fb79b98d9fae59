// SPDX-License-Identifier: MIT OR Apache-2.0

//! Order-recursive leverage scores for lagged designs.
//!
//! The AR(p) design on `y_1..y_n` is `[y_{n-1,p-1} | X_{n-1,p-1}]`: its first
//! column is the response of the AR(p-1) problem on `y_1..y_{n-1}` and the
//! remaining columns are that problem's design. Appending a column to a
//! design adds `r(i)^2 / ||r||^2` to every leverage score, where `r` is the
//! residual of regressing the new column on the old ones. Starting from
//! `l_{m,1}(i) = y_i^2 / sum_{t<m} y_t^2`, the walk below climbs orders
//! `1, 2, ..., top` on windows `m_p = n - top + p`, so every order has the
//! same `n - top` rows.
//!
//! With exact fits the scores are the exact hat-matrix diagonal. With fits
//! on rows sampled from the current scores they are the fully-approximate
//! scores.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::{fit_ols, ArFit, LeverageScores, Provenance};
use crate::linalg::norm_sq;
use crate::rng::stream_rng;
use crate::sampling::{draw_plan, reduced_fit, sample_size, SampleSize, SampleSizeRule, SamplingPlan};
use crate::series::TimeSeries;

/// Per-order failure probability schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaSchedule {
    /// `delta = delta0 / p` at order `p`.
    #[default]
    PerOrder,
    /// `delta = 1 - (1 - delta0)^(1 / top)` at every order.
    Uniform,
}

impl DeltaSchedule {
    pub fn delta(&self, delta0: f64, order: usize, top: usize) -> f64 {
        match self {
            DeltaSchedule::PerOrder => delta0 / order as f64,
            DeltaSchedule::Uniform => 1.0 - libm::pow(1.0 - delta0, 1.0 / top as f64),
        }
    }
}

/// Sampling parameters for the fully-approximate walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSettings {
    pub rule: SampleSizeRule,
    pub epsilon: f64,
    pub delta0: f64,
    pub schedule: DeltaSchedule,
    pub seed: u64,
}

/// How the per-order regression that feeds the next order is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMode {
    /// Full-data least squares: exact recursion.
    Exact,
    /// Reduced solve with the identity plan `S = I`.
    FullSample,
    /// Reduced solve on rows drawn from the current scores.
    Sampled(SamplingSettings),
}

/// Everything the walk knows after finishing one order.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionState {
    pub order: usize,
    /// Prefix length `m` of the series in use at this order.
    pub window: usize,
    /// Scores of the order-`p` design on the window, `m - p` of them.
    pub scores: LeverageScores,
    /// Order-`p` fit on the window; its residuals advance the walk to `p + 1`.
    pub fit: ArFit,
    /// Approximate scores pushed back into `[0, 1]`.
    pub clamp_count: usize,
    /// `None` unless rows were sampled.
    pub sample: Option<SampleSize>,
    /// The first sampled system was rank-deficient and was redrawn.
    pub resampled: bool,
}

impl RecursionState {
    pub fn residuals(&self) -> &[f64] {
        &self.fit.residuals
    }

    pub fn residual_norm_sq(&self) -> f64 {
        self.fit.residual_norm_sq()
    }
}

/// Scores with the count of entries that had to be clamped.
struct NextScores {
    order: usize,
    window: usize,
    scores: LeverageScores,
    clamp_count: usize,
}

/// Stepwise evaluation of the recursion up to order `top`.
pub struct ScoreWalk<'a> {
    series: &'a TimeSeries,
    top: usize,
    mode: FitMode,
    state: Option<RecursionState>,
}

impl<'a> ScoreWalk<'a> {
    /// Requires `n - top >= top` so that every order's fit is overdetermined.
    pub fn new(series: &'a TimeSeries, top: usize, mode: FitMode) -> Result<Self> {
        let n = series.len();
        if top < 1 || n < 2 * top || n - top < 2 {
            return Err(Error::OrderOutOfRange {
                order: top,
                len: n,
                max: (n / 2).min(n.saturating_sub(2)),
            });
        }
        if let FitMode::Sampled(settings) = &mode {
            settings.rule.validate()?;
        }
        Ok(Self {
            series,
            top,
            mode,
            state: None,
        })
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn state(&self) -> Option<&RecursionState> {
        self.state.as_ref()
    }

    pub fn into_state(self) -> Option<RecursionState> {
        self.state
    }

    /// Window used at order `p`.
    pub fn window(&self, order: usize) -> usize {
        self.series.len() - self.top + order
    }

    fn provenance(&self, order: usize) -> Provenance {
        match self.mode {
            FitMode::Sampled(_) if order > 1 => Provenance::FullyApproximate,
            _ => Provenance::Exact,
        }
    }

    fn next_scores(&self) -> Result<Option<NextScores>> {
        let order = self.state.as_ref().map_or(1, |s| s.order + 1);
        if order > self.top {
            return Ok(None);
        }
        let window = self.window(order);
        let (scores, clamp_count) = match &self.state {
            None => (first_order_scores(&self.series.values()[..window])?, 0),
            Some(prev) => {
                let response = &self.series.values()[prev.order..prev.window];
                advance_scores(prev, norm_sq(response), self.provenance(order))?
            }
        };
        Ok(Some(NextScores {
            order,
            window,
            scores,
            clamp_count,
        }))
    }

    /// Computes the next order's scores and fit; `None` past `top`.
    pub fn advance(&mut self) -> Result<Option<&RecursionState>> {
        let Some(next) = self.next_scores()? else {
            return Ok(None);
        };
        let design = self.series.window_design(next.window, next.order)?;
        let (fit, sample, resampled) = match self.mode {
            FitMode::Exact => (fit_ols(&design)?, None, false),
            FitMode::FullSample => (reduced_fit(&design, &SamplingPlan::full(design.rows()))?, None, false),
            FitMode::Sampled(settings) => {
                let delta = settings.schedule.delta(settings.delta0, next.order, self.top);
                let size = sample_size(
                    &settings.rule,
                    next.order,
                    self.series.len(),
                    design.rows(),
                    settings.epsilon,
                    delta,
                )?;
                let (fit, resampled) =
                    sampled_fit(&design, &next.scores, size.used, settings.seed, next.order)?;
                (fit, Some(size), resampled)
            }
        };
        self.state = Some(RecursionState {
            order: next.order,
            window: next.window,
            scores: next.scores,
            fit,
            clamp_count: next.clamp_count,
            sample,
            resampled,
        });
        Ok(self.state.as_ref())
    }

    /// Runs to `top` and returns the final scores without fitting that order.
    pub fn final_scores(mut self) -> Result<LeverageScores> {
        for _ in 1..self.top {
            self.advance()?;
        }
        let next = self.next_scores()?.ok_or(Error::OrderOutOfRange {
            order: self.top,
            len: self.series.len(),
            max: self.top,
        })?;
        Ok(next.scores)
    }
}

/// Stream id of attempt `a` at order `p`.
pub(crate) fn order_stream(order: usize, attempt: u64) -> u64 {
    ((order as u64) << 1) | attempt
}

/// Draws a plan and solves; one redraw on a rank-deficient reduced system.
fn sampled_fit(
    design: &crate::series::ArDesign<'_>,
    scores: &LeverageScores,
    size: usize,
    seed: u64,
    order: usize,
) -> Result<(ArFit, bool)> {
    let mut last_rank = 0;
    for attempt in 0..2 {
        let mut rng = stream_rng(seed, order_stream(order, attempt));
        let plan = draw_plan(scores, size, &mut rng)?;
        match reduced_fit(design, &plan) {
            Ok(fit) => return Ok((fit, attempt > 0)),
            Err(Error::RankDeficient { rank, .. }) => last_rank = rank,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SampledRankDeficient {
        order,
        rank: last_rank,
    })
}

/// `l_{m,1}(i) = y_i^2 / sum_{t=1}^{m-1} y_t^2` on the window `y_1..y_m`.
fn first_order_scores(window: &[f64]) -> Result<LeverageScores> {
    let lagged = &window[..window.len() - 1];
    let total = norm_sq(lagged);
    if total == 0.0 {
        return Err(Error::RankDeficient { rank: 0, cols: 1 });
    }
    let scores = lagged.iter().map(|y| y * y / total).collect();
    LeverageScores::new(1, scores, Provenance::Exact)
}

/// Residual norm, relative to the response norm, treated as exact interpolation.
pub const ZERO_RESIDUAL_RTOL: f64 = 1e-12;

fn advance_scores(
    prev: &RecursionState,
    response_norm_sq: f64,
    provenance: Provenance,
) -> Result<(LeverageScores, usize)> {
    let rss = prev.residual_norm_sq();
    let floor = ZERO_RESIDUAL_RTOL * ZERO_RESIDUAL_RTOL * response_norm_sq;
    if rss <= floor || !rss.is_finite() {
        return Err(Error::ZeroResidual { order: prev.order });
    }
    let mut clamp_count = 0;
    let scores: Vec<f64> = prev
        .scores
        .scores()
        .iter()
        .zip(prev.residuals())
        .map(|(l, r)| {
            let v = l + r * r / rss;
            if v > 1.0 {
                clamp_count += 1;
                1.0
            } else {
                v
            }
        })
        .collect();
    Ok((LeverageScores::new(prev.order + 1, scores, provenance)?, clamp_count))
}

/// Exact scores of the order-`p` design on the full series, computed by the
/// recursion with full-data fits at orders `1..p-1`.
pub fn exact_recursive_scores(series: &TimeSeries, order: usize) -> Result<LeverageScores> {
    ScoreWalk::new(series, order, FitMode::Exact)?.final_scores()
}

/// Fully-approximate scores of the order-`p` design on the full series.
///
/// Order `k` uses the window `n - p + k`; the sampled fit at order `k` draws
/// `s_k` rows from the order-`k` scores. The returned state also carries the
/// sampled order-`p` fit.
pub fn fully_approx_scores(
    series: &TimeSeries,
    order: usize,
    settings: SamplingSettings,
) -> Result<RecursionState> {
    walk_to(series, order, FitMode::Sampled(settings))
}

/// Runs a walk of the given mode up to and including the fit at `order`.
pub fn walk_to(series: &TimeSeries, order: usize, mode: FitMode) -> Result<RecursionState> {
    let mut walk = ScoreWalk::new(series, order, mode)?;
    while walk.advance()?.is_some() {}
    walk.into_state().ok_or(Error::OrderOutOfRange {
        order,
        len: series.len(),
        max: series.len() / 2,
    })
}

/// Exact order-`(p-1)` scores of `y_1..y_{n-1}` plus the residual share of a
/// fit on the rows picked by `plan`.
///
/// The plan indexes the `n - p` rows of the order-`(p-1)` design on
/// `y_1..y_{n-1}` and is expected to come from its exact distribution.
#[cfg(any(test, feature = "diagnostics"))]
pub fn quasi_scores(series: &TimeSeries, order: usize, plan: &SamplingPlan) -> Result<LeverageScores> {
    if order < 2 {
        return Err(Error::OrderOutOfRange {
            order,
            len: series.len(),
            max: series.len() / 2,
        });
    }
    let n = series.len();
    let design = series.window_design(n - 1, order - 1)?;
    let exact = crate::exact::exact_leverage(&design)?;
    let fit = reduced_fit(&design, plan)?;
    let rss = fit.residual_norm_sq();
    if rss == 0.0 {
        return Err(Error::ZeroResidual { order: order - 1 });
    }
    let scores = exact
        .scores()
        .iter()
        .zip(&fit.residuals)
        .map(|(l, r)| (l + r * r / rss).min(1.0))
        .collect();
    LeverageScores::new(order, scores, Provenance::Quasi)
}

/// Exact order-`(p-1)` leverage of `y_1..y_{n-1}`, whose distribution seeds
/// the quasi-approximate plan.
#[cfg(any(test, feature = "diagnostics"))]
pub fn quasi_seed_scores(series: &TimeSeries, order: usize) -> Result<LeverageScores> {
    let design = series.window_design(series.len() - 1, order - 1)?;
    crate::exact::exact_leverage(&design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_leverage;
    use alloc::vec;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn noisy(n: usize, seed: u64) -> TimeSeries {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = stream_rng(seed, 99);
        ts(&(0..n).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>())
    }

    #[test]
    fn base_case() {
        let l = exact_recursive_scores(&ts(&[1.0, 2.0, 3.0]), 1).unwrap();
        assert!((l.scores()[0] - 0.2).abs() < 1e-15);
        assert!((l.scores()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_leverage() {
        let y = noisy(120, 3);
        for p in 1..=8 {
            let rec = exact_recursive_scores(&y, p).unwrap();
            let direct = exact_leverage(&y.design(p).unwrap()).unwrap();
            for (a, b) in rec.scores().iter().zip(direct.scores()) {
                assert!((a - b).abs() < 1e-10, "p={p}");
            }
        }
    }

    #[test]
    fn zero_residual_aborts() {
        let mut y = vec![1.0];
        for t in 1..30 {
            y.push(0.5 * y[t - 1]);
        }
        let y = ts(&y);
        assert_eq!(
            exact_recursive_scores(&y, 3).unwrap_err(),
            Error::ZeroResidual { order: 1 }
        );
    }

    #[test]
    fn insufficient_data() {
        let y = noisy(9, 1);
        assert!(matches!(
            exact_recursive_scores(&y, 5),
            Err(Error::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn window_bookkeeping_keeps_row_count() {
        let y = noisy(300, 8);
        let settings = SamplingSettings {
            rule: SampleSizeRule::Fixed(60),
            epsilon: 0.5,
            delta0: 0.1,
            schedule: DeltaSchedule::PerOrder,
            seed: 4,
        };
        let mut walk = ScoreWalk::new(&y, 6, FitMode::Sampled(settings)).unwrap();
        let mut seen = 0;
        while let Some(state) = walk.advance().unwrap() {
            seen += 1;
            assert_eq!(state.window, 300 - 6 + state.order);
            assert_eq!(state.scores.len(), 300 - 6);
            assert_eq!(state.fit.residuals.len(), 300 - 6);
            let rss: f64 = state.residuals().iter().map(|r| r * r).sum();
            assert!((rss - state.residual_norm_sq()).abs() <= 1e-10 * rss);
        }
        assert_eq!(seen, 6);
    }

    #[test]
    fn order_one_and_identity_plans_are_exact() {
        let y = noisy(200, 5);
        let settings = SamplingSettings {
            rule: SampleSizeRule::Fixed(40),
            epsilon: 0.5,
            delta0: 0.1,
            schedule: DeltaSchedule::PerOrder,
            seed: 1,
        };
        let s1 = fully_approx_scores(&y, 1, settings).unwrap();
        let e1 = exact_leverage(&y.design(1).unwrap()).unwrap();
        for (a, b) in s1.scores.scores().iter().zip(e1.scores()) {
            assert!((a - b).abs() < 1e-14);
        }

        let full = walk_to(&y, 2, FitMode::FullSample).unwrap();
        let exact = exact_recursive_scores(&y, 2).unwrap();
        for (a, b) in full.scores.scores().iter().zip(exact.scores()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn quasi_with_identity_plan_is_exact() {
        let y = noisy(150, 11);
        let plan = SamplingPlan::full(150 - 2);
        let quasi = quasi_scores(&y, 2, &plan).unwrap();
        let exact = exact_recursive_scores(&y, 2).unwrap();
        assert_eq!(quasi.provenance(), Provenance::Quasi);
        for (a, b) in quasi.scores().iter().zip(exact.scores()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn quasi_rejects_undersized_plan() {
        let y = noisy(150, 11);
        let seed_scores = quasi_seed_scores(&y, 3).unwrap();
        let plan = draw_plan(&seed_scores, 1, &mut stream_rng(0, 0)).unwrap();
        assert!(matches!(
            quasi_scores(&y, 3, &plan),
            Err(Error::InsufficientData { rows: 1, cols: 2 })
        ));
    }

    #[test]
    fn quasi_error_within_bound_in_most_trials() {
        use crate::eval::{bound_inputs, mpre, theorem_bound_linear};
        use crate::generate::{generate_ar, ArGeneratorSpec};
        use crate::sampling::Beta;

        let (eps, trials) = (0.5, 50);
        let rule = SampleSizeRule::Theoretical {
            constant: 4.0,
            beta: Beta::Fixed(1.0),
        };
        let mut covered = 0;
        for trial in 0..trials {
            let y = generate_ar(&ArGeneratorSpec::new(vec![0.6, -0.3], 1.0, 5_000, 500 + trial)).unwrap();
            let n = y.len();
            let seed_scores = quasi_seed_scores(&y, 2).unwrap();
            let s = rule.raw(2, n, eps, 0.1).unwrap();
            let plan = draw_plan(&seed_scores, s, &mut stream_rng(trial, 1)).unwrap();
            let quasi = quasi_scores(&y, 2, &plan).unwrap();
            let exact = exact_recursive_scores(&y, 2).unwrap();
            let eta = bound_inputs(&y.window_design(n - 1, 1).unwrap()).unwrap().eta;
            let kappa = bound_inputs(&y.design(2).unwrap()).unwrap().kappa;
            if mpre(&exact, &quasi).unwrap() <= theorem_bound_linear(2, eta, kappa, eps) {
                covered += 1;
            }
        }
        assert!(covered * 10 >= trials * 9, "{covered}/{trials}");
    }

    #[test]
    fn delta_schedules() {
        assert!((DeltaSchedule::PerOrder.delta(0.1, 4, 10) - 0.025).abs() < 1e-15);
        let d = DeltaSchedule::Uniform.delta(0.1, 4, 10);
        assert!((libm::pow(1.0 - d, 10.0) - 0.9).abs() < 1e-12);
    }
}
