// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use lsar_core::eval::{bound_curves, contaminate, mpre_curve, timing_study, TIMING_REPEATS, TIMING_WARMUP};
use lsar_core::exact::exact_pacf_with_band;
use lsar_core::{
    fit_ols, generate_ar, run_lsar_with_clock, walk_to, ArFit, ArGeneratorSpec, Beta, FitMode, LsarConfig,
    LsarWarning, PacfTrace, PlanMode, SampleSizeRule, TimeSeries,
};
use serde_json::json;

use super::{usage, BoundsArgs, FitArgs, GenerateArgs, IngestArgs, InputArgs, LsarArgs, MpreArgs, OutputArgs};
use super::{PacfArgs, RatiosArgs, SamplingArgs, TimingArgs};
use crate::bench::{ratio_study_parallel, with_threads, InstantClock};
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, ingest as ingest_file, write_atomic, write_series};
use crate::report::{Cell, Format, Metadata, Report};

/// Companion file describing how a generated series was produced.
pub fn sidecar_path(series: &Path) -> PathBuf {
    let mut name = series.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn describe_rule(rule: &SampleSizeRule) -> String {
    match rule {
        SampleSizeRule::Fraction(f) => format!("fraction f={f}"),
        SampleSizeRule::Fixed(s) => format!("fixed s={s}"),
        SampleSizeRule::Theoretical { constant, beta } => {
            let beta = match beta {
                Beta::Fixed(b) => format!("{b}"),
                Beta::OrderScaled { c, floor } => format!("max({floor}, 1 - {c} p sqrt(eps))"),
            };
            format!("theoretical c={constant} beta={beta} log=natural")
        }
    }
}

fn describe_warning(w: &LsarWarning) -> String {
    match w {
        LsarWarning::NoSignificantLag => "no lag outside its band; p*=0".into(),
        LsarWarning::WeakSelection { order, ratio } => {
            format!("weak selection at lag {order}: |tau| is {ratio:.3} bands")
        }
        LsarWarning::SampleClamped { order, requested, used } => {
            format!("order {order}: sample size {requested} clamped to {used} rows")
        }
        LsarWarning::Resampled { order } => format!("order {order}: rank-deficient plan redrawn"),
    }
}

fn load(input: &InputArgs, experiment: &str) -> Result<(TimeSeries, Metadata)> {
    let ing = ingest_file(&input.spec())?;
    let mut meta = Metadata::new(experiment);
    meta.set("input", input.input.display());
    meta.set("n", ing.series.len());
    if ing.original_len != ing.series.len() {
        meta.set("original_n", ing.original_len);
    }
    if let Ok(text) = std::fs::read_to_string(sidecar_path(&input.input)) {
        if let Some(g) = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v.get("generator").and_then(|g| g.as_str()).map(str::to_owned))
        {
            meta.set("generator", g);
        }
    }
    Ok((ing.series, meta))
}

fn sampling_meta(meta: &mut Metadata, s: &SamplingArgs) {
    meta.set("seed", s.seed)
        .set("size_rule", describe_rule(&s.rule()))
        .set("epsilon", s.epsilon)
        .set("delta0", s.delta0)
        .set("delta_schedule", format!("{:?}", s.schedule()));
}

fn emit(report: &mut Report, out: &OutputArgs) -> Result<()> {
    if let Some(path) = &out.output {
        let format = out.format.unwrap_or_else(|| Format::from_path(path));
        report.save(path, format)?;
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let coefficients = a.fixture.map_or_else(|| a.phi.clone(), |f| f.coefficients().to_vec());
    let spec = ArGeneratorSpec {
        burn_in: a.burn_in,
        ..ArGeneratorSpec::new(coefficients, a.sigma, a.n as usize, a.seed)
    };
    let mut series = generate_ar(&spec)?;
    let mut description = format!(
        "AR({}) phi=[{}] sigma={} burn_in={} seed={}",
        spec.coefficients.len(),
        spec.coefficients.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        spec.noise_std,
        spec.burn_in(),
        spec.seed
    );
    if let Some(fraction) = a.contaminate {
        series = contaminate(&series, fraction, a.contaminate_factor, a.seed)?;
        description.push_str(&format!(" contaminated fraction={fraction} factor={}", a.contaminate_factor));
    }
    write_series(&a.output, &series)?;
    let meta = json!({
        "generator": description,
        "coefficients": spec.coefficients,
        "sigma": spec.noise_std,
        "n": series.len(),
        "burn_in": spec.burn_in(),
        "seed": spec.seed,
        "contaminate": a.contaminate,
        "contaminate_factor": a.contaminate.map(|_| a.contaminate_factor),
        "rng": lsar_core::rng::RNG_NAME,
    });
    write_atomic(&sidecar_path(&a.output), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta)?;
        writeln!(w)
    })?;
    println!("lsar: n={} seed={}", series.len(), a.seed);
    Ok(())
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    let ing = ingest_file(&a.input.spec())?;
    write_series(&a.output, &ing.series)?;
    let v = ing.series.values();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "lsar: original_n={} n={} min={} max={} mean={}",
        ing.original_len,
        v.len(),
        fmt_f64(min),
        fmt_f64(max),
        fmt_f64(ing.series.mean())
    );
    Ok(())
}

fn fit_report(fit: &ArFit, mut meta: Metadata) -> Report {
    meta.set("order", fit.order)
        .set("source", format!("{:?}", fit.source).to_lowercase())
        .set("residual_norm", fmt_f64(fit.residual_norm))
        .set("noise_variance", fmt_f64(fit.noise_variance));
    let mut report = Report::new(meta, &["lag", "coefficient"]);
    for (k, c) in fit.coefficients.iter().enumerate() {
        report.push(vec![(k + 1).into(), (*c).into()]);
    }
    report
}

pub fn fit(a: FitArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "fit")?;
    let fit = if a.sampled {
        sampling_meta(&mut meta, &a.sampling);
        walk_to(&series, a.p, FitMode::Sampled(a.sampling.settings()))?.fit
    } else {
        fit_ols(&series.design(a.p)?)?
    };
    let mut report = fit_report(&fit, meta);
    emit(&mut report, &a.output)?;
    println!(
        "lsar: phi=[{}] sigma2={} residual_norm={}",
        join(&fit.coefficients),
        fmt_f64(fit.noise_variance),
        fmt_f64(fit.residual_norm)
    );
    Ok(())
}

fn lsar_config(pbar: usize, multiplier: f64, s: &SamplingArgs) -> LsarConfig {
    LsarConfig {
        max_order: pbar,
        epsilon: s.epsilon,
        delta0: s.delta0,
        delta_schedule: s.schedule(),
        size_rule: s.rule(),
        bandwidth_multiplier: multiplier,
        seed: s.seed,
        plans: PlanMode::Sampled,
        refit_full: false,
    }
}

fn pacf_rows(trace: &PacfTrace, meta: Metadata) -> Report {
    let mut report = Report::new(meta, &["lag", "tau", "bandwidth", "effective_sample", "significant"]);
    for l in &trace.lags {
        report.push(vec![
            l.lag.into(),
            l.estimate.into(),
            l.bandwidth.into(),
            l.effective_sample.into(),
            l.is_significant().into(),
        ]);
    }
    report
}

pub fn pacf(a: PacfArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "pacf")?;
    meta.set("bandwidth_multiplier", a.bandwidth_multiplier);
    let trace = if a.sampled {
        meta.set("mode", "sampled");
        sampling_meta(&mut meta, &a.sampling);
        let cfg = lsar_config(a.pbar, a.bandwidth_multiplier, &a.sampling);
        run_lsar_with_clock(&series, &cfg, &mut lsar_core::NoClock)?.pacf
    } else {
        meta.set("mode", "exact");
        if !(a.bandwidth_multiplier > 0.0 && a.bandwidth_multiplier.is_finite()) {
            return Err(usage("--bandwidth-multiplier must be positive"));
        }
        exact_pacf_with_band(&series, a.pbar, a.bandwidth_multiplier)?
    };
    meta.set("selected_order", trace.selected_order);
    let mut report = pacf_rows(&trace, meta);
    emit(&mut report, &a.output)?;
    let taus: Vec<String> = trace
        .lags
        .iter()
        .map(|l| l.estimate.map_or_else(|| "NA".into(), fmt_f64))
        .collect();
    println!("lsar: tau=[{}]", taus.join(","));
    println!("lsar: selected_order={}", trace.selected_order);
    Ok(())
}

pub fn lsar(a: LsarArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "lsar")?;
    let cfg = LsarConfig {
        plans: if a.full_plans { PlanMode::Full } else { PlanMode::Sampled },
        refit_full: a.refit_full,
        ..lsar_config(a.pbar, a.bandwidth_multiplier, &a.sampling)
    };
    sampling_meta(&mut meta, &a.sampling);
    meta.set("max_order", a.pbar)
        .set("bandwidth_multiplier", a.bandwidth_multiplier)
        .set("plans", format!("{:?}", cfg.plans).to_lowercase())
        .set("refit_full", a.refit_full);
    let res = run_lsar_with_clock(&series, &cfg, &mut InstantClock::new())?;
    meta.set("selected_order", res.selected_order)
        .set("final_window", res.final_window);
    if let Some(fit) = &res.final_fit {
        meta.set("coefficients", join(&fit.coefficients))
            .set("residual_norm", fmt_f64(fit.residual_norm))
            .set("noise_variance", fmt_f64(fit.noise_variance));
    }
    let warnings: Vec<String> = res.warnings.iter().map(describe_warning).collect();
    meta.set("warnings", warnings.join("; "));
    let mut columns = vec![
        "order",
        "window",
        "sample_size",
        "requested_sample",
        "clamp_count",
        "resampled",
        "tau",
        "bandwidth",
        "significant",
        "residual_norm",
    ];
    if a.timings {
        columns.push("wall_time");
    }
    let mut report = Report::new(meta, &columns);
    for (log, lag) in res.per_order_log.iter().zip(&res.pacf.lags) {
        let mut row: Vec<Cell> = vec![
            log.order.into(),
            log.window.into(),
            log.sample_size.into(),
            log.requested_sample.into(),
            log.clamp_count.into(),
            log.resampled.into(),
            log.tau.into(),
            log.bandwidth.into(),
            lag.is_significant().into(),
            log.residual_norm.into(),
        ];
        if a.timings {
            row.push(log.wall_time.into());
        }
        report.push(row);
    }
    emit(&mut report, &a.output)?;
    for w in &warnings {
        eprintln!("lsar: warning: {w}");
    }
    if let Some(fit) = &res.final_fit {
        println!("lsar: phi=[{}]", join(&fit.coefficients));
    }
    println!("lsar: p*={}", res.selected_order);
    Ok(())
}

pub fn eval_mpre(a: MpreArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "mpre")?;
    sampling_meta(&mut meta, &a.sampling);
    meta.set("max_order", a.pbar).set("c_log", a.c_log);
    let rows = mpre_curve(&series, a.pbar, a.sampling.settings(), a.c_log)?;
    let mut report = Report::new(
        meta,
        &[
            "p", "window", "sample_size", "clamp_count", "mpre", "bound_linear", "bound_log", "kappa", "xi", "eta",
            "eta_prev",
        ],
    );
    for r in &rows {
        report.push(vec![
            r.order.into(),
            r.window.into(),
            r.sample_size.into(),
            r.clamp_count.into(),
            r.mpre.into(),
            r.bound_linear.into(),
            r.bound_log.into(),
            r.kappa.into(),
            r.xi.into(),
            r.eta.into(),
            r.eta_prev.into(),
        ]);
    }
    emit(&mut report, &a.output)?;
    let max = rows.iter().map(|r| r.mpre).fold(0.0, f64::max);
    let covered = rows.iter().all(|r| r.within_linear_bound());
    println!("lsar: max_mpre={} within_bound_linear={covered}", fmt_f64(max));
    Ok(())
}

pub fn eval_bounds(a: BoundsArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "bounds")?;
    meta.set("max_order", a.pbar).set("epsilon", a.epsilon).set("c_log", a.c_log);
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return Err(usage("--epsilon must lie in (0, 1)"));
    }
    let rows = bound_curves(&series, a.pbar, a.epsilon, a.c_log)?;
    let mut report = Report::new(
        meta,
        &["p", "window", "kappa", "xi", "eta", "eta_prev", "bound_linear", "bound_log"],
    );
    for r in &rows {
        report.push(vec![
            r.order.into(),
            r.window.into(),
            r.inputs.kappa.into(),
            r.inputs.xi.into(),
            r.inputs.eta.into(),
            r.eta_prev.into(),
            r.bound_linear.into(),
            r.bound_log.into(),
        ]);
    }
    emit(&mut report, &a.output)?;
    println!("lsar: rows={}", rows.len());
    Ok(())
}

pub fn eval_ratios(a: RatiosArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "ratios")?;
    meta.set("seed", a.seed)
        .set("order", a.p)
        .set("reps", a.reps)
        .set("size_rule", "fixed s per row")
        .set("leverage_scheme", "fully-approximate walk to p")
        .set("uniform_scheme", "pi(i) = 1/(n - p)");
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let rows = with_threads(a.threads, || ratio_study_parallel(&series, a.p, &a.sizes, a.reps, a.seed))??;
    let mut report = Report::new(
        meta,
        &["s", "scheme", "rel_param_err", "resid_ratio", "min_resid_ratio", "reps", "rank_deficient"],
    );
    for r in &rows {
        report.push(vec![
            r.sample_size.into(),
            r.scheme.name().into(),
            r.rel_param_err.into(),
            r.resid_ratio.into(),
            r.min_resid_ratio.into(),
            r.reps.into(),
            r.rank_deficient.into(),
        ]);
    }
    emit(&mut report, &a.output)?;
    let min_ratio = rows.iter().map(|r| r.min_resid_ratio).fold(f64::INFINITY, f64::min);
    println!("lsar: rows={} min_resid_ratio={}", rows.len(), fmt_f64(min_ratio));
    Ok(())
}

pub fn eval_timing(a: TimingArgs) -> Result<()> {
    let (series, mut meta) = load(&a.input, "timing")?;
    sampling_meta(&mut meta, &a.sampling);
    meta.set("max_order", a.pbar)
        .set("threads", 1)
        .set("protocol", format!("monotonic clock, warmup {TIMING_WARMUP}, median of {TIMING_REPEATS}"));
    let rows = timing_study(&series, a.pbar, a.sampling.settings(), &mut InstantClock::new())?;
    let exact: f64 = rows.iter().map(|r| r.time_exact).sum();
    let approx: f64 = rows.iter().map(|r| r.time_approx).sum();
    meta.set("cumulative_exact", fmt_f64(exact))
        .set("cumulative_approx", fmt_f64(approx))
        .set("ratio", fmt_f64(approx / exact));
    let mut report = Report::new(
        meta,
        &["p", "time_exact", "time_approx", "spread_exact", "spread_approx"],
    );
    for r in &rows {
        report.push(vec![
            r.order.into(),
            r.time_exact.into(),
            r.time_approx.into(),
            r.spread_exact.into(),
            r.spread_approx.into(),
        ]);
    }
    emit(&mut report, &a.output)?;
    println!(
        "lsar: cumulative_exact={} cumulative_approx={} ratio={}",
        fmt_f64(exact),
        fmt_f64(approx),
        fmt_f64(approx / exact)
    );
    Ok(())
}

impl From<CliError> for std::io::Error {
    fn from(e: CliError) -> Self {
        std::io::Error::other(e.to_string())
    }
}
