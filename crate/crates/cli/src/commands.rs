use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use excursions::fredholm::DEFAULT_QUAD_ORDER;
use excursions::kernels::{path_density, scale_factor, BesselTimePartition, TimePartition};
use excursions::montecarlo::{
    chi_square, density_histogram, estimate_areas, estimate_bottom_cdf, estimate_joint, rejection_acceptance,
    sample_ensembles, EstimatorResult, McConfig, Sampler,
};
use excursions::observables::{
    area_asymptotics, bessel_scaling_error, bottom_det_with, expected_areas, joint_cdf_with, joint_limit_check,
    limit_constants, top_det_with, CdfOptions, Extreme, Method,
};
use excursions::painleve::{self, PainleveOptions};
use excursions::specfun::gauss_legendre;

use crate::args::*;
use crate::output::Report;
use crate::{parse, Failure};

type Outcome = Result<(), Failure>;

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Finite => Method::Finite,
        MethodArg::Fredholm => Method::Fredholm,
        MethodArg::Painleve => Method::Painleve,
        MethodArg::Series => Method::Series,
    }
}

fn extreme(s: Side) -> Extreme {
    match s {
        Side::Bottom => Extreme::Bottom,
        Side::Top => Extreme::Top,
    }
}

fn check_n(n: usize) -> Outcome {
    if n == 0 {
        Err(Failure::Usage("--n must be positive".into()))
    } else {
        Ok(())
    }
}

fn check_tau(tau: f64) -> Outcome {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--tau {tau} is not in (0, 1)")))
    }
}

fn check_order(order: usize) -> Outcome {
    if (2..=2048).contains(&order) {
        Ok(())
    } else {
        Err(Failure::Usage("--quad-order must lie in 2..=2048".into()))
    }
}

/// `∫_a^b ρ_n(x, τ) dx`
fn density_mass(n: usize, tau: f64, a: f64, b: f64, order: usize) -> Result<f64, Failure> {
    let q = gauss_legendre(order, a, b)?;
    let mut s = 0.0;
    for (&x, &w) in q.nodes.iter().zip(&q.weights) {
        s += w * path_density(n, tau, x)?;
    }
    Ok(s)
}

/// Support used for density integrals: `σ(τ)(√(4n) + 14)`.
fn density_support(n: usize, tau: f64) -> f64 {
    scale_factor(tau) * ((4.0 * n as f64).sqrt() + 14.0)
}

fn total_density(n: usize, tau: f64) -> Result<f64, Failure> {
    let panels = 8 + n;
    let h = density_support(n, tau) / panels as f64;
    (0..panels)
        .map(|i| density_mass(n, tau, h * i as f64, h * (i + 1) as f64, 40))
        .sum()
}

#[derive(Serialize)]
struct DensityRow {
    kind: &'static str,
    x: Option<f64>,
    value: f64,
}

pub fn density(a: &DensityArgs, common: &Common) -> Outcome {
    check_n(a.n)?;
    check_tau(a.tau)?;
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let x_max = a
        .x_max
        .unwrap_or(scale_factor(a.tau) * ((4.0 * a.n as f64).sqrt() + 4.0));
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Failure::Usage("--x-max must be positive".into()));
    }
    let mut report = Report::new("density", a);
    report.note("x_max", x_max);
    for i in 0..a.points {
        let x = x_max * i as f64 / (a.points - 1) as f64;
        report.rows.push(DensityRow {
            kind: "density",
            x: Some(x),
            value: path_density(a.n, a.tau, x)?,
        });
    }
    let total = total_density(a.n, a.tau)?;
    let normalized = total / a.n as f64;
    report.rows.push(DensityRow {
        kind: "integral",
        x: None,
        value: total,
    });
    report.note("integral", total);
    report.note("integral_over_n", normalized);
    report.note("normalization_error", (normalized - 1.0).abs());
    report.note("integration_support", density_support(a.n, a.tau));
    report.emit(common)?;
    if (normalized - 1.0).abs() > 1e-8 {
        return Err(Failure::Gate(format!("density integrates to {normalized} · n")));
    }
    Ok(())
}

#[derive(Serialize)]
struct CdfRow {
    side: Side,
    n: usize,
    tau: f64,
    s: f64,
    x: f64,
    method: String,
    value: f64,
    error_estimate: f64,
}

fn dets(side: Side, n: usize, s: &[f64], m: Method, opts: &CdfOptions) -> Result<Vec<f64>, Failure> {
    match (m, side) {
        (Method::Painleve, Side::Bottom) => Ok(painleve::prob_bottom_many(n, s, &opts.painleve)?),
        (Method::Painleve, Side::Top) => Ok(painleve::prob_top_many(n, s, &opts.painleve)?),
        _ => s
            .par_iter()
            .map(|&v| match side {
                Side::Bottom => bottom_det_with(n, v, m, opts),
                Side::Top => top_det_with(n, v, m, opts),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(Failure::from),
    }
}

pub fn cdf(a: &CdfArgs, common: &Common) -> Outcome {
    check_n(a.n)?;
    check_tau(a.tau)?;
    check_order(a.quad_order)?;
    if !(a.tol > 0.0 && a.tol < 1e-2) {
        return Err(Failure::Usage("--tol must lie in (0, 0.01)".into()));
    }
    let s = match (&a.s, &a.s_range) {
        (Some(t), None) => parse::float_list(t, "s")?,
        (None, Some(r)) => parse::float_range(r)?,
        (None, None) => parse::float_range("0.25:3:0.25")?,
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    if s.iter().any(|&v| v < 0.0) {
        return Err(Failure::Usage("s must be nonnegative".into()));
    }
    let m = method(a.method);
    if m == Method::Series && a.side == Side::Top {
        return Err(Failure::Usage("the series route covers the bottom side only".into()));
    }
    let opts = CdfOptions {
        quad_order: a.quad_order,
        painleve: PainleveOptions {
            quad_order: a.quad_order,
            ..PainleveOptions::default()
        }
        .with_tol(a.tol),
    };
    let values = dets(a.side, a.n, &s, m, &opts)?;
    let errors: Vec<f64> = match m {
        Method::Series => {
            let r0 = painleve::series::r0(a.n);
            s.iter().map(|&v| r0 * v.powi(11)).collect()
        }
        Method::Painleve => {
            let fine = CdfOptions {
                painleve: opts.painleve.with_tol(a.tol / 10.0),
                ..opts
            };
            let v2 = dets(a.side, a.n, &s, m, &fine)?;
            values.iter().zip(&v2).map(|(x, y)| (x - y).abs()).collect()
        }
        _ => {
            let fine = CdfOptions {
                quad_order: 2 * a.quad_order,
                ..opts
            };
            let v2 = dets(a.side, a.n, &s, m, &fine)?;
            values.iter().zip(&v2).map(|(x, y)| (x - y).abs()).collect()
        }
    };
    let sigma = scale_factor(a.tau);
    let mut report = Report::new("cdf", a);
    report.note("sigma", sigma);
    report.note(
        "error_estimate",
        match m {
            Method::Series => "truncation envelope r0 s^11",
            Method::Painleve => "change when the step tolerance is divided by 10",
            _ => "change when the quadrature order is doubled",
        },
    );
    if m == Method::Painleve {
        report.note("painleve_s0", opts.painleve.s0);
        report.note("painleve_probability_floor", opts.painleve.probability_floor);
        report.note("painleve_top_start", painleve::default_top_start(a.n));
    }
    report.note("max_error_estimate", errors.iter().cloned().fold(0.0, f64::max));
    for ((&s, v), e) in s.iter().zip(values).zip(errors) {
        report.rows.push(CdfRow {
            side: a.side,
            n: a.n,
            tau: a.tau,
            s,
            x: s * sigma,
            method: m.to_string(),
            value: v,
            error_estimate: e,
        });
    }
    report.emit(common)?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct JointRow {
    kind: Side,
    n: usize,
    times: String,
    thresholds: String,
    value: f64,
    error_estimate: f64,
}

pub fn joint(a: &JointArgs, common: &Common) -> Outcome {
    check_n(a.n)?;
    check_order(a.quad_order)?;
    let times = parse::times(&a.times)?;
    let thresholds = parse::float_list(&a.thresholds, "thresholds")?;
    if thresholds.len() != times.len() {
        return Err(Failure::Usage("need one threshold per time".into()));
    }
    let part = TimePartition::new(&times)?;
    let kind = extreme(a.kind);
    let (v, v2) = rayon::join(
        || joint_cdf_with(a.n, &part, &thresholds, kind, a.quad_order),
        || joint_cdf_with(a.n, &part, &thresholds, kind, 2 * a.quad_order),
    );
    let (v, v2) = (v?, v2?);
    let mut report = Report::new("joint", a);
    report.note("error_estimate", "change when the quadrature order is doubled");
    report.rows.push(JointRow {
        kind: a.kind,
        n: a.n,
        times: join(&times),
        thresholds: join(&thresholds),
        value: v,
        error_estimate: (v - v2).abs(),
    });
    report.emit(common)?;
    Ok(())
}

#[derive(Serialize)]
struct AreaRow {
    n: usize,
    bottom: f64,
    top: f64,
    sqrt_n_bottom: f64,
    bottom_cutoff: f64,
    top_cutoff: f64,
}

pub fn areas(a: &AreasArgs, common: &Common) -> Outcome {
    let ns = parse::n_range(a.n.as_deref().unwrap_or(&a.range))?;
    let results = ns
        .par_iter()
        .map(|&n| expected_areas(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = Report::new("areas", a);
    report.note("quad_order", DEFAULT_QUAD_ORDER);
    report.note("tail_cutoff", excursions::observables::TAIL_CUTOFF);
    for r in results {
        report.rows.push(AreaRow {
            n: r.n,
            bottom: r.bottom_mean,
            top: r.top_mean,
            sqrt_n_bottom: (r.n as f64).sqrt() * r.bottom_mean,
            bottom_cutoff: r.bottom_cutoff,
            top_cutoff: r.top_cutoff,
        });
    }
    report.emit(common)?;
    Ok(())
}

#[derive(Serialize)]
struct ConstantRow {
    quantity: &'static str,
    n: Option<usize>,
    value: f64,
}

pub fn constants(a: &ConstantsArgs, common: &Common) -> Outcome {
    let ns = parse::n_range(&a.n)?;
    let c = limit_constants()?;
    let mut report = Report::new("constants", a);
    report.note("f2_mean_source", "stored value of the GUE largest-eigenvalue mean");
    for (q, v) in [
        ("bessel_integral", c.bessel_integral),
        ("c_l", c.c_l),
        ("c_h", c.c_h),
        ("f2_mean", c.f2_mean),
    ] {
        report.rows.push(ConstantRow {
            quantity: q,
            n: None,
            value: v,
        });
    }
    for &n in &ns {
        report.rows.push(ConstantRow {
            quantity: "bottom_area_asymptotic",
            n: Some(n),
            value: area_asymptotics(n, Extreme::Bottom)?,
        });
    }
    for &n in &ns {
        report.rows.push(ConstantRow {
            quantity: "top_area_asymptotic",
            n: Some(n),
            value: area_asymptotics(n, Extreme::Top)?,
        });
    }
    report.emit(common)?;
    Ok(())
}

#[derive(Serialize)]
struct LimitOut {
    n: usize,
    kernel_error: f64,
    excursion: f64,
    bessel: f64,
    difference: f64,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn limits(a: &LimitsArgs, common: &Common) -> Outcome {
    check_tau(a.tau)?;
    let ns = parse::usize_list(&a.n_list, "n list")?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Failure::Usage("n list must hold positive integers".into()));
    }
    let times = parse::float_list(&a.times, "times")?;
    let thresholds = parse::float_list(&a.thresholds, "thresholds")?;
    if thresholds.len() != times.len() {
        return Err(Failure::Usage("need one threshold per time".into()));
    }
    let bt = BesselTimePartition::new(&times)?;
    let errs = ns
        .par_iter()
        .map(|&n| bessel_scaling_error(n, a.box_size, &bt, a.tau))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = joint_limit_check(&bt, &thresholds, &ns, a.tau)?;
    let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let mut report = Report::new("limits", a);
    report.note("kernel_error_grid", excursions::observables::SCALING_GRID);
    report.note("kernel_error_decreasing", strictly_decreasing(&errs));
    report.note("difference_decreasing", strictly_decreasing(&diffs));
    if times.len() > 1 {
        report.note(
            "probe",
            "no convergence rate is known for several times; the tolerance is a probe",
        );
    }
    for (r, e) in rows.into_iter().zip(errs) {
        report.rows.push(LimitOut {
            n: r.n,
            kernel_error: e,
            excursion: r.excursion,
            bessel: r.bessel,
            difference: r.difference,
        });
    }
    report.emit(common)?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateRow {
    observable: &'static str,
    n: usize,
    times: String,
    thresholds: String,
    estimate: f64,
    standard_error: f64,
    reference: Option<f64>,
    z_score: Option<f64>,
    samples: usize,
    seed: u64,
}

impl EstimateRow {
    fn new(
        observable: &'static str,
        n: usize,
        times: &[f64],
        thresholds: &[f64],
        r: EstimatorResult,
        reference: Option<f64>,
    ) -> Self {
        Self {
            observable,
            n,
            times: join(times),
            thresholds: join(thresholds),
            estimate: r.estimate,
            standard_error: r.standard_error,
            reference,
            z_score: reference.map(|v| r.z_score(v)),
            samples: r.sample_count,
            seed: r.seed,
        }
    }
}

#[derive(Serialize)]
struct HistogramRow {
    lower: Option<f64>,
    upper: Option<f64>,
    count: u64,
    expected: f64,
}

#[derive(Serialize)]
struct DumpRow {
    ensemble: usize,
    path: usize,
    k: usize,
    t: f64,
    x: f64,
}

fn dump(cfg: &McConfig, count: usize, path: &Path) -> Outcome {
    let ensembles = sample_ensembles(cfg, count)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Io(e.into()))?;
    for (e, ens) in ensembles.iter().enumerate() {
        let m = ens.intervals();
        for (p, pos) in ens.positions.iter().enumerate() {
            for (k, &x) in pos.iter().enumerate() {
                w.serialize(DumpRow {
                    ensemble: e,
                    path: p,
                    k,
                    t: k as f64 / m as f64,
                    x,
                })
                .map_err(|e| Failure::Io(e.into()))?;
            }
        }
    }
    w.flush().map_err(|e| Failure::Io(e.into()))?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs, common: &Common) -> Outcome {
    check_n(a.n)?;
    check_tau(a.tau)?;
    if a.samples == 0 || a.chunk == 0 {
        return Err(Failure::Usage("--samples and --chunk must be positive".into()));
    }
    let sampler = match a.sampler {
        SamplerArg::Matrix => Sampler::Matrix,
        SamplerArg::Rejection => Sampler::Rejection {
            max_attempts: a.max_attempts,
        },
    };
    let mut cfg = McConfig::new(a.n, a.grid_steps, a.samples, a.seed).with_sampler(sampler);
    cfg.chunk = a.chunk;
    let thresholds = a
        .thresholds
        .as_deref()
        .map(|t| parse::float_list(t, "thresholds"))
        .transpose()?;
    let need_thresholds = || {
        thresholds
            .clone()
            .ok_or_else(|| Failure::Usage("--thresholds is required".into()))
    };
    let mut rows = Vec::new();
    let mut report = Report::<EstimateRow>::new("simulate", a);
    report.note("streams", a.samples.div_ceil(a.chunk));
    match a.observable {
        Observable::Cdf => {
            let th = need_thresholds()?;
            let kind = extreme(a.kind);
            let est = match kind {
                Extreme::Bottom => estimate_bottom_cdf(&cfg, a.tau, &th)?,
                Extreme::Top => th
                    .iter()
                    .map(|&x| estimate_joint(&cfg, &[a.tau], &[x], kind))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let sigma = scale_factor(a.tau);
            for (&x, r) in th.iter().zip(est) {
                let s = x / sigma;
                let reference = match kind {
                    Extreme::Bottom => bottom_det_with(a.n, s, Method::Finite, &CdfOptions::default())?,
                    Extreme::Top => top_det_with(a.n, s, Method::Finite, &CdfOptions::default())?,
                };
                rows.push(EstimateRow::new("cdf", a.n, &[a.tau], &[x], r, Some(reference)));
            }
        }
        Observable::Joint => {
            let times = parse::times(
                a.times
                    .as_deref()
                    .ok_or_else(|| Failure::Usage("--times is required".into()))?,
            )?;
            let th = need_thresholds()?;
            if th.len() != times.len() {
                return Err(Failure::Usage("need one threshold per time".into()));
            }
            let kind = extreme(a.kind);
            let r = estimate_joint(&cfg, &times, &th, kind)?;
            let reference = joint_cdf_with(a.n, &TimePartition::new(&times)?, &th, kind, DEFAULT_QUAD_ORDER)?;
            rows.push(EstimateRow::new("joint", a.n, &times, &th, r, Some(reference)));
        }
        Observable::Areas => {
            let (lo, hi) = estimate_areas(&cfg)?;
            let exact = expected_areas(a.n)?;
            rows.push(EstimateRow::new(
                "area_bottom",
                a.n,
                &[],
                &[],
                lo,
                Some(exact.bottom_mean),
            ));
            rows.push(EstimateRow::new("area_top", a.n, &[], &[], hi, Some(exact.top_mean)));
        }
        Observable::Acceptance => {
            let rate = rejection_acceptance(a.n, a.grid_steps, a.samples as u64, a.seed)?;
            let se = (rate * (1.0 - rate) / a.samples as f64).sqrt();
            let r = EstimatorResult {
                estimate: rate,
                standard_error: se,
                sample_count: a.samples,
                seed: a.seed,
            };
            rows.push(EstimateRow::new("acceptance_rate", a.n, &[], &[], r, None));
        }
        Observable::Histogram => return histogram(a, &cfg, report, common),
    }
    let worst = rows.iter().filter_map(|r| r.z_score).fold(0.0, f64::max);
    report.note("max_z_score", worst);
    report.rows = rows;
    if let Some(p) = &a.dump {
        dump(&cfg, a.dump_count, p)?;
    }
    report.emit(common)?;
    Ok(())
}

fn histogram(a: &SimulateArgs, cfg: &McConfig, report: Report<EstimateRow>, common: &Common) -> Outcome {
    if a.bins == 0 {
        return Err(Failure::Usage("--bins must be positive".into()));
    }
    let x_max = a
        .x_max
        .unwrap_or(scale_factor(a.tau) * ((4.0 * a.n as f64).sqrt() + 2.0));
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Failure::Usage("--x-max must be positive".into()));
    }
    let edges: Vec<f64> = (0..=a.bins).map(|i| x_max * i as f64 / a.bins as f64).collect();
    let counts = density_histogram(cfg, a.tau, &edges)?;
    let nf = a.n as f64;
    let mut probs = edges
        .windows(2)
        .map(|w| Ok(density_mass(a.n, a.tau, w[0], w[1], 24)? / nf))
        .collect::<Result<Vec<_>, Failure>>()?;
    let inside: f64 = probs.iter().sum();
    probs.push((1.0 - inside).max(0.0));
    let (stat, dof, p) = chi_square(&counts, &probs)?;
    let total: u64 = counts.iter().sum();
    let mut out = Report::new("simulate", &report.config);
    out.config = report.config;
    out.note("chi_square", stat);
    out.note("degrees_of_freedom", dof);
    out.note("p_value", p);
    out.note("cell_pooling", "cells with expected count below 5 are merged");
    for (j, (&c, &q)) in counts.iter().zip(&probs).enumerate() {
        out.rows.push(HistogramRow {
            lower: edges.get(j).copied().filter(|_| j < a.bins),
            upper: edges.get(j + 1).copied(),
            count: c,
            expected: q * total as f64,
        });
    }
    if let Some(path) = &a.dump {
        dump(cfg, a.dump_count, path)?;
    }
    out.emit(common)?;
    Ok(())
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    value: f64,
    tolerance: f64,
    status: &'static str,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn quadrature_doubling() -> Result<f64, Failure> {
    let s = [0.5, 1.0, 2.0, 3.0];
    let coarse = CdfOptions::default();
    let fine = CdfOptions {
        quad_order: 2 * coarse.quad_order,
        ..coarse
    };
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        for side in [Side::Bottom, Side::Top] {
            for m in [Method::Finite, Method::Fredholm] {
                worst = worst.max(max_gap(&dets(side, n, &s, m, &coarse)?, &dets(side, n, &s, m, &fine)?));
            }
        }
    }
    let part = TimePartition::new(&[0.4, 0.6])?;
    for kind in [Extreme::Bottom, Extreme::Top] {
        let th = if kind == Extreme::Bottom {
            [0.5, 0.6]
        } else {
            [1.5, 1.4]
        };
        let a = joint_cdf_with(2, &part, &th, kind, DEFAULT_QUAD_ORDER)?;
        let b = joint_cdf_with(2, &part, &th, kind, 2 * DEFAULT_QUAD_ORDER)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

fn s0_halving() -> Result<f64, Failure> {
    let s: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let base = PainleveOptions::default();
    let half = PainleveOptions {
        s0: base.s0 / 2.0,
        ..base
    };
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        worst = worst.max(max_gap(
            &painleve::prob_bottom_many(n, &s, &base)?,
            &painleve::prob_bottom_many(n, &s, &half)?,
        ));
    }
    Ok(worst)
}

/// Largest shift over the estimates, in units of the combined 3σ band.
fn grid_doubling(samples: usize, seed: u64) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    let band = |a: &EstimatorResult, b: &EstimatorResult| {
        (a.estimate - b.estimate).abs() / (3.0 * a.standard_error.hypot(b.standard_error))
    };
    let (lo1, hi1) = estimate_areas(&McConfig::new(2, 128, samples, seed))?;
    let (lo2, hi2) = estimate_areas(&McConfig::new(2, 256, samples, seed))?;
    worst = worst.max(band(&lo1, &lo2)).max(band(&hi1, &hi2));
    let rej = Sampler::Rejection {
        max_attempts: 10_000_000,
    };
    // acceptance falls quickly with M, so the rejection gate runs small
    let few = (samples / 50).max(1000);
    let x = 0.3 * scale_factor(0.5);
    let a = estimate_bottom_cdf(&McConfig::new(2, 32, few, seed).with_sampler(rej), 0.5, &[x])?[0];
    let b = estimate_bottom_cdf(&McConfig::new(2, 64, few, seed).with_sampler(rej), 0.5, &[x])?[0];
    Ok(worst.max(band(&a, &b)))
}

/// Finite, Fredholm and Painlevé routes for n = 1..5 on s = 0.25..3, both
/// sides; returns the largest pairwise gap.
fn three_routes() -> Result<(f64, f64, f64, f64), Failure> {
    let s: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let opts = CdfOptions::default();
    let results = (1..=5usize)
        .into_par_iter()
        .map(|n| -> Result<(f64, f64, f64, f64), Failure> {
            let mut gap: f64 = 0.0;
            for side in [Side::Bottom, Side::Top] {
                let f = dets(side, n, &s, Method::Finite, &opts)?;
                let q = dets(side, n, &s, Method::Fredholm, &opts)?;
                let p = dets(side, n, &s, Method::Painleve, &opts)?;
                gap = gap.max(max_gap(&f, &q)).max(max_gap(&f, &p)).max(max_gap(&q, &p));
            }
            let mut series: f64 = 0.0;
            let r0 = painleve::series::r0(n);
            for v in [0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
                let f = bottom_det_with(n, v, Method::Finite, &opts)?;
                let e = bottom_det_with(n, v, Method::Series, &opts)?;
                series = series.max((e - f).abs() / (1e-12 + r0 * v.powi(11)));
            }
            let pv = opts.painleve;
            let bot = painleve::integrate_bottom_through(n, &s, &pv)?;
            let down: Vec<f64> = s.iter().rev().copied().collect();
            let top = painleve::integrate_top_through(n, &down, &pv)?;
            let fi = bot.max_first_integral().max(top.max_first_integral());
            let sig = bot.max_sigma_residual().max(top.max_sigma_residual());
            Ok((gap, series, fi, sig))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(results.into_iter().fold((0.0, 0.0, 0.0, 0.0), |a, b| {
        (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2), a.3.max(b.3))
    }))
}

pub fn selfcheck(a: &SelfcheckArgs, common: &Common) -> Outcome {
    if a.samples < 1000 {
        return Err(Failure::Usage("--samples must be at least 1000".into()));
    }
    let mut rows = Vec::new();
    let mut push = |check, value: f64, tolerance| {
        let status = if value < tolerance { "PASS" } else { "FAIL" };
        eprintln!("{status} {check}: {value:.3e} (limit {tolerance:e})");
        rows.push(CheckRow {
            check,
            value,
            tolerance,
            status,
        });
    };
    push("quadrature_order_doubling", quadrature_doubling()?, 1e-9);
    push("painleve_s0_halving", s0_halving()?, 1e-8);
    push(
        "mc_grid_doubling_in_3sigma_units",
        grid_doubling(a.samples, a.seed)?,
        1.0,
    );
    let (gap, series, fi, sig) = three_routes()?;
    push("three_route_max_gap", gap, 1e-5);
    push("series_gap_over_envelope", series, 1.0);
    push("first_integral_over_1_plus_s", fi, 1e-8);
    push("sigma_residual_over_1_plus_s4", sig, 1e-6);
    let failed: Vec<&str> = rows.iter().filter(|r| r.status == "FAIL").map(|r| r.check).collect();
    let mut report = Report::new("selfcheck", a);
    report.note("failed", &failed);
    report.rows = rows;
    report.emit(common)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gate(failed.join(", ")))
    }
}
