//! Distribution functions, expected areas, limit constants and
//! Bessel-scaling diagnostics.
//!
//! Positions `x` are physical; at time `τ` they enter the kernels as
//! `s = x/σ(τ)` with `σ(τ) = sqrt(2τ(1−τ))`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::fredholm::{
    finite_det, fredholm_det_bessel_extended, fredholm_det_extended, fredholm_det_scalar, Window, WindowSet,
    DEFAULT_QUAD_ORDER,
};
use crate::kernels::{
    bessel_extended_entry, bessel_kernel, kernel_scalar, scale_factor, BEKernel, BesselKernel, BesselTimePartition,
    ExcursionKernel, SquareVariable, TimePartition,
};
pub use crate::montecarlo::Extreme;
use crate::painleve::{self, PainleveOptions};
use crate::specfun::gauss_legendre;

/// `∫ s dF₂(s)`, the mean of the GUE largest-eigenvalue law.
pub const F2_MEAN: f64 = -1.771086807411601;

/// Integrands below this value end the outer area and constant integrals.
pub const TAIL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// `n × n` Gram determinant of the odd wavefunctions.
    Finite,
    /// Nyström discretization of the kernel.
    Fredholm,
    /// Integration of the Painlevé system.
    Painleve,
    /// Small-`s` series of the resolvent (bottom only, `s ≤ 0.3`).
    Series,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Finite, Method::Fredholm, Method::Painleve, Method::Series];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Finite => "finite",
            Method::Fredholm => "fredholm",
            Method::Painleve => "painleve",
            Method::Series => "series",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "finite" => Ok(Method::Finite),
            "fredholm" => Ok(Method::Fredholm),
            "painleve" => Ok(Method::Painleve),
            "series" => Ok(Method::Series),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("n must be positive".into()))
    } else {
        Ok(())
    }
}

fn scaled_threshold(tau: f64, x: f64) -> Result<f64> {
    finite(tau, "tau")?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} is not in (0, 1)")));
    }
    if x.is_nan() {
        return Err(Error::NonFinite("x"));
    }
    if x < 0.0 {
        return Err(Error::InvalidArgument("x must be nonnegative".into()));
    }
    Ok(x / scale_factor(tau))
}

/// Discretization settings shared by the determinant routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfOptions {
    /// Gauss–Legendre order for the finite and Nyström routes.
    pub quad_order: usize,
    pub painleve: PainleveOptions,
}

impl Default for CdfOptions {
    fn default() -> Self {
        Self {
            quad_order: DEFAULT_QUAD_ORDER,
            painleve: PainleveOptions::default(),
        }
    }
}

/// `det(I − Kχ(0, s))` by `method`, in the scaled variable.
pub fn bottom_det(n: usize, s: f64, method: Method) -> Result<f64> {
    bottom_det_with(n, s, method, &CdfOptions::default())
}

pub fn bottom_det_with(n: usize, s: f64, method: Method, opts: &CdfOptions) -> Result<f64> {
    check_n(n)?;
    if s.is_nan() {
        return Err(Error::NonFinite("s"));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    let order = opts.quad_order;
    match method {
        Method::Finite => finite_det(n, Window::bottom(s)?, order),
        Method::Fredholm => fredholm_det_scalar(&ExcursionKernel::new(n)?, Window::bottom(s)?, order),
        Method::Painleve => painleve::prob_bottom(n, s, &opts.painleve),
        Method::Series => painleve::prob_series(n, s),
    }
}

/// `det(I − Kχ(s, ∞))` by `method`, in the scaled variable.
pub fn top_det(n: usize, s: f64, method: Method) -> Result<f64> {
    top_det_with(n, s, method, &CdfOptions::default())
}

pub fn top_det_with(n: usize, s: f64, method: Method, opts: &CdfOptions) -> Result<f64> {
    check_n(n)?;
    if s.is_nan() {
        return Err(Error::NonFinite("s"));
    }
    if s.is_infinite() {
        return Ok(1.0);
    }
    let order = opts.quad_order;
    match method {
        Method::Finite => finite_det(n, Window::top(s)?, order),
        Method::Fredholm => fredholm_det_scalar(&ExcursionKernel::new(n)?, Window::top(s)?, order),
        Method::Painleve => painleve::prob_top(n, s, &opts.painleve),
        Method::Series => Err(Error::InvalidArgument(
            "the series covers the bottom window only".into(),
        )),
    }
}

/// `P(X₁(τ) ≥ x)`
pub fn bottom_cdf(n: usize, tau: f64, x: f64, method: Method) -> Result<f64> {
    bottom_det(n, scaled_threshold(tau, x)?, method)
}

/// `P(X_n(τ) ≤ x)`
pub fn top_cdf(n: usize, tau: f64, x: f64, method: Method) -> Result<f64> {
    top_det(n, scaled_threshold(tau, x)?, method)
}

/// `P(X₁(τ_k) ≥ x_k ∀k)` (bottom) or `P(X_n(τ_k) ≤ x_k ∀k)` (top), with
/// physical thresholds.
pub fn joint_cdf(n: usize, times: &TimePartition, thresholds: &[f64], kind: Extreme) -> Result<f64> {
    joint_cdf_with(n, times, thresholds, kind, DEFAULT_QUAD_ORDER)
}

pub fn joint_cdf_with(
    n: usize,
    times: &TimePartition,
    thresholds: &[f64],
    kind: Extreme,
    quad_order: usize,
) -> Result<f64> {
    let kernel = BEKernel::new(n, times.clone())?;
    let windows = match kind {
        Extreme::Bottom => WindowSet::bottom(thresholds)?,
        Extreme::Top => WindowSet::top(thresholds)?,
    };
    fredholm_det_extended(&kernel, &windows.with_quad_order(quad_order))
}

/// `∫₀^∞ f`, with `f` eventually decreasing to zero: Gauss–Legendre
/// panels of width `step`, each bisected until orders 10 and 20 agree,
/// until `|f|` drops below [`TAIL_CUTOFF`] at a panel end. Returns the
/// integral and the cutoff point.
fn integrate_to_cutoff(f: &dyn Fn(f64) -> Result<f64>, step: f64, limit: f64) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut a = 0.0;
    while a < limit {
        let b = a + step;
        total += adaptive_panel(f, a, b, 0)?;
        if f(b)?.abs() < TAIL_CUTOFF {
            return Ok((total, b));
        }
        a = b;
    }
    Err(Error::TailCutoff { limit })
}

fn adaptive_panel(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, depth: usize) -> Result<f64> {
    let rule = |order| -> Result<f64> {
        let q = gauss_legendre(order, a, b)?;
        let mut s = 0.0;
        for (&x, &w) in q.nodes.iter().zip(&q.weights) {
            s += w * f(x)?;
        }
        Ok(s)
    };
    let fine = rule(20)?;
    let coarse = rule(10)?;
    if (fine - coarse).abs() <= 1e-13 * (b - a) || depth >= 8 {
        return Ok(fine);
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive_panel(f, a, mid, depth + 1)? + adaptive_panel(f, mid, b, depth + 1)?)
}

/// `∫₀¹ σ(τ) dτ = π√2/8`
const SIGMA_INTEGRAL: f64 = PI * SQRT_2 / 8.0;

/// Expected areas under the lowest and highest paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaResult {
    pub n: usize,
    pub bottom_mean: f64,
    pub top_mean: f64,
    /// Where the bottom integrand fell below [`TAIL_CUTOFF`].
    pub bottom_cutoff: f64,
    pub top_cutoff: f64,
    pub quad_order: usize,
}

fn area_bottom_with_cutoff(n: usize) -> Result<(f64, f64)> {
    check_n(n)?;
    let f = |s: f64| finite_det(n, Window::bottom(s)?, DEFAULT_QUAD_ORDER);
    let (v, cut) = integrate_to_cutoff(&f, 0.5, 200.0)?;
    Ok((SIGMA_INTEGRAL * v, cut))
}

fn area_top_with_cutoff(n: usize) -> Result<(f64, f64)> {
    check_n(n)?;
    let f = |s: f64| Ok(1.0 - finite_det(n, Window::top(s)?, DEFAULT_QUAD_ORDER)?);
    let (v, cut) = integrate_to_cutoff(&f, 0.5, 200.0)?;
    Ok((SIGMA_INTEGRAL * v, cut))
}

/// `E(A_{n,L}) = (π/(4√2)) ∫₀^∞ det(I − Kχ(0, s)) ds`
pub fn expected_area_bottom(n: usize) -> Result<f64> {
    Ok(area_bottom_with_cutoff(n)?.0)
}

/// `E(A_{n,H}) = (π/(4√2)) ∫₀^∞ (1 − det(I − Kχ(s, ∞))) ds`
pub fn expected_area_top(n: usize) -> Result<f64> {
    Ok(area_top_with_cutoff(n)?.0)
}

pub fn expected_areas(n: usize) -> Result<AreaResult> {
    let (bottom_mean, bottom_cutoff) = area_bottom_with_cutoff(n)?;
    let (top_mean, top_cutoff) = area_top_with_cutoff(n)?;
    Ok(AreaResult {
        n,
        bottom_mean,
        top_mean,
        bottom_cutoff,
        top_cutoff,
        quad_order: DEFAULT_QUAD_ORDER,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants {
    pub c_l: f64,
    /// `∫₀^∞ x^{−1/2} det(I − K₀^{Bes}χ(0, x)) dx`
    pub bessel_integral: f64,
    pub c_h: f64,
    pub f2_mean: f64,
}

/// `c_H = π/(8·2^{1/6}) · ∫ s dF₂(s)`
pub fn constant_c_h() -> f64 {
    PI / (8.0 * 2f64.powf(1.0 / 6.0)) * F2_MEAN
}

/// Nyström order for the square-variable Bessel window `(0, t²)`.
fn bessel_order(t: f64) -> usize {
    48 + (4.0 * t).ceil() as usize
}

/// `det(I − K₀^{Bes}χ(0, t²))`
pub fn bessel_gap(t: f64) -> Result<f64> {
    finite(t, "t")?;
    if t <= 0.0 {
        return Ok(1.0);
    }
    fredholm_det_scalar(&SquareVariable(BesselKernel), Window::bottom(t * t)?, bessel_order(t))
}

/// `∫₀^∞ x^{−1/2} det(I − K₀^{Bes}χ(0, x)) dx`, integrated in `t = √x`.
pub fn bessel_integral() -> Result<f64> {
    let (v, _) = integrate_to_cutoff(&bessel_gap, 1.0, 100.0)?;
    Ok(2.0 * v)
}

static CONSTANTS: OnceLock<LimitConstants> = OnceLock::new();

/// `c_L = (π/(16√2)) · bessel_integral`, together with `c_H`. Computed once.
pub fn limit_constants() -> Result<LimitConstants> {
    if let Some(c) = CONSTANTS.get() {
        return Ok(*c);
    }
    let b = bessel_integral()?;
    let c = LimitConstants {
        c_l: PI / (16.0 * SQRT_2) * b,
        bessel_integral: b,
        c_h: constant_c_h(),
        f2_mean: F2_MEAN,
    };
    Ok(*CONSTANTS.get_or_init(|| c))
}

/// Leading large-`n` behavior of the expected areas: `c_L/√n` (bottom);
/// `(π/2^{3/2})√n + c_H n^{−1/6}` (top).
pub fn area_asymptotics(n: usize, side: Extreme) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    match side {
        Extreme::Bottom => Ok(limit_constants()?.c_l / nf.sqrt()),
        Extreme::Top => Ok(PI / 2f64.powf(1.5) * nf.sqrt() + constant_c_h() * nf.powf(-1.0 / 6.0)),
    }
}

/// Points per axis of the grid used by [`bessel_scaling_error`].
pub const SCALING_GRID: usize = 41;

/// Excursion times `τ + τ(1−τ)t_k/(2n)` and the physical length scale
/// `sqrt(τ(1−τ)/(2n))` that put `n` paths near time `τ` on the Bessel
/// scale.
pub fn bessel_substitution(n: usize, tau: f64, times: &BesselTimePartition) -> Result<(TimePartition, f64)> {
    check_n(n)?;
    finite(tau, "tau")?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau} is not in (0, 1)")));
    }
    let v = tau * (1.0 - tau);
    let nf = n as f64;
    let taus: Vec<f64> = times.taus().iter().map(|&t| tau + v * t / (2.0 * nf)).collect();
    Ok((TimePartition::new(&taus)?, (v / (2.0 * nf)).sqrt()))
}

/// Sup over a grid on `[0, box_size]²` of the gap between the scaled
/// excursion kernel and the Bessel kernel. One time slice compares
/// `(1/(2√n))K(x/(2√n), y/(2√n))` with `K^{Bes}(x, y)`; several compare
/// every block after the time substitution around `tau`.
pub fn bessel_scaling_error(n: usize, box_size: f64, times: &BesselTimePartition, tau: f64) -> Result<f64> {
    check_n(n)?;
    finite(box_size, "box size")?;
    if !(box_size > 0.0 && box_size <= 8.0) {
        return Err(Error::InvalidArgument("box size must lie in (0, 8]".into()));
    }
    let pts: Vec<f64> = (0..SCALING_GRID)
        .map(|i| box_size * i as f64 / (SCALING_GRID - 1) as f64)
        .collect();
    let mut worst: f64 = 0.0;
    if times.len() == 1 {
        let c = 1.0 / (2.0 * (n as f64).sqrt());
        for &x in &pts {
            for &y in &pts {
                let d = c * kernel_scalar(n, c * x, c * y)? - bessel_kernel(x, y);
                worst = worst.max(d.abs());
            }
        }
        return Ok(worst);
    }
    let (part, scale) = bessel_substitution(n, tau, times)?;
    let be = BEKernel::new(n, part.clone())?;
    let m = times.len();
    for k in 0..m {
        for l in 0..m {
            // scaled coordinate X = (scale/σ_k) x on slice k
            let (ck, cl) = (scale / part.sigma(k), scale / part.sigma(l));
            let jac = (ck * cl).sqrt();
            for &x in &pts {
                for &y in &pts {
                    let a = jac * be.entry(k, l, ck * x, cl * y)?;
                    let b = bessel_extended_entry(times, k, l, x, y)?;
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// One row of [`joint_limit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub n: usize,
    pub excursion: f64,
    pub bessel: f64,
    pub difference: f64,
}

/// The excursion joint bottom probability under the Bessel substitutions
/// around `tau`, beside the Bessel-process value, for each `n`.
pub fn joint_limit_check(
    times: &BesselTimePartition,
    thresholds: &[f64],
    n_list: &[usize],
    tau: f64,
) -> Result<Vec<LimitRow>> {
    let bessel = fredholm_det_bessel_extended(times, &WindowSet::bottom(thresholds)?)?;
    n_list
        .iter()
        .map(|&n| {
            let (part, scale) = bessel_substitution(n, tau, times)?;
            let phys: Vec<f64> = thresholds.iter().map(|&x| scale * x).collect();
            let excursion = joint_cdf(n, &part, &phys, Extreme::Bottom)?;
            Ok(LimitRow {
                n,
                excursion,
                bessel,
                difference: (excursion - bessel).abs(),
            })
        })
        .collect()
}
