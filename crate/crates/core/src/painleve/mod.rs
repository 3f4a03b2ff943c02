//! The five-variable Painlevé V system for `r(s) = s R(s, s)`, where `R`
//! is the resolvent kernel of `K₀` on `(0, s)` (bottom) or `(s, ∞)` (top).
//!
//! With `Q = (I − K₀χ)^{-1} φ`, `P = (I − K₀χ)^{-1} ψ`, `q = Q(s)`,
//! `p = P(s)`, `u = (Q, φ)`, `v = (Q, ψ)`, `w = (P, ψ)`:
//!
//! ```text
//! s q' = (1/4 − s/2 − √n w) q + (−u + 2√n v + √n s) p
//! s p' = −(w + √n) q − (1/4 − s/2 − √n w) p
//! u' = ±q²,  v' = ±pq,  w' = ±p²          (+ bottom, − top)
//! r  = (w + √n) q² + (1/2 − s − 2√n w) qp + (−u + √n s + 2√n v) p²
//! r' = −qp + √n p²
//! ```
//!
//! The σ-form ODE and two first integrals are tracked as residuals.

pub mod ode;
pub mod series;

use crate::error::{finite, Error, Result};
use crate::fredholm::{ResolventSystem, Window, DEFAULT_QUAD_ORDER};
use crate::kernels::{k0_phi_psi, ExcursionKernel, SquareVariable};
use ode::{Flow, Real, StepControl};
use twofloat::TwoFloat;

/// Which window the resolvent lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `(0, s)`: distribution of the lowest path.
    Bottom,
    /// `(s, ∞)`: distribution of the highest path.
    Top,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Bottom => 1.0,
            Side::Top => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainleveState {
    pub s: f64,
    pub q: f64,
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub n: usize,
}

/// Constants of the system for one `n` and side.
#[derive(Debug, Clone, Copy)]
struct Params {
    rn: f64,
    sg: f64,
}

impl Params {
    fn new(n: usize, side: Side) -> Self {
        Self {
            rn: (n as f64).sqrt(),
            sg: side.sign(),
        }
    }

    /// `rn²` formed in `T`, so the first integrals are conserved exactly by
    /// the flow with this rounded `√n` and not just up to `n·ε`.
    fn nf<T: Real>(&self) -> T {
        T::from(self.rn) * self.rn
    }
}

fn rhs<T: Real>(c: &Params, s: T, y: &[T]) -> [T; 5] {
    let (q, p, u, v, w) = (y[0], y[1], y[2], y[3], y[4]);
    let a = -(w * c.rn) - s * 0.5 + 0.25;
    let b = v * (2.0 * c.rn) - u + s * c.rn;
    [
        (a * q + b * p) / s,
        (-((w + c.rn) * q) - a * p) / s,
        q * q * c.sg,
        p * q * c.sg,
        p * p * c.sg,
    ]
}

fn r_of<T: Real>(c: &Params, s: T, y: &[T]) -> T {
    let (q, p, u, v, w) = (y[0], y[1], y[2], y[3], y[4]);
    (w + c.rn) * q * q + (-(w * (2.0 * c.rn)) - s + 0.5) * q * p + (-u + s * c.rn + v * (2.0 * c.rn)) * p * p
}

fn r1_of<T: Real>(c: &Params, y: &[T]) -> T {
    let (q, p) = (y[0], y[1]);
    -(q * p) + p * p * c.rn
}

fn r2_of<T: Real>(c: &Params, s: T, y: &[T]) -> T {
    let (q, p) = (y[0], y[1]);
    let d = rhs(c, s, y);
    -(d[0] * p) - q * d[1] + p * d[1] * (2.0 * c.rn)
}

fn first_integrals_of<T: Real>(c: &Params, s: T, y: &[T]) -> [T; 2] {
    let (q, p, u, v, w) = (y[0], y[1], y[2], y[3], y[4]);
    let nf: T = c.nf();
    let f1 = s * p * (q - p * c.rn) * c.sg + (u + w * 0.5) * c.rn - v * (nf * 2.0 + 1.0)
        + w * (u - v * (2.0 * c.rn) + w * nf);
    let f2 = (s * c.rn - u + v * (2.0 * c.rn)) * p * p
        + (w + c.rn) * q * q
        + (-(w * (2.0 * c.rn)) - s + 0.5) * p * q
        + (v - w * c.rn) * c.sg;
    [f1, f2]
}

fn sigma_of<T: Real>(c: &Params, s: T, y: &[T]) -> T {
    let r = r_of(c, s, y);
    let r1 = r1_of(c, y);
    let r2 = r2_of(c, s, y);
    let g = s * r1 - r;
    let rhs = r1 * r1 * g * (4.0 * c.sg) + g * g - g * r1 * (c.nf::<T>() * 4.0 + 1.0) + r1 * r1 * 0.25;
    s * s * r2 * r2 - rhs
}

impl PainleveState {
    fn params(&self, side: Side) -> Params {
        Params::new(self.n, side)
    }

    /// `(q', p', u', v', w')`
    pub fn derivatives(&self, side: Side) -> [f64; 5] {
        rhs(&self.params(side), self.s, &self.as_array())
    }

    pub fn r(&self) -> f64 {
        r_of(&self.params(Side::Bottom), self.s, &self.as_array())
    }

    /// `r' = −qp + √n p²`
    pub fn r_prime(&self) -> f64 {
        r1_of(&self.params(Side::Bottom), &self.as_array())
    }

    /// `r` differentiated along the flow, term by term, for checking
    /// [`Self::r_prime`].
    pub fn r_prime_chain(&self, side: Side) -> f64 {
        let rn = (self.n as f64).sqrt();
        let (q, p, s, u, v, w) = (self.q, self.p, self.s, self.u, self.v, self.w);
        let [dq, dp, du, dv, dw] = self.derivatives(side);
        let dr_ds = -q * p + rn * p * p;
        let dr_dq = 2.0 * (w + rn) * q + (0.5 - s - 2.0 * rn * w) * p;
        let dr_dp = (0.5 - s - 2.0 * rn * w) * q + 2.0 * (-u + rn * s + 2.0 * rn * v) * p;
        let dr_du = -p * p;
        let dr_dv = 2.0 * rn * p * p;
        let dr_dw = q * q - 2.0 * rn * q * p;
        dr_ds + dr_dq * dq + dr_dp * dp + dr_du * du + dr_dv * dv + dr_dw * dw
    }

    pub fn r_second(&self, side: Side) -> f64 {
        r2_of(&self.params(side), self.s, &self.as_array())
    }

    /// The two conserved combinations; both vanish on true trajectories.
    pub fn first_integrals(&self, side: Side) -> [f64; 2] {
        first_integrals_of(&self.params(side), self.s, &self.as_array())
    }

    /// `s²(r″)² − [±4(r′)²(sr′ − r) + (sr′ − r)² − (4n+1)(sr′ − r)r′ + (r′)²/4]`
    pub fn sigma_residual(&self, side: Side) -> f64 {
        sigma_of(&self.params(side), self.s, &self.as_array())
    }

    fn as_array(&self) -> [f64; 5] {
        [self.q, self.p, self.u, self.v, self.w]
    }
}

/// Residual of the σ-form for given `r, r′, r″` at `s`.
pub fn sigma_form_residual(n: usize, side: Side, s: f64, r: f64, r1: f64, r2: f64) -> f64 {
    let g = s * r1 - r;
    let nf = n as f64;
    let rhs = side.sign() * 4.0 * r1 * r1 * g + g * g - (4.0 * nf + 1.0) * g * r1 + 0.25 * r1 * r1;
    s * s * r2 * r2 - rhs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainleveOptions {
    /// Start of the bottom integration; `(0, s0]` is covered by the series.
    pub s0: f64,
    pub control: StepControl,
    /// Trajectories abort when a first integral exceeds
    /// `100 · first_integral_tol · (1 + s)`.
    pub first_integral_tol: f64,
    /// Nyström order for the initial data.
    pub quad_order: usize,
    pub series_order: usize,
    /// Start of the top integration; `None` uses [`default_top_start`].
    pub top_start: Option<f64>,
    /// Trajectories stop once the probability falls below this; later
    /// stops report 0. Past it the state grows like the inverse
    /// probability and the system turns stiff.
    pub probability_floor: f64,
}

impl Default for PainleveOptions {
    fn default() -> Self {
        Self {
            s0: 1e-3,
            control: StepControl::default(),
            first_integral_tol: 1e-8,
            quad_order: DEFAULT_QUAD_ORDER,
            series_order: DEFAULT_SERIES_ORDER,
            top_start: None,
            probability_floor: DEFAULT_PROBABILITY_FLOOR,
        }
    }
}

impl PainleveOptions {
    /// Sets both the relative and the peak-relative absolute step tolerance.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.control.rtol = tol;
        self.control.atol = tol;
        self
    }
}

/// Default [`PainleveOptions::probability_floor`].
pub const DEFAULT_PROBABILITY_FLOOR: f64 = 1e-10;

/// Series terms kept: `s^{3/2}` through `s^{40/2}`.
pub const DEFAULT_SERIES_ORDER: usize = 40;
/// Largest `s` at which [`series_r`] is accepted.
pub const SERIES_LIMIT: f64 = 0.3;

/// Largest `s` at which [`series_r`] is used: the series converges for
/// `s` up to roughly `1/n`.
pub fn series_limit(n: usize) -> f64 {
    SERIES_LIMIT.min(SERIES_LIMIT / n as f64)
}

/// `(√(4n) + 8)²`: the top window `(s, ∞)` carries a kernel trace below
/// `1e-20` beyond it.
pub fn default_top_start(n: usize) -> f64 {
    let e = (4.0 * n as f64).sqrt() + 8.0;
    e * e
}

/// Trajectory of the system with `r` and the accumulated log-integral.
/// The system runs in double-double arithmetic; the stored states,
/// residuals and `r` are rounded from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSolution {
    pub n: usize,
    pub side: Side,
    /// Accepted step points, in integration order.
    pub grid: Vec<f64>,
    pub r_values: Vec<f64>,
    /// `∫ r(t)/t dt` over the window `(0, s)` or `(s, ∞)`, so that the
    /// probability at `s` is `exp(−log_integral)`.
    pub log_integral: Vec<f64>,
    pub states: Vec<PainleveState>,
    pub first_integral_values: Vec<[f64; 2]>,
    pub sigma_residuals: Vec<f64>,
    /// Indices into `grid` of the requested stop points that were reached.
    pub stop_indices: Vec<usize>,
    pub requested_stops: usize,
    /// Where the trajectory stopped at the probability floor, if it did.
    pub floor_reached_at: Option<f64>,
}

impl SigmaSolution {
    /// `det(I − K₀χ)` at each grid point.
    pub fn probabilities(&self) -> Vec<f64> {
        self.log_integral.iter().map(|l| (-l).exp()).collect()
    }

    /// Probabilities at the requested stop points, in request order; stops
    /// past the probability floor give 0.
    pub fn stop_probabilities(&self) -> Vec<f64> {
        (0..self.requested_stops)
            .map(|k| match self.stop_indices.get(k) {
                Some(&i) => (-self.log_integral[i]).exp(),
                None => 0.0,
            })
            .collect()
    }

    /// Largest `|first integral| / (1 + s)`.
    pub fn max_first_integral(&self) -> f64 {
        self.first_integral_values
            .iter()
            .zip(&self.grid)
            .flat_map(|(f, &s)| f.iter().map(move |v| v.abs() / (1.0 + s)))
            .fold(0.0, f64::max)
    }

    /// Largest `|σ-form residual| / (1 + s⁴)`.
    pub fn max_sigma_residual(&self) -> f64 {
        self.sigma_residuals
            .iter()
            .zip(&self.grid)
            .map(|(r, &s)| r.abs() / (1.0 + s.powi(4)))
            .fold(0.0, f64::max)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("n must be positive".into()))
    } else {
        Ok(())
    }
}

/// `r(s)` from the small-`s` series.
pub fn series_r(n: usize, s: f64) -> Result<f64> {
    check_n(n)?;
    finite(s, "s")?;
    if s < 0.0 {
        return Err(Error::InvalidArgument("s must be nonnegative".into()));
    }
    let limit = series_limit(n);
    if s > limit {
        return Err(Error::SeriesOutOfRange { s, limit });
    }
    Ok(series::evaluate(&series::coefficients(n, DEFAULT_SERIES_ORDER), s))
}

/// The printed small-`s` expansion of `P(X₁(τ) ≥ sσ)` through `s¹⁰`.
pub fn prob_series_bottom(n: usize, s: f64) -> Result<f64> {
    check_n(n)?;
    finite(s, "s")?;
    if s < 0.0 {
        return Err(Error::InvalidArgument("s must be nonnegative".into()));
    }
    if s > SERIES_LIMIT {
        return Err(Error::SeriesOutOfRange { s, limit: SERIES_LIMIT });
    }
    let r = series::r0(n);
    let nf = n as f64;
    Ok(
        1.0 - 2.0 / 3.0 * r * s.powi(3) + 2.0 / 25.0 * (4.0 * nf + 1.0) * r * s.powi(5)
            - (64.0 * nf * nf + 32.0 * nf + 9.0) / 735.0 * r * s.powi(7)
            + (4.0 * nf + 1.0) * (32.0 * nf * nf + 16.0 * nf + 15.0) / 8505.0 * r * s.powi(9)
            + 128.0 * (2.0 * nf + 3.0) * (nf - 1.0) / 275625.0 * r * r * s.powi(10),
    )
}

/// `P(X₁(τ) ≥ sσ) = exp(−∫₀^{s²} r(t)/t dt)` from the generated series of
/// `r` ([`DEFAULT_SERIES_ORDER`] terms), for `s ≤ 0.3`.
pub fn prob_series(n: usize, s: f64) -> Result<f64> {
    check_n(n)?;
    finite(s, "s")?;
    if s < 0.0 {
        return Err(Error::InvalidArgument("s must be nonnegative".into()));
    }
    if s > SERIES_LIMIT {
        return Err(Error::SeriesOutOfRange { s, limit: SERIES_LIMIT });
    }
    let c = series::coefficients(n, DEFAULT_SERIES_ORDER);
    Ok((-series::log_integral(&c, s * s)).exp())
}

/// Exact `(q, p, u, v, w)` at the edge of `window` from a Nyström solve.
pub fn initial_state(n: usize, s: f64, window: Window, quad_order: usize) -> Result<PainleveState> {
    let kernel = SquareVariable(ExcursionKernel::new(n)?);
    let sys = ResolventSystem::new(&kernel, window, quad_order)?;
    let (phi, psi): (Vec<f64>, Vec<f64>) = sys.nodes.iter().map(|&x| k0_phi_psi(n, x)).unzip();
    let sol = sys.solve(&[phi.clone(), psi.clone()])?;
    let (big_q, big_p) = (&sol[0], &sol[1]);
    let (phi_s, psi_s) = k0_phi_psi(n, s);
    let inner = |f: &[f64], g: &[f64]| -> f64 { sys.weights.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum() };
    Ok(PainleveState {
        s,
        q: sys.extend(s, phi_s, big_q),
        p: sys.extend(s, psi_s, big_p),
        u: inner(big_q, &phi),
        v: inner(big_q, &psi),
        w: inner(big_p, &psi),
        n,
    })
}

fn run(
    n: usize,
    side: Side,
    start: PainleveState,
    log_start: f64,
    stops: &[f64],
    opts: &PainleveOptions,
) -> Result<SigmaSolution> {
    let c = Params::new(n, side);
    let mut sol = SigmaSolution {
        n,
        side,
        grid: Vec::new(),
        r_values: Vec::new(),
        log_integral: Vec::new(),
        states: Vec::new(),
        first_integral_values: Vec::new(),
        sigma_residuals: Vec::new(),
        stop_indices: Vec::new(),
        requested_stops: stops.len(),
        floor_reached_at: None,
    };
    let limit = 100.0 * opts.first_integral_tol;
    let floor_log = -opts.probability_floor.ln();
    let mut record = |s: TwoFloat, y: &[TwoFloat], at_stop: bool| -> Result<Flow> {
        let s_f: f64 = s.into();
        let fi = first_integrals_of(&c, s, &y[..5]).map(f64::from);
        for (which, &value) in fi.iter().enumerate() {
            if !(value.abs() <= limit * (1.0 + s_f)) {
                return Err(Error::FirstIntegralViolation {
                    which: which + 1,
                    s: s_f,
                    value,
                });
            }
        }
        let log = log_start + c.sg * f64::from(y[5]);
        sol.grid.push(s_f);
        sol.r_values.push(r_of(&c, s, &y[..5]).into());
        sol.log_integral.push(log);
        sol.states.push(PainleveState {
            s: s_f,
            q: y[0].into(),
            p: y[1].into(),
            u: y[2].into(),
            v: y[3].into(),
            w: y[4].into(),
            n,
        });
        sol.first_integral_values.push(fi);
        sol.sigma_residuals.push(sigma_of(&c, s, &y[..5]).into());
        if at_stop {
            sol.stop_indices.push(sol.grid.len() - 1);
        }
        if log > floor_log {
            sol.floor_reached_at = Some(s_f);
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    };
    // sixth component carries ∫ r/t in the integration direction
    let mut y0: Vec<TwoFloat> = start.as_array().iter().map(|&v| TwoFloat::from(v)).collect();
    y0.push(TwoFloat::from(0.0));
    let s_start = TwoFloat::from(start.s);
    if record(s_start, &y0, false)? == Flow::Stop {
        return Ok(sol);
    }
    let stops: Vec<TwoFloat> = stops.iter().map(|&s| TwoFloat::from(s)).collect();
    ode::integrate(
        |s, y: &[TwoFloat], dy: &mut [TwoFloat]| {
            dy[..5].copy_from_slice(&rhs(&c, s, &y[..5]));
            dy[5] = r_of(&c, s, &y[..5]) / s;
        },
        s_start,
        &y0,
        &stops,
        &opts.control,
        record,
    )?;
    Ok(sol)
}

fn check_stops(n: usize, stops: &[f64]) -> Result<()> {
    check_n(n)?;
    for &s in stops {
        finite(s, "s")?;
        if s <= 0.0 {
            return Err(Error::InvalidArgument("s must be positive".into()));
        }
    }
    Ok(())
}

/// Integrates the bottom system from `opts.s0` up through each of `stops`
/// (increasing, in the `K₀` variable, all above `s0`).
pub fn integrate_bottom_through(n: usize, stops: &[f64], opts: &PainleveOptions) -> Result<SigmaSolution> {
    check_stops(n, stops)?;
    if stops.windows(2).any(|w| w[1] < w[0]) || stops.first().is_some_and(|&s| s < opts.s0) {
        return Err(Error::InvalidArgument(format!(
            "bottom stops must increase from s0 = {}",
            opts.s0
        )));
    }
    let s0 = opts.s0;
    let start = initial_state(n, s0, Window::bottom(s0)?, opts.quad_order)?;
    let c = series::coefficients(n, opts.series_order);
    run(n, Side::Bottom, start, series::log_integral(&c, s0), stops, opts)
}

/// Bottom trajectory on `[s0, s_max]`.
pub fn integrate_bottom(n: usize, s_max: f64, opts: &PainleveOptions) -> Result<SigmaSolution> {
    integrate_bottom_through(n, &[s_max], opts)
}

/// Integrates the top system downward from the start point through each
/// of `stops` (decreasing, in the `K₀` variable).
pub fn integrate_top_through(n: usize, stops: &[f64], opts: &PainleveOptions) -> Result<SigmaSolution> {
    check_stops(n, stops)?;
    let s_start = opts.top_start.unwrap_or_else(|| default_top_start(n));
    finite(s_start, "top start")?;
    if stops.windows(2).any(|w| w[1] > w[0]) || stops.first().is_some_and(|&s| s > s_start) {
        return Err(Error::InvalidArgument(format!(
            "top stops must decrease from {s_start}"
        )));
    }
    let start = initial_state(n, s_start, Window::top(s_start)?, opts.quad_order)?;
    run(n, Side::Top, start, 0.0, stops, opts)
}

/// Top trajectory on `[s_min, s_start]`.
pub fn integrate_top(n: usize, s_min: f64, opts: &PainleveOptions) -> Result<SigmaSolution> {
    integrate_top_through(n, &[s_min], opts)
}

/// `P(X₁(τ) ≥ sσ) = exp(−∫₀^{s²} r(t)/t dt)` at each `s` (any order).
pub fn prob_bottom_many(n: usize, s: &[f64], opts: &PainleveOptions) -> Result<Vec<f64>> {
    check_n(n)?;
    for &x in s {
        finite(x, "s")?;
        if x < 0.0 {
            return Err(Error::InvalidArgument("s must be nonnegative".into()));
        }
    }
    let c = series::coefficients(n, opts.series_order);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let mut out = vec![0.0; s.len()];
    let mut stops = Vec::new();
    let mut targets = Vec::new();
    for &i in &order {
        let t = s[i] * s[i];
        if t <= opts.s0 {
            out[i] = (-series::log_integral(&c, t)).exp();
        } else {
            if stops.last() != Some(&t) {
                stops.push(t);
            }
            targets.push((i, stops.len() - 1));
        }
    }
    if !stops.is_empty() {
        let probs = integrate_bottom_through(n, &stops, opts)?.stop_probabilities();
        for (i, k) in targets {
            out[i] = probs[k];
        }
    }
    Ok(out)
}

pub fn prob_bottom(n: usize, s: f64, opts: &PainleveOptions) -> Result<f64> {
    Ok(prob_bottom_many(n, &[s], opts)?[0])
}

/// `P(X_n(τ) < sσ) = exp(−∫_{s²}^∞ r(t)/t dt)` at each `s` (any order).
pub fn prob_top_many(n: usize, s: &[f64], opts: &PainleveOptions) -> Result<Vec<f64>> {
    check_n(n)?;
    let s_start = opts.top_start.unwrap_or_else(|| default_top_start(n));
    for &x in s {
        finite(x, "s")?;
        if x <= 0.0 {
            return Err(Error::InvalidArgument("s must be positive".into()));
        }
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut out = vec![1.0; s.len()];
    let mut stops = Vec::new();
    let mut targets = Vec::new();
    for &i in &order {
        let t = s[i] * s[i];
        if t < s_start {
            if stops.last() != Some(&t) {
                stops.push(t);
            }
            targets.push((i, stops.len() - 1));
        }
    }
    if !stops.is_empty() {
        let probs = integrate_top_through(n, &stops, opts)?.stop_probabilities();
        for (i, k) in targets {
            out[i] = probs[k];
        }
    }
    Ok(out)
}

pub fn prob_top(n: usize, s: f64, opts: &PainleveOptions) -> Result<f64> {
    Ok(prob_top_many(n, &[s], opts)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm::{finite_det, fredholm_det_scalar, resolvent_diagonal};
    use libm::erf;
    use std::f64::consts::PI;

    fn n1_bottom(s: f64) -> f64 {
        1.0 - erf(s) + 2.0 / PI.sqrt() * s * (-s * s).exp()
    }

    #[test]
    fn series_against_resolvent() {
        assert!((series::r0(1) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
        assert_eq!(series_r(3, 0.0).unwrap(), 0.0);
        assert!(matches!(series_r(1, 0.5), Err(Error::SeriesOutOfRange { .. })));
        let k0 = SquareVariable(ExcursionKernel::new(2).unwrap());
        let s = 0.05;
        let oracle = s * resolvent_diagonal(&k0, s, 64).unwrap();
        assert!((series_r(2, s).unwrap() - oracle).abs() < 1e-7);
    }

    #[test]
    fn series_order_is_converged() {
        for n in [1usize, 4, 8] {
            let hi = series::coefficients(n, 60);
            let lo = series::coefficients(n, DEFAULT_SERIES_ORDER);
            for s in [1e-3, series_limit(n)] {
                let a = series::evaluate(&hi, s);
                let b = series::evaluate(&lo, s);
                assert!((a - b).abs() <= 1e-8 * a.abs(), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn printed_expansion_matches_generated_series() {
        for n in 1..5 {
            let c = series::coefficients(n, 24);
            for s in [0.02, 0.05, 0.1] {
                let from_series = (-series::log_integral(&c, s * s)).exp();
                let printed = prob_series_bottom(n, s).unwrap();
                assert!(
                    (from_series - printed).abs() < 1e-14 + 100.0 * s.powi(11),
                    "n={n} s={s}"
                );
            }
        }
        assert_eq!(prob_series_bottom(2, 0.0).unwrap(), 1.0);
        let a = prob_series_bottom(1, 0.1).unwrap();
        assert!((a - 0.99925224).abs() < 1e-8);
    }

    #[test]
    fn initial_data_satisfies_first_integrals() {
        for n in [1usize, 3] {
            let st = initial_state(n, 1e-3, Window::bottom(1e-3).unwrap(), 64).unwrap();
            for f in st.first_integrals(Side::Bottom) {
                assert!(f.abs() < 1e-10);
            }
            assert!((st.r_prime() - st.r_prime_chain(Side::Bottom)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_path_bottom() {
        let opts = PainleveOptions::default();
        let sol = integrate_bottom(1, 1.0, &opts).unwrap();
        let p = *sol.probabilities().last().unwrap();
        assert!((p - n1_bottom(1.0)).abs() < 1e-6);
        assert!((p - 0.5724067).abs() < 1e-6);
        for st in &sol.states {
            assert!((st.r_prime() - st.r_prime_chain(Side::Bottom)).abs() < 1e-7);
        }
        assert!(sol.r_values.iter().all(|&r| r >= -1e-10));
        assert!(sol.max_sigma_residual() < 1e-6);
        assert_eq!(prob_bottom(1, 0.0, &opts).unwrap(), 1.0);
        assert!((prob_bottom(1, 0.1, &opts).unwrap() - 0.99925224).abs() < 1e-8);
    }

    #[test]
    fn single_path_top() {
        let opts = PainleveOptions::default();
        let sol = integrate_top(1, 1.0, &opts).unwrap();
        assert!(sol.r_values[0].abs() < 1e-10);
        let p = *sol.probabilities().last().unwrap();
        assert!((p - (1.0 - n1_bottom(1.0))).abs() < 1e-6, "{p}");
        assert!((prob_top(1, 1.0, &opts).unwrap() - 0.4275933).abs() < 1e-6);
        for st in &sol.states {
            for f in st.first_integrals(Side::Top) {
                assert!(f.abs() < 1e-7 * (1.0 + st.s));
            }
        }
        assert!(sol.max_sigma_residual() < 1e-6);
        let far = (4.0f64).sqrt() + 6.0;
        assert!((prob_top(1, far, &opts).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bottom_agrees_with_determinants() {
        let opts = PainleveOptions::default();
        let grid: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        for n in 1..=5 {
            let kernel = ExcursionKernel::new(n).unwrap();
            let probs = prob_bottom_many(n, &grid, &opts).unwrap();
            for (&s, &p) in grid.iter().zip(&probs) {
                let w = Window::bottom(s).unwrap();
                let a = finite_det(n, w, 64).unwrap();
                let b = fredholm_det_scalar(&kernel, w, 64).unwrap();
                assert!((p - a).abs() < 1e-5 && (p - b).abs() < 1e-5, "n={n} s={s} {p} {a} {b}");
            }
        }
        let p = prob_bottom(2, 1.0, &opts).unwrap();
        assert!((p - finite_det(2, Window::bottom(1.0).unwrap(), 64).unwrap()).abs() < 1e-6);
        let p = prob_bottom(2, 0.1, &opts).unwrap();
        assert!((p - prob_series_bottom(2, 0.1).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn top_agrees_with_determinants() {
        let opts = PainleveOptions::default();
        let grid: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        for n in 1..=5 {
            let probs = prob_top_many(n, &grid, &opts).unwrap();
            for (&s, &p) in grid.iter().zip(&probs) {
                let a = finite_det(n, Window::top(s).unwrap(), 64).unwrap();
                assert!((p - a).abs() < 1e-5, "n={n} s={s} {p} {a}");
            }
        }
    }

    #[test]
    fn start_point_insensitivity() {
        let base = PainleveOptions::default();
        let shrunk = PainleveOptions {
            s0: base.s0 / 4.0,
            ..base
        };
        for n in [1usize, 3] {
            let a = prob_bottom(n, 1.3, &base).unwrap();
            let b = prob_bottom(n, 1.3, &shrunk).unwrap();
            assert!((a - b).abs() < 1e-8, "n={n} {a} {b}");
        }
    }

    #[test]
    fn sigma_residual_by_finite_differences() {
        let sol = integrate_bottom_through(2, &[0.5, 1.0, 1.5, 2.0], &PainleveOptions::default()).unwrap();
        let h = 1e-3;
        for &s in &[0.5, 1.0, 1.5] {
            let pts = prob_r(2, &[s - h, s, s + h]);
            let r1 = (pts[2] - pts[0]) / (2.0 * h);
            let r2 = (pts[2] - 2.0 * pts[1] + pts[0]) / (h * h);
            let res = sigma_form_residual(2, Side::Bottom, s, pts[1], r1, r2);
            assert!(res.abs() < 1e-6 * (1.0 + s.powi(4)), "s={s} {res}");
        }
        assert!(sol.max_sigma_residual() < 1e-6);
    }

    fn prob_r(n: usize, s: &[f64]) -> Vec<f64> {
        let sol = integrate_bottom_through(n, s, &PainleveOptions::default()).unwrap();
        sol.stop_indices.iter().map(|&i| sol.r_values[i]).collect()
    }
}
