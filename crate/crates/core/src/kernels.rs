//! Kernels of the excursion ensemble and of its Bessel scaling limit.
//!
//! Extended-kernel entries are returned in similarity-reduced form: block
//! `k` works in the scaled coordinate `X = x / σ_k` with
//! `σ_k = sqrt(2 τ_k (1 − τ_k))`, and the exponential and power prefactors
//! that form a diagonal similarity are dropped. Determinants are unchanged.
//! [`BEKernel::entry_raw`] keeps every factor, in unscaled coordinates, for
//! checking that claim.

use std::f64::consts::PI;

use crate::error::{finite, Error, Result};
use crate::specfun::{composite_gauss_legendre, fill_wavefunctions, p_minus, PI_POW_NEG_QUARTER};

/// Default term cutoff for the convergent tail sums of `k < ℓ` entries.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-14;
/// Tail sums needing more terms than this switch to the Mehler closed form.
pub const MAX_TAIL_TERMS: usize = 10_000;
/// Envelope level at which half-line Bessel integrals are cut.
pub const BESSEL_ENVELOPE_CUTOFF: f64 = 1e-14;

/// `σ = sqrt(2τ(1−τ))`, the one-time spatial scale.
pub fn scale_factor(tau: f64) -> f64 {
    (2.0 * tau * (1.0 - tau)).sqrt()
}

/// Strictly increasing observation times in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    taus: Vec<f64>,
    scale_factors: Vec<f64>,
    log_times: Vec<f64>,
}

impl TimePartition {
    pub fn new(taus: &[f64]) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidTimes("empty time partition".into()));
        }
        for &t in taus {
            finite(t, "time")?;
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidTimes(format!("time {t} outside (0, 1)")));
            }
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidTimes(format!(
                "times must be strictly increasing: {taus:?}"
            )));
        }
        Ok(Self {
            taus: taus.to_vec(),
            scale_factors: taus.iter().map(|&t| scale_factor(t)).collect(),
            log_times: taus.iter().map(|&t| 0.5 * (t / (1.0 - t)).ln()).collect(),
        })
    }

    pub fn single(tau: f64) -> Result<Self> {
        Self::new(&[tau])
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.taus[k]
    }

    /// `σ_k = sqrt(2 τ_k (1 − τ_k))`
    pub fn sigma(&self, k: usize) -> f64 {
        self.scale_factors[k]
    }

    /// `τ̂_k` with `τ_k / (1 − τ_k) = e^{2 τ̂_k}`
    pub fn log_time(&self, k: usize) -> f64 {
        self.log_times[k]
    }
}

/// A kernel on a subset of the half-line, evaluated pointwise or on a grid.
pub trait ScalarKernel: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// Row-major `xs.len() × ys.len()` matrix of kernel values.
    fn matrix(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                out.push(self.eval(x, y));
            }
        }
        out
    }

    /// Upper limit used when a half-line window is truncated.
    fn truncation_point(&self) -> f64;

    /// True for kernels of the form `K(√x, √y) / (2 (xy)^{1/4})`, which
    /// behave like `(xy)^{1/4}` at the origin and need graded nodes there.
    fn square_variable(&self) -> bool {
        false
    }
}

/// Half-line truncation `sqrt(4n) + 10` in scaled units.
pub fn default_truncation(n: usize) -> f64 {
    (4.0 * n as f64).sqrt() + 10.0
}

fn odd_table(n: usize, points: &[f64]) -> Vec<f64> {
    // row i: φ_1, φ_3, …, φ_{2n−1} at points[i]
    let mut buf = vec![0.0; 2 * n];
    let mut out = Vec::with_capacity(n * points.len());
    for &x in points {
        fill_wavefunctions(x, &mut buf);
        out.extend(buf.iter().skip(1).step_by(2));
    }
    out
}

/// The one-time excursion kernel `K(x, y) = 2 Σ_{j<n} φ_{2j+1}(x) φ_{2j+1}(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionKernel {
    pub n: usize,
}

impl ExcursionKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        Ok(Self { n })
    }

    /// The same kernel in the square variable, `K₀(x, y)`.
    pub fn square_variable(self) -> SquareVariable<Self> {
        SquareVariable(self)
    }
}

impl ScalarKernel for ExcursionKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut a = vec![0.0; 2 * self.n];
        let mut b = vec![0.0; 2 * self.n];
        fill_wavefunctions(x, &mut a);
        fill_wavefunctions(y, &mut b);
        2.0 * (0..self.n).map(|j| a[2 * j + 1] * b[2 * j + 1]).sum::<f64>()
    }

    fn matrix(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let n = self.n;
        let tx = odd_table(n, xs);
        let ty = odd_table(n, ys);
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for i in 0..xs.len() {
            let a = &tx[i * n..(i + 1) * n];
            for j in 0..ys.len() {
                let b = &ty[j * n..(j + 1) * n];
                out.push(2.0 * a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>());
            }
        }
        out
    }

    fn truncation_point(&self) -> f64 {
        default_truncation(self.n)
    }
}

/// `L₀(x, y) = L(√x, √y) / (2 (xy)^{1/4})`, the kernel after `x = t²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareVariable<K>(pub K);

impl<K: ScalarKernel> ScalarKernel for SquareVariable<K> {
    fn eval(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 || y <= 0.0 {
            return 0.0;
        }
        self.0.eval(x.sqrt(), y.sqrt()) / (2.0 * (x * y).sqrt().sqrt())
    }

    fn matrix(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let rx: Vec<f64> = xs.iter().map(|&x| x.max(0.0).sqrt()).collect();
        let ry: Vec<f64> = ys.iter().map(|&y| y.max(0.0).sqrt()).collect();
        let mut m = self.0.matrix(&rx, &ry);
        for i in 0..xs.len() {
            for j in 0..ys.len() {
                let d = 2.0 * (rx[i] * ry[j]).sqrt();
                let v = &mut m[i * ys.len() + j];
                *v = if d > 0.0 { *v / d } else { 0.0 };
            }
        }
        m
    }

    fn truncation_point(&self) -> f64 {
        let t = self.0.truncation_point();
        t * t
    }

    fn square_variable(&self) -> bool {
        true
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("n must be positive".into()))
    } else {
        Ok(())
    }
}

/// `K(x, y) = 2 Σ_{j<n} φ_{2j+1}(x) φ_{2j+1}(y)`.
pub fn kernel_scalar(n: usize, x: f64, y: f64) -> Result<f64> {
    check_n(n)?;
    finite(x, "x")?;
    finite(y, "y")?;
    Ok(ExcursionKernel { n }.eval(x, y))
}

/// Christoffel–Darboux form of the GUE kernel `Σ_{j<N} φ_j(x) φ_j(y)`.
pub fn gue_kernel_cd(big_n: usize, x: f64, y: f64) -> f64 {
    let mut a = vec![0.0; big_n + 2];
    let mut b = vec![0.0; big_n + 2];
    fill_wavefunctions(x, &mut a);
    fill_wavefunctions(y, &mut b);
    let nf = big_n as f64;
    let d = x - y;
    if d.abs() < 1e-8 * (1.0 + x.abs()) {
        // limit: sqrt(N/2) (φ_N' φ_{N−1} − φ_{N−1}' φ_N) with the ladder
        // relation φ_k' = sqrt(k/2) φ_{k−1} − sqrt((k+1)/2) φ_{k+1}
        let m = 0.5 * (x + y);
        let mut c = vec![0.0; big_n + 2];
        fill_wavefunctions(m, &mut c);
        let deriv = |k: usize| {
            let kf = k as f64;
            let lower = if k > 0 { (kf / 2.0).sqrt() * c[k - 1] } else { 0.0 };
            lower - ((kf + 1.0) / 2.0).sqrt() * c[k + 1]
        };
        (nf / 2.0).sqrt() * (deriv(big_n) * c[big_n - 1] - deriv(big_n - 1) * c[big_n])
    } else {
        (nf / 2.0).sqrt() * (a[big_n] * b[big_n - 1] - a[big_n - 1] * b[big_n]) / d
    }
}

/// The excursion kernel through two Christoffel–Darboux sums,
/// `K_{2n}^{GUE}(x, y) − K_{2n}^{GUE}(x, −y)`.
pub fn kernel_scalar_cd(n: usize, x: f64, y: f64) -> Result<f64> {
    check_n(n)?;
    finite(x, "x")?;
    finite(y, "y")?;
    Ok(gue_kernel_cd(2 * n, x, y) - gue_kernel_cd(2 * n, x, -y))
}

/// `K₀(x, y) = K(√x, √y) / (2 (xy)^{1/4})`.
pub fn kernel_k0(n: usize, x: f64, y: f64) -> Result<f64> {
    check_n(n)?;
    finite(x, "x")?;
    finite(y, "y")?;
    if x < 0.0 || y < 0.0 {
        return Err(Error::InvalidArgument("K₀ is defined for x, y >= 0".into()));
    }
    Ok(SquareVariable(ExcursionKernel { n }).eval(x, y))
}

/// The integrable-form functions of `K₀`:
/// `φ(x) = n^{1/4} x^{1/4} φ_{2n}(√x)`, `ψ(x) = n^{1/4} x^{-1/4} φ_{2n−1}(√x)`.
pub fn k0_phi_psi(n: usize, x: f64) -> (f64, f64) {
    let mut buf = vec![0.0; 2 * n + 1];
    let r = x.sqrt();
    fill_wavefunctions(r, &mut buf);
    let n4 = (n as f64).sqrt().sqrt();
    let x4 = r.sqrt();
    let psi = if x > 0.0 { n4 * buf[2 * n - 1] / x4 } else { 0.0 };
    (n4 * x4 * buf[2 * n], psi)
}

/// `K₀` in the form `(φ(x)ψ(y) − ψ(x)φ(y)) / (x − y)`, with the diagonal
/// taken from the derivative relations of `φ, ψ`.
pub fn kernel_k0_cd(n: usize, x: f64, y: f64) -> Result<f64> {
    check_n(n)?;
    finite(x, "x")?;
    finite(y, "y")?;
    if x < 0.0 || y < 0.0 {
        return Err(Error::InvalidArgument("K₀ is defined for x, y >= 0".into()));
    }
    if (x - y).abs() < 1e-8 {
        let m = 0.5 * (x + y);
        if m <= 0.0 {
            return Ok(0.0);
        }
        // x φ' = (1/4 − x/2) φ + √n x ψ,  x ψ' = −√n φ − (1/4 − x/2) ψ
        let (f, g) = k0_phi_psi(n, m);
        let rn = (n as f64).sqrt();
        return Ok(((0.5 - m) * f * g + rn * m * g * g + rn * f * f) / m);
    }
    let (fx, gx) = k0_phi_psi(n, x);
    let (fy, gy) = k0_phi_psi(n, y);
    Ok((fx * gy - gx * fy) / (x - y))
}

/// How the negative-time tail of the extended GUE kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMethod {
    /// Direct summation until the term bound falls below the tolerance,
    /// falling back to `MehlerMinusHead` past [`MAX_TAIL_TERMS`].
    Summation,
    /// Mehler closed form of the full series minus its first `N` terms.
    MehlerMinusHead,
}

/// `Σ_{j≥0} q^j φ_j(x) φ_j(y)` with `q = e^{τ̂}`, `τ̂ < 0`.
pub fn mehler(x: f64, y: f64, tau_hat: f64) -> f64 {
    let q = tau_hat.exp();
    let one_minus_q2 = -(2.0 * tau_hat).exp_m1();
    let expo = ((1.0 + q * q) * (x * x + y * y) - 4.0 * q * x * y) / (2.0 * one_minus_q2);
    (-expo).exp() / (PI * one_minus_q2).sqrt()
}

/// `Σ_{j≥0} q^{2j+1} φ_{2j+1}(x) φ_{2j+1}(y)`, the odd part of [`mehler`].
pub fn mehler_odd(x: f64, y: f64, tau_hat: f64) -> f64 {
    let q = tau_hat.exp();
    let one_minus_q2 = -(2.0 * tau_hat).exp_m1();
    let a = (1.0 + q * q) * (x * x + y * y) / (2.0 * one_minus_q2);
    let b = 2.0 * q * x * y / one_minus_q2;
    // e^{-a} sinh(b) with a ≥ |b|
    let sign = b.signum();
    let b = b.abs();
    sign * 0.5 * (b - a).exp() * (-(-2.0 * b).exp_m1()) / (PI * one_minus_q2).sqrt()
}

/// Number of terms `j ≥ start` of a `q^j`-weighted tail (odd or all
/// indices, `stride` 2 or 1) until the Cramér bound `|φ_j| ≤ π^{-1/4}`
/// puts the remaining sum below `tol`. `None` if past the cap.
fn tail_terms(tau_hat: f64, start: usize, stride: usize, tol: f64) -> Option<usize> {
    let ln_q = tau_hat;
    let ratio = (stride as f64 * ln_q).exp();
    let c = PI_POW_NEG_QUARTER * PI_POW_NEG_QUARTER / (1.0 - ratio);
    // remaining after j: c q^j < tol  =>  j > ln(tol / c) / ln q
    let j_end = ((tol / c).ln() / ln_q).ceil().max(start as f64);
    let terms = ((j_end - start as f64) / stride as f64).ceil() as usize + 1;
    (terms <= MAX_TAIL_TERMS).then_some(terms)
}

/// Extended GUE kernel: `Σ_{j<N} e^{jτ̂} φ_j(x)φ_j(y)` for `τ̂ ≥ 0` and
/// `−Σ_{j≥N} e^{jτ̂} φ_j(x)φ_j(y)` for `τ̂ < 0`.
pub fn gue_extended(n2: usize, x: f64, y: f64, tau_hat: f64) -> Result<f64> {
    gue_extended_with(n2, x, y, tau_hat, TailMethod::Summation, DEFAULT_TAIL_TOLERANCE)
}

pub fn gue_extended_with(
    n2: usize,
    x: f64,
    y: f64,
    tau_hat: f64,
    method: TailMethod,
    tail_tolerance: f64,
) -> Result<f64> {
    check_n(n2)?;
    finite(x, "x")?;
    finite(y, "y")?;
    finite(tau_hat, "tau_hat")?;
    if tau_hat >= 0.0 {
        let mut a = vec![0.0; n2];
        let mut b = vec![0.0; n2];
        fill_wavefunctions(x, &mut a);
        fill_wavefunctions(y, &mut b);
        return Ok((0..n2).map(|j| (j as f64 * tau_hat).exp() * a[j] * b[j]).sum());
    }
    if tau_hat > -1e-12 {
        return Err(Error::DivergentTail(format!(
            "negative time offset {tau_hat:e} is numerically zero"
        )));
    }
    let head = |len: usize| {
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        fill_wavefunctions(x, &mut a);
        fill_wavefunctions(y, &mut b);
        (a, b)
    };
    let terms = match method {
        TailMethod::Summation => tail_terms(tau_hat, n2, 1, tail_tolerance),
        TailMethod::MehlerMinusHead => None,
    };
    match terms {
        Some(t) => {
            let (a, b) = head(n2 + t);
            Ok(-(n2..n2 + t)
                .map(|j| (j as f64 * tau_hat).exp() * a[j] * b[j])
                .sum::<f64>())
        }
        None => {
            let (a, b) = head(n2);
            let partial: f64 = (0..n2).map(|j| (j as f64 * tau_hat).exp() * a[j] * b[j]).sum();
            Ok(-(mehler(x, y, tau_hat) - partial))
        }
    }
}

/// Extended excursion kernel for `n` paths observed at `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct BEKernel {
    pub n: usize,
    pub times: TimePartition,
    pub tail_tolerance: f64,
}

impl BEKernel {
    pub fn new(n: usize, times: TimePartition) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            times,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        })
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn slices(&self) -> usize {
        self.times.len()
    }

    fn check_indices(&self, k: usize, l: usize) -> Result<()> {
        let m = self.times.len();
        if k >= m || l >= m {
            Err(Error::IndexOutOfRange { k, l, m })
        } else {
            Ok(())
        }
    }

    /// `τ̂_k − τ̂_ℓ`
    pub fn log_time_gap(&self, k: usize, l: usize) -> f64 {
        self.times.log_time(k) - self.times.log_time(l)
    }

    /// Reduced entry `K_{2n}^{GUE}(X, Y; τ̂_k − τ̂_ℓ) − K_{2n}^{GUE}(X, −Y; τ̂_k − τ̂_ℓ)`
    /// in scaled coordinates (0-based slice indices).
    pub fn entry(&self, k: usize, l: usize, x: f64, y: f64) -> Result<f64> {
        self.check_indices(k, l)?;
        finite(x, "x")?;
        finite(y, "y")?;
        if x < 0.0 || y < 0.0 {
            return Err(Error::InvalidArgument("entries need x, y >= 0".into()));
        }
        let m = self.block(k, l, &[x], &[y], false);
        Ok(m[0])
    }

    /// Same entry through the Mehler closed form minus the head sum
    /// (for `k < ℓ`; other blocks are finite sums either way).
    pub fn entry_mehler(&self, k: usize, l: usize, x: f64, y: f64) -> Result<f64> {
        self.check_indices(k, l)?;
        let gap = self.log_time_gap(k, l);
        if k >= l {
            return self.entry(k, l, x, y);
        }
        let n = self.n;
        let mut a = vec![0.0; 2 * n];
        let mut b = vec![0.0; 2 * n];
        fill_wavefunctions(x, &mut a);
        fill_wavefunctions(y, &mut b);
        let head: f64 = (0..n)
            .map(|i| ((2 * i + 1) as f64 * gap).exp() * a[2 * i + 1] * b[2 * i + 1])
            .sum();
        Ok(-2.0 * (mehler_odd(x, y, gap) - head))
    }

    /// Raw `H_{kℓ}(x, y) − E_{kℓ}(x, y)` in unscaled coordinates with all
    /// prefactors: `H` from the finite Hermite sum, `E = P₋(x, y, τ_ℓ − τ_k)`.
    pub fn entry_raw(&self, k: usize, l: usize, x: f64, y: f64) -> Result<f64> {
        self.check_indices(k, l)?;
        finite(x, "x")?;
        finite(y, "y")?;
        let (tk, tl) = (self.times.tau(k), self.times.tau(l));
        let xs = x / self.times.sigma(k);
        let ys = y / self.times.sigma(l);
        let n = self.n;
        let mut a = vec![0.0; 2 * n];
        let mut b = vec![0.0; 2 * n];
        fill_wavefunctions(xs, &mut a);
        fill_wavefunctions(ys, &mut b);
        // e^{-x²/(2(1−τ_k))} p_j(X) = e^{(1/2−τ_k) X²} φ_j(X), similarly for y
        let fx = ((0.5 - tk) * xs * xs).exp();
        let fy = (-(0.5 - tl) * ys * ys).exp();
        let ratio = tk * (1.0 - tl) / (tl * (1.0 - tk));
        let sum: f64 = (0..n)
            .map(|j| ratio.powf(j as f64 + 0.5) * a[2 * j + 1] * b[2 * j + 1])
            .sum();
        let h = (2.0 / (tl * (1.0 - tk))).sqrt() * fx * fy * sum;
        let e = if k < l { p_minus(x, y, tl - tk) } else { 0.0 };
        Ok(h - e)
    }

    /// Row-major block `(k, ℓ)` on scaled nodes `xs` (slice `k`) and `ys`
    /// (slice `ℓ`). With `balanced`, entries carry the extra similarity
    /// factor `e^{−2n(τ̂_k − τ̂_ℓ)}`, which keeps every weight below
    /// `e^{|τ̂_k − τ̂_ℓ|}` for extreme time gaps.
    pub(crate) fn block(&self, k: usize, l: usize, xs: &[f64], ys: &[f64], balanced: bool) -> Vec<f64> {
        let n = self.n;
        let gap = self.log_time_gap(k, l);
        let shift = if balanced { 2.0 * n as f64 } else { 0.0 };
        let weight = |j: usize| ((j as f64 - shift) * gap).exp();
        let mut out = vec![0.0; xs.len() * ys.len()];
        if k >= l {
            let w: Vec<f64> = (0..n).map(|i| weight(2 * i + 1)).collect();
            let tx = odd_table(n, xs);
            let ty = odd_table(n, ys);
            for i in 0..xs.len() {
                let a = &tx[i * n..(i + 1) * n];
                for j in 0..ys.len() {
                    let b = &ty[j * n..(j + 1) * n];
                    let s: f64 = (0..n).map(|t| w[t] * a[t] * b[t]).sum();
                    out[i * ys.len() + j] = 2.0 * s;
                }
            }
            return out;
        }
        match tail_terms(gap, 2 * n + 1, 2, self.tail_tolerance) {
            Some(terms) => {
                let top = n + terms; // odd indices 2i+1 for i < top
                let w: Vec<f64> = (n..top).map(|i| weight(2 * i + 1)).collect();
                let tx = odd_table(top, xs);
                let ty = odd_table(top, ys);
                for i in 0..xs.len() {
                    let a = &tx[i * top + n..(i + 1) * top];
                    for j in 0..ys.len() {
                        let b = &ty[j * top + n..(j + 1) * top];
                        let s: f64 = w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum();
                        out[i * ys.len() + j] = -2.0 * s;
                    }
                }
            }
            None => {
                let w: Vec<f64> = (0..n).map(|i| weight(2 * i + 1)).collect();
                let scale = (-shift * gap).exp();
                let tx = odd_table(n, xs);
                let ty = odd_table(n, ys);
                for i in 0..xs.len() {
                    let a = &tx[i * n..(i + 1) * n];
                    for j in 0..ys.len() {
                        let b = &ty[j * n..(j + 1) * n];
                        let head: f64 = (0..n).map(|t| w[t] * a[t] * b[t]).sum();
                        let full = scale * mehler_odd(xs[i], ys[j], gap);
                        out[i * ys.len() + j] = -2.0 * (full - head);
                    }
                }
            }
        }
        out
    }
}

/// One-time density of paths,
/// `ρ_n(x, τ) = (2/σ) Σ_{j<n} φ_{2j+1}(x/σ)²`.
pub fn path_density(n: usize, tau: f64, x: f64) -> Result<f64> {
    check_n(n)?;
    finite(tau, "tau")?;
    finite(x, "x")?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTimes(format!("tau = {tau} outside (0, 1)")));
    }
    if x < 0.0 {
        return Err(Error::InvalidArgument("density is defined for x >= 0".into()));
    }
    let sigma = scale_factor(tau);
    Ok(ExcursionKernel { n }.eval(x / sigma, x / sigma) / sigma)
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Bessel kernel with α = 1/2,
/// `(1/π)(sin(x−y)/(x−y) − sin(x+y)/(x+y))`.
pub fn bessel_kernel(x: f64, y: f64) -> f64 {
    (sinc(x - y) - sinc(x + y)) / PI
}

/// The α = 1/2 Bessel kernel as a [`ScalarKernel`]; `truncation` bounds
/// nothing physical (windows are always `(0, s)`), it only satisfies the trait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselKernel;

impl ScalarKernel for BesselKernel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        bessel_kernel(x, y)
    }

    fn truncation_point(&self) -> f64 {
        f64::INFINITY
    }
}

/// Strictly increasing real time offsets of the Bessel process.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTimePartition {
    taus: Vec<f64>,
}

impl BesselTimePartition {
    pub fn new(taus: &[f64]) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidTimes("empty time partition".into()));
        }
        for &t in taus {
            finite(t, "time offset")?;
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidTimes(format!(
                "offsets must be strictly increasing: {taus:?}"
            )));
        }
        Ok(Self { taus: taus.to_vec() })
    }

    pub fn single() -> Self {
        Self { taus: vec![0.0] }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }
}

const BESSEL_PANEL_ORDER: usize = 20;

/// Entry `(k, ℓ)` of the extended Bessel kernel (0-based slice indices).
pub fn bessel_extended_entry(times: &BesselTimePartition, k: usize, l: usize, x: f64, y: f64) -> Result<f64> {
    let m = times.len();
    if k >= m || l >= m {
        return Err(Error::IndexOutOfRange { k, l, m });
    }
    finite(x, "x")?;
    finite(y, "y")?;
    if x < 0.0 || y < 0.0 {
        return Err(Error::InvalidArgument("entries need x, y >= 0".into()));
    }
    let d = times.taus[k] - times.taus[l];
    bessel_entry_unchecked(d, k >= l, x, y)
}

pub(crate) fn bessel_entry_unchecked(d: f64, lower: bool, x: f64, y: f64) -> Result<f64> {
    if lower {
        if d == 0.0 {
            return Ok(bessel_kernel(x, y));
        }
        let panels = 1 + ((x + y) / 4.0).ceil() as usize;
        let (t, w) = composite_gauss_legendre(BESSEL_PANEL_ORDER, panels, 0.0, 1.0)?;
        let s: f64 = t
            .iter()
            .zip(&w)
            .map(|(&t, &w)| w * (0.5 * d * t * t).exp() * (x * t).sin() * (y * t).sin())
            .sum();
        return Ok(2.0 / PI * s);
    }
    // d = τ_k − τ_ℓ < 0: Gaussian envelope e^{d t²/2}
    if !(d < 0.0) {
        return Err(Error::DivergentTail(format!(
            "upper-triangle Bessel entry needs τ_k < τ_ℓ (gap {d})"
        )));
    }
    let t_end = (2.0 * (1.0 / BESSEL_ENVELOPE_CUTOFF).ln() / -d).sqrt();
    if t_end <= 1.0 {
        return Ok(0.0);
    }
    let len = t_end - 1.0;
    let panels = 1 + (len * (1.0 + (x + y) / 2.0) / 2.0).ceil() as usize;
    let (t, w) = composite_gauss_legendre(BESSEL_PANEL_ORDER, panels, 1.0, t_end)?;
    let s: f64 = t
        .iter()
        .zip(&w)
        .map(|(&t, &w)| w * (0.5 * d * t * t).exp() * (x * t).sin() * (y * t).sin())
        .sum();
    Ok(-2.0 / PI * s)
}

/// Row-major block of [`bessel_entry_unchecked`] on node sets, sharing
/// one quadrature in `t` across the block.
pub(crate) fn bessel_block(d: f64, lower: bool, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; xs.len() * ys.len()];
    if xs.is_empty() || ys.is_empty() {
        return Ok(out);
    }
    if lower && d == 0.0 {
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                out[i * ys.len() + j] = bessel_kernel(x, y);
            }
        }
        return Ok(out);
    }
    let reach = xs.iter().cloned().fold(0.0, f64::max) + ys.iter().cloned().fold(0.0, f64::max);
    let (t, w, sign) = if lower {
        let panels = 1 + (reach / 4.0).ceil() as usize;
        let (t, w) = composite_gauss_legendre(BESSEL_PANEL_ORDER, panels, 0.0, 1.0)?;
        (t, w, 2.0 / PI)
    } else {
        if !(d < 0.0) {
            return Err(Error::DivergentTail(format!(
                "upper-triangle Bessel entry needs τ_k < τ_ℓ (gap {d})"
            )));
        }
        let t_end = (2.0 * (1.0 / BESSEL_ENVELOPE_CUTOFF).ln() / -d).sqrt();
        if t_end <= 1.0 {
            return Ok(out);
        }
        let len = t_end - 1.0;
        let panels = 1 + (len * (1.0 + reach / 2.0) / 2.0).ceil() as usize;
        let (t, w) = composite_gauss_legendre(BESSEL_PANEL_ORDER, panels, 1.0, t_end)?;
        (t, w, -2.0 / PI)
    };
    let env: Vec<f64> = t.iter().zip(&w).map(|(&t, &w)| w * (0.5 * d * t * t).exp()).collect();
    let sx: Vec<Vec<f64>> = xs.iter().map(|&x| t.iter().map(|&t| (x * t).sin()).collect()).collect();
    let sy: Vec<Vec<f64>> = ys.iter().map(|&y| t.iter().map(|&t| (y * t).sin()).collect()).collect();
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            let s: f64 = (0..t.len()).map(|p| env[p] * sx[i][p] * sy[j][p]).sum();
            out[i * ys.len() + j] = sign * s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gauss_legendre, WaveFunctionTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn time_partition_validation() {
        assert!(TimePartition::new(&[]).is_err());
        assert!(TimePartition::new(&[0.0, 0.5]).is_err());
        assert!(TimePartition::new(&[0.5, 1.0]).is_err());
        assert!(TimePartition::new(&[0.6, 0.4]).is_err());
        assert!(TimePartition::new(&[0.4, 0.4]).is_err());
        let t = TimePartition::new(&[0.1, 0.5, 0.9]).unwrap();
        for k in 0..3 {
            assert!(t.sigma(k) > 0.0 && t.sigma(k) <= 0.5_f64.sqrt() + 1e-15);
        }
        assert!(t.log_time(0) < t.log_time(1) && t.log_time(1) < t.log_time(2));
        assert_eq!(t.log_time(1), 0.0);
    }

    #[test]
    fn scalar_kernel_vanishes_at_origin_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x: f64 = rng.random_range(0.0..6.0);
            let y: f64 = rng.random_range(0.0..6.0);
            let n = rng.random_range(1..8);
            assert_eq!(kernel_scalar(n, x, 0.0).unwrap(), 0.0);
            assert_eq!(kernel_scalar(n, x, y).unwrap(), kernel_scalar(n, y, x).unwrap());
        }
    }

    #[test]
    fn christoffel_darboux_agrees_with_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.random_range(1..10);
            let x: f64 = rng.random_range(0.0..5.0);
            let y: f64 = rng.random_range(0.0..5.0);
            let a = kernel_scalar(n, x, y).unwrap();
            let b = kernel_scalar_cd(n, x, y).unwrap();
            assert!((a - b).abs() < 1e-12, "n={n} ({x},{y}) {a} {b}");
            let d1 = kernel_scalar(n, x, x).unwrap();
            let d2 = kernel_scalar_cd(n, x, x).unwrap();
            assert!((d1 - d2).abs() < 1e-12, "diag n={n} x={x} {d1} {d2}");
        }
    }

    #[test]
    fn diagonal_integrates_to_n() {
        for &n in &[1usize, 2, 5] {
            let upper = (4.0 * n as f64).sqrt() + 10.0;
            let rule = gauss_legendre(120, 0.0, upper).unwrap();
            let total = rule.integrate(|x| kernel_scalar(n, x, x).unwrap());
            assert!((total - n as f64).abs() < 1e-8, "n={n} {total}");
        }
    }

    #[test]
    fn projection_gram_is_identity() {
        let n = 6;
        let rule = gauss_legendre(160, 0.0, default_truncation(n)).unwrap();
        let table = WaveFunctionTable::new(2 * n, &rule.nodes).unwrap();
        for j in 0..n {
            for k in 0..n {
                let g: f64 = (0..rule.len())
                    .map(|i| 2.0 * rule.weights[i] * table.value(2 * j + 1, i) * table.value(2 * k + 1, i))
                    .sum();
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn k0_two_formulas_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &n in &[1usize, 3] {
            for _ in 0..50 {
                let x: f64 = rng.random_range(0.01..20.0);
                let y: f64 = rng.random_range(0.01..20.0);
                let a = kernel_k0(n, x, y).unwrap();
                let b = kernel_k0_cd(n, x, y).unwrap();
                assert!((a - b).abs() < 1e-10, "n={n} ({x},{y}) {a} {b}");
            }
        }
    }

    #[test]
    fn k0_diagonal_is_continuous() {
        for &n in &[1usize, 2, 4] {
            for &x in &[0.05, 0.7, 3.0, 11.0] {
                let diag = kernel_k0_cd(n, x, x).unwrap();
                let near = kernel_k0_cd(n, x, x + 1e-7).unwrap();
                let sum = kernel_k0(n, x, x).unwrap();
                assert!(diag.is_finite());
                assert!((diag - near).abs() < 1e-5, "n={n} x={x}");
                assert!((diag - sum).abs() < 1e-10, "n={n} x={x} {diag} {sum}");
            }
        }
    }

    #[test]
    fn gue_extended_reduces_to_hermite_kernel() {
        for &(x, y) in &[(0.3, 0.9), (1.5, -0.2), (2.0, 2.0)] {
            let a = gue_extended(7, x, y, 0.0).unwrap();
            let b = gue_kernel_cd(7, x, y);
            assert!((a - b).abs() < 1e-12);
            let c = gue_extended(7, y, x, 0.3).unwrap();
            let d = gue_extended(7, x, y, 0.3).unwrap();
            assert!((c - d).abs() < 1e-15);
        }
        assert!(matches!(
            gue_extended(3, 0.1, 0.2, -1e-15),
            Err(Error::DivergentTail(_))
        ));
    }

    #[test]
    fn gue_tail_two_routes() {
        let a = gue_extended_with(4, 0.3, 0.3, -0.5, TailMethod::Summation, 1e-14).unwrap();
        let b = gue_extended_with(4, 0.3, 0.3, -0.5, TailMethod::MehlerMinusHead, 1e-14).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn gue_tail_two_routes_on_grid() {
        for i in 0..10 {
            for j in 0..10 {
                let x = -3.0 + 0.6 * i as f64;
                let y = -3.0 + 0.6 * j as f64;
                let a = gue_extended_with(5, x, y, -0.3, TailMethod::Summation, 1e-15).unwrap();
                let b = gue_extended_with(5, x, y, -0.3, TailMethod::MehlerMinusHead, 1e-15).unwrap();
                assert!((a - b).abs() < 1e-9, "({x},{y}) {a} {b}");
            }
        }
    }

    #[test]
    fn be_entry_single_slice_matches_scalar() {
        let kern = BEKernel::new(3, TimePartition::single(0.37).unwrap()).unwrap();
        for &(x, y) in &[(0.2, 0.5), (1.1, 1.1), (2.5, 0.4)] {
            let a = kern.entry(0, 0, x, y).unwrap();
            let b = kernel_scalar(3, x, y).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        assert!(matches!(kern.entry(1, 0, 0.1, 0.1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn be_entry_vanishes_at_zero() {
        let kern = BEKernel::new(2, TimePartition::new(&[0.2, 0.5, 0.8]).unwrap()).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                assert!(kern.entry(k, l, 0.8, 0.0).unwrap().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn upper_entry_matches_raw_h_minus_e() {
        let times = TimePartition::new(&[0.4, 0.6]).unwrap();
        let kern = BEKernel::new(2, times.clone()).unwrap();
        let (xs, ys) = (0.7, 1.1);
        let (x, y) = (xs * times.sigma(0), ys * times.sigma(1));
        let raw = kern.entry_raw(0, 1, x, y).unwrap();
        let (tk, tl): (f64, f64) = (0.4, 0.6);
        let bracket = raw * (2.0 * tl * (1.0 - tk)).sqrt() * (-(0.5 - tk) * xs * xs + (0.5 - tl) * ys * ys).exp();
        let reduced = kern.entry(0, 1, xs, ys).unwrap();
        assert!((bracket - reduced).abs() < 1e-8, "{bracket} {reduced}");
        let mehler = kern.entry_mehler(0, 1, xs, ys).unwrap();
        assert!((mehler - reduced).abs() < 1e-10);
    }

    #[test]
    fn be_entry_continuous_on_dense_grid() {
        let kern = BEKernel::new(3, TimePartition::new(&[0.3, 0.55]).unwrap()).unwrap();
        let pts: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        for k in 0..2 {
            for l in 0..2 {
                let m = kern.block(k, l, &pts, &pts, false);
                assert!(m.iter().all(|v| v.is_finite()));
                for &x in &pts {
                    let d = kern.entry(k, l, x, x).unwrap();
                    let off = kern.entry(k, l, x, x + 1e-7).unwrap();
                    assert!((d - off).abs() < 1e-5 * (1.0 + d.abs()));
                    assert!(kern.entry(k, l, x, 1e-9).unwrap().abs() < 1e-7);
                }
                if k < l {
                    for (i, &x) in pts.iter().enumerate() {
                        for (j, &y) in pts.iter().enumerate() {
                            let e = kern.entry_mehler(k, l, x, y).unwrap();
                            assert!((m[i * pts.len() + j] - e).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn balanced_block_is_a_similarity() {
        let kern = BEKernel::new(2, TimePartition::new(&[0.3, 0.7]).unwrap()).unwrap();
        let gap = kern.log_time_gap(1, 0);
        let a = kern.block(1, 0, &[0.5], &[0.9], true)[0];
        let b = kern.block(1, 0, &[0.5], &[0.9], false)[0];
        assert!((a - (-4.0 * gap).exp() * b).abs() < 1e-14);
    }

    #[test]
    fn path_density_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..40 {
            let tau: f64 = rng.random_range(0.05..0.95);
            let x: f64 = rng.random_range(0.0..1.5);
            let sigma = scale_factor(tau);
            let big_x = x / sigma;
            let closed = 4.0 * big_x * big_x * (-big_x * big_x).exp() / (sigma * PI.sqrt());
            assert!((path_density(1, tau, x).unwrap() - closed).abs() < 1e-12);
        }
        assert_eq!(path_density(3, 0.4, 0.0).unwrap(), 0.0);
        assert!(path_density(2, 0.0, 0.3).is_err());
        assert!(path_density(2, 1.0, 0.3).is_err());
        for &n in &[1usize, 4] {
            let tau = 0.3;
            let upper = scale_factor(tau) * default_truncation(n);
            let rule = gauss_legendre(150, 0.0, upper).unwrap();
            let total = rule.integrate(|x| path_density(n, tau, x).unwrap());
            assert!((total - n as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn bessel_kernel_limits() {
        for &y in &[0.0, 0.5, 3.0] {
            assert_eq!(bessel_kernel(0.0, y), 0.0);
        }
        for &x in &[0.01, 0.7, 4.0] {
            let d = bessel_kernel(x, x);
            let exact = (1.0 - (2.0 * x).sin() / (2.0 * x)) / PI;
            assert!((d - exact).abs() < 1e-15);
        }
        let rule = gauss_legendre(40, 0.0, 1.0).unwrap();
        let (x, y) = (1.3, 2.2);
        let integral = 2.0 / PI * rule.integrate(|t| (x * t).sin() * (y * t).sin());
        assert!((integral - bessel_kernel(x, y)).abs() < 1e-12);
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (l, r) = (simpson(f, a, m), simpson(f, m, b));
            if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
                return l + r + (l + r - whole) / 15.0;
            }
            rec(f, a, m, l, tol / 2.0, depth - 1) + rec(f, m, b, r, tol / 2.0, depth - 1)
        }
        rec(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn bessel_extended_reduces_and_vanishes() {
        let times = BesselTimePartition::new(&[0.0, 1.0]).unwrap();
        for &(x, y) in &[(0.4, 1.7), (2.0, 2.0)] {
            assert_eq!(bessel_extended_entry(&times, 1, 1, x, y).unwrap(), bessel_kernel(x, y));
        }
        for &(k, l) in &[(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(bessel_extended_entry(&times, k, l, 0.0, 1.2).unwrap(), 0.0);
        }
        let upper = bessel_extended_entry(&times, 0, 1, 1.0, 1.0).unwrap();
        let f = |t: f64| (-0.5 * t * t).exp() * t.sin() * t.sin();
        let oracle = -2.0 / PI * adaptive_simpson(&f, 1.0, 12.0, 1e-14);
        assert!((upper - oracle).abs() < 1e-10, "{upper} {oracle}");
        assert!(BesselTimePartition::new(&[1.0, 1.0]).is_err());
        assert!(bessel_extended_entry(&times, 2, 0, 1.0, 1.0).is_err());
    }
}
