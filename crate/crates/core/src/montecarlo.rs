//! Samplers for the excursion ensemble and seeded Monte Carlo estimators.
//!
//! Two samplers are available. The matrix sampler draws the Hermitian
//! Brownian bridge with the particle–hole symmetry of class C
//!
//! ```text
//!     H(t) = [ h(t)    Δ(t)  ]      h Hermitian, Δ symmetric (n × n)
//!            [ Δ(t)*  −h(t)ᵀ ]
//! ```
//!
//! whose `n` positive eigenvalues are the `n` nonintersecting excursions.
//! It is exact in law at any finite set of times, so estimators that only
//! look at a few grid times sample only those. The rejection sampler
//! draws independent excursions until they are ordered at every interior
//! grid time; it is exact only in the limit `M → ∞` and is limited to
//! `n ≤ 3`.
//!
//! Every estimator splits its samples into fixed-size chunks, gives chunk
//! `c` the ChaCha8 stream `c` of the seed, and reduces chunk sums in chunk
//! order, so results do not depend on the number of worker threads.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{finite, Error, Result};

/// Samples per RNG stream.
pub const DEFAULT_CHUNK: usize = 4096;
pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// `n` ordered paths on the grid `k/M`, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionEnsemble {
    pub n: usize,
    pub grid: Vec<f64>,
    /// `positions[i][k]`: path `i` (0 = lowest) at `grid[k]`.
    pub positions: Vec<Vec<f64>>,
}

impl ExcursionEnsemble {
    pub fn intervals(&self) -> usize {
        self.grid.len() - 1
    }

    /// Zero at both ends and strictly ordered above zero in between.
    pub fn is_valid(&self) -> bool {
        let last = self.intervals();
        self.positions.iter().all(|p| p[0] == 0.0 && p[last] == 0.0)
            && (1..last).all(|k| self.positions[0][k] > 0.0 && self.positions.windows(2).all(|w| w[0][k] < w[1][k]))
    }

    /// Trapezoid area under path `i`.
    pub fn area(&self, i: usize) -> f64 {
        trapezoid(&self.positions[i])
    }
}

fn trapezoid(path: &[f64]) -> f64 {
    let m = path.len() - 1;
    // endpoints are zero
    path[1..m].iter().sum::<f64>() / m as f64
}

/// Mean and standard error of one estimated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    /// Sample standard deviation over `√sample_count`.
    pub standard_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl EstimatorResult {
    /// `|estimate − value|` in units of the standard error; infinite when the
    /// error is zero and the values differ.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.standard_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sampler {
    Matrix,
    Rejection { max_attempts: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Extreme {
    /// `X₁(τ) ≥ x`
    Bottom,
    /// `X_n(τ) ≤ x`
    Top,
}

/// Common settings of the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n: usize,
    /// Grid intervals `M`.
    pub grid: usize,
    pub samples: usize,
    pub seed: u64,
    pub sampler: Sampler,
    pub chunk: usize,
}

impl McConfig {
    pub fn new(n: usize, grid: usize, samples: usize, seed: u64) -> Self {
        Self {
            n,
            grid,
            samples,
            seed,
            sampler: Sampler::Matrix,
            chunk: DEFAULT_CHUNK,
        }
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.grid < 8 {
            return Err(Error::InvalidArgument("grid must have at least 8 intervals".into()));
        }
        if self.samples == 0 || self.chunk == 0 {
            return Err(Error::InvalidArgument("samples and chunk must be positive".into()));
        }
        if matches!(self.sampler, Sampler::Rejection { .. }) && self.n > 3 {
            return Err(Error::InvalidArgument("rejection sampler supports n ≤ 3".into()));
        }
        Ok(())
    }

    /// Grid index of `tau`; times off the grid are rejected.
    pub fn grid_index(&self, tau: f64) -> Result<usize> {
        finite(tau, "tau")?;
        let x = tau * self.grid as f64;
        let k = x.round();
        if (x - k).abs() > 1e-9 || k < 1.0 || k >= self.grid as f64 {
            return Err(Error::InvalidTimes(format!(
                "{tau} is not an interior point of the grid k/{}",
                self.grid
            )));
        }
        Ok(k as usize)
    }

    /// Observation points for `times`: the matrix sampler takes any time in
    /// (0, 1); the rejection sampler only grid times.
    fn observation(&self, times: &[f64]) -> Result<Observation> {
        for &t in times {
            finite(t, "tau")?;
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidTimes(format!("{t} is not in (0, 1)")));
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimes("times must increase".into()));
        }
        let idx = match self.sampler {
            Sampler::Matrix => Vec::new(),
            Sampler::Rejection { .. } => times.iter().map(|&t| self.grid_index(t)).collect::<Result<_>>()?,
        };
        Ok(Observation {
            cfg: *self,
            times: times.to_vec(),
            idx,
        })
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Advances a standard Brownian bridge to 0 at time 1 from `(t0, x)` to `t1`.
fn bridge_step(rng: &mut impl Rng, x: f64, t0: f64, t1: f64, rate: f64) -> f64 {
    let keep = (1.0 - t1) / (1.0 - t0);
    x * keep + (rate * (t1 - t0) * keep).sqrt() * normal(rng)
}

/// One excursion on the grid `k/M`, as the norm of a three-dimensional
/// Brownian bridge.
pub fn sample_excursion(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut path = vec![0.0; m + 1];
    let mut b = [0.0; 3];
    for (k, p) in path.iter_mut().enumerate().take(m).skip(1) {
        let (t0, t1) = ((k - 1) as f64 / m as f64, k as f64 / m as f64);
        for c in &mut b {
            *c = bridge_step(rng, *c, t0, t1, 1.0);
        }
        *p = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    }
    path
}

/// Rejection sampler with running acceptance statistics.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    pub n: usize,
    pub grid: usize,
    pub max_attempts: u64,
    attempts: u64,
    accepted: u64,
}

impl RejectionSampler {
    pub fn new(n: usize, grid: usize, max_attempts: u64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidArgument(
                "rejection sampler supports n ∈ {1, 2, 3}".into(),
            ));
        }
        if grid < 8 {
            return Err(Error::InvalidArgument("grid must have at least 8 intervals".into()));
        }
        Ok(Self {
            n,
            grid,
            max_attempts,
            attempts: 0,
            accepted: 0,
        })
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// Accepted over proposed, over the sampler's lifetime.
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    pub fn sample(&mut self, rng: &mut impl Rng) -> Result<ExcursionEnsemble> {
        let m = self.grid;
        let mid = m / 2;
        for _ in 0..self.max_attempts {
            self.attempts += 1;
            let mut paths: Vec<Vec<f64>> = (0..self.n).map(|_| sample_excursion(m, rng)).collect();
            paths.sort_by(|a, b| a[mid].total_cmp(&b[mid]));
            let ordered = (1..m).all(|k| paths.windows(2).all(|w| w[0][k] < w[1][k]));
            if ordered {
                self.accepted += 1;
                return Ok(ExcursionEnsemble {
                    n: self.n,
                    grid: (0..=m).map(|k| k as f64 / m as f64).collect(),
                    positions: paths,
                });
            }
        }
        Err(Error::AcceptanceExhausted {
            attempts: self.attempts,
            rate: self.accepted as f64 / self.attempts as f64,
        })
    }
}

/// One ensemble from the rejection sampler, with the proposals it took.
pub fn sample_nonintersecting(
    n: usize,
    m: usize,
    rng: &mut impl Rng,
    max_attempts: u64,
) -> Result<(ExcursionEnsemble, u64)> {
    let mut s = RejectionSampler::new(n, m, max_attempts)?;
    let e = s.sample(rng)?;
    Ok((e, s.attempts()))
}

/// Real coordinates of the class-C matrix bridge: `h_ii`, `Re/Im h_ij`,
/// `Re/Im Δ_ii`, `Re/Im Δ_ij` (`i < j`), with their variance rates.
fn coordinate_rates(n: usize) -> Vec<f64> {
    let off = n * (n - 1) / 2;
    let mut r = vec![1.0; n];
    r.extend(std::iter::repeat_n(0.5, 2 * off));
    r.extend(std::iter::repeat_n(1.0, 2 * n));
    r.extend(std::iter::repeat_n(0.5, 2 * off));
    r
}

/// `(h, Δ)` as row-major complex `n × n` matrices.
fn unpack(n: usize, c: &[f64]) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
    let mut h = vec![Complex::new(0.0, 0.0); n * n];
    let mut d = vec![Complex::new(0.0, 0.0); n * n];
    let off = n * (n - 1) / 2;
    for i in 0..n {
        h[i * n + i] = Complex::new(c[i], 0.0);
        d[i * n + i] = Complex::new(c[n + 2 * off + 2 * i], c[n + 2 * off + 2 * i + 1]);
    }
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            let hij = Complex::new(c[n + 2 * idx], c[n + 2 * idx + 1]);
            h[i * n + j] = hij;
            h[j * n + i] = hij.conj();
            let base = 3 * n + 2 * off + 2 * idx;
            let dij = Complex::new(c[base], c[base + 1]);
            d[i * n + j] = dij;
            d[j * n + i] = dij;
            idx += 1;
        }
    }
    (h, d)
}

fn class_c_matrix(n: usize, c: &[f64]) -> DMatrix<Complex<f64>> {
    let (h, d) = unpack(n, c);
    DMatrix::from_fn(2 * n, 2 * n, |r, s| match (r < n, s < n) {
        (true, true) => h[r * n + s],
        (true, false) => d[r * n + (s - n)],
        (false, true) => d[(s) * n + (r - n)].conj(),
        (false, false) => -h[(r - n) * n + (s - n)].conj(),
    })
}

/// Positive eigenvalues of the class-C matrix with coordinates `c`,
/// ascending, written to `out`.
fn positive_spectrum(n: usize, c: &[f64], out: &mut [f64]) {
    match n {
        1 => out[0] = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt(),
        2 => {
            // λ² solves μ² − e₁μ + e₂ = 0 with e₁ = tr(H²)/2, e₂ = det H
            let e1 = c.iter().zip(coordinate_rates(2)).map(|(x, r)| x * x / r).sum::<f64>();
            let e2 = det4(&class_c_matrix(2, c)).max(0.0);
            let disc = (e1 * e1 - 4.0 * e2).max(0.0).sqrt();
            let big = 0.5 * (e1 + disc);
            let small = if big > 0.0 { e2 / big } else { 0.0 };
            out[0] = small.sqrt();
            out[1] = big.sqrt();
        }
        _ => {
            let ev = class_c_matrix(n, c).symmetric_eigenvalues();
            let mut v: Vec<f64> = ev.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            out.copy_from_slice(&v[n..]);
            for x in out.iter_mut() {
                *x = x.max(0.0);
            }
        }
    }
}

/// Determinant of a 4 × 4 Hermitian matrix, by Gaussian elimination.
fn det4(m: &DMatrix<Complex<f64>>) -> f64 {
    let mut a = m.clone();
    let mut det = Complex::new(1.0, 0.0);
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        if a[(piv, col)].norm() == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap_rows(piv, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in col + 1..4 {
            let f = a[(r, col)] / p;
            for s in col..4 {
                let v = a[(col, s)];
                a[(r, s)] -= f * v;
            }
        }
    }
    det.re
}

/// Positive spectrum of the matrix bridge at increasing `times` in (0, 1):
/// `out[k * n + i]` is path `i` at `times[k]`.
pub fn sample_matrix_at(n: usize, times: &[f64], rng: &mut impl Rng, out: &mut [f64]) {
    let rates = coordinate_rates(n);
    let mut c = vec![0.0; rates.len()];
    let mut t0 = 0.0;
    for (k, &t1) in times.iter().enumerate() {
        for (x, &rate) in c.iter_mut().zip(&rates) {
            *x = bridge_step(rng, *x, t0, t1, rate);
        }
        positive_spectrum(n, &c, &mut out[k * n..(k + 1) * n]);
        t0 = t1;
    }
}

/// One ensemble from the matrix sampler on the grid `k/M`.
pub fn sample_matrix_ensemble(n: usize, m: usize, rng: &mut impl Rng) -> ExcursionEnsemble {
    let grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let mut buf = vec![0.0; (m - 1) * n];
    sample_matrix_at(n, &grid[1..m], rng, &mut buf);
    let mut positions = vec![vec![0.0; m + 1]; n];
    for k in 1..m {
        for (i, p) in positions.iter_mut().enumerate() {
            p[k] = buf[(k - 1) * n + i];
        }
    }
    ExcursionEnsemble { n, grid, positions }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Positions at fixed times, one sample at a time.
struct Observation {
    cfg: McConfig,
    times: Vec<f64>,
    /// Grid indices of `times`, for the rejection sampler.
    idx: Vec<usize>,
}

impl Observation {
    /// Runs `visit` on every sample of chunk `c`; `acc` collects its sums.
    fn run_chunk<A>(&self, c: usize, mut acc: A, visit: impl Fn(&mut A, &[f64])) -> Result<A> {
        let cfg = &self.cfg;
        let n = cfg.n;
        let start = c * cfg.chunk;
        let count = cfg.chunk.min(cfg.samples - start);
        let mut rng = stream_rng(cfg.seed, c as u64);
        let mut buf = vec![0.0; self.times.len() * n];
        match cfg.sampler {
            Sampler::Matrix => {
                for _ in 0..count {
                    sample_matrix_at(n, &self.times, &mut rng, &mut buf);
                    visit(&mut acc, &buf);
                }
            }
            Sampler::Rejection { max_attempts } => {
                let mut s = RejectionSampler::new(n, cfg.grid, max_attempts)?;
                for _ in 0..count {
                    let e = s.sample(&mut rng)?;
                    for (j, &k) in self.idx.iter().enumerate() {
                        for i in 0..n {
                            buf[j * n + i] = e.positions[i][k];
                        }
                    }
                    visit(&mut acc, &buf);
                }
            }
        }
        Ok(acc)
    }

    fn chunks(&self) -> usize {
        self.cfg.samples.div_ceil(self.cfg.chunk)
    }

    /// Per-chunk results in chunk order.
    fn map_chunks<A: Send>(
        &self,
        init: impl Fn() -> A + Sync,
        visit: impl Fn(&mut A, &[f64]) + Sync,
    ) -> Result<Vec<A>> {
        (0..self.chunks())
            .into_par_iter()
            .map(|c| self.run_chunk(c, init(), &visit))
            .collect()
    }
}

/// Sums of `x` and `x²` for several indicator or real statistics.
fn moments(chunks: Vec<Vec<[f64; 2]>>, cfg: &McConfig) -> Vec<EstimatorResult> {
    let k = chunks.first().map_or(0, Vec::len);
    let mut tot = vec![[0.0; 2]; k];
    for ch in &chunks {
        for (t, c) in tot.iter_mut().zip(ch) {
            t[0] += c[0];
            t[1] += c[1];
        }
    }
    let nn = cfg.samples as f64;
    tot.iter()
        .map(|&[s, s2]| {
            let mean = s / nn;
            let var = if cfg.samples > 1 {
                ((s2 - nn * mean * mean) / (nn - 1.0)).max(0.0)
            } else {
                0.0
            };
            EstimatorResult {
                estimate: mean,
                standard_error: (var / nn).sqrt(),
                sample_count: cfg.samples,
                seed: cfg.seed,
            }
        })
        .collect()
}

/// `P(X₁(τ) ≥ x)` for each physical threshold `x`.
pub fn estimate_bottom_cdf(cfg: &McConfig, tau: f64, thresholds: &[f64]) -> Result<Vec<EstimatorResult>> {
    cfg.validate()?;
    for &x in thresholds {
        finite(x, "threshold")?;
    }
    let draws = cfg.observation(&[tau])?;
    let chunks = draws.map_chunks(
        || vec![[0.0; 2]; thresholds.len()],
        |acc, pos| {
            for (a, &x) in acc.iter_mut().zip(thresholds) {
                if pos[0] >= x {
                    a[0] += 1.0;
                    a[1] += 1.0;
                }
            }
        },
    )?;
    Ok(moments(chunks, cfg))
}

/// `P(X₁(τ_k) ≥ x_k ∀k)` (bottom) or `P(X_n(τ_k) ≤ x_k ∀k)` (top), at
/// increasing times; the rejection sampler needs grid times.
pub fn estimate_joint(cfg: &McConfig, times: &[f64], thresholds: &[f64], kind: Extreme) -> Result<EstimatorResult> {
    cfg.validate()?;
    if times.len() != thresholds.len() || times.is_empty() {
        return Err(Error::InvalidArgument("need one threshold per time".into()));
    }
    for &x in thresholds {
        if x.is_nan() {
            return Err(Error::NonFinite("threshold"));
        }
    }
    let n = cfg.n;
    let draws = cfg.observation(times)?;
    let chunks = draws.map_chunks(
        || vec![[0.0; 2]; 1],
        |acc, pos| {
            let hit = thresholds.iter().enumerate().all(|(j, &x)| match kind {
                Extreme::Bottom => pos[j * n] >= x,
                Extreme::Top => pos[j * n + n - 1] <= x,
            });
            if hit {
                acc[0][0] += 1.0;
                acc[0][1] += 1.0;
            }
        },
    )?;
    Ok(moments(chunks, cfg)[0])
}

/// Mean trapezoid areas under the lowest and highest paths.
pub fn estimate_areas(cfg: &McConfig) -> Result<(EstimatorResult, EstimatorResult)> {
    cfg.validate()?;
    let n = cfg.n;
    let m = cfg.grid;
    let grid: Vec<f64> = (1..m).map(|k| k as f64 / m as f64).collect();
    let draws = cfg.observation(&grid)?;
    let chunks = draws.map_chunks(
        || vec![[0.0; 2]; 2],
        |acc, pos| {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for k in 0..m - 1 {
                lo += pos[k * n];
                hi += pos[k * n + n - 1];
            }
            for (a, v) in acc.iter_mut().zip([lo / m as f64, hi / m as f64]) {
                a[0] += v;
                a[1] += v * v;
            }
        },
    )?;
    let r = moments(chunks, cfg);
    Ok((r[0], r[1]))
}

/// Histogram of one uniformly chosen path per sample at time `tau` over
/// the bins `edges[j]..edges[j+1]`; values outside all bins go to the last
/// slot of the result.
pub fn density_histogram(cfg: &McConfig, tau: f64, edges: &[f64]) -> Result<Vec<u64>> {
    cfg.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("bin edges must increase".into()));
    }
    let n = cfg.n;
    let bins = edges.len() - 1;
    let draws = cfg.observation(&[tau])?;
    // the path choice uses its own stream family so that the position draws
    // match those of the other estimators
    let chunks: Vec<Vec<u64>> = (0..draws.chunks())
        .into_par_iter()
        .map(|c| {
            let mut pick = stream_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, c as u64);
            let mut h = vec![0u64; bins + 1];
            let cnt = draws.run_chunk(c, Vec::new(), |acc: &mut Vec<f64>, pos| acc.extend_from_slice(pos))?;
            for sample in cnt.chunks(n) {
                let x = sample[pick.random_range(0..n)];
                let slot = edges.partition_point(|&e| e <= x);
                if slot == 0 || slot > bins {
                    h[bins] += 1;
                } else {
                    h[slot - 1] += 1;
                }
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let mut tot = vec![0u64; bins + 1];
    for h in chunks {
        for (t, v) in tot.iter_mut().zip(h) {
            *t += v;
        }
    }
    Ok(tot)
}

/// Pearson statistic of `counts` against cell probabilities `probs`
/// (same length, summing to 1), with its degrees of freedom and upper-tail
/// p-value. Cells with expected count below 5 are pooled.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<(f64, usize, f64)> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::InvalidArgument("counts and probabilities must match".into()));
    }
    let total: u64 = counts.iter().sum();
    let nn = total as f64;
    let mut stat = 0.0;
    let mut cells = 0;
    let (mut oc, mut ec) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        oc += o as f64;
        ec += p * nn;
        if ec >= 5.0 {
            stat += (oc - ec) * (oc - ec) / ec;
            cells += 1;
            oc = 0.0;
            ec = 0.0;
        }
    }
    if ec > 0.0 || oc > 0.0 {
        if ec > 0.0 {
            stat += (oc - ec) * (oc - ec) / ec;
            cells += 1;
        } else {
            return Ok((f64::INFINITY, cells.max(1), 0.0));
        }
    }
    let dof = cells.saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((stat, dof, 1.0 - dist.cdf(stat)))
}

/// Acceptance rate of the rejection sampler over `proposals` independent
/// proposals.
pub fn rejection_acceptance(n: usize, m: usize, proposals: u64, seed: u64) -> Result<f64> {
    let mut s = RejectionSampler::new(n, m, 1)?;
    let mut rng = stream_rng(seed, 0);
    for _ in 0..proposals {
        match s.sample(&mut rng) {
            Ok(_) | Err(Error::AcceptanceExhausted { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(s.acceptance_rate())
}

/// A few whole ensembles, for inspection or export.
pub fn sample_ensembles(cfg: &McConfig, count: usize) -> Result<Vec<ExcursionEnsemble>> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let mut out = Vec::with_capacity(count);
    match cfg.sampler {
        Sampler::Matrix => {
            for _ in 0..count {
                out.push(sample_matrix_ensemble(cfg.n, cfg.grid, &mut rng));
            }
        }
        Sampler::Rejection { max_attempts } => {
            let mut s = RejectionSampler::new(cfg.n, cfg.grid, max_attempts)?;
            for _ in 0..count {
                out.push(s.sample(&mut rng)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_spectrum_matches_eigensolver() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..200 {
            let c: Vec<f64> = (0..10).map(|_| normal(&mut rng)).collect();
            let mut fast = [0.0; 2];
            positive_spectrum(2, &c, &mut fast);
            let mut ev: Vec<f64> = class_c_matrix(2, &c).symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            // spectrum is symmetric about zero
            assert!((ev[0] + ev[3]).abs() < 1e-12 && (ev[1] + ev[2]).abs() < 1e-12);
            assert!((fast[0] - ev[2]).abs() < 1e-9 * (1.0 + ev[3]), "{fast:?} {ev:?}");
            assert!((fast[1] - ev[3]).abs() < 1e-12 * (1.0 + ev[3]));
        }
        let c = [0.3, -1.2, 0.4];
        let mut one = [0.0];
        positive_spectrum(1, &c, &mut one);
        let ev = class_c_matrix(1, &c).symmetric_eigenvalues();
        assert!((one[0] - ev.max()).abs() < 1e-14);
    }

    #[test]
    fn ensembles_are_ordered_excursions() {
        let mut rng = stream_rng(3, 1);
        for n in 1..=4 {
            for _ in 0..20 {
                let e = sample_matrix_ensemble(n, 64, &mut rng);
                assert!(e.is_valid());
                assert_eq!(e.positions.len(), n);
            }
        }
        let p = sample_excursion(32, &mut rng);
        assert_eq!((p[0], p[32]), (0.0, 0.0));
        assert!(p[1..32].iter().all(|&x| x > 0.0));
        let (e, attempts) = sample_nonintersecting(2, 16, &mut rng, 100_000).unwrap();
        assert!(e.is_valid() && attempts >= 1);
    }

    #[test]
    fn single_path_always_accepted() {
        let mut s = RejectionSampler::new(1, 32, 1).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            s.sample(&mut rng).unwrap();
        }
        assert_eq!(s.acceptance_rate(), 1.0);
    }

    #[test]
    fn acceptance_decreases_with_n() {
        let r2 = rejection_acceptance(2, 16, 20_000, 1).unwrap();
        let r3 = rejection_acceptance(3, 16, 20_000, 1).unwrap();
        assert!(r3 < r2 && r2 < 1.0, "{r2} {r3}");
    }

    #[test]
    fn exhausted_sampler_reports_rate() {
        let mut rng = stream_rng(9, 0);
        let r = sample_nonintersecting(3, 512, &mut rng, 3);
        assert!(matches!(r, Err(Error::AcceptanceExhausted { attempts: 3, .. })));
    }

    #[test]
    fn vacuous_thresholds() {
        let cfg = McConfig::new(2, 16, 5000, 1);
        let r = estimate_bottom_cdf(&cfg, 0.5, &[0.0]).unwrap()[0];
        assert_eq!((r.estimate, r.standard_error), (1.0, 0.0));
        let j = estimate_joint(&cfg, &[0.25, 0.75], &[0.0, 0.0], Extreme::Bottom).unwrap();
        assert_eq!(j.estimate, 1.0);
        let t = estimate_joint(&cfg, &[0.5], &[f64::INFINITY], Extreme::Top).unwrap();
        assert_eq!(t.estimate, 1.0);
    }

    #[test]
    fn vacuous_second_threshold_reproduces_single_time() {
        let cfg = McConfig::new(2, 16, 20_000, 4);
        let one = estimate_joint(&cfg, &[0.5], &[0.4], Extreme::Bottom).unwrap();
        let two = estimate_joint(&cfg, &[0.5, 0.75], &[0.4, 0.0], Extreme::Bottom).unwrap();
        // different draws, same law
        assert!((one.estimate - two.estimate).abs() < 4.0 * (one.standard_error + two.standard_error));
        let cdf = estimate_bottom_cdf(&cfg, 0.5, &[0.4]).unwrap()[0];
        assert_eq!(cdf.estimate, one.estimate);
    }

    #[test]
    fn cdf_nonincreasing_in_threshold() {
        let cfg = McConfig::new(3, 16, 3000, 2);
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let r = estimate_bottom_cdf(&cfg, 0.25, &xs).unwrap();
        assert!(r.windows(2).all(|w| w[1].estimate <= w[0].estimate));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = McConfig {
            chunk: 500,
            ..McConfig::new(2, 32, 3000, 17)
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        estimate_bottom_cdf(&cfg, 0.5, &[0.3, 0.6]).unwrap(),
                        estimate_areas(&cfg).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn rejection_sampler_needs_grid_times() {
        let cfg = McConfig::new(2, 16, 10, 1).with_sampler(Sampler::Rejection { max_attempts: 10_000 });
        assert!(matches!(
            estimate_bottom_cdf(&cfg, 0.3, &[0.1]),
            Err(Error::InvalidTimes(_))
        ));
        assert!(estimate_bottom_cdf(&cfg, 0.375, &[0.1]).is_ok());
        let big = McConfig::new(4, 16, 10, 1).with_sampler(Sampler::Rejection { max_attempts: 1 });
        assert!(estimate_areas(&big).is_err());
        let matrix = McConfig::new(2, 16, 10, 1);
        assert!(estimate_bottom_cdf(&matrix, 0.3, &[0.1]).is_ok());
        assert!(estimate_joint(&matrix, &[0.6, 0.4], &[0.1, 0.1], Extreme::Bottom).is_err());
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let (stat, dof, p) = chi_square(&[50, 50, 0], &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!((stat, dof), (0.0, 1));
        assert!((p - 1.0).abs() < 1e-12);
        let (_, _, p) = chi_square(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!(p < 1e-10);
    }
}
