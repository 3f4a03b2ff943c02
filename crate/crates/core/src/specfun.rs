//! Harmonic oscillator wavefunctions, the absorbed Brownian transition
//! density and Gauss–Legendre rules.
//!
//! The wavefunctions are `φ_k(x) = e^{-x²/2} H_k(x) / sqrt(√π 2^k k!)`,
//! evaluated by the normalized three-term recurrence
//!
//! ```text
//! φ_{k+1}(x) = sqrt(2/(k+1)) x φ_k(x) − sqrt(k/(k+1)) φ_{k−1}(x)
//! ```
//!
//! with a running power-of-ten rescale so that indices in the hundreds and
//! arguments far outside the oscillatory region neither overflow nor lose
//! the Gaussian factor to underflow prematurely.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{finite, Error, Result};

/// π^{-1/4}
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

const RESCALE_AT: f64 = 1e150;
const RESCALE_LN: f64 = 345.387_763_949_107; // 150 ln 10

/// Writes `φ_0(x) .. φ_{out.len()-1}(x)` into `out`.
pub(crate) fn fill_wavefunctions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * x * x;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = PI_POW_NEG_QUARTER;
    out[0] = cur * factor;
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += RESCALE_LN;
            factor = log_scale.exp();
        }
        out[k + 1] = cur * factor;
    }
}

/// `φ_0(x), …, φ_{k_max}(x)`.
pub fn oscillator_wavefunctions(k_max: usize, x: f64) -> Result<Vec<f64>> {
    finite(x, "wavefunction argument")?;
    let mut out = vec![0.0; k_max + 1];
    fill_wavefunctions(x, &mut out);
    Ok(out)
}

/// Single wavefunction value `φ_k(x)`.
pub fn wavefunction(k: usize, x: f64) -> Result<f64> {
    Ok(oscillator_wavefunctions(k, x)?[k])
}

/// Wavefunctions `φ_0 .. φ_{max_index}` tabulated at a fixed set of points.
#[derive(Debug, Clone)]
pub struct WaveFunctionTable {
    max_index: usize,
    points: Vec<f64>,
    values: Vec<f64>,
}

impl WaveFunctionTable {
    pub fn new(max_index: usize, points: &[f64]) -> Result<Self> {
        let stride = max_index + 1;
        let mut values = vec![0.0; stride * points.len()];
        for (row, &x) in values.chunks_mut(stride).zip(points) {
            finite(x, "table point")?;
            fill_wavefunctions(x, row);
        }
        Ok(Self {
            max_index,
            points: points.to_vec(),
            values,
        })
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `φ_k` at the `i`-th point.
    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.values[i * (self.max_index + 1) + k]
    }

    /// All tabulated indices at the `i`-th point.
    pub fn row(&self, i: usize) -> &[f64] {
        let stride = self.max_index + 1;
        &self.values[i * stride..(i + 1) * stride]
    }
}

/// Nodes and weights of a Gauss–Legendre rule mapped to `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
    pub order: usize,
}

impl QuadratureRule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type Reference = Arc<(Vec<f64>, Vec<f64>)>;

fn reference_cache() -> &'static Mutex<HashMap<usize, Reference>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Reference>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre rule on [-1, 1], nodes increasing. Cached per order.
fn reference_rule(order: usize) -> Reference {
    if let Some(rule) = reference_cache().lock().unwrap().get(&order) {
        return rule.clone();
    }
    let rule = Arc::new(legendre_newton(order));
    reference_cache().lock().unwrap().insert(order, rule.clone());
    rule
}

fn legendre_newton(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for iter in 0..100 {
            // Legendre recurrence for P_n(z) and P_{n-1}(z)
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 && iter > 0 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule of the given order on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    finite(a, "lower limit")?;
    finite(b, "upper limit")?;
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be positive".into()));
    }
    if !(a < b) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let reference = reference_rule(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: reference.0.iter().map(|&t| mid + half * t).collect(),
        weights: reference.1.iter().map(|&w| half * w).collect(),
        interval: (a, b),
        order,
    })
}

/// Composite Gauss–Legendre: `panels` equal panels of `order` points each.
pub(crate) fn composite_gauss_legendre(order: usize, panels: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a < b) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let reference = reference_rule(order);
    let mut nodes = Vec::with_capacity(order * panels);
    let mut weights = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        for (&t, &w) in reference.0.iter().zip(reference.1.iter()) {
            nodes.push(mid + 0.5 * width * t);
            weights.push(0.5 * width * w);
        }
    }
    Ok((nodes, weights))
}

/// Crossover from the sinh form to the two-Gaussian form.
const SINH_FORM_LIMIT: f64 = 30.0;

pub(crate) fn p_minus(x: f64, y: f64, tau: f64) -> f64 {
    let z = x * y / tau;
    if z < SINH_FORM_LIMIT {
        (2.0 / (PI * tau)).sqrt() * (-(x * x + y * y) / (2.0 * tau)).exp() * z.sinh()
    } else {
        let d = x - y;
        (-(d * d) / (2.0 * tau)).exp() * (-(-2.0 * z).exp_m1()) / (2.0 * PI * tau).sqrt()
    }
}

/// Transition density of Brownian motion killed at the origin,
/// `P₋(x, y, τ) = sqrt(2/(πτ)) e^{-(x²+y²)/(2τ)} sinh(xy/τ)`.
pub fn transition_density(x: f64, y: f64, tau: f64) -> Result<f64> {
    finite(x, "x")?;
    finite(y, "y")?;
    finite(tau, "tau")?;
    if x < 0.0 || y < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "transition density needs x, y >= 0 (got {x}, {y})"
        )));
    }
    if tau <= 0.0 {
        return Err(Error::InvalidArgument(format!("tau must be positive (got {tau})")));
    }
    Ok(p_minus(x, y, tau))
}
