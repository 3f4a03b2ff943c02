//! Nyström Fredholm determinants `det(I − K χ_J)` and finite Gram
//! determinants.
//!
//! Matrices are symmetrized with square-root weights,
//! `M_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j)`, so one code path serves
//! symmetric and block (nonsymmetric) kernels. Assembly is sequential, so
//! outputs are bit-identical across runs.

use crate::error::{finite, Error, Result};
use crate::kernels::{bessel_block, default_truncation, BEKernel, BesselTimePartition, ScalarKernel};
use crate::linalg;
use crate::specfun::{fill_wavefunctions, gauss_legendre};

/// Default Gauss–Legendre order per window.
pub const DEFAULT_QUAD_ORDER: usize = 64;
const MIN_QUAD_ORDER: usize = 4;

/// An interval `(lower, upper)` of the half-line; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

/// Bottom windows `(0, x)` give `P(lowest ≥ x)`; top windows `(x, ∞)` give
/// `P(highest < x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Bottom,
    Top,
    /// Mixed or general windows: the determinant has no probability reading.
    Mixed,
}

impl Window {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower < 0.0 || upper < lower {
            return Err(Error::DegenerateInterval { a: lower, b: upper });
        }
        Ok(Self { lower, upper })
    }

    /// `(0, x)`
    pub fn bottom(x: f64) -> Result<Self> {
        Self::new(0.0, x)
    }

    /// `(x, ∞)`
    pub fn top(x: f64) -> Result<Self> {
        Self::new(x, f64::INFINITY)
    }

    pub fn kind(&self) -> WindowKind {
        if self.upper.is_infinite() {
            WindowKind::Top
        } else if self.lower == 0.0 {
            WindowKind::Bottom
        } else {
            WindowKind::Mixed
        }
    }

    /// `(0, 0)` and `(∞, ∞)` impose no constraint.
    pub fn is_empty(&self) -> bool {
        !(self.upper > self.lower)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            lower: self.lower * factor,
            upper: self.upper * factor,
        }
    }
}

/// One window per time slice, with the half-line cut and the rule order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    /// Upper limit for half-line windows, in the kernel's own units; `None`
    /// uses the kernel default.
    pub truncation_point: Option<f64>,
    pub quad_order: usize,
}

impl WindowSet {
    pub fn new(windows: Vec<Window>) -> Self {
        Self {
            windows,
            truncation_point: None,
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn bottom(thresholds: &[f64]) -> Result<Self> {
        Ok(Self::new(
            thresholds.iter().map(|&x| Window::bottom(x)).collect::<Result<_>>()?,
        ))
    }

    pub fn top(thresholds: &[f64]) -> Result<Self> {
        Ok(Self::new(
            thresholds.iter().map(|&x| Window::top(x)).collect::<Result<_>>()?,
        ))
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.quad_order = order;
        self
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.truncation_point = Some(t);
        self
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Uniform kind of the set; empty windows take any kind.
    pub fn kind(&self) -> WindowKind {
        let mut kind = None;
        for w in &self.windows {
            if w.is_empty() {
                continue;
            }
            let k = w.kind();
            match kind {
                None => kind = Some(k),
                Some(prev) if prev != k => return WindowKind::Mixed,
                _ => {}
            }
        }
        kind.unwrap_or(WindowKind::Bottom)
    }

    fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::InvalidTimes("empty time partition".into()));
        }
        if self.windows.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{} windows for {m} time slices",
                self.windows.len()
            )));
        }
        check_order(self.quad_order)?;
        if let Some(t) = self.truncation_point {
            finite(t, "truncation point")?;
            if t <= 0.0 {
                return Err(Error::InvalidArgument("truncation point must be positive".into()));
            }
        }
        Ok(())
    }
}

fn check_order(order: usize) -> Result<()> {
    if order < MIN_QUAD_ORDER {
        Err(Error::InvalidArgument(format!(
            "quadrature order {order} below {MIN_QUAD_ORDER}"
        )))
    } else {
        Ok(())
    }
}

/// Nodes and weights for `window` cut at `truncation`. With `graded` the
/// rule is Gauss–Legendre in `v = √x` (`dx = 2v dv`), which absorbs the
/// `x^{1/4}` behaviour of square-variable kernels and their `√x` scale.
pub(crate) fn window_rule(window: Window, truncation: f64, order: usize, graded: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = window.lower;
    let b = window.upper.min(truncation);
    if !(b > a) {
        return Ok((Vec::new(), Vec::new()));
    }
    if graded {
        let rule = gauss_legendre(order, a.sqrt(), b.sqrt())?;
        let nodes = rule.nodes.iter().map(|&v| v * v).collect();
        let weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&v, &w)| 2.0 * v * w)
            .collect();
        Ok((nodes, weights))
    } else {
        let rule = gauss_legendre(order, a, b)?;
        Ok((rule.nodes, rule.weights))
    }
}

/// Nodes and weights of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Symmetrized Nyström matrix with its per-block node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    pub dimension: usize,
    /// Row-major `dimension × dimension`.
    pub matrix: Vec<f64>,
    pub blocks: Vec<BlockNodes>,
}

impl DiscretizedOperator {
    fn assemble<F>(blocks: Vec<BlockNodes>, mut block: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &[f64], &[f64]) -> Result<Vec<f64>>,
    {
        let offsets: Vec<usize> = blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.nodes.len();
                Some(o)
            })
            .collect();
        let dim: usize = blocks.iter().map(|b| b.nodes.len()).sum();
        let mut matrix = vec![0.0; dim * dim];
        for k in 0..blocks.len() {
            for l in 0..blocks.len() {
                let (bk, bl) = (&blocks[k], &blocks[l]);
                if bk.nodes.is_empty() || bl.nodes.is_empty() {
                    continue;
                }
                let values = block(k, l, &bk.nodes, &bl.nodes)?;
                for i in 0..bk.nodes.len() {
                    for j in 0..bl.nodes.len() {
                        let v = values[i * bl.nodes.len() + j];
                        if !v.is_finite() {
                            return Err(Error::NonFiniteKernel {
                                x: bk.nodes[i],
                                y: bl.nodes[j],
                            });
                        }
                        matrix[(offsets[k] + i) * dim + offsets[l] + j] =
                            bk.weights[i].sqrt() * v * bl.weights[j].sqrt();
                    }
                }
            }
        }
        Ok(Self {
            dimension: dim,
            matrix,
            blocks,
        })
    }

    /// `det(I − M)`
    pub fn determinant(&self) -> f64 {
        linalg::det_identity_minus(self.dimension, &self.matrix)
    }

    /// Eigenvalues of the symmetric part (exact for symmetric kernels).
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        linalg::symmetric_eigenvalues(self.dimension, &self.matrix)
    }
}

/// Nyström discretization of a scalar kernel on one window.
pub fn discretize_scalar<K: ScalarKernel + ?Sized>(
    kernel: &K,
    window: Window,
    quad_order: usize,
) -> Result<DiscretizedOperator> {
    check_order(quad_order)?;
    let (nodes, weights) = window_rule(window, kernel.truncation_point(), quad_order, kernel.square_variable())?;
    DiscretizedOperator::assemble(vec![BlockNodes { nodes, weights }], |_, _, xs, ys| {
        Ok(kernel.matrix(xs, ys))
    })
}

/// `det(I − K χ_window)`.
pub fn fredholm_det_scalar<K: ScalarKernel + ?Sized>(kernel: &K, window: Window, quad_order: usize) -> Result<f64> {
    Ok(discretize_scalar(kernel, window, quad_order)?.determinant())
}

/// `det(δ_jk − (Ψ_j, Ψ_k)_window)` with `Ψ_j = √2 φ_{2j+1}`; the window is
/// in the kernel's scaled units and half-lines are cut at `sqrt(4n) + 10`.
pub fn finite_det(n: usize, window: Window, quad_order: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    check_order(quad_order)?;
    let (nodes, weights) = window_rule(window, default_truncation(n), quad_order, false)?;
    let mut gram = vec![0.0; n * n];
    let mut buf = vec![0.0; 2 * n];
    for (&x, &w) in nodes.iter().zip(&weights) {
        fill_wavefunctions(x, &mut buf);
        for j in 0..n {
            for k in 0..n {
                gram[j * n + k] += 2.0 * w * buf[2 * j + 1] * buf[2 * k + 1];
            }
        }
    }
    Ok(linalg::det_identity_minus(n, &gram))
}

/// Nyström discretization of the extended excursion kernel. Windows are in
/// unscaled units and are rescaled by `1/σ_k` per slice; the cut for
/// half-lines is in scaled units.
pub fn discretize_extended(kernel: &BEKernel, windows: &WindowSet) -> Result<DiscretizedOperator> {
    windows.validate(kernel.slices())?;
    let t = windows.truncation_point.unwrap_or_else(|| default_truncation(kernel.n));
    let blocks = windows
        .windows
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let (nodes, weights) = window_rule(w.scaled(1.0 / kernel.times.sigma(k)), t, windows.quad_order, false)?;
            Ok(BlockNodes { nodes, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscretizedOperator::assemble(blocks, |k, l, xs, ys| Ok(kernel.block(k, l, xs, ys, true)))
}

/// `det(I − K^{ext} χ_J)`. For bottom windows this is
/// `P(X_1(τ_k) ≥ x_k ∀k)`, for top windows `P(X_n(τ_k) < x_k ∀k)`; see
/// [`WindowSet::kind`] for mixed sets.
pub fn fredholm_det_extended(kernel: &BEKernel, windows: &WindowSet) -> Result<f64> {
    Ok(discretize_extended(kernel, windows)?.determinant())
}

/// The same determinant from raw kernel entries (all exponential
/// prefactors kept, unscaled coordinates). Bounded windows only.
pub fn fredholm_det_extended_raw(kernel: &BEKernel, windows: &WindowSet) -> Result<f64> {
    windows.validate(kernel.slices())?;
    if windows.windows.iter().any(|w| w.upper.is_infinite()) {
        return Err(Error::InvalidArgument("raw determinants need bounded windows".into()));
    }
    let blocks = windows
        .windows
        .iter()
        .map(|&w| {
            let (nodes, weights) = window_rule(w, f64::INFINITY, windows.quad_order, false)?;
            Ok(BlockNodes { nodes, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    let op = DiscretizedOperator::assemble(blocks, |k, l, xs, ys| {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                out.push(kernel.entry_raw(k, l, x, y)?);
            }
        }
        Ok(out)
    })?;
    Ok(op.determinant())
}

/// `P(B(τ_k) ≥ x_k ∀k)` for the α = 1/2 Bessel process, bottom windows only.
pub fn fredholm_det_bessel_extended(times: &BesselTimePartition, windows: &WindowSet) -> Result<f64> {
    windows.validate(times.len())?;
    if windows.windows.iter().any(|w| w.lower != 0.0 || w.upper.is_infinite()) {
        return Err(Error::InvalidArgument(
            "Bessel determinants take bottom windows (0, x_k)".into(),
        ));
    }
    let blocks = windows
        .windows
        .iter()
        .map(|&w| {
            let (nodes, weights) = window_rule(w, f64::INFINITY, windows.quad_order, false)?;
            Ok(BlockNodes { nodes, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    let taus = times.taus();
    let op = DiscretizedOperator::assemble(blocks, |k, l, xs, ys| bessel_block(taus[k] - taus[l], k >= l, xs, ys))?;
    Ok(op.determinant())
}

/// Linear system `(I − K χ_window)` on the Nyström nodes, for resolvent
/// quantities.
pub(crate) struct ResolventSystem<'a, K: ScalarKernel + ?Sized> {
    kernel: &'a K,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    matrix: Vec<f64>,
}

impl<'a, K: ScalarKernel + ?Sized> ResolventSystem<'a, K> {
    pub fn new(kernel: &'a K, window: Window, quad_order: usize) -> Result<Self> {
        check_order(quad_order)?;
        let op = discretize_scalar(kernel, window, quad_order)?;
        let b = op.blocks.into_iter().next().expect("one block");
        Ok(Self {
            kernel,
            nodes: b.nodes,
            weights: b.weights,
            matrix: op.matrix,
        })
    }

    /// Solves `f = g + K χ f` for each right side `g` given at the nodes;
    /// returns `f` at the nodes.
    pub fn solve(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let dim = self.nodes.len();
        let cols = rhs.len();
        let mut b = vec![0.0; dim * cols];
        for (c, g) in rhs.iter().enumerate() {
            for i in 0..dim {
                b[i * cols + c] = self.weights[i].sqrt() * g[i];
            }
        }
        let z = linalg::solve_identity_minus(dim, &self.matrix, &b, cols)?;
        Ok((0..cols)
            .map(|c| (0..dim).map(|i| z[i * cols + c] / self.weights[i].sqrt()).collect())
            .collect())
    }

    /// `g(x) + ∫ K(x, y) f(y) dy` over the window, for a solved `f`.
    pub fn extend(&self, x: f64, g_at_x: f64, f: &[f64]) -> f64 {
        let row = self.kernel.matrix(&[x], &self.nodes);
        g_at_x
            + row
                .iter()
                .zip(&self.weights)
                .zip(f)
                .map(|((k, w), f)| k * w * f)
                .sum::<f64>()
    }
}

/// `R(s, s)` for the resolvent `R = (I − K χ_(0,s))^{-1} K χ_(0,s)`.
pub fn resolvent_diagonal<K: ScalarKernel + ?Sized>(kernel: &K, s: f64, quad_order: usize) -> Result<f64> {
    finite(s, "s")?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    let sys = ResolventSystem::new(kernel, Window::bottom(s)?, quad_order)?;
    let ks = kernel.matrix(&sys.nodes, &[s]);
    let r = sys.solve(&[ks])?;
    let kss = kernel.eval(s, s);
    Ok(sys.extend(s, kss, &r[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BesselKernel, ExcursionKernel, SquareVariable, TimePartition};
    use libm::erf;
    use std::f64::consts::PI;

    fn n1_bottom(s: f64) -> f64 {
        1.0 - erf(s) + 2.0 / PI.sqrt() * s * (-s * s).exp()
    }

    #[test]
    fn window_validation_and_kinds() {
        assert!(Window::new(1.0, 0.5).is_err());
        assert!(Window::new(-1.0, 0.5).is_err());
        assert!(Window::new(f64::NAN, 0.5).is_err());
        assert_eq!(Window::bottom(1.0).unwrap().kind(), WindowKind::Bottom);
        assert_eq!(Window::top(1.0).unwrap().kind(), WindowKind::Top);
        assert_eq!(Window::new(0.5, 1.0).unwrap().kind(), WindowKind::Mixed);
        let set = WindowSet::new(vec![Window::bottom(1.0).unwrap(), Window::top(2.0).unwrap()]);
        assert_eq!(set.kind(), WindowKind::Mixed);
        let set = WindowSet::new(vec![Window::bottom(0.0).unwrap(), Window::top(2.0).unwrap()]);
        assert_eq!(set.kind(), WindowKind::Top);
    }

    #[test]
    fn single_path_closed_forms() {
        let k = ExcursionKernel::new(1).unwrap();
        let low = fredholm_det_scalar(&k, Window::bottom(1.0).unwrap(), 64).unwrap();
        let high = fredholm_det_scalar(&k, Window::top(1.0).unwrap(), 64).unwrap();
        assert!((low - n1_bottom(1.0)).abs() < 1e-12);
        assert!((low - 0.5724067).abs() < 1e-7);
        assert!((high - 0.4275933).abs() < 1e-7);
        assert!((low + high - 1.0).abs() < 1e-12);
        assert_eq!(fredholm_det_scalar(&k, Window::bottom(0.0).unwrap(), 64).unwrap(), 1.0);
        assert!(fredholm_det_scalar(&k, Window::bottom(1.0).unwrap(), 2).is_err());
    }

    #[test]
    fn finite_gram_matches_nystrom() {
        assert!((finite_det(1, Window::bottom(1.0).unwrap(), 64).unwrap() - n1_bottom(1.0)).abs() < 1e-9);
        assert_eq!(finite_det(3, Window::bottom(0.0).unwrap(), 64).unwrap(), 1.0);
        for n in 1..=8 {
            let k = ExcursionKernel::new(n).unwrap();
            let edge = (4.0 * n as f64).sqrt() + 2.0;
            for i in 1..=10 {
                let s = edge * i as f64 / 10.0;
                for w in [Window::bottom(s).unwrap(), Window::top(s).unwrap()] {
                    let a = finite_det(n, w, 64).unwrap();
                    let b = fredholm_det_scalar(&k, w, 64).unwrap();
                    assert!((a - b).abs() < 1e-8, "n={n} {w:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn doubling_the_order_is_converged() {
        for n in 1..=8 {
            let k = ExcursionKernel::new(n).unwrap();
            let edge = (4.0 * n as f64).sqrt() + 2.0;
            for i in 1..=6 {
                let s = edge * i as f64 / 6.0;
                for w in [Window::bottom(s).unwrap(), Window::top(s).unwrap()] {
                    let a = fredholm_det_scalar(&k, w, 64).unwrap();
                    let b = fredholm_det_scalar(&k, w, 128).unwrap();
                    assert!((a - b).abs() < 1e-9, "n={n} {w:?} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn projection_spectrum() {
        for n in [1usize, 3, 6] {
            let k = ExcursionKernel::new(n).unwrap();
            for w in [Window::bottom(1.5).unwrap(), Window::top(0.5).unwrap()] {
                let ev = discretize_scalar(&k, w, 64).unwrap().symmetric_eigenvalues();
                assert!(ev.iter().all(|&e| e > -1e-8 && e < 1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn square_variable_change_of_variables() {
        for n in [1usize, 2, 4] {
            let k = ExcursionKernel::new(n).unwrap();
            let k0 = SquareVariable(k);
            for s in [0.5, 1.0, 1.2, 1.5] {
                let a = fredholm_det_scalar(&k, Window::bottom(s).unwrap(), 64).unwrap();
                let b = fredholm_det_scalar(&k0, Window::bottom(s * s).unwrap(), 64).unwrap();
                assert!((a - b).abs() < 1e-8, "n={n} s={s} {a} {b}");
                let a = fredholm_det_scalar(&k, Window::top(s).unwrap(), 64).unwrap();
                let b = fredholm_det_scalar(&k0, Window::top(s * s).unwrap(), 64).unwrap();
                assert!((a - b).abs() < 1e-8, "top n={n} s={s} {a} {b}");
            }
        }
    }

    #[test]
    fn bottom_determinants_are_monotone() {
        let k = ExcursionKernel::new(3).unwrap();
        let mut prev = 1.0;
        for i in 0..=40 {
            let s = 0.1 * i as f64;
            let d = fredholm_det_scalar(&k, Window::bottom(s).unwrap(), 64).unwrap();
            assert!(d <= prev + 1e-12 && d >= -1e-8);
            prev = d;
        }
    }

    #[test]
    fn extended_reduces_to_scalar() {
        let n = 2;
        let times = TimePartition::single(0.3).unwrap();
        let sigma = times.sigma(0);
        let kern = BEKernel::new(n, times).unwrap();
        let k = ExcursionKernel::new(n).unwrap();
        for s in [0.4, 1.0] {
            let set = WindowSet::bottom(&[s * sigma]).unwrap();
            let a = fredholm_det_extended(&kern, &set).unwrap();
            let b = fredholm_det_scalar(&k, Window::bottom(s).unwrap(), 64).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        let times = TimePartition::new(&[0.3, 0.6]).unwrap();
        let kern2 = BEKernel::new(n, times).unwrap();
        for set in [
            WindowSet::bottom(&[0.7 * sigma, 0.0]).unwrap(),
            WindowSet::top(&[1.3 * sigma, f64::INFINITY]).unwrap(),
        ] {
            let a = fredholm_det_extended(&kern2, &set).unwrap();
            let one = WindowSet::new(vec![set.windows[0]]);
            let b = fredholm_det_extended(&kern, &one).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        assert!(fredholm_det_extended(&kern2, &WindowSet::bottom(&[0.1]).unwrap()).is_err());
    }

    #[test]
    fn extended_determinant_monotone_in_each_threshold() {
        let kern = BEKernel::new(2, TimePartition::new(&[0.35, 0.65]).unwrap()).unwrap();
        let mut prev = 1.0;
        for i in 0..8 {
            let x = 0.1 * i as f64;
            let d = fredholm_det_extended(&kern, &WindowSet::bottom(&[0.3, x]).unwrap()).unwrap();
            assert!(d <= prev + 1e-10 && (-1e-8..=1.0 + 1e-8).contains(&d));
            prev = d;
        }
    }

    #[test]
    fn raw_and_reduced_determinants_agree() {
        let kern = BEKernel::new(2, TimePartition::new(&[0.3, 0.55]).unwrap()).unwrap();
        let set = WindowSet::new(vec![Window::new(0.1, 0.5).unwrap(), Window::new(0.2, 0.8).unwrap()]);
        let a = fredholm_det_extended_raw(&kern, &set).unwrap();
        let b = fredholm_det_extended(&kern, &set).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} {b}");
    }

    #[test]
    fn bessel_determinants() {
        let times = BesselTimePartition::single();
        assert_eq!(
            fredholm_det_bessel_extended(&times, &WindowSet::bottom(&[0.0]).unwrap()).unwrap(),
            1.0
        );
        let mut prev = 1.0;
        for i in 0..=12 {
            let s = 0.5 * i as f64;
            let d = fredholm_det_bessel_extended(&times, &WindowSet::bottom(&[s]).unwrap()).unwrap();
            let e = fredholm_det_scalar(&BesselKernel, Window::bottom(s).unwrap(), 64).unwrap();
            assert!((d - e).abs() < 1e-12);
            assert!(d <= prev + 1e-12 && (0.0..=1.0).contains(&d));
            prev = d;
        }
        let times = BesselTimePartition::new(&[0.0, 1.0]).unwrap();
        assert!(fredholm_det_bessel_extended(&times, &WindowSet::top(&[1.0, 1.0]).unwrap()).is_err());
        let d = fredholm_det_bessel_extended(&times, &WindowSet::bottom(&[1.5, 1.5]).unwrap()).unwrap();
        let single =
            fredholm_det_bessel_extended(&BesselTimePartition::single(), &WindowSet::bottom(&[1.5]).unwrap()).unwrap();
        assert!(d < single && d > 0.0);
    }

    #[test]
    fn resolvent_is_log_derivative() {
        let k0 = SquareVariable(ExcursionKernel::new(1).unwrap());
        let s = 1.0;
        let h = 1e-4;
        let logdet = |s: f64| fredholm_det_scalar(&k0, Window::bottom(s).unwrap(), 64).unwrap().ln();
        let fd = -(logdet(s + h) - logdet(s - h)) / (2.0 * h);
        let r = resolvent_diagonal(&k0, s, 64).unwrap();
        assert!((fd - r).abs() < 1e-6, "{fd} {r}");
        assert_eq!(resolvent_diagonal(&k0, 0.0, 64).unwrap(), 0.0);
        let small: Vec<f64> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&s| resolvent_diagonal(&k0, s, 64).unwrap())
            .collect();
        assert!(small[0] > small[1] && small[1] > small[2] && small[2] < 1e-3);
    }
}
