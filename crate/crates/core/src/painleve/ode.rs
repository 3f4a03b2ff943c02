//! Dormand–Prince 5(4) with step-size control and exact stop points.

use std::ops::{Add, Div, Mul, Neg, Sub};

use twofloat::TwoFloat;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    /// Absolute tolerance per component, relative to the largest magnitude
    /// that component has reached so far.
    pub atol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            initial_step: 1e-5,
            max_steps: 1_000_000,
        }
    }
}

// Tableau entries as exact rationals, so that they can be formed in the
// working field without f64 rounding.
const C: [(f64, f64); 7] = [
    (0.0, 1.0),
    (1.0, 5.0),
    (3.0, 10.0),
    (4.0, 5.0),
    (8.0, 9.0),
    (1.0, 1.0),
    (1.0, 1.0),
];
const A: [[(f64, f64); 6]; 7] = [
    [(0.0, 1.0); 6],
    [(1.0, 5.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    [(3.0, 40.0), (9.0, 40.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    [
        (44.0, 45.0),
        (-56.0, 15.0),
        (32.0, 9.0),
        (0.0, 1.0),
        (0.0, 1.0),
        (0.0, 1.0),
    ],
    [
        (19372.0, 6561.0),
        (-25360.0, 2187.0),
        (64448.0, 6561.0),
        (-212.0, 729.0),
        (0.0, 1.0),
        (0.0, 1.0),
    ],
    [
        (9017.0, 3168.0),
        (-355.0, 33.0),
        (46732.0, 5247.0),
        (49.0, 176.0),
        (-5103.0, 18656.0),
        (0.0, 1.0),
    ],
    [
        (35.0, 384.0),
        (0.0, 1.0),
        (500.0, 1113.0),
        (125.0, 192.0),
        (-2187.0, 6784.0),
        (11.0, 84.0),
    ],
];
// fifth-order weights are the last row of A; these are fifth minus fourth
const E: [(f64, f64); 7] = [
    (71.0, 57600.0),
    (0.0, 1.0),
    (-71.0, 16695.0),
    (71.0, 1920.0),
    (-17253.0, 339200.0),
    (22.0, 525.0),
    (-1.0, 40.0),
];

fn ratio<T: Real>((num, den): (f64, f64)) -> T {
    T::from(num) / den
}

/// Field the integrator runs in: `f64`, or double-double for trajectories
/// whose invariants cancel heavily.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + From<f64>
    + Into<f64>
{
}

impl Real for f64 {}
impl Real for TwoFloat {}

/// What the step observer asks the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Integrates `y' = f(s, y)` from `s_start` through each of `stops` in
/// order (monotone in one direction), landing on every stop exactly.
/// `on_step(s, y, is_stop)` sees every accepted step and may stop early
/// or abort; the state at the last accepted step is returned.
pub fn integrate<T, F, G>(
    mut f: F,
    s_start: T,
    y0: &[T],
    stops: &[T],
    control: &StepControl,
    mut on_step: G,
) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
    G: FnMut(T, &[T], bool) -> Result<Flow>,
{
    let dim = y0.len();
    let zero = T::from(0.0);
    let mut y = y0.to_vec();
    let Some(&last) = stops.last() else {
        return Ok(y);
    };
    let dir = if (last - s_start).into() >= 0.0 { 1.0 } else { -1.0 };
    let mut s = s_start;
    let mut h: f64 = control.initial_step.abs() * dir;
    let mut peak: Vec<f64> = y.iter().map(|&v| v.into().abs()).collect();
    let c: Vec<T> = C.iter().map(|&x| ratio(x)).collect();
    let a: Vec<Vec<Option<T>>> = A
        .iter()
        .map(|row| row.iter().map(|&x| (x.0 != 0.0).then(|| ratio(x))).collect())
        .collect();
    let e_w: Vec<Option<T>> = E.iter().map(|&x| (x.0 != 0.0).then(|| ratio(x))).collect();
    let mut k = vec![vec![zero; dim]; 7];
    let mut tmp = vec![zero; dim];
    f(s, &y, &mut k[0]);
    let mut steps = 0;
    for &stop in stops {
        loop {
            let remaining: f64 = (stop - s).into();
            if remaining * dir <= 0.0 {
                break;
            }
            steps += 1;
            if steps > control.max_steps {
                return Err(Error::StepSizeUnderflow { s: s.into(), h });
            }
            let hits_stop = h * dir >= remaining * dir;
            let h_try = if hits_stop { stop - s } else { T::from(h) };
            let h_f: f64 = h_try.into();
            if !hits_stop && h_f.abs() < 1e-14 * s.into().abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { s: s.into(), h: h_f });
            }
            for stage in 1..7 {
                for i in 0..dim {
                    let mut acc = zero;
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        if let Some(w) = a[stage][j] {
                            acc = acc + kj[i] * w;
                        }
                    }
                    tmp[i] = y[i] + h_try * acc;
                }
                f(s + h_try * c[stage], &tmp, &mut k[stage]);
            }
            // stage 6 was evaluated at the fifth-order solution
            let mut err = 0.0;
            for i in 0..dim {
                let mut acc = zero;
                for (j, kj) in k.iter().enumerate() {
                    if let Some(w) = e_w[j] {
                        acc = acc + kj[i] * w;
                    }
                }
                let e: f64 = (acc * h_try).into();
                let scale = control.atol * peak[i].max(f64::MIN_POSITIVE)
                    + control.rtol * y[i].into().abs().max(tmp[i].into().abs());
                let r = if scale > 0.0 { e / scale } else { 0.0 };
                err += r * r;
            }
            let err = (err / dim as f64).sqrt();
            if !err.is_finite() {
                h = h_f * 0.2;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                s = if hits_stop { stop } else { s + h_try };
                y.copy_from_slice(&tmp);
                for i in 0..dim {
                    peak[i] = peak[i].max(y[i].into().abs());
                }
                let (first, rest) = k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
                if on_step(s, &y, hits_stop)? == Flow::Stop {
                    return Ok(y);
                }
                if !hits_stop || factor < 1.0 {
                    h = h_f * factor;
                }
            } else {
                h = h_f * factor.min(1.0);
            }
        }
    }
    Ok(y)
}
