//! Small-`s` Puiseux series `r(s) = Σ_{k≥3} c_k s^{k/2}` of the σ-form
//! solution with `r ~ r₀ s^{3/2}`.

/// `r₀ = π^{-1/2} 4^{-n} C(2n, n) · 4n(2n+1)/3`.
pub fn r0(n: usize) -> f64 {
    let central: f64 = (1..=n).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product();
    let nf = n as f64;
    central * 4.0 * nf * (2.0 * nf + 1.0) / 3.0 / std::f64::consts::PI.sqrt()
}

/// Coefficients `c_0 … c_{order}` (with `c_0 = c_1 = c_2 = 0`).
///
/// In powers of `s^{1/2}`, `c_k` first enters the σ-form at index `k − 1`
/// through `s²(r″)² − (r′)²/4` paired with `c_3`, with coefficient
/// `(3/4) r₀ (k/2)(k − 3)`; every other occurrence sits at a higher index,
/// so each `c_k` solves a linear equation.
pub fn coefficients(n: usize, order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    if order < 3 {
        return c;
    }
    c[3] = r0(n);
    for k in 4..=order {
        let rest = residual_coefficient(n, &c, k - 1);
        let lead = 0.75 * c[3] * (k as f64 / 2.0) * (k as f64 - 3.0);
        c[k] = -rest / lead;
    }
    c
}

/// Coefficient of `s^{idx/2}` in
/// `s²(r″)² − 4(r′)²(sr′ − r) − (sr′ − r)² + (4n+1)(sr′ − r)r′ − (r′)²/4`
/// for the truncated series `c`.
fn residual_coefficient(n: usize, c: &[f64], idx: usize) -> f64 {
    let len = c.len();
    // a: r″ at index k−4, b: r′ at index k−2, g: sr′ − r at index k
    let a = |k: usize| {
        let h = k as f64 / 2.0;
        h * (h - 1.0) * c[k]
    };
    let b = |k: usize| k as f64 / 2.0 * c[k];
    let g = |k: usize| (k as f64 / 2.0 - 1.0) * c[k];
    let nf = n as f64;
    let mut total = 0.0;
    for i in 3..len {
        for j in 3..len {
            // pairs at index i + j − 4
            if i + j == idx + 4 {
                total += a(i) * a(j) - 0.25 * b(i) * b(j);
            }
            if i + j == idx {
                total -= g(i) * g(j);
            }
            if i + j == idx + 2 {
                total += (4.0 * nf + 1.0) * g(i) * b(j);
            }
            for l in 3..len {
                if i + j + l == idx + 4 {
                    total -= 4.0 * b(i) * b(j) * g(l);
                }
            }
        }
    }
    total
}

/// `Σ c_k s^{k/2}`
pub fn evaluate(c: &[f64], s: f64) -> f64 {
    let h = s.sqrt();
    c.iter().rev().fold(0.0, |acc, &ck| acc * h + ck)
}

/// `∫₀^s r(t)/t dt = Σ c_k s^{k/2} / (k/2)`
pub fn log_integral(c: &[f64], s: f64) -> f64 {
    let h = s.sqrt();
    let mut pow = 1.0;
    let mut total = 0.0;
    for (k, &ck) in c.iter().enumerate() {
        if k >= 1 {
            total += ck * pow * 2.0 / k as f64;
        }
        pow *= h;
    }
    total
}
