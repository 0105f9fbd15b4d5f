//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the library's special functions: integrals are
//! evaluated by tanh-sinh quadrature over fine partitions and log-gamma
//! values of integer and half-integer arguments by direct summation.

#![allow(dead_code)]

use quadrature::double_exponential;

/// Integral of `f` over `[a, b]`, split into `pieces` equal subintervals.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a + h * k as f64;
        let hi = if k + 1 == pieces { b } else { lo + h };
        total += double_exponential::integrate(&f, lo, hi, tol).integral;
    }
    total
}

/// Integrals of `f` over the consecutive intervals of `edges`.
pub fn integrate_cells(f: impl Fn(f64) -> f64, edges: &[f64], tol: f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| double_exponential::integrate(&f, w[0], w[1], tol).integral)
        .collect()
}

/// `ln Γ(k)` for `k` a positive multiple of 1/2, by the recurrence from
/// `Γ(1) = 1` or `Γ(1/2) = √π`.
pub fn ln_gamma_half_integer(k: f64) -> f64 {
    let twice = (2.0 * k).round();
    assert!(twice >= 1.0 && (2.0 * k - twice).abs() < 1e-12, "{k} is not a half-integer");
    let (mut z, mut acc) = if (twice as u64).is_multiple_of(2) {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * std::f64::consts::PI.ln())
    };
    while z < k - 0.25 {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

/// Regularized lower incomplete gamma `P(a, x)` as a ratio of two
/// quadratures of `t^(a-1) e^(-t)`, scaled to peak 1 so no normalizing
/// constant is needed.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if a <= 1.0 {
        // t = v²: integrand 2 v^(2a-1) e^(-v²) is bounded on [0, ∞).
        let g = |v: f64| {
            if v == 0.0 {
                if a == 0.5 {
                    2.0
                } else {
                    0.0
                }
            } else {
                2.0 * ((2.0 * a - 1.0) * v.ln() - v * v).exp()
            }
        };
        let top = 12.0;
        let num = integrate(g, 0.0, x.sqrt().min(top), 64, 1e-16);
        let den = integrate(g, 0.0, top, 64, 1e-16);
        return num / den;
    }
    let m = a - 1.0;
    let w = a.sqrt();
    let g = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            (m * (t / m).ln() - (t - m)).exp()
        }
    };
    let lo = (m - 40.0 * w).max(0.0);
    let hi = m + 40.0 * w + 60.0;
    let pieces = 400;
    let den = integrate(g, lo, hi, pieces, 1e-15);
    if x <= lo {
        return 0.0;
    }
    let xc = x.min(hi);
    let num = integrate(g, lo, xc, (pieces as f64 * (xc - lo) / (hi - lo)).ceil() as usize + 1, 1e-15);
    (num / den).min(1.0)
}

/// Kolmogorov–Smirnov statistic of `sample` against a continuous CDF.
pub fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Standard normal CDF by quadrature of the density.
pub fn normal_cdf(z: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if z >= 0.0 {
        0.5 + integrate(phi, 0.0, z, 8, 1e-15)
    } else {
        0.5 - integrate(phi, z, 0.0, 8, 1e-15)
    }
}

/// Simpson's rule on a uniform grid with an odd number of nodes.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    assert!(values.len() % 2 == 1 && values.len() >= 3);
    let last = values.len() - 1;
    let mut s = values[0] + values[last];
    for (i, v) in values.iter().enumerate().take(last).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}
