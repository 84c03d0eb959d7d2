//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

pub fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Upper Gaussian tail by quadrature of the density. For `x < 0` the
/// complement `1 − P(Z > −x)` is used.
pub fn tail_by_quadrature(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - tail_by_quadrature(-x);
    }
    // The tail is about pdf(x)/x, so scale the tolerance with the density.
    simpson(&normal_pdf, x, x + 12.0, 2e-15 * normal_pdf(x))
}

/// Root of a decreasing function `g` on `[lo, hi]` by bisection down to `width`.
pub fn bisect_decreasing<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫ 1/(λ − z) dF_c(λ)` for the Marčenko–Pastur law with ratio `c` and unit
/// scale, by the midpoint rule after `λ = (a+b)/2 + (b−a)/2·cos θ`. For `c > 1`
/// the point mass `1 − 1/c` at zero is added.
pub fn mp_stieltjes_by_quadrature(c: f64, z: f64, nodes: usize) -> f64 {
    let lo = (1.0 - c.sqrt()).powi(2);
    let hi = (1.0 + c.sqrt()).powi(2);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let h = PI / nodes as f64;
    let mut acc = 0.0;
    for k in 0..nodes {
        let theta = (k as f64 + 0.5) * h;
        let lambda = mid + half * theta.cos();
        let s = theta.sin();
        acc += half * half * s * s / (2.0 * PI * c * lambda * (lambda - z));
    }
    let mut total = acc * h;
    if c > 1.0 {
        total += (1.0 - 1.0 / c) / (0.0 - z);
    }
    total
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
