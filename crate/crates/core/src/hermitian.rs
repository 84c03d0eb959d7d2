//! Eigenvalues of dense Hermitian matrices.
//!
//! Householder reduction to a real symmetric tridiagonal matrix followed by
//! implicit QL with Wilkinson-style shifts. Only eigenvalues are computed.

use num_complex::Complex64;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// The QL iteration failed to deflate an eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoConvergence;

/// Eigenvalues of the `n×n` Hermitian matrix stored row-major in `a`,
/// sorted in descending order. Only the lower triangle is read. `a` is
/// overwritten.
pub fn eigenvalues_hermitian(a: &mut [Complex64], n: usize) -> Result<Vec<f64>, NoConvergence> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    if n == 0 {
        return Ok(Vec::new());
    }
    mirror_lower(a, n);
    let (mut diag, mut off) = tridiagonalize(a, n);
    ql_implicit(&mut diag, &mut off)?;
    diag.sort_by(|x, y| y.total_cmp(x));
    Ok(diag)
}

fn mirror_lower(a: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            a[j * n + i] = a[i * n + j].conj();
        }
        a[i * n + i].im = 0.0;
    }
}

/// Returns the diagonal and the (nonnegative) off-diagonal of a real
/// tridiagonal matrix unitarily similar to `a`. `off[i]` couples `i` and
/// `i + 1`; `off[n - 1]` is zero.
fn tridiagonalize(a: &mut [Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut off = vec![0.0; n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let x0 = a[lo * n + k];
        let tail_sq: f64 = (lo + 1..n).map(|i| a[i * n + k].norm_sqr()).sum();
        if tail_sq == 0.0 {
            // Already tridiagonal in this column; a complex entry is handled by
            // a diagonal phase similarity, which preserves its modulus.
            off[k] = x0.norm();
            continue;
        }
        let x0_abs = x0.norm();
        let alpha = (x0_abs * x0_abs + tail_sq).sqrt();
        let phase = if x0_abs == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0_abs
        };

        // v = x + phase * alpha * e1, so H x = -phase * alpha * e1.
        v[lo] = x0 + phase * alpha;
        for i in lo + 1..n {
            v[i] = a[i * n + k];
        }
        let tau = 1.0 / (alpha * (alpha + x0_abs));

        // p = tau * B v, with B the trailing block.
        for i in lo..n {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = &a[i * n + lo..i * n + n];
            for (aij, vj) in row.iter().zip(&v[lo..n]) {
                acc += aij * vj;
            }
            w[i] = acc * tau;
        }
        // K = (tau / 2) vᴴ p is real because B is Hermitian.
        let vhp: f64 = (lo..n).map(|i| (v[i].conj() * w[i]).re).sum();
        let kk = 0.5 * tau * vhp;
        for i in lo..n {
            w[i] -= v[i] * kk;
        }
        // B <- B - v wᴴ - w vᴴ
        for i in lo..n {
            let vi = v[i];
            let wi = w[i];
            let row = &mut a[i * n + lo..i * n + n];
            for ((aij, vj), wj) in row.iter_mut().zip(&v[lo..n]).zip(&w[lo..n]) {
                *aij -= vi * wj.conj() + wi * vj.conj();
            }
        }
        off[k] = alpha;
    }
    let diag = (0..n).map(|i| a[i * n + i].re).collect();
    (diag, off)
}

/// Implicit QL on a symmetric tridiagonal matrix; eigenvalues replace `d`.
fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<(), NoConvergence> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_SWEEPS_PER_EIGENVALUE {
                return Err(NoConvergence);
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
