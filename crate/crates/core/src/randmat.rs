//! Rayleigh channel sampling, Wishart eigenvalues, and the Marčenko–Pastur
//! closed forms for shifted inverse-eigenvalue sums.

use std::fmt;

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result, StreamId};
use crate::hermitian::eigenvalues_hermitian;
use crate::stream::TrialStream;

/// Relative threshold below which a negative eigenvalue is treated as
/// round-off and clamped to zero.
pub const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;

/// Transmit/receive antenna counts of a point-to-point MIMO link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AntennaConfig {
    tx: usize,
    rx: usize,
}

impl AntennaConfig {
    pub fn new(tx: usize, rx: usize) -> Result<Self> {
        if tx == 0 || rx == 0 {
            return Err(Error::Domain(format!(
                "antenna counts must be positive, got M={tx} N={rx}"
            )));
        }
        Ok(Self { tx, rx })
    }

    /// Number of transmit antennas `M`.
    pub fn tx(&self) -> usize {
        self.tx
    }

    /// Number of receive antennas `N`.
    pub fn rx(&self) -> usize {
        self.rx
    }

    /// Spatial degrees of freedom `m = min(M, N)`.
    pub fn dof(&self) -> usize {
        self.tx.min(self.rx)
    }

    pub fn is_square(&self) -> bool {
        self.tx == self.rx
    }
}

impl fmt::Display for AntennaConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={} N={}", self.tx, self.rx)
    }
}

/// An `N×M` channel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    rx: usize,
    tx: usize,
    entries: Vec<Complex64>,
    lineage: StreamId,
}

impl ChannelDraw {
    /// Builds a draw from explicit entries (row-major, `rx` rows of `tx`).
    pub fn from_entries(rx: usize, tx: usize, entries: Vec<Complex64>, lineage: StreamId) -> Result<Self> {
        if rx == 0 || tx == 0 || entries.len() != rx * tx {
            return Err(Error::Domain(format!(
                "channel needs {rx}x{tx} = {} entries, got {}",
                rx * tx,
                entries.len()
            )));
        }
        Ok(Self {
            rx,
            tx,
            entries,
            lineage,
        })
    }

    pub fn config(&self) -> AntennaConfig {
        AntennaConfig {
            tx: self.tx,
            rx: self.rx,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.tx + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn lineage(&self) -> StreamId {
        self.lineage
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Gram matrix of the smaller dimension: `HHᴴ` (N×N) when `M ≥ N`,
    /// otherwise `HᴴH` (M×M). Lower triangle only; row-major.
    pub fn gram_lower(&self) -> (Vec<Complex64>, usize) {
        let (rx, tx) = (self.rx, self.tx);
        let h = &self.entries;
        if tx >= rx {
            let m = rx;
            let mut g = vec![Complex64::new(0.0, 0.0); m * m];
            for i in 0..m {
                let hi = &h[i * tx..(i + 1) * tx];
                for j in 0..=i {
                    let hj = &h[j * tx..(j + 1) * tx];
                    g[i * m + j] = hi.iter().zip(hj).map(|(a, b)| a * b.conj()).sum();
                }
            }
            (g, m)
        } else {
            let m = tx;
            let mut g = vec![Complex64::new(0.0, 0.0); m * m];
            for row in h.chunks_exact(tx) {
                for i in 0..m {
                    let ci = row[i].conj();
                    for j in 0..=i {
                        g[i * m + j] += ci * row[j];
                    }
                }
            }
            (g, m)
        }
    }
}

/// The `m` eigenvalues of the smaller Gram matrix, descending and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSample {
    lambdas: Vec<f64>,
}

impl EigenSample {
    /// Wraps explicit eigenvalues. They are sorted descending; negatives are
    /// rejected.
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Domain("eigenvalues must be finite and nonnegative".into()));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.lambdas.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// Draws an `N×M` matrix of i.i.d. CN(0, 1) entries from `stream`.
pub fn sample_channel(cfg: AntennaConfig, stream: &mut TrialStream) -> ChannelDraw {
    let entries = (0..cfg.rx * cfg.tx)
        .map(|_| {
            let re = stream.normal();
            let im = stream.normal();
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect();
    ChannelDraw {
        rx: cfg.rx,
        tx: cfg.tx,
        entries,
        lineage: stream.id(),
    }
}

/// Eigenvalues of the `m×m` Gram matrix of `h`.
///
/// Round-off negatives above `-1e-10·λ_max` are clamped to zero; anything
/// more negative is reported as an error carrying the draw's lineage.
pub fn gram_eigenvalues(h: &ChannelDraw) -> Result<EigenSample> {
    let (mut g, m) = h.gram_lower();
    let mut lambdas = eigenvalues_hermitian(&mut g, m).map_err(|_| Error::NoConvergence { lineage: h.lineage })?;
    let lambda_max = lambdas.first().copied().unwrap_or(0.0).max(0.0);
    for l in lambdas.iter_mut() {
        if *l < 0.0 {
            if *l < -NEGATIVE_EIGEN_TOLERANCE * lambda_max {
                return Err(Error::NegativeEigenvalue {
                    value: *l,
                    lambda_max,
                    lineage: h.lineage,
                });
            }
            *l = 0.0;
        }
    }
    Ok(EigenSample { lambdas })
}

/// Parameters of the scaled Marčenko–Pastur transform used for a given link.
///
/// For `N > M` the transform is taken at ratio `c = N/M` with scale
/// `a = c/M` and an outer factor `c`; for `N ≤ M` at `c' = M/N`,
/// `a' = c'/M`, outer factor 1. In both cases `z = -2M/ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParams {
    pub c: f64,
    pub a: f64,
    pub z: f64,
    pub outer: f64,
}

impl MpParams {
    pub fn for_link(cfg: AntennaConfig, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (m, n) = (cfg.tx as f64, cfg.rx as f64);
        let z = -2.0 * m / rho;
        Ok(if cfg.rx > cfg.tx {
            let c = n / m;
            Self {
                c,
                a: c / m,
                z,
                outer: c,
            }
        } else {
            let c = m / n;
            Self {
                c,
                a: c / m,
                z,
                outer: 1.0,
            }
        })
    }

    /// Evaluates `outer · μ(c, a·z)`.
    pub fn evaluate(&self) -> Result<f64> {
        Ok(self.outer * mp_stieltjes_raw(self.c, self.a * self.z)?)
    }
}

/// Stieltjes transform of the Marčenko–Pastur law with ratio `c`, evaluated
/// at a negative real argument:
///
/// `μ(z) = (1−c)/(2cz) − 1/(2c) − √((1−c−z)² − 4cz)/(2cz)`.
pub fn mp_stieltjes_raw(c: f64, z: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("aspect ratio must be positive, got c={c}")));
    }
    if !(z < 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "Stieltjes argument must be negative (branch cut at z >= 0), got z={z}"
        )));
    }
    let root = (1.0 - c - z).hypot(2.0 * (-c * z).sqrt());
    let two_cz = 2.0 * c * z;
    Ok((1.0 - c) / two_cz - 1.0 / (2.0 * c) - root / two_cz)
}

/// Closed-form large-array value of `E{Σᵢ 1/(2M/ρ + λᵢ)}`.
///
/// Uses the `N > M` expression when there are more receive antennas and the
/// `N ≤ M` expression otherwise. The square case reduces to `(√(1+2ρ) − 1)/2`.
pub fn mp_stieltjes_mean(cfg: AntennaConfig, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let (m, n) = (cfg.tx as f64, cfg.rx as f64);
    let cross = (8.0 * rho).sqrt() * n * m;
    Ok(if cfg.rx > cfg.tx {
        let root = (rho * m * m - rho * m * n + 2.0 * m * n).hypot(cross);
        n / m * (rho * (n * m - m * m) / (4.0 * n * n) - m / (2.0 * n) + root / (4.0 * n * n))
    } else {
        let root = (rho * n * n - rho * m * n + 2.0 * m * n).hypot(cross);
        rho * (n * m - n * n) / (4.0 * m * m) - n / (2.0 * m) + root / (4.0 * m * m)
    })
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("SNR must be positive and finite, got rho={rho}")))
    }
}
