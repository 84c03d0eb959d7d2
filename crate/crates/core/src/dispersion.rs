//! Closed-form statistics of the channel dispersion
//! `V(H) = m − Σⱼ 1/(1 + ρλⱼ/M)²`.
//!
//! The expectation combines Wishart inverse moments with the Marčenko–Pastur
//! shifted-inverse sum. The variance expands the second moment into four
//! terms `G1 − 2·G2 + G3 + G4`; `G1` and `G3` are exact Wishart moments,
//! `G2` and `G4` assume independent eigenvalues and are corrected by the
//! empirical emendation parameters `ψ` and `ξ`.

use std::fmt;

use crate::error::{Error, Result};
use crate::mc::{Functional, McEstimate};
use crate::randmat::{check_rho, mp_stieltjes_mean, AntennaConfig};

/// Emendation parameters are only published at these SNRs (dB).
const CALIBRATED: [(f64, f64, f64); 2] = [(5.0, 1.41, 0.5), (7.0, 1.29, 0.6)];

/// How closely an SNR must match a calibration point, in dB.
const CALIBRATION_TOLERANCE_DB: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    HighSnr,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed-form",
            Method::HighSnr => "high-snr",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

/// Whether a computed statistic satisfies the range invariants of `V(H)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Validity {
    Valid,
    Flagged(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validity::Valid => f.write_str("valid"),
            Validity::Flagged(reason) => write!(f, "invalid: {reason}"),
        }
    }
}

/// What to do with `M = N`, where `E{Σ 1/λ}` does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SquarePolicy {
    #[default]
    Reject,
    /// Pretend one extra transmit antenna and use `E{Σ 1/λ} ≈ M − 1`.
    AddTransmitAntenna,
}

/// Mean (and optionally variance) of `V(H)` together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionStats {
    pub mean: f64,
    pub variance: Option<f64>,
    pub method: Method,
    pub validity: Validity,
    pub terms: Option<VarianceTerms>,
}

impl DispersionStats {
    fn checked(cfg: AntennaConfig, mean: f64, method: Method, mut flags: Vec<String>) -> Self {
        let m = cfg.dof() as f64;
        if !(0.0..=m).contains(&mean) {
            flags.push(format!("mean {mean} lies outside [0, m={m}]"));
        }
        let validity = if flags.is_empty() {
            Validity::Valid
        } else {
            Validity::Flagged(flags.join("; "))
        };
        Self {
            mean,
            variance: None,
            method,
            validity,
            terms: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity.is_valid()
    }

    /// Mean and sample variance of a Monte-Carlo estimate of `V(H)`.
    pub fn from_estimate(est: &McEstimate) -> Result<Self> {
        if est.target != Functional::Dispersion {
            return Err(Error::Contract(format!(
                "expected a dispersion estimate, got {}",
                est.target
            )));
        }
        let validity = if est.is_valid() {
            Validity::Valid
        } else {
            Validity::Flagged(format!(
                "Monte-Carlo estimate unreliable ({} accepted trials, rejection rate {})",
                est.trials(),
                est.rejection_rate()
            ))
        };
        Ok(Self {
            mean: est.mean(),
            variance: Some(est.variance()),
            method: Method::MonteCarlo,
            validity,
            terms: None,
        })
    }
}

/// `E{Σᵢ 1/λᵢ}` for the Gram matrix of the smaller dimension.
pub fn inv_eigen_sum_mean(cfg: AntennaConfig, policy: SquarePolicy) -> Result<f64> {
    let (m, n) = (cfg.tx() as f64, cfg.rx() as f64);
    match cfg.tx().cmp(&cfg.rx()) {
        std::cmp::Ordering::Greater => Ok(n / (m - n)),
        std::cmp::Ordering::Less => Ok(m / (n - m)),
        std::cmp::Ordering::Equal => match policy {
            SquarePolicy::AddTransmitAntenna => Ok(m - 1.0),
            SquarePolicy::Reject => Err(square_error("the mean of the inverse-eigenvalue sum does not exist")),
        },
    }
}

fn square_error(what: &str) -> Error {
    Error::Validity(format!(
        "M = N: {what}; use Monte-Carlo or opt in to the extra-transmit-antenna convention"
    ))
}

/// Refined closed form for `E[V(H)]`, accurate at any array size.
///
/// For `M = N` the expression is singular; with
/// [`SquarePolicy::AddTransmitAntenna`] the first-order route of
/// [`dispersion_mean_first_order`] is used instead and the result is flagged.
pub fn dispersion_mean(cfg: AntennaConfig, rho: f64, policy: SquarePolicy) -> Result<DispersionStats> {
    check_rho(rho)?;
    if cfg.is_square() {
        if policy == SquarePolicy::Reject {
            return Err(square_error(
                "the refined closed-form dispersion mean has M − N in a denominator",
            ));
        }
        return dispersion_mean_first_order(cfg, rho, policy);
    }
    let (m, n) = (cfg.tx() as f64, cfg.rx() as f64);
    let cross = (8.0 * rho).sqrt() * n * m;
    let mean = if cfg.rx() > cfg.tx() {
        let root = (rho * n * n - rho * m * n + 2.0 * m * n).hypot(cross);
        let bracket = rho * (n * m - n * n) / (4.0 * m * m) - n / (2.0 * m) + root / (4.0 * m * m);
        m - m * m / (2.0 * rho * (n - m)) + m * m / (2.0 * rho * n) * bracket
    } else {
        let root = (rho * m * m - rho * m * n + 2.0 * m * n).hypot(cross);
        let bracket = rho * (n * m - m * m) / (4.0 * n * n) - m / (2.0 * n) + root / (4.0 * n * n);
        n - m * n / (2.0 * rho * (m - n)) + n / (2.0 * rho) * bracket
    };
    Ok(DispersionStats::checked(cfg, mean, Method::ClosedForm, Vec::new()))
}

/// First-order expectation obtained by dropping the `1` from
/// `1 + 2ρλ/M + (ρλ/M)²`:
///
/// `E[V] ≈ m − (M/2ρ)·E{Σ 1/λ} + (M/2ρ)·E{Σ 1/(2M/ρ + λ)}`.
pub fn dispersion_mean_first_order(cfg: AntennaConfig, rho: f64, policy: SquarePolicy) -> Result<DispersionStats> {
    check_rho(rho)?;
    let inv_sum = inv_eigen_sum_mean(cfg, policy)?;
    let shifted = mp_stieltjes_mean(cfg, rho)?;
    let k = cfg.tx() as f64 / (2.0 * rho);
    let mean = cfg.dof() as f64 - k * inv_sum + k * shifted;
    let mut flags = Vec::new();
    if cfg.is_square() {
        flags.push("M = N: inverse-eigenvalue mean replaced by M − 1 (extra transmit antenna); may go negative".into());
    }
    Ok(DispersionStats::checked(cfg, mean, Method::ClosedForm, flags))
}

/// High-SNR expectation `m − (M²/ρ²)·NM/((M−N)³ − (M−N))`.
pub fn dispersion_mean_highsnr(cfg: AntennaConfig, rho: f64) -> Result<DispersionStats> {
    check_rho(rho)?;
    let gap = cfg.tx() as f64 - cfg.rx() as f64;
    if gap.abs() < 2.0 {
        return Err(Error::Validity(format!(
            "high-SNR dispersion mean needs |M − N| >= 2 ((M−N)³ − (M−N) vanishes), got {cfg}"
        )));
    }
    let (m, n) = (cfg.tx() as f64, cfg.rx() as f64);
    let mean = cfg.dof() as f64 - (m * m) / (rho * rho) * (n * m) / (gap.powi(3) - gap);
    Ok(DispersionStats::checked(cfg, mean, Method::HighSnr, Vec::new()))
}

/// The relative high-SNR correction `(1/ρ²)·M³/((M−m)³ − (M−m))`, which must
/// stay below 1 for the high-SNR mean to be meaningful. Requires `M > N + 1`.
pub fn highsnr_correction(cfg: AntennaConfig, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if cfg.tx() < cfg.rx() + 2 {
        return Err(Error::Validity(format!(
            "high-SNR correction needs M > N + 1, got {cfg}"
        )));
    }
    Ok(ratio_g6(cfg.tx(), cfg.dof()) / (rho * rho))
}

fn ratio_g6(tx: usize, dof: usize) -> f64 {
    let d = (tx - dof) as f64;
    (tx as f64).powi(3) / (d.powi(3) - d)
}

/// Empirical corrections for the independence assumption in `G2` and `G4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmendationParams {
    pub psi: f64,
    pub xi: f64,
    /// SNR in dB at which the values were calibrated, when known.
    pub snr_db_anchor: Option<f64>,
}

impl EmendationParams {
    pub fn new(psi: f64, xi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite() && xi > 0.0 && xi.is_finite()) {
            return Err(Error::Domain(format!(
                "emendation parameters must be positive, got psi={psi} xi={xi}"
            )));
        }
        Ok(Self {
            psi,
            xi,
            snr_db_anchor: None,
        })
    }

    /// Published values at 5 dB and 7 dB; `None` anywhere else.
    pub fn calibrated(snr_db: f64) -> Option<Self> {
        CALIBRATED
            .iter()
            .find(|(db, _, _)| (db - snr_db).abs() <= CALIBRATION_TOLERANCE_DB)
            .map(|&(db, psi, xi)| Self {
                psi,
                xi,
                snr_db_anchor: Some(db),
            })
    }

    pub fn calibrated_for_linear(rho: f64) -> Option<Self> {
        Self::calibrated(10.0 * rho.log10())
    }
}

/// The four terms of the second-moment expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceTerms {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl VarianceTerms {
    /// `G1 − 2·G2 + G3 + G4`.
    pub fn second_moment(&self) -> f64 {
        self.g1 - 2.0 * self.g2 + self.g3 + self.g4
    }
}

/// Evaluates `G1..G4`. Valid only for `M > N + 1`.
pub fn variance_terms(cfg: AntennaConfig, rho: f64, em: EmendationParams) -> Result<VarianceTerms> {
    check_rho(rho)?;
    if cfg.tx() < cfg.rx() + 2 {
        return Err(Error::Validity(format!(
            "closed-form dispersion variance needs M > N + 1 (Wishart inverse moments), got {cfg}; use Monte-Carlo"
        )));
    }
    let (m, n) = (cfg.tx() as f64, cfg.rx() as f64);
    let gap = m - n;
    let k = (m / (2.0 * rho)).powi(2);

    let g1 = k * m * n / (gap.powi(3) - gap);
    let g3 = k * n * (n - 1.0) / (gap * (gap + 1.0));

    let root = (gap + 2.0 * n / rho).hypot((8.0 * n * n / rho).sqrt());
    let zeta = 1.0 / (em.psi * n);
    let g2 = zeta * k * n * n / gap * ((n - m) / (4.0 * rho * n) - 0.5 + rho * root / (4.0 * n));
    let g4 = em.xi * (m * (n - m) / (8.0 * n) - m / (4.0 * rho) + m * root / (8.0 * n)).powi(2);

    if !(g2 >= 0.0) {
        return Err(Error::Validity(format!(
            "closed-form G2 = {g2} is negative at rho={rho} for {cfg}; the independence approximation does not hold here"
        )));
    }
    Ok(VarianceTerms { g1, g2, g3, g4 })
}

/// Closed-form variance of `V(H)`: the assembled second moment of
/// `Σ 1/(1 + ρλ/M)²` minus the square of its mean `m − E[V]`.
pub fn dispersion_variance(cfg: AntennaConfig, rho: f64, em: EmendationParams) -> Result<DispersionStats> {
    let terms = variance_terms(cfg, rho, em)?;
    let second = terms.second_moment();
    if !(second >= 0.0) {
        return Err(Error::Validity(format!(
            "assembled second moment G1 − 2·G2 + G3 + G4 = {second} is negative \
             (G1={}, G2={}, G3={}, G4={}); emendation parameters psi={}, xi={} do not apply at rho={rho}",
            terms.g1, terms.g2, terms.g3, terms.g4, em.psi, em.xi
        )));
    }
    let mean_stats = dispersion_mean(cfg, rho, SquarePolicy::Reject)?;
    let mean_loss = cfg.dof() as f64 - mean_stats.mean;
    let variance = second - mean_loss * mean_loss;
    if !(variance >= 0.0) {
        return Err(Error::Validity(format!(
            "assembled variance {variance} is negative (second moment {second}, squared mean {}); \
             emendation parameters psi={}, xi={} do not apply at rho={rho}",
            mean_loss * mean_loss,
            em.psi,
            em.xi
        )));
    }
    Ok(DispersionStats {
        variance: Some(variance),
        terms: Some(terms),
        ..mean_stats
    })
}

/// Result of the exhaustive check that the high-SNR correction ratio stays
/// below 13 for even `M` and `1 ≤ m ≤ M/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub passed: bool,
    pub max_ratio: f64,
    /// `(M, m)` attaining the maximum.
    pub argmax: (usize, usize),
    pub checked: usize,
}

pub const HIGHSNR_RATIO_BOUND: f64 = 13.0;

pub fn highsnr_bound_check(max_tx: usize) -> Result<BoundReport> {
    if max_tx < 4 || !max_tx.is_multiple_of(2) {
        return Err(Error::Domain(format!("M_max must be even and >= 4, got {max_tx}")));
    }
    let mut report = BoundReport {
        passed: true,
        max_ratio: 0.0,
        argmax: (0, 0),
        checked: 0,
    };
    for tx in (4..=max_tx).step_by(2) {
        for dof in 1..=tx / 2 {
            let d = (tx - dof) as f64;
            if d.powi(3) - d <= 0.0 {
                continue;
            }
            let ratio = ratio_g6(tx, dof);
            report.checked += 1;
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.argmax = (tx, dof);
            }
        }
    }
    report.passed = report.max_ratio < HIGHSNR_RATIO_BOUND;
    Ok(report)
}
