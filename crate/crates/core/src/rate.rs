//! Finite-blocklength rates in bits per channel use.
//!
//! The normal approximation `R* ≈ C − √(V/n)·Q⁻¹(ε)` is used without its
//! `O(log n / n)` remainder, so `R*` is an approximation rather than a bound.

use std::fmt;

use crate::dispersion::DispersionStats;
use crate::error::{Error, Result};
use crate::randmat::{check_rho, AntennaConfig, EigenSample};
use crate::specfun::{q_inv, Probability};

/// SNR, target block error rate and blocklength of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    rho: f64,
    epsilon: Probability,
    n: u64,
}

impl LinkParams {
    pub fn new(rho: f64, epsilon: Probability, n: u64) -> Result<Self> {
        check_rho(rho)?;
        if n == 0 {
            return Err(Error::Domain("blocklength must be at least 1".into()));
        }
        Ok(Self { rho, epsilon, n })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn epsilon(&self) -> Probability {
        self.epsilon
    }

    pub fn blocklength(&self) -> u64 {
        self.n
    }
}

/// `C(H)`, `V(H)` and `R*(n, ε)` for one channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationMetrics {
    pub capacity: f64,
    pub dispersion: f64,
    pub rate_star: f64,
}

impl RealizationMetrics {
    pub fn evaluate(eigs: &EigenSample, cfg: AntennaConfig, link: &LinkParams) -> Self {
        let capacity = capacity_of(eigs, cfg, link.rho);
        let dispersion = dispersion_of(eigs, cfg, link.rho);
        Self {
            capacity,
            dispersion,
            rate_star: rate_star(capacity, dispersion, link),
        }
    }
}

/// `Σⱼ log₂(1 + ρλⱼ/M)`.
pub fn capacity_of(eigs: &EigenSample, cfg: AntennaConfig, rho: f64) -> f64 {
    let scale = rho / cfg.tx() as f64;
    eigs.lambdas().iter().map(|l| (scale * l).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// `m − Σⱼ 1/(1 + ρλⱼ/M)²`.
pub fn dispersion_of(eigs: &EigenSample, cfg: AntennaConfig, rho: f64) -> f64 {
    let scale = rho / cfg.tx() as f64;
    let loss: f64 = eigs
        .lambdas()
        .iter()
        .map(|l| {
            let g = 1.0 + scale * l;
            1.0 / (g * g)
        })
        .sum();
    cfg.dof() as f64 - loss
}

/// Normal approximation `C − √(V/n)·Q⁻¹(ε)`.
pub fn rate_star(capacity: f64, dispersion: f64, link: &LinkParams) -> f64 {
    capacity - (dispersion / link.n as f64).sqrt() * q_inv(link.epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMethod {
    NormalApprox,
    HighSnr,
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateMethod::NormalApprox => "normal-approx",
            RateMethod::HighSnr => "high-snr",
        })
    }
}

/// Average maximal achievable rate `R̄` and its per-DoF value `R̄/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub r_bar: f64,
    pub normalized: f64,
    pub method: RateMethod,
}

impl RateBound {
    fn new(r_bar: f64, dof: usize, method: RateMethod) -> Self {
        Self {
            r_bar,
            normalized: r_bar / dof as f64,
            method,
        }
    }
}

/// `E[C] − √(E[V]/n)·Q⁻¹(ε)`, with `E[C]` supplied by the caller (Monte-Carlo
/// or the high-SNR `m·log₂(1+ρ)`).
pub fn avg_rate_bound(cfg: AntennaConfig, link: &LinkParams, disp: &DispersionStats, cap_mean: f64) -> RateBound {
    let penalty = (disp.mean.max(0.0) / link.n as f64).sqrt() * q_inv(link.epsilon);
    RateBound::new(cap_mean - penalty, cfg.dof(), RateMethod::NormalApprox)
}

/// High-SNR bound `m·log₂(1+ρ) − √(m/n)·Q⁻¹(ε)`, using `E[V] ≈ m` and
/// `E[C] ≈ m·log₂(1+ρ)`.
pub fn highsnr_rate_bound(cfg: AntennaConfig, link: &LinkParams) -> RateBound {
    let m = cfg.dof() as f64;
    let r_bar = m * log2_1p(link.rho) - (m / link.n as f64).sqrt() * q_inv(link.epsilon);
    RateBound::new(r_bar, cfg.dof(), RateMethod::HighSnr)
}

/// `log₂(1 + ρ)`, the per-stream high-SNR capacity.
pub fn log2_1p(rho: f64) -> f64 {
    rho.ln_1p() / std::f64::consts::LN_2
}

/// Largest blocklength the solver reports (2⁵³, exact in `f64`).
const MAX_BLOCKLENGTH: f64 = 9_007_199_254_740_992.0;

/// Minimum blocklength meeting a target average rate at high SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocklength {
    /// Smallest integer number of channel uses, at least 1.
    pub n: u64,
    /// Real-valued threshold `m·Q⁻¹(ε)² / (m·log₂(1+ρ) − R̄)²`.
    pub n_real: f64,
}

/// Smallest `n` with `m·log₂(1+ρ) − √(m/n)·Q⁻¹(ε) ≥ r_bar`.
pub fn min_blocklength(dof: usize, rho: f64, epsilon: Probability, r_bar: f64) -> Result<Blocklength> {
    check_rho(rho)?;
    if dof == 0 {
        return Err(Error::Domain("spatial DoF must be at least 1".into()));
    }
    if epsilon.value() >= 0.5 {
        return Err(Error::Domain(format!(
            "blocklength solver needs epsilon < 0.5 so that the rate penalty is positive, got {epsilon}"
        )));
    }
    if !(r_bar > 0.0) || !r_bar.is_finite() {
        return Err(Error::Domain(format!("target rate must be positive, got {r_bar}")));
    }
    let m = dof as f64;
    let capacity = m * log2_1p(rho);
    if capacity <= r_bar {
        return Err(Error::InfeasibleRate {
            target: r_bar,
            capacity,
        });
    }
    let q = q_inv(epsilon);
    let gap = capacity - r_bar;
    let n_real = m * q * q / (gap * gap);
    if !(n_real < MAX_BLOCKLENGTH) {
        return Err(Error::Domain(format!(
            "target rate {r_bar} is so close to capacity {capacity} that the blocklength {n_real:e} is not representable"
        )));
    }
    let mut n = (n_real.ceil() as u64).max(1);
    // Guard against the ceiling landing one short through rounding.
    while m.sqrt() * q > gap * (n as f64).sqrt() {
        n += 1;
    }
    Ok(Blocklength { n, n_real })
}
