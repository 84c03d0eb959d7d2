//! Seeded Monte-Carlo estimation of channel functionals.
//!
//! Trials are grouped into fixed-size chunks. Each chunk accumulates running
//! moments over its own per-trial substreams and the chunk results are merged
//! in chunk order, so the output is bit-identical for any worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::randmat::{check_rho, gram_eigenvalues, sample_channel, AntennaConfig, EigenSample};
use crate::rate::{capacity_of, dispersion_of};
use crate::stream::StreamFactory;

/// Trials per chunk. Part of the reproducibility contract: changing it changes
/// the floating-point merge order.
pub const CHUNK_TRIALS: u64 = 1024;

/// Draws whose smallest eigenvalue falls below this fraction of the largest
/// are rejected for inverse-eigenvalue functionals.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Estimates with a higher rejection rate are flagged invalid.
pub const MAX_REJECTION_RATE: f64 = 0.01;

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Per-draw quantity whose expectation is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    /// `C(H)` in bits per channel use.
    Capacity,
    /// `V(H)`.
    Dispersion,
    /// `√V(H)`.
    SqrtDispersion,
    /// `Σ 1/λᵢ`.
    InvEigenSum,
    /// `Σ 1/(2M/ρ + λᵢ)`.
    ShiftedInvSum,
    /// `Σ 1/λᵢ²`.
    InvEigenSqSum,
    /// `Σ_{i≠j} 1/(λᵢλⱼ)`.
    InvEigenCrossSum,
    /// `V(H)²`.
    DispersionSecondMoment,
}

impl Functional {
    pub const ALL: [Functional; 8] = [
        Functional::Capacity,
        Functional::Dispersion,
        Functional::SqrtDispersion,
        Functional::InvEigenSum,
        Functional::ShiftedInvSum,
        Functional::InvEigenSqSum,
        Functional::InvEigenCrossSum,
        Functional::DispersionSecondMoment,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Functional::Capacity => "capacity",
            Functional::Dispersion => "dispersion",
            Functional::SqrtDispersion => "sqrt-dispersion",
            Functional::InvEigenSum => "inv-eigen-sum",
            Functional::ShiftedInvSum => "shifted-inv-sum",
            Functional::InvEigenSqSum => "inv-eigen-sq-sum",
            Functional::InvEigenCrossSum => "inv-eigen-cross-sum",
            Functional::DispersionSecondMoment => "dispersion-second-moment",
        }
    }

    /// Whether the functional involves `1/λ` and so is undefined for singular draws.
    pub fn needs_inverse(self) -> bool {
        matches!(
            self,
            Functional::InvEigenSum | Functional::InvEigenSqSum | Functional::InvEigenCrossSum
        )
    }

    /// Value for one draw, or `None` when the draw must be rejected.
    pub fn evaluate(self, eigs: &EigenSample, cfg: AntennaConfig, rho: f64) -> Option<f64> {
        if self.needs_inverse() && !(eigs.min() >= SINGULAR_THRESHOLD * eigs.max() && eigs.min() > 0.0) {
            return None;
        }
        let lambdas = eigs.lambdas();
        Some(match self {
            Functional::Capacity => capacity_of(eigs, cfg, rho),
            Functional::Dispersion => dispersion_of(eigs, cfg, rho),
            Functional::SqrtDispersion => dispersion_of(eigs, cfg, rho).max(0.0).sqrt(),
            Functional::DispersionSecondMoment => dispersion_of(eigs, cfg, rho).powi(2),
            Functional::InvEigenSum => lambdas.iter().map(|l| 1.0 / l).sum(),
            Functional::InvEigenSqSum => lambdas.iter().map(|l| 1.0 / (l * l)).sum(),
            Functional::InvEigenCrossSum => {
                let s1: f64 = lambdas.iter().map(|l| 1.0 / l).sum();
                let s2: f64 = lambdas.iter().map(|l| 1.0 / (l * l)).sum();
                s1 * s1 - s2
            }
            Functional::ShiftedInvSum => {
                let shift = 2.0 * cfg.tx() as f64 / rho;
                lambdas.iter().map(|l| 1.0 / (shift + l)).sum()
            }
        })
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::Domain(format!("unknown Monte-Carlo target '{s}'")))
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pairwise combination. Bitwise symmetric in its arguments.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: (na * self.mean + nb * other.mean) / n,
            m2: (self.m2 + other.m2) + delta * delta * (na * nb) / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

/// Monte-Carlo estimate of one functional for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub target: Functional,
    pub cfg: AntennaConfig,
    pub rho: f64,
    pub seed: u64,
    pub moments: Moments,
    /// Draws rejected as numerically singular.
    pub rejected: u64,
}

impl McEstimate {
    /// Zero-trial estimate; the identity for [`McEstimate::merge`].
    pub fn empty(target: Functional, cfg: AntennaConfig, rho: f64, seed: u64) -> Self {
        Self {
            target,
            cfg,
            rho,
            seed,
            moments: Moments::default(),
            rejected: 0,
        }
    }

    /// Accepted trials.
    pub fn trials(&self) -> u64 {
        self.moments.count
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean
    }

    pub fn variance(&self) -> f64 {
        self.moments.variance()
    }

    pub fn std_error(&self) -> f64 {
        if self.trials() == 0 {
            return 0.0;
        }
        (self.variance() / self.trials() as f64).sqrt()
    }

    pub fn rejection_rate(&self) -> f64 {
        let total = self.trials() + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.rejected as f64 / total as f64
        }
    }

    /// Inverse-eigenvalue sums of square channels have no finite mean.
    pub fn heavy_tailed(&self) -> bool {
        self.target.needs_inverse() && self.cfg.is_square()
    }

    pub fn is_valid(&self) -> bool {
        self.trials() >= 2 && self.rejection_rate() <= MAX_REJECTION_RATE && !self.heavy_tailed()
    }

    pub fn merge(&self, other: &McEstimate) -> Result<McEstimate> {
        if self.target != other.target
            || self.cfg != other.cfg
            || self.rho.to_bits() != other.rho.to_bits()
            || self.seed != other.seed
        {
            return Err(Error::Contract(format!(
                "cannot merge {} ({}, rho={}, seed={}) with {} ({}, rho={}, seed={})",
                self.target, self.cfg, self.rho, self.seed, other.target, other.cfg, other.rho, other.seed
            )));
        }
        Ok(McEstimate {
            moments: self.moments.merge(&other.moments),
            rejected: self.rejected + other.rejected,
            ..self.clone()
        })
    }
}

/// Trial count, master seed and worker threads for a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McRun {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    /// Index of the first trial; a run covers `first_trial..first_trial + trials`.
    pub first_trial: u64,
}

impl McRun {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            workers: 1,
            first_trial: 0,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self {
            workers: workers.max(1),
            ..self
        }
    }

    /// Continues the stream family of `seed` at trial `first_trial`, so that
    /// disjoint runs can be merged into one larger estimate.
    pub fn starting_at(self, first_trial: u64) -> Self {
        Self { first_trial, ..self }
    }
}

/// Estimates `E[target]` for the link `(cfg, rho)`.
pub fn estimate(target: Functional, cfg: AntennaConfig, rho: f64, run: &McRun) -> Result<McEstimate> {
    let mut out = estimate_batch(cfg, &[(target, rho)], run)?;
    Ok(out.remove(0))
}

/// Estimates several `(functional, ρ)` pairs over one shared set of channel
/// draws. The estimates are therefore correlated with each other.
pub fn estimate_batch(cfg: AntennaConfig, queries: &[(Functional, f64)], run: &McRun) -> Result<Vec<McEstimate>> {
    if run.trials < 2 {
        return Err(Error::Domain(format!(
            "Monte-Carlo needs at least 2 trials, got {}",
            run.trials
        )));
    }
    if run.first_trial.checked_add(run.trials).is_none() {
        return Err(Error::Domain("trial range overflows the stream index".into()));
    }
    for &(_, rho) in queries {
        check_rho(rho)?;
    }
    let factory = StreamFactory::new(run.seed);
    let chunks = run.trials.div_ceil(CHUNK_TRIALS);
    let work = |chunk: u64| -> Result<Vec<(Moments, u64)>> {
        let start = run.first_trial + chunk * CHUNK_TRIALS;
        let end = (start + CHUNK_TRIALS).min(run.first_trial + run.trials);
        let mut acc = vec![(Moments::default(), 0u64); queries.len()];
        for trial in start..end {
            let mut stream = factory.stream(trial);
            let draw = sample_channel(cfg, &mut stream);
            let eigs = gram_eigenvalues(&draw)?;
            for ((target, rho), (moments, rejected)) in queries.iter().zip(acc.iter_mut()) {
                match target.evaluate(&eigs, cfg, *rho) {
                    Some(x) => moments.push(x),
                    None => *rejected += 1,
                }
            }
        }
        Ok(acc)
    };

    let partials: Vec<Vec<(Moments, u64)>> = if run.workers <= 1 {
        (0..chunks).map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(run.workers)
            .build()
            .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(work).collect::<Result<_>>())?
    };

    let mut out: Vec<McEstimate> = queries
        .iter()
        .map(|&(target, rho)| McEstimate::empty(target, cfg, rho, run.seed))
        .collect();
    for chunk in &partials {
        for (est, (moments, rejected)) in out.iter_mut().zip(chunk) {
            est.moments = est.moments.merge(moments);
            est.rejected += rejected;
        }
    }
    Ok(out)
}
