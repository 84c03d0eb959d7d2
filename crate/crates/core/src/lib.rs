//! Finite-blocklength rate analysis for i.i.d. Rayleigh-fading MIMO links.
//!
//! The crate evaluates closed-form statistics of the channel dispersion
//! `V(H)` (expectation, variance, high-SNR limits), the resulting average
//! maximal-achievable-rate bounds, and the blocklength needed to reach a target
//! rate for a given number of spatial degrees of freedom. A seeded Monte-Carlo
//! estimator over complex Wishart eigenvalues serves as the reference against
//! which every closed form is checked.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod hermitian;
pub mod mc;
pub mod randmat;
pub mod rate;
pub mod specfun;
pub mod stream;

pub use dispersion::{
    dispersion_mean, dispersion_mean_first_order, dispersion_mean_highsnr, dispersion_variance, highsnr_bound_check,
    highsnr_correction, inv_eigen_sum_mean, variance_terms, BoundReport, DispersionStats, EmendationParams, Method,
    SquarePolicy, Validity, VarianceTerms,
};
pub use error::{Error, Result, StreamId};
pub use mc::{estimate, estimate_batch, Functional, McEstimate, McRun, Moments};
pub use randmat::{
    gram_eigenvalues, mp_stieltjes_mean, mp_stieltjes_raw, sample_channel, AntennaConfig, ChannelDraw, EigenSample,
    MpParams,
};
pub use rate::{
    avg_rate_bound, capacity_of, dispersion_of, highsnr_rate_bound, log2_1p, min_blocklength, rate_star, Blocklength,
    LinkParams, RateBound, RateMethod, RealizationMetrics,
};
pub use specfun::{q_func, q_inv, q_inv_f64, Probability};
pub use stream::TrialStream;

/// Converts an SNR in dB to the linear ratio `ρ`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(rho: f64) -> f64 {
    10.0 * rho.log10()
}
