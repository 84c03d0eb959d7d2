use fblmimo_core::{
    db_to_linear, dispersion_mean, dispersion_mean_highsnr, dispersion_variance, estimate_batch, highsnr_bound_check,
    highsnr_correction, inv_eigen_sum_mean, variance_terms, AntennaConfig, EmendationParams, Error, Functional, McRun,
    Method, SquarePolicy,
};
use proptest::prelude::*;

fn cfg(tx: usize, rx: usize) -> AntennaConfig {
    AntennaConfig::new(tx, rx).unwrap()
}

fn within(mc: f64, se: f64, closed: f64) -> bool {
    (mc - closed).abs() <= (0.02 * closed.abs()).max(3.0 * se)
}

#[test]
fn inverse_eigen_sum_matches_monte_carlo() {
    let run = McRun::new(100_000, 17).with_workers(4);
    for (tx, rx) in [(8, 4), (4, 8), (10, 4)] {
        let c = cfg(tx, rx);
        let est = &estimate_batch(c, &[(Functional::InvEigenSum, 1.0)], &run).unwrap()[0];
        let closed = inv_eigen_sum_mean(c, SquarePolicy::Reject).unwrap();
        assert!(est.is_valid());
        assert!(
            within(est.mean(), est.std_error(), closed),
            "({tx},{rx}): mc {} ± {} vs {closed}",
            est.mean(),
            est.std_error()
        );
    }
}

#[test]
fn wishart_second_order_terms_match_monte_carlo() {
    let c = cfg(10, 4);
    let rho = db_to_linear(5.0);
    let run = McRun::new(100_000, 23).with_workers(4);
    let est = estimate_batch(
        c,
        &[(Functional::InvEigenSqSum, rho), (Functional::InvEigenCrossSum, rho)],
        &run,
    )
    .unwrap();
    let k = (10.0 / (2.0 * rho)).powi(2);
    let terms = variance_terms(c, rho, EmendationParams::calibrated(5.0).unwrap()).unwrap();
    assert!(
        within(k * est[0].mean(), k * est[0].std_error(), terms.g1),
        "G1 mc {}",
        k * est[0].mean()
    );
    assert!(
        within(k * est[1].mean(), k * est[1].std_error(), terms.g3),
        "G3 mc {}",
        k * est[1].mean()
    );
}

#[test]
fn square_mean_needs_opt_in() {
    let c = cfg(8, 8);
    assert!(matches!(
        dispersion_mean(c, 10.0, SquarePolicy::Reject),
        Err(Error::Validity(_))
    ));
    let flagged = dispersion_mean(c, 10.0, SquarePolicy::AddTransmitAntenna).unwrap();
    assert!(!flagged.is_valid());
    assert_eq!(
        inv_eigen_sum_mean(cfg(6, 6), SquarePolicy::AddTransmitAntenna).unwrap(),
        5.0
    );
}

#[test]
fn high_snr_mean_approaches_dof_from_below() {
    let c = cfg(8, 4);
    let mut prev = 0.0;
    for rho in [10.0, 1e2, 1e3, 1e4, 1e6] {
        let v = dispersion_mean(c, rho, SquarePolicy::Reject).unwrap().mean;
        assert!(v < 4.0 && v > prev);
        prev = v;
    }
    assert!(4.0 - prev < 1e-5);
}

#[test]
fn high_snr_forms_converge() {
    for (tx, rx) in [(8, 4), (4, 8), (16, 2), (12, 32)] {
        let c = cfg(tx, rx);
        let gap = |rho: f64| {
            let full = dispersion_mean(c, rho, SquarePolicy::Reject).unwrap().mean;
            let high = dispersion_mean_highsnr(c, rho).unwrap().mean;
            (full - high).abs()
        };
        let (g3, g6) = (gap(1e3), gap(1e6));
        assert!(g6 < g3 || g6 == 0.0, "({tx},{rx}): {g3} then {g6}");
        assert!(g6 < 1e-4, "({tx},{rx}): {g6}");
        assert_eq!(dispersion_mean_highsnr(c, 1e3).unwrap().method, Method::HighSnr);
    }
}

#[test]
fn correction_bound_holds_exhaustively() {
    let start = std::time::Instant::now();
    let report = highsnr_bound_check(128).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(report.passed && report.max_ratio < 13.0);
    assert_eq!(report.argmax, (4, 2));
    assert!((highsnr_correction(cfg(6, 3), 4.0).unwrap() - 216.0 / 24.0 / 16.0).abs() < 1e-15);
    assert!(highsnr_correction(cfg(6, 3), 4.0).unwrap() < 1.0);
}

#[test]
fn variance_small_relative_to_mean_at_calibration_point() {
    let c = cfg(10, 4);
    let rho = db_to_linear(5.0);
    let em = EmendationParams::calibrated(5.0).unwrap();
    match dispersion_variance(c, rho, em) {
        Ok(stats) => assert!(stats.variance.unwrap() < stats.mean, "{stats:?}"),
        Err(e) => panic!("closed-form variance unavailable at the calibration point: {e}"),
    }
}

proptest! {
    #[test]
    fn mean_nondecreasing_in_snr(tx in 1usize..64, rx in 1usize..64, db in -10.0f64..40.0, step in 0.01f64..5.0) {
        prop_assume!(tx != rx);
        let c = cfg(tx, rx);
        let lo = dispersion_mean(c, db_to_linear(db), SquarePolicy::Reject).unwrap().mean;
        let hi = dispersion_mean(c, db_to_linear(db + step), SquarePolicy::Reject).unwrap().mean;
        prop_assert!(hi >= lo - 1e-12 * lo.abs().max(1.0), "{} -> {}", lo, hi);
    }

    #[test]
    fn valid_means_lie_in_range(tx in 1usize..256, rx in 1usize..256, log_rho in -2.0f64..6.0) {
        prop_assume!(tx != rx);
        let c = cfg(tx, rx);
        let stats = dispersion_mean(c, 10f64.powf(log_rho), SquarePolicy::Reject).unwrap();
        if stats.is_valid() {
            prop_assert!(stats.mean >= 0.0 && stats.mean <= c.dof() as f64);
        } else {
            prop_assert!(stats.mean < 0.0 || stats.mean > c.dof() as f64);
        }
    }

    #[test]
    fn variance_terms_nonnegative(n in 1usize..32, extra in 2usize..64, log_rho in -1.0f64..4.0) {
        let c = cfg(n + extra, n);
        match variance_terms(c, 10f64.powf(log_rho), EmendationParams::new(1.3, 0.5).unwrap()) {
            Ok(t) => prop_assert!(t.g1 >= 0.0 && t.g2 >= 0.0 && t.g3 >= 0.0 && t.g4 >= 0.0),
            Err(e) => prop_assert!(matches!(e, Error::Validity(_))),
        }
    }

    #[test]
    fn near_square_configs_are_refused(n in 1usize..64, rho in 0.1f64..100.0) {
        prop_assert!(variance_terms(cfg(n + 1, n), rho, EmendationParams::new(1.0, 1.0).unwrap()).is_err());
        prop_assert!(dispersion_mean_highsnr(cfg(n + 1, n), rho).is_err());
    }
}
