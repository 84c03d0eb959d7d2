mod common;

use common::simpson;
use fblmimo_core::mc::CHUNK_TRIALS;
use fblmimo_core::{estimate, estimate_batch, AntennaConfig, Functional, McEstimate, McRun, Moments};
use proptest::prelude::*;

fn cfg(tx: usize, rx: usize) -> AntennaConfig {
    AntennaConfig::new(tx, rx).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn scalar_capacity_matches_exponential_quadrature() {
    // |h|² ~ Exp(1) for a single antenna pair.
    let f = |t: f64| (1.0 + t).log2() * (-t).exp();
    let oracle = simpson(&f, 0.0, 80.0, 1e-13);
    let est = estimate(
        Functional::Capacity,
        cfg(1, 1),
        1.0,
        &McRun::new(100_000, 99).with_workers(4),
    )
    .unwrap();
    assert!(
        (est.mean() - oracle).abs() < 3.0 * est.std_error(),
        "{} ± {} vs {oracle}",
        est.mean(),
        est.std_error()
    );
}

#[test]
fn halves_merge_into_full_run() {
    let c = cfg(3, 2);
    let rho = 4.0;
    let full = estimate(Functional::Dispersion, c, rho, &McRun::new(100_000, 5).with_workers(4)).unwrap();
    let a = estimate(Functional::Dispersion, c, rho, &McRun::new(50_000, 5).with_workers(4)).unwrap();
    let b = estimate(
        Functional::Dispersion,
        c,
        rho,
        &McRun::new(50_000, 5).starting_at(50_000).with_workers(4),
    )
    .unwrap();
    let merged = a.merge(&b).unwrap();
    assert_eq!(merged.trials(), full.trials());
    assert!(rel(merged.mean(), full.mean()) < 1e-12);
    assert!(rel(merged.variance(), full.variance()) < 1e-12);

    let swapped = b.merge(&a).unwrap();
    assert!(rel(swapped.mean(), merged.mean()) < 1e-12);
    assert!(rel(swapped.variance(), merged.variance()) < 1e-12);
}

#[test]
fn merge_refuses_other_seed() {
    let c = cfg(2, 2);
    let a = McEstimate::empty(Functional::Capacity, c, 1.0, 1);
    let b = McEstimate::empty(Functional::Capacity, c, 1.0, 2);
    assert!(a.merge(&b).is_err());
}

#[test]
fn replay_is_bit_identical() {
    let c = cfg(4, 6);
    let run = McRun::new(5_000, 42);
    let a = estimate(Functional::SqrtDispersion, c, 2.0, &run).unwrap();
    let b = estimate(Functional::SqrtDispersion, c, 2.0, &run).unwrap();
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_result() {
    let c = cfg(8, 4);
    let queries = [
        (Functional::Capacity, 3.0),
        (Functional::InvEigenSum, 3.0),
        (Functional::ShiftedInvSum, 10.0),
    ];
    let trials = 7 * CHUNK_TRIALS + 313;
    let one = estimate_batch(c, &queries, &McRun::new(trials, 8)).unwrap();
    for workers in [2, 3, 4, 7] {
        let many = estimate_batch(c, &queries, &McRun::new(trials, 8).with_workers(workers)).unwrap();
        assert_eq!(one, many, "workers={workers}");
    }
}

#[test]
fn batch_matches_single_estimates() {
    let c = cfg(5, 3);
    let run = McRun::new(3_000, 12);
    let batch = estimate_batch(c, &[(Functional::Capacity, 2.0), (Functional::Dispersion, 9.0)], &run).unwrap();
    assert_eq!(batch[0], estimate(Functional::Capacity, c, 2.0, &run).unwrap());
    assert_eq!(batch[1], estimate(Functional::Dispersion, c, 9.0, &run).unwrap());
}

#[test]
fn standard_error_shrinks_with_root_trials() {
    let c = cfg(4, 2);
    let small = estimate(Functional::Dispersion, c, 3.0, &McRun::new(1_000, 3)).unwrap();
    let large = estimate(Functional::Dispersion, c, 3.0, &McRun::new(100_000, 3).with_workers(4)).unwrap();
    let ratio = small.std_error() / large.std_error();
    assert!((7.0..=13.0).contains(&ratio), "ratio {ratio}");
    assert_eq!(large.std_error(), (large.variance() / large.trials() as f64).sqrt());
}

#[test]
fn square_inverse_targets_are_flagged() {
    let est = estimate(Functional::InvEigenSum, cfg(4, 4), 1.0, &McRun::new(2_000, 1)).unwrap();
    assert!(est.heavy_tailed());
    assert!(!est.is_valid());
    let ok = estimate(Functional::InvEigenSum, cfg(8, 4), 1.0, &McRun::new(2_000, 1)).unwrap();
    assert!(!ok.heavy_tailed() && ok.is_valid() && ok.rejection_rate() == 0.0);
}

#[test]
fn jensen_direction_holds() {
    let run = McRun::new(20_000, 4).with_workers(4);
    for (tx, rx) in [(8, 16), (16, 8), (4, 2)] {
        for rho in [1.0, 10.0] {
            let est = estimate_batch(
                cfg(tx, rx),
                &[(Functional::SqrtDispersion, rho), (Functional::Dispersion, rho)],
                &run,
            )
            .unwrap();
            assert!(est[0].mean() <= est[1].mean().sqrt() + 3.0 * est[0].std_error());
        }
    }
}

#[test]
fn dispersion_samples_lie_in_range() {
    let est = estimate(Functional::Dispersion, cfg(6, 3), 5.0, &McRun::new(2_000, 2)).unwrap();
    assert!(est.mean() >= 0.0 && est.mean() < 3.0);
    let second = estimate(
        Functional::DispersionSecondMoment,
        cfg(6, 3),
        5.0,
        &McRun::new(2_000, 2),
    )
    .unwrap();
    assert!(second.mean() >= est.mean().powi(2));
}

proptest! {
    #[test]
    fn moments_merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let whole: Moments = xs.iter().copied().collect();
        let left: Moments = xs[..split].iter().copied().collect();
        let right: Moments = xs[split..].iter().copied().collect();
        let merged = left.merge(&right);
        prop_assert_eq!(merged.count(), whole.count());
        prop_assert!((merged.mean() - whole.mean()).abs() <= 1e-9 * whole.mean().abs().max(1.0));
        prop_assert!((merged.m2() - whole.m2()).abs() <= 1e-9 * whole.m2().max(1.0));
        prop_assert_eq!(left.merge(&right), right.merge(&left));
    }

    #[test]
    fn streaming_second_moment_never_negative(xs in prop::collection::vec(-1e6f64..1e6, 1..300)) {
        let mut m = Moments::default();
        for x in xs {
            m.push(x);
            prop_assert!(m.m2() >= 0.0);
        }
    }
}
