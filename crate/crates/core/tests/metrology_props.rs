use proptest::prelude::*;
use qchan::channels::{bitflip, tensor_power, ChannelFamily};
use qchan::linalg::{trace_norm, ComplexMatrix, C64};
use qchan::metrology::{
    ball_volume, chebyshev_bound_check, continuity_check, estimation_experiment, exact_distribution, inaccuracy,
    mse_matrix, mutual_info_lower_bounds, EstimatorDistribution, ExperimentOptions, ProductStrategy,
};
use qchan::protocol::exact_error_pauli;
use qchan::sampling::{rng_for, DEFAULT_SEED};
use rand::Rng;

fn unit_ball_fraction(v: usize, samples: usize) -> f64 {
    let mut rng = rng_for(7, v as u64);
    let inside = (0..samples)
        .filter(|_| (0..v).map(|_| rng.random_range(-1.0f64..1.0).powi(2)).sum::<f64>() <= 1.0)
        .count();
    inside as f64 / samples as f64 * 2f64.powi(v as i32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binomial_mse_is_exact(p in 0.05f64..0.95, n in 1u64..=16) {
        let fam = bitflip(0.0, 1.0).unwrap();
        let d = exact_distribution(&fam, &ProductStrategy::bitflip_z(), &[p], n).unwrap();
        prop_assert!((d.mse() - p * (1.0 - p) / n as f64).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_on_two_point_laws(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.0f64..=1.0, p in 0.01f64..0.99) {
        let d = EstimatorDistribution::discrete(vec![0.0], vec![vec![a], vec![b]], vec![w, 1.0 - w]).unwrap();
        prop_assert!(chebyshev_bound_check(&d, p).unwrap().ok);
    }

    #[test]
    fn relaxed_bound_is_weaker(p in 0.05f64..0.99, logd in -4.0f64..-0.5, v in 1usize..4, logvol in -1.0f64..1.0) {
        let vol = 10f64.powf(logvol);
        let b = mutual_info_lower_bounds(vol.log2(), p, 10f64.powf(logd), v, vol).unwrap();
        if b.condition_ok {
            prop_assert!(b.bound2 <= b.bound1 + 1e-12);
        }
    }
}

#[test]
fn dense_and_enumerated_mse_agree() {
    // n = 3 Z-basis measurement on |000⟩ with frequency estimates, two routes
    let fam = bitflip(0.0, 1.0).unwrap();
    let n = 3;
    let dim = 1usize << n;
    let mut probe = vec![C64::new(0.0, 0.0); dim];
    probe[0] = C64::new(1.0, 0.0);
    let povm: Vec<(ComplexMatrix, Vec<f64>)> = (0..dim)
        .map(|s| {
            let mut diag = vec![0.0; dim];
            diag[s] = 1.0;
            (ComplexMatrix::from_real_diag(&diag), vec![s.count_ones() as f64 / n as f64])
        })
        .collect();
    let dense = mse_matrix(&probe, &fam, &[0.3], &povm, n).unwrap();
    let enumerated = exact_distribution(&fam, &ProductStrategy::bitflip_z(), &[0.3], n as u64).unwrap().mse();
    assert!((dense.trace - enumerated).abs() < 1e-14);
    assert!((dense.trace - 0.07).abs() < 1e-14);
}

#[test]
fn constant_estimator_mse() {
    let fam = bitflip(0.2, 0.8).unwrap();
    let strategy = ProductStrategy::constant(&fam, vec![0.5]);
    let opts = ExperimentOptions { trials: 200, ..Default::default() };
    for n in [4, 100] {
        let r = estimation_experiment(&fam, &strategy, &[0.3], n, &opts).unwrap();
        assert_eq!(r.mse_empirical, (0.5f64 - 0.3).powi(2));
    }
}

#[test]
fn uniform_segment_inaccuracy() {
    // fine midpoint discretization of the uniform law on [t−δ, t+δ]
    let (t, delta, m) = (0.4, 0.2, 200_000);
    let pts: Vec<Vec<f64>> = (0..m).map(|k| vec![t - delta + (k as f64 + 0.5) * 2.0 * delta / m as f64]).collect();
    let d = EstimatorDistribution::discrete(vec![t], pts, vec![1.0 / m as f64; m]).unwrap();
    for p in [0.1, 0.5, 0.9] {
        assert!((inaccuracy(p, &d).unwrap() - p * delta).abs() < 1e-5);
    }
}

#[test]
fn point_mass_checks() {
    let d = EstimatorDistribution::point_mass(vec![0.3, 0.1], vec![0.3, 0.1]).unwrap();
    assert_eq!(inaccuracy(0.7, &d).unwrap(), 0.0);
    let c = chebyshev_bound_check(&d, 0.7).unwrap();
    assert!(c.ok && c.lhs == 0.0 && c.rhs == 0.0);
    let same = continuity_check(&d, &d, 0.0, 0.5).unwrap();
    assert!(same.ok && same.lower == Some(0.0) && same.upper == Some(0.0));
}

#[test]
fn bitflip_continuity() {
    let fam = bitflip(0.0, 1.0).unwrap();
    let s = ProductStrategy::bitflip_z();
    for n in [1u64, 10, 50] {
        let a = exact_distribution(&fam, &s, &[0.30], n).unwrap();
        let b = exact_distribution(&fam, &s, &[0.31], n).unwrap();
        // outputs are diagonal, so their trace distance is the L1 distance of the Pauli laws
        let eps = exact_error_pauli([0.70, 0.30, 0.0, 0.0], [0.69, 0.31, 0.0, 0.0], n).unwrap();
        // the estimates are compared against the same true value
        let b = EstimatorDistribution::discrete(vec![0.30], b.points().to_vec(), b.weights().to_vec()).unwrap();
        assert!(continuity_check(&a, &b, eps, 0.8).unwrap().ok);
    }
    let one = tensor_power(&fam.eval(&[0.3]).unwrap(), 1);
    let rho = one.apply(&ComplexMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
    let sigma = fam.eval(&[0.31]).unwrap().apply(&ComplexMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
    assert!((trace_norm(&(&rho - &sigma)).unwrap() - 0.02).abs() < 1e-12);
}

#[test]
fn ball_volume_matches_monte_carlo() {
    for v in 1..=3 {
        let mc = unit_ball_fraction(v, 400_000);
        assert!((mc / ball_volume(v, 1.0) - 1.0).abs() < 0.01, "v = {v}");
    }
}

fn sql_report(fam: &ChannelFamily, n: u64) -> qchan::metrology::EstimationReport {
    let opts = ExperimentOptions { trials: 10_000, seed: DEFAULT_SEED, ..Default::default() };
    estimation_experiment(fam, &ProductStrategy::bitflip_z(), &[0.3], n, &opts).unwrap()
}

#[test]
fn bitflip_experiment_statistics() {
    let fam = bitflip(0.2, 0.8).unwrap();
    let exact = sql_report(&fam, 16);
    assert!(exact.exact && exact.mse_stderr == 0.0);
    assert!((exact.mse_empirical - 0.21 / 16.0).abs() < 1e-14);
    let r = sql_report(&fam, 1000);
    assert!(!r.exact);
    assert!((r.mse_empirical / 2.1e-4 - 1.0).abs() < 0.15);
    assert!(r.condition_ok);
    assert!(r.mi_empirical + 3.0 * r.mi_stderr >= r.bound2, "{} vs {}", r.mi_empirical, r.bound2);
    assert!(r.bound2 <= r.bound1);
}

#[test]
fn experiment_is_deterministic() {
    let fam = bitflip(0.2, 0.8).unwrap();
    let opts = ExperimentOptions { trials: 500, ..Default::default() };
    let a = estimation_experiment(&fam, &ProductStrategy::bitflip_z(), &[0.45], 300, &opts).unwrap();
    let b = estimation_experiment(&fam, &ProductStrategy::bitflip_z(), &[0.45], 300, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
