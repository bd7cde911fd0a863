use proptest::prelude::*;
use qchan::linalg::{eig_hermitian, kron, partial_trace, pinv_on_support, trace_norm, ComplexMatrix, Keep};
use qchan::sampling::{random_density, rng_for};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = rng_for(seed, 0);
        let a = random_density(&mut rng, d1);
        let b = random_density(&mut rng, d2);
        let ab = kron(&a, &b);
        prop_assert!((&partial_trace(&ab, (d1, d2), Keep::First).unwrap() - &a).max_abs() < 1e-12);
        prop_assert!((&partial_trace(&ab, (d1, d2), Keep::Second).unwrap() - &b).max_abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs(seed in any::<u64>(), d in 1usize..7) {
        let m = random_density(&mut rng_for(seed, 1), d);
        let e = eig_hermitian(&m).unwrap();
        prop_assert!((&e.reconstruct() - &m).max_abs() < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = e.values.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_is_generalized_inverse(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = rng_for(seed, 2);
        let v = random_density(&mut rng, d);
        // rank-deficient PSD matrix: project out one direction
        let e = eig_hermitian(&v).unwrap();
        let m = e.reconstruct_with(|l| if l == e.values[0] { 0.0 } else { l });
        let p = pinv_on_support(&m, 1e-10).unwrap();
        prop_assert!((&m.matmul(&p).matmul(&m) - &m).max_abs() < 1e-9);
        prop_assert!((&p.matmul(&m).matmul(&p) - &p).max_abs() < 1e-6 * p.max_abs().max(1.0));
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = rng_for(seed, 3);
        let (a, b, c) = (random_density(&mut rng, d), random_density(&mut rng, d), random_density(&mut rng, d));
        let ab = trace_norm(&(&a - &b)).unwrap();
        let bc = trace_norm(&(&b - &c)).unwrap();
        let ac = trace_norm(&(&a - &c)).unwrap();
        prop_assert!(ab >= 0.0 && ab <= 2.0 + 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}

#[test]
fn identity_has_unit_spectrum() {
    let e = eig_hermitian(&ComplexMatrix::identity(5)).unwrap();
    assert!(e.values.iter().all(|&l| l == 1.0));
}
