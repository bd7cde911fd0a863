use proptest::prelude::*;
use qchan::channels::{tensor_channel, Channel};
use qchan::divergences::{collision_min_eigenvalue, d2_channels, d2_states, pinsker_error_upper_bound};
use qchan::error::Error;
use qchan::linalg::ComplexMatrix;
use qchan::sampling::{random_channel, random_density, rng_for};

/// `log₂[(1−p)²/(1−q) + p²/q]`, the bit-flip divergence.
fn bitflip_oracle(p: f64, q: f64) -> f64 {
    ((1.0 - p).powi(2) / (1.0 - q) + p * p / q).log2()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bitflip_closed_form(p in 0.01f64..0.99, q in 0.01f64..0.99) {
        let a = Channel::pauli([1.0 - p, p, 0.0, 0.0]).unwrap();
        let b = Channel::pauli([1.0 - q, q, 0.0, 0.0]).unwrap();
        let got = d2_channels(&a, &b).unwrap();
        prop_assert!((got - bitflip_oracle(p, q)).abs() < 1e-9 * bitflip_oracle(p, q).abs().max(1.0));
    }

    #[test]
    fn nonnegative_and_zero_on_diagonal(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let a = random_channel(&mut rng, 2, 2, 4);
        let b = random_channel(&mut rng, 2, 2, 4);
        prop_assert!(d2_channels(&a, &b).unwrap() >= -1e-12);
        prop_assert!(d2_channels(&a, &a).unwrap().abs() < 1e-10);
        prop_assert!(collision_min_eigenvalue(&a, &b).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn tensoring_adds(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 1);
        let c: Vec<Channel> = (0..4).map(|_| random_channel(&mut rng, 2, 2, 4)).collect();
        let joint = d2_channels(&tensor_channel(&c[0], &c[1]), &tensor_channel(&c[2], &c[3])).unwrap();
        let sum = d2_channels(&c[0], &c[2]).unwrap() + d2_channels(&c[1], &c[3]).unwrap();
        prop_assert!((joint - sum).abs() < 1e-8);
    }

    #[test]
    fn state_divergence_dominates_processed(seed in any::<u64>()) {
        // data processing under a fixed channel
        let mut rng = rng_for(seed, 2);
        let rho = random_density(&mut rng, 2);
        let sigma = random_density(&mut rng, 2);
        let ch = random_channel(&mut rng, 2, 2, 3);
        let before = d2_states(&rho, &sigma).unwrap();
        let after = d2_states(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn pinsker_bound_range(seed in any::<u64>(), n in 1u64..1000) {
        let mut rng = rng_for(seed, 3);
        let a = random_channel(&mut rng, 2, 2, 4);
        let b = random_channel(&mut rng, 2, 2, 4);
        let bound = pinsker_error_upper_bound(&a, &b, n).unwrap();
        prop_assert!(bound.value >= 0.0 && bound.value <= 2.0);
    }
}

#[test]
fn orthogonal_support_is_infinite() {
    let zero = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
    let one = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
    let a = Channel::replacement(&zero, 2).unwrap();
    let b = Channel::replacement(&one, 2).unwrap();
    assert!(matches!(d2_channels(&a, &b), Err(Error::InfiniteDivergence(_))));
}
