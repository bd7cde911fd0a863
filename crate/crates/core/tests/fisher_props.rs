use proptest::prelude::*;
use qchan::channels::{bitflip, depolarizing, pauli_simplex};
use qchan::fisher::{
    jr_max, rld_fisher_states, rld_norm_channel, sld_fisher_states, symmetric_eigenvalues, SphereOptions, StateFamily,
};
use qchan::linalg::ComplexMatrix;
use qchan::sampling::{random_density, random_pure_state, rng_for};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bitflip_rld_norm(p in 0.05f64..0.95) {
        let fam = bitflip(0.01, 0.99).unwrap();
        let j = rld_norm_channel(&fam, &[p], SphereOptions::default()).unwrap().value;
        prop_assert!((j - 1.0 / (p * (1.0 - p))).abs() < 1e-6 * j);
    }

    #[test]
    fn sld_below_rld_on_mixtures(seed in any::<u64>(), t in 0.1f64..0.9) {
        let mut rng = rng_for(seed, 0);
        let a = random_density(&mut rng, 3);
        let b = random_density(&mut rng, 3);
        let fam = StateFamily::new(1, move |t| Ok(&(&a * (1.0 - t[0])) + &(&b * t[0])));
        let jr = rld_fisher_states(&fam, &[t], 1e-5).unwrap()[0][0];
        let js = sld_fisher_states(&fam, &[t], 1e-5).unwrap()[0][0];
        prop_assert!(js <= jr * (1.0 + 1e-6) + 1e-9);
    }

    #[test]
    fn channel_outputs_bounded_by_channel_norm(seed in any::<u64>(), t in 0.12f64..0.18) {
        // any probe's RLD Fisher is below the channel norm
        let fam = pauli_simplex(vec![(0.1, 0.2); 3]).unwrap();
        let point = [t, 0.15, 0.13];
        let probe = random_pure_state(&mut rng_for(seed, 1), 4);
        let sf = StateFamily::from_channel_family(&fam, &probe).unwrap();
        let jr = rld_fisher_states(&sf, &point, 1e-6).unwrap();
        let top = symmetric_eigenvalues(&jr).unwrap().into_iter().fold(0.0, f64::max);
        let norm = rld_norm_channel(&fam, &point, SphereOptions::default()).unwrap().value;
        prop_assert!(top <= norm * (1.0 + 1e-4));
    }
}

#[test]
fn jr_max_at_box_edge_for_bitflip() {
    let j = jr_max(&bitflip(0.2, 0.8).unwrap()).unwrap();
    assert!((j.value - 6.25).abs() < 1e-6);
    assert!((j.argmax[0] - 0.2).abs() < 1e-3 || (j.argmax[0] - 0.8).abs() < 1e-3);
}

#[test]
fn depolarizing_norm_is_positive() {
    let fam = depolarizing(0.1, 0.6).unwrap();
    assert!(rld_norm_channel(&fam, &[0.3], SphereOptions::default()).unwrap().value > 0.0);
}

#[test]
fn constant_state_family_has_zero_rld() {
    let constant = StateFamily::new(1, |_| Ok(ComplexMatrix::from_real_diag(&[0.5, 0.5])));
    assert_eq!(rld_fisher_states(&constant, &[0.3], 1e-5).unwrap()[0][0], 0.0);
}
