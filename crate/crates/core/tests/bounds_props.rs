use proptest::prelude::*;
use qchan::bounds::{binary_entropy, program_rate, regularized_cost_estimate, simulation_rate};
use qchan::channels::bitflip;
use qchan::protocol::build_grid;

proptest! {
    #[test]
    fn entropy_in_unit_interval(p in 0.0f64..=1.0) {
        let h = binary_entropy(p);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - p)).abs() < 1e-14);
    }

    #[test]
    fn rate_is_linear_in_dimension_and_beta(v in 1usize..6, beta in 0.5f64..3.0, eps in 0.0f64..0.99) {
        let r = simulation_rate(v, beta, eps).unwrap().rate;
        prop_assert!((r - (1.0 - eps) * v as f64 * beta / 2.0).abs() < 1e-12);
        prop_assert_eq!(r, program_rate(v, beta, eps).unwrap().rate);
    }
}

#[test]
fn grid_cost_slope_tracks_alpha() {
    let fam = bitflip(0.2, 0.8).unwrap();
    for alpha in [0.25, 0.5, 1.0] {
        let samples: Vec<(f64, f64)> = [1e2, 1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&n| (n, build_grid(&fam, n as u64, alpha).unwrap().cost_bits() as f64))
            .collect();
        let fit = regularized_cost_estimate(&samples).unwrap();
        assert!((fit.slope - (0.5 + alpha)).abs() < 0.1 * (0.5 + alpha), "alpha {alpha}: {}", fit.slope);
    }
}
