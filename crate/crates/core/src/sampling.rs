//! Deterministic random sampling of states, probability vectors and channels.
//!
//! Every randomized routine takes a `(seed, index)` pair and builds its own
//! ChaCha8 stream, so results do not depend on scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::channels::Channel;
use crate::linalg::{eig_hermitian, ComplexMatrix, C64};

/// Default seed shared by the CLI and the acceptance suite.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Mixes a base seed and a stream index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random unit vector.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        if crate::linalg::normalize(&mut v) > 1e-12 {
            return v;
        }
    }
}

/// Random full-rank density matrix `G·G†/Tr`, `G` Ginibre.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale_real(1.0 / tr).hermitian_part()
}

/// Flat Dirichlet sample on `k` outcomes, mixed with the uniform vector so
/// every component is at least `floor`.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let w = 1.0 - floor * k as f64;
    raw.iter().map(|x| floor + w * x / total).collect()
}

/// Random channel from a random isometry `V = G(G†G)^{-1/2}` split into
/// `kraus_count` Kraus operators. With `kraus_count = d_in·d_out` the Choi
/// operator is full rank almost surely. `kraus_count` is raised to
/// `⌈d_in/d_out⌉` when smaller, since no isometry exists below that.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, kraus_count: usize) -> Channel {
    let kraus_count = kraus_count.max(d_in.div_ceil(d_out));
    let rows = d_out * kraus_count;
    let g = ComplexMatrix::from_fn(rows, d_in, |_, _| complex_gaussian(rng));
    let gram = g.adjoint().matmul(&g);
    let inv_sqrt = eig_hermitian(&gram).expect("Gram matrix").reconstruct_with(|l| 1.0 / l.sqrt());
    let v = g.matmul(&inv_sqrt);
    let kraus: Vec<ComplexMatrix> = (0..kraus_count)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |i, j| v.get(k * d_out + i, j)))
        .collect();
    crate::channels::choi_from_kraus(&kraus, d_in, d_out).expect("isometry gives a valid channel")
}

/// Random qubit Pauli channel with every probability at least `floor`.
pub fn random_pauli_channel<R: Rng + ?Sized>(rng: &mut R, floor: f64) -> ([f64; 4], Channel) {
    let p = random_probability(rng, 4, floor);
    let p = [p[0], p[1], p[2], p[3]];
    (p, Channel::pauli(p).expect("valid probability vector"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tr_out;

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
    }

    #[test]
    fn random_objects_are_valid() {
        let mut rng = rng_for(7, 0);
        let rho = random_density(&mut rng, 3);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(eig_hermitian(&rho).unwrap().values[0] > 0.0);
        let p = random_probability(&mut rng, 4, 0.01);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.01 - 1e-15));
        let ch = random_channel(&mut rng, 2, 2, 4);
        let marg = tr_out(ch.choi(), 2, 2).unwrap();
        assert!((&marg - &ComplexMatrix::identity(2)).max_abs() < 1e-10);
        assert!(eig_hermitian(ch.choi()).unwrap().values[0] > 1e-8);
    }
}
