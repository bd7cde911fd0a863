//! Multistart projected-gradient ascent over pure states.
//!
//! A state on `C^d` is stored as a real vector of length `2d` (real parts,
//! then imaginary parts) on the unit sphere. Gradients are central finite
//! differences; each step is projected onto the tangent space, accepted only
//! if the objective increases, and halved otherwise.

use rayon::prelude::*;

use crate::linalg::C64;
use crate::sampling::{random_pure_state, rng_for};

/// Tuning knobs for [`maximize_pure`].
#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub max_iters: usize,
    pub fd_step: f64,
    pub initial_step: f64,
    pub tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { max_iters: 200, fd_step: 1e-6, initial_step: 0.25, tol: 1e-13 }
    }
}

/// Best value found, its argument, and how many restarts produced a finite
/// starting value.
#[derive(Clone, Debug)]
pub struct AscentResult {
    pub value: f64,
    pub state: Vec<C64>,
    pub restarts_used: usize,
}

fn to_state(x: &[f64]) -> Vec<C64> {
    let d = x.len() / 2;
    (0..d).map(|k| C64::new(x[k], x[d + k])).collect()
}

fn from_state(psi: &[C64]) -> Vec<f64> {
    let mut x: Vec<f64> = psi.iter().map(|z| z.re).collect();
    x.extend(psi.iter().map(|z| z.im));
    x
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in x.iter_mut() {
        *a /= n;
    }
}

/// Maximizes `objective` over unit vectors in `C^dim`. Restart 0 starts
/// from `first` (if given); the others start from Haar-random states drawn
/// from `(seed, restart index)`. `None` from the objective marks an
/// inadmissible state and is treated as `−∞`.
pub fn maximize_pure<F>(
    dim: usize,
    restarts: usize,
    seed: u64,
    first: Option<Vec<C64>>,
    options: AscentOptions,
    objective: F,
) -> Option<AscentResult>
where
    F: Fn(&[C64]) -> Option<f64> + Sync,
{
    let runs: Vec<Option<(f64, Vec<C64>)>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|idx| {
            let start = match (&first, idx) {
                (Some(psi), 0) => psi.clone(),
                _ => random_pure_state(&mut rng_for(seed, idx as u64), dim),
            };
            ascend(&start, options, &objective)
        })
        .collect();
    let used = runs.iter().filter(|r| r.is_some()).count();
    runs.into_iter()
        .flatten()
        .fold(None, |best: Option<(f64, Vec<C64>)>, cand| match best {
            Some(b) if b.0 >= cand.0 => Some(b),
            _ => Some(cand),
        })
        .map(|(value, state)| AscentResult { value, state, restarts_used: used })
}

fn ascend<F>(start: &[C64], opt: AscentOptions, objective: &F) -> Option<(f64, Vec<C64>)>
where
    F: Fn(&[C64]) -> Option<f64>,
{
    let eval = |x: &[f64]| objective(&to_state(x)).filter(|v| v.is_finite());
    let mut x = from_state(start);
    normalize(&mut x);
    let mut fx = eval(&x)?;
    let mut step = opt.initial_step;
    let mut stalls = 0;
    for _ in 0..opt.max_iters {
        let mut g = vec![0.0; x.len()];
        for k in 0..x.len() {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += opt.fd_step;
            down[k] -= opt.fd_step;
            normalize(&mut up);
            normalize(&mut down);
            g[k] = match (eval(&up), eval(&down)) {
                (Some(a), Some(b)) => (a - b) / (2.0 * opt.fd_step),
                _ => 0.0,
            };
        }
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        for (gk, xk) in g.iter_mut().zip(&x) {
            *gk -= radial * xk;
        }
        let gnorm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        let mut improved = false;
        while step > 1e-14 {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b / gnorm).collect();
            normalize(&mut cand);
            match eval(&cand) {
                Some(fc) if fc > fx => {
                    let gain = fc - fx;
                    x = cand;
                    fx = fc;
                    improved = true;
                    stalls = if gain <= opt.tol * fx.abs().max(1.0) { stalls + 1 } else { 0 };
                    step = (step * 2.0).min(1.0);
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !improved || stalls >= 3 {
            break;
        }
    }
    Some((fx, to_state(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    #[test]
    fn finds_top_eigenvector_of_a_hermitian_form() {
        let m = ComplexMatrix::from_real_diag(&[0.5, 3.0, -1.0]);
        let res = maximize_pure(3, 8, 11, None, AscentOptions::default(), |psi| Some(m.expectation(psi).re)).unwrap();
        assert!((res.value - 3.0).abs() < 1e-9);
        assert_eq!(res.restarts_used, 8);
    }

    #[test]
    fn inadmissible_starts_are_skipped() {
        let res = maximize_pure(2, 4, 1, Some(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]), AscentOptions::default(), |psi| {
            if psi[0].norm() > 0.99 {
                None
            } else {
                Some(psi[1].norm_sqr())
            }
        })
        .unwrap();
        assert_eq!(res.restarts_used, 3);
        assert!(res.value > 0.999);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let f = |psi: &[C64]| Some(m.expectation(psi).re);
        let a = maximize_pure(2, 5, 42, None, AscentOptions::default(), f).unwrap();
        let b = maximize_pure(2, 5, 42, None, AscentOptions::default(), f).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
