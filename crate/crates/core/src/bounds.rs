//! Rate evaluators and cost fits.
//!
//! For a `v`-parameter family whose estimation MSE scales as `n^{−β}`, the
//! regularized cost of simulating (or communicating) `n` uses within error
//! `ε` grows at least like `(1−ε)·v·β/2·log₂ n`. Standard-quantum-limited
//! families have `β = 1`, Heisenberg-limited ones `β = 2`.

use serde::Serialize;

use crate::channels::{check_condition_support_constant, ChannelFamily};
use crate::error::{Error, Result};
use crate::fisher::ls_slope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Simulation cost of `n` uses of an unknown channel.
    Simulation,
    /// Program (communication) cost for a known channel.
    Communication,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateStatement {
    pub kind: RateKind,
    pub v: usize,
    pub beta: f64,
    pub eps_threshold: f64,
    /// `(1 − ε)·v·β/2`, in qubits per `log₂ n`.
    pub rate: f64,
}

fn rate(kind: RateKind, v: usize, beta: f64, eps: f64) -> Result<RateStatement> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("error threshold must lie in [0, 1), got {eps}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    Ok(RateStatement { kind, v, beta, eps_threshold: eps, rate: (1.0 - eps) * v as f64 * beta / 2.0 })
}

/// Lower bound on the regularized simulation cost.
pub fn simulation_rate(v: usize, beta: f64, eps: f64) -> Result<RateStatement> {
    rate(RateKind::Simulation, v, beta, eps)
}

/// Lower bound on the regularized communication cost; the same formula
/// tagged as a program rate.
pub fn program_rate(v: usize, beta: f64, eps: f64) -> Result<RateStatement> {
    rate(RateKind::Communication, v, beta, eps)
}

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Least-squares fit of `bits` against `log₂ n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit, in bits.
    pub residual_rms: f64,
    pub samples_used: usize,
}

/// Estimates `limsup bits(n)/log₂ n` by the slope over the top decade of
/// the samples (`n ≥ n_max/10`), or over the last three samples when the top
/// decade holds fewer than three. Requires at least three samples with
/// strictly increasing `n` spanning two decades.
pub fn regularized_cost_estimate(samples: &[(f64, f64)]) -> Result<CostFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(n, b)| !(n > 0.0 && n.is_finite() && b.is_finite())) {
        return Err(Error::InvalidArgument("sample sizes must be positive and finite".into()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("sample sizes must be strictly increasing".into()));
    }
    let (n_min, n_max) = (samples[0].0, samples[samples.len() - 1].0);
    if (n_max / n_min).log10() < 2.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!("samples span {n_min}..{n_max}, less than two decades")));
    }
    let top: Vec<(f64, f64)> = samples.iter().copied().filter(|&(n, _)| n >= n_max / 10.0 * (1.0 - 1e-12)).collect();
    let used = if top.len() >= 3 { top } else { samples[samples.len() - 3..].to_vec() };
    let x: Vec<f64> = used.iter().map(|s| s.0.log2()).collect();
    let y: Vec<f64> = used.iter().map(|s| s.1).collect();
    let slope = ls_slope(&x, &y);
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let intercept = my - slope * mx;
    let residual_rms =
        (x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    Ok(CostFit { slope, intercept, residual_rms, samples_used: used.len() })
}

/// Scaling exponent of the estimation error as classified from the family's
/// structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta {
    /// Constant Choi support: standard quantum limit, `β = 1`.
    Standard,
    /// Unitary family: Heisenberg limit, `β = 2`.
    Heisenberg,
    Unknown,
}

impl Beta {
    pub fn value(self) -> Option<f64> {
        match self {
            Beta::Standard => Some(1.0),
            Beta::Heisenberg => Some(2.0),
            Beta::Unknown => None,
        }
    }
}

/// `Standard` when the Choi support is constant on the (sampled) box,
/// `Heisenberg` for families tagged unitary, `Unknown` otherwise. Never
/// inferred from estimation data.
pub fn classify_beta(family: &ChannelFamily) -> Result<Beta> {
    if check_condition_support_constant(family, &[])? {
        Ok(Beta::Standard)
    } else if family.is_unitary() {
        Ok(Beta::Heisenberg)
    } else {
        Ok(Beta::Unknown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bitflip, constant_pure, rotation};

    #[test]
    fn rate_examples() {
        assert_eq!(simulation_rate(3, 1.0, 0.0).unwrap().rate, 1.5);
        assert_eq!(simulation_rate(1, 2.0, 0.0).unwrap().rate, 1.0);
        assert_eq!(simulation_rate(2, 1.0, 0.5).unwrap().rate, 0.5);
        assert_eq!(program_rate(1, 1.0, 0.0).unwrap().rate, 0.5);
        assert!(program_rate(1, 1.0, 1.0 - 1e-12).unwrap().rate < 1e-11);
        assert!(simulation_rate(1, 1.0, 1.0).is_err());
        assert!(simulation_rate(1, 0.0, 0.1).is_err());
        let (a, b) = (simulation_rate(2, 1.5, 0.2).unwrap(), program_rate(2, 1.5, 0.2).unwrap());
        assert_eq!(a.rate, b.rate);
        assert_ne!(a.kind, b.kind);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        // dyadic arguments have exactly representable complements
        for p in [0.0625, 0.125, 0.25, 0.375] {
            assert_eq!(binary_entropy(p), binary_entropy(1.0 - p));
        }
        for p in [0.01, 0.1, 0.3, 0.49] {
            assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-15);
        }
    }

    #[test]
    fn cost_fit_examples() {
        let exact: Vec<(f64, f64)> = [100.0, 1e3, 1e4, 1e5].iter().map(|&n: &f64| (n, n.log2() + 3.0)).collect();
        let fit = regularized_cost_estimate(&exact).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.intercept - 3.0).abs() < 1e-9);
        assert!(regularized_cost_estimate(&exact[..2]).is_err());
        assert!(regularized_cost_estimate(&[(10.0, 1.0), (20.0, 2.0), (500.0, 3.0)]).is_err());
        assert!(regularized_cost_estimate(&[(10.0, 1.0), (5.0, 2.0), (5000.0, 3.0)]).is_err());
    }

    #[test]
    fn noisy_cost_fit() {
        // integer-rounded costs with an alternating ±1 bit perturbation
        let samples: Vec<(f64, f64)> = (0..=60)
            .map(|k| {
                let n = 10f64.powf(2.0 + k as f64 / 20.0);
                let noise = if k % 2 == 0 { 1.0 } else { -1.0 };
                (n, (0.75 * n.log2() + 2.0).ceil() + noise)
            })
            .collect();
        let fit = regularized_cost_estimate(&samples).unwrap();
        assert!((fit.slope - 0.75).abs() < 0.15, "{}", fit.slope);
    }

    #[test]
    fn beta_classification() {
        assert_eq!(classify_beta(&bitflip(0.2, 0.8).unwrap()).unwrap(), Beta::Standard);
        assert_eq!(classify_beta(&rotation(0.0, 1.0).unwrap()).unwrap(), Beta::Heisenberg);
        assert_eq!(classify_beta(&constant_pure(-0.5, 0.5).unwrap()).unwrap(), Beta::Unknown);
    }
}
