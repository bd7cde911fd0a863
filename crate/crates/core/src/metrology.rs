//! Estimation statistics: MSE matrices, inaccuracy (the confidence-`p`
//! error radius), the Chebyshev and continuity relations for inaccuracy, and
//! the mutual-information lower bounds built from it.
//!
//! All information quantities are in bits.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::bounds::binary_entropy;
use crate::channels::{tensor_power, ChannelFamily};
use crate::error::{Error, Result};
use crate::fisher::RealMatrix;
use crate::linalg::{eig_hermitian, ComplexMatrix, C64};
use crate::sampling::{derive_seed, rng_for};

/// Maximum deviation of `Σ_k M_k` from the identity.
pub const POVM_COMPLETENESS_TOL: f64 = 1e-8;
/// Largest `n` for which [`estimation_experiment`] enumerates outcomes
/// exactly instead of sampling.
pub const EXACT_ENUMERATION_MAX_N: u64 = 16;
/// Cap on the number of count vectors [`exact_distribution`] will enumerate.
pub const MAX_COMPOSITIONS: u128 = 2_000_000;
pub const DEFAULT_PRIOR_POINTS: usize = 64;
const PROB_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Explicit points with probabilities.
    Discrete,
    /// Equal-weight Monte-Carlo draws.
    Sampled,
}

/// Law of the estimate `T̂` given the true parameter `t`.
#[derive(Clone, Debug, Serialize)]
pub struct EstimatorDistribution {
    kind: EstimatorKind,
    t: Vec<f64>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    seed: Option<u64>,
}

fn check_dims(t: &[f64], points: &[Vec<f64>]) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p.len() != t.len()) {
        return Err(Error::DimensionMismatch(format!(
            "estimate of dimension {} for a parameter of dimension {}",
            p.len(),
            t.len()
        )));
    }
    Ok(())
}

impl EstimatorDistribution {
    pub fn discrete(t: Vec<f64>, points: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probabilities.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points with {} probabilities",
                points.len(),
                probabilities.len()
            )));
        }
        check_dims(&t, &points)?;
        if let Some(w) = probabilities.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidProbability(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_SLACK.max(1e-14 * points.len() as f64) {
            return Err(Error::InvalidProbability(format!("weights sum to {total}")));
        }
        Ok(Self { kind: EstimatorKind::Discrete, t, points, weights: probabilities, seed: None })
    }

    pub fn point_mass(t: Vec<f64>, at: Vec<f64>) -> Result<Self> {
        Self::discrete(t, vec![at], vec![1.0])
    }

    /// Empirical law of `samples`; `seed` records where they came from.
    pub fn sampled(t: Vec<f64>, samples: Vec<Vec<f64>>, seed: Option<u64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        check_dims(&t, &samples)?;
        let w = 1.0 / samples.len() as f64;
        let weights = vec![w; samples.len()];
        Ok(Self { kind: EstimatorKind::Sampled, t, points: samples, weights, seed })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    /// The true parameter the law is conditioned on.
    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of Monte-Carlo draws for sampled laws.
    pub fn sample_count(&self) -> Option<usize> {
        (self.kind == EstimatorKind::Sampled).then_some(self.points.len())
    }

    /// Euclidean distances `‖t̂ − t‖`, aligned with [`Self::weights`].
    pub fn distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| sq_dist(p, &self.t).sqrt()).collect()
    }

    /// `Σ_i E[(t̂_i − t_i)²]`.
    pub fn mse(&self) -> f64 {
        let sq = self.points.iter().map(|p| sq_dist(p, &self.t));
        match self.kind {
            EstimatorKind::Sampled => compensated_sum(sq) / self.points.len() as f64,
            EstimatorKind::Discrete => compensated_sum(sq.zip(&self.weights).map(|(x, w)| w * x)),
        }
    }

    pub fn mse_matrix(&self) -> MseRecord {
        let v = self.t.len();
        let mut m = vec![vec![0.0; v]; v];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for i in 0..v {
                for j in 0..v {
                    m[i][j] += w * (p[i] - self.t[i]) * (p[j] - self.t[j]);
                }
            }
        }
        MseRecord::from_matrix(m)
    }
}

/// Neumaier summation.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Mean-squared-error matrix `V_ij = E[(t − t̂)_i (t − t̂)_j]` and its trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MseRecord {
    pub matrix: RealMatrix,
    pub trace: f64,
}

impl MseRecord {
    fn from_matrix(matrix: RealMatrix) -> Self {
        let trace = (0..matrix.len()).map(|i| matrix[i][i]).sum();
        Self { matrix, trace }
    }
}

/// Checks that `effects` form a POVM on a space of dimension `dim`.
pub fn check_povm(effects: &[ComplexMatrix], dim: usize) -> Result<()> {
    if effects.is_empty() {
        return Err(Error::InvalidArgument("empty POVM".into()));
    }
    let mut total = ComplexMatrix::zeros(dim, dim);
    for (k, m) in effects.iter().enumerate() {
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "POVM effect {k} is {}x{}, expected {dim}x{dim}",
                m.rows(),
                m.cols()
            )));
        }
        if m.hermitian_asymmetry() > POVM_COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!("POVM effect {k} is not Hermitian")));
        }
        let low = eig_hermitian(&m.hermitian_part())?.values.first().copied().unwrap_or(0.0);
        if low < -POVM_COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!("POVM effect {k} has eigenvalue {low:e}")));
        }
        total += m;
    }
    let resid = (&total - &ComplexMatrix::identity(dim)).max_abs();
    if resid > POVM_COMPLETENESS_TOL {
        return Err(Error::InvalidArgument(format!("POVM completeness residual {resid:e}")));
    }
    Ok(())
}

/// Exact Born-rule MSE matrix for `n` parallel uses of `C_t` on `probe`
/// (a vector on `H_in^{⊗n} ⊗ R`), measured with `povm` whose outcomes are
/// labelled by estimate points.
pub fn mse_matrix(
    probe: &[C64],
    family: &ChannelFamily,
    t: &[f64],
    povm: &[(ComplexMatrix, Vec<f64>)],
    n: usize,
) -> Result<MseRecord> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let d_in_n = family.d_in().pow(n as u32);
    if probe.is_empty() || probe.len() % d_in_n != 0 {
        return Err(Error::DimensionMismatch(format!(
            "probe of length {} is not a multiple of d_in^n = {d_in_n}",
            probe.len()
        )));
    }
    let d_ref = probe.len() / d_in_n;
    let channel = tensor_power(&family.eval(t)?, n);
    let rho = channel.apply_with_reference(probe, d_ref)?;
    let effects: Vec<ComplexMatrix> = povm.iter().map(|(m, _)| m.clone()).collect();
    check_povm(&effects, rho.rows())?;
    let v = family.v();
    let mut m = vec![vec![0.0; v]; v];
    for (effect, est) in povm {
        if est.len() != v {
            return Err(Error::DimensionMismatch(format!("estimate of dimension {} for v = {v}", est.len())));
        }
        let prob = effect.trace_product(&rho).re.max(0.0);
        for i in 0..v {
            for j in 0..v {
                m[i][j] += prob * (t[i] - est[i]) * (t[j] - est[j]);
            }
        }
    }
    Ok(MseRecord::from_matrix(m))
}

fn check_confidence(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("confidence must lie in (0, 1), got {p}")))
    }
}

/// Smallest `δ` with `Pr[‖T̂ − t‖ ≤ δ] ≥ p`. Sampled laws use the upper
/// empirical quantile `d_(⌈pN⌉)`.
pub fn inaccuracy(p: f64, dist: &EstimatorDistribution) -> Result<f64> {
    check_confidence(p)?;
    let d = dist.distances();
    match dist.kind {
        EstimatorKind::Sampled => {
            let mut d = d;
            d.sort_by(f64::total_cmp);
            let k = ((p * d.len() as f64 - 1e-9).ceil() as usize).clamp(1, d.len());
            Ok(d[k - 1])
        }
        EstimatorKind::Discrete => {
            let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(dist.weights.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut cum = 0.0;
            for (i, &(di, w)) in pairs.iter().enumerate() {
                cum += w;
                // ties must be absorbed before the threshold test
                if pairs.get(i + 1).is_some_and(|next| next.0 == di) {
                    continue;
                }
                if cum >= p - PROB_SLACK {
                    return Ok(di);
                }
            }
            Ok(pairs.last().map(|x| x.0).unwrap_or(0.0))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChebyshevCheck {
    /// `δ(p)`.
    pub lhs: f64,
    /// `sqrt(MSE/(1−p))`.
    pub rhs: f64,
    pub ok: bool,
}

/// Compares the inaccuracy with the Chebyshev-type bound `sqrt(MSE/(1−p))`.
pub fn chebyshev_bound_check(dist: &EstimatorDistribution, p: f64) -> Result<ChebyshevCheck> {
    let lhs = inaccuracy(p, dist)?;
    let rhs = (dist.mse() / (1.0 - p)).sqrt();
    Ok(ChebyshevCheck { lhs, rhs, ok: lhs <= rhs + 1e-12 })
}

/// Outcome of `δ_a(p−ε) ≤ δ_b(p) ≤ δ_a(p+ε)`. A side whose confidence
/// level falls outside `(0, 1)` is skipped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub delta_b: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub lower_skipped: bool,
    pub upper_skipped: bool,
    pub ok: bool,
}

/// `dist_a` and `dist_b` are the laws of one measurement on two states at
/// trace-norm distance at most `eps`.
pub fn continuity_check(
    dist_a: &EstimatorDistribution,
    dist_b: &EstimatorDistribution,
    eps: f64,
    p: f64,
) -> Result<ContinuityCheck> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
    }
    let delta_b = inaccuracy(p, dist_b)?;
    let side = |q: f64| if q > 0.0 && q < 1.0 { inaccuracy(q, dist_a).map(Some) } else { Ok(None) };
    let lower = side(p - eps)?;
    let upper = side(p + eps)?;
    let ok = lower.is_none_or(|l| l <= delta_b + 1e-12) && upper.is_none_or(|u| delta_b <= u + 1e-12);
    Ok(ContinuityCheck { delta_b, lower, upper, lower_skipped: lower.is_none(), upper_skipped: upper.is_none(), ok })
}

/// Volume of the Euclidean `v`-ball of radius `delta`, `(√π δ)^v / Γ(v/2+1)`.
pub fn ball_volume(v: usize, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let v = v as f64;
    (v * (std::f64::consts::PI.sqrt() * delta).ln() - ln_gamma(v / 2.0 + 1.0)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MutualInfoBounds {
    pub bound1: f64,
    pub bound2: f64,
    /// Whether `(1−p)/p ≤ (2^v|T| − B)/B`, under which both bounds hold.
    pub condition_ok: bool,
    pub ball_volume: f64,
}

/// Lower bounds on `I(T̂ : T)` for a prior of differential entropy `h_t`
/// on a box of volume `box_volume`, given the worst-case inaccuracy
/// `delta_p` at confidence `p`. `bound1` is the tight form, `bound2` its
/// relaxation; both are returned even when the condition fails (then
/// `bound1` may be NaN).
pub fn mutual_info_lower_bounds(h_t: f64, p: f64, delta_p: f64, v: usize, box_volume: f64) -> Result<MutualInfoBounds> {
    check_confidence(p)?;
    if !(delta_p > 0.0 && box_volume > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_p = {delta_p} and box volume = {box_volume} must be positive"
        )));
    }
    let b = ball_volume(v, delta_p);
    let total = 2f64.powi(v as i32) * box_volume;
    let condition_ok = total > b && ((1.0 - p) / p).ln() <= ((total - b) / b).ln();
    let bound1 = h_t - p * (b / p).log2() - (1.0 - p) * ((total - b) / (1.0 - p)).log2();
    let vf = v as f64;
    let bound2 = h_t - p * vf * (std::f64::consts::PI.sqrt() * delta_p).log2()
        + p * ln_gamma(vf / 2.0 + 1.0) / std::f64::consts::LN_2
        - (1.0 - p) * total.log2()
        - binary_entropy(p);
    Ok(MutualInfoBounds { bound1, bound2, condition_ok, ball_volume: b })
}

/// Maps outcome counts of `n` repeated measurements to an estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `t̂ = Σ_k (c_k/n)·value_k`. With a two-outcome Z measurement on a
    /// bit-flip channel and values `0, 1` this is the maximum-likelihood
    /// estimate.
    Frequency { outcome_values: Vec<Vec<f64>> },
    /// Ignores the data.
    Constant(Vec<f64>),
}

impl Estimator {
    fn estimate(&self, counts: &[u64], n: u64) -> Vec<f64> {
        match self {
            Estimator::Constant(t0) => t0.clone(),
            Estimator::Frequency { outcome_values } => {
                let v = outcome_values.first().map_or(0, |x| x.len());
                let mut est = vec![0.0; v];
                for (c, val) in counts.iter().zip(outcome_values) {
                    let f = *c as f64 / n as f64;
                    for (e, x) in est.iter_mut().zip(val) {
                        *e += f * x;
                    }
                }
                est
            }
        }
    }
}

/// The same probe and measurement on each of `n` uses, followed by an
/// estimator acting on the outcome counts.
#[derive(Clone, Debug, Serialize)]
pub struct ProductStrategy {
    /// Probe on `H_in ⊗ R`.
    pub probe: Vec<C64>,
    pub d_ref: usize,
    /// Effects on `H_out ⊗ R`.
    pub effects: Vec<ComplexMatrix>,
    pub estimator: Estimator,
}

impl ProductStrategy {
    /// Probe `|0⟩`, computational-basis measurement, estimate = fraction of
    /// `|1⟩` outcomes.
    pub fn bitflip_z() -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            probe: vec![one, C64::new(0.0, 0.0)],
            d_ref: 1,
            effects: vec![ComplexMatrix::from_real_diag(&[1.0, 0.0]), ComplexMatrix::from_real_diag(&[0.0, 1.0])],
            estimator: Estimator::Frequency { outcome_values: vec![vec![0.0], vec![1.0]] },
        }
    }

    /// Trivial measurement and a fixed estimate `t0`.
    pub fn constant(family: &ChannelFamily, t0: Vec<f64>) -> Self {
        let mut probe = vec![C64::new(0.0, 0.0); family.d_in()];
        probe[0] = C64::new(1.0, 0.0);
        Self {
            probe,
            d_ref: 1,
            effects: vec![ComplexMatrix::identity(family.d_out())],
            estimator: Estimator::Constant(t0),
        }
    }

    fn validate(&self, family: &ChannelFamily) -> Result<()> {
        if self.probe.len() != family.d_in() * self.d_ref {
            return Err(Error::DimensionMismatch(format!(
                "probe of length {} for d_in = {} and reference dimension {}",
                self.probe.len(),
                family.d_in(),
                self.d_ref
            )));
        }
        check_povm(&self.effects, family.d_out() * self.d_ref)?;
        let v = family.v();
        match &self.estimator {
            Estimator::Constant(t0) if t0.len() != v => {
                Err(Error::DimensionMismatch(format!("constant estimate of dimension {} for v = {v}", t0.len())))
            }
            Estimator::Frequency { outcome_values }
                if outcome_values.len() != self.effects.len() || outcome_values.iter().any(|x| x.len() != v) =>
            {
                Err(Error::DimensionMismatch(format!(
                    "{} outcome values for {} effects and v = {v}",
                    outcome_values.len(),
                    self.effects.len()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Single-use outcome probabilities at `t`.
    pub fn outcome_probabilities(&self, family: &ChannelFamily, t: &[f64]) -> Result<Vec<f64>> {
        self.validate(family)?;
        let rho = family.eval(t)?.apply_with_reference(&self.probe, self.d_ref)?;
        let mut q: Vec<f64> = self.effects.iter().map(|m| m.trace_product(&rho).re.max(0.0)).collect();
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        Ok(q)
    }
}

fn composition_count(n: u64, k: usize) -> u128 {
    // C(n + k − 1, k − 1), saturating
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c.saturating_mul(n as u128 + i) / i;
        if c > MAX_COMPOSITIONS * 1000 {
            return u128::MAX;
        }
    }
    c
}

fn for_each_composition(n: u64, k: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(rem: u64, slot: usize, counts: &mut Vec<u64>, f: &mut impl FnMut(&[u64])) {
        if slot + 1 == counts.len() {
            counts[slot] = rem;
            f(counts);
            return;
        }
        for c in 0..=rem {
            counts[slot] = c;
            rec(rem - c, slot + 1, counts, f);
        }
    }
    let mut counts = vec![0; k];
    rec(n, 0, &mut counts, f);
}

fn multinomial_ln(counts: &[u64], ln_q: &[f64], n: u64) -> f64 {
    let mut acc = ln_factorial(n);
    for (&c, &lq) in counts.iter().zip(ln_q) {
        if c > 0 {
            acc += c as f64 * lq - ln_factorial(c);
        }
    }
    acc
}

/// Exact law of the estimate after `n` uses, by enumerating count vectors.
pub fn exact_distribution(
    family: &ChannelFamily,
    strategy: &ProductStrategy,
    t: &[f64],
    n: u64,
) -> Result<EstimatorDistribution> {
    let q = strategy.outcome_probabilities(family, t)?;
    exact_from_probabilities(strategy, t, &q, n)
}

fn exact_from_probabilities(strategy: &ProductStrategy, t: &[f64], q: &[f64], n: u64) -> Result<EstimatorDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let count = composition_count(n, q.len());
    if count > MAX_COMPOSITIONS {
        return Err(Error::TooLarge(format!("{count} count vectors for n = {n}, {} outcomes", q.len())));
    }
    let ln_q: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for_each_composition(n, q.len(), &mut |c| {
        let w = multinomial_ln(c, &ln_q, n).exp();
        if w > 0.0 {
            points.push(strategy.estimator.estimate(c, n));
            weights.push(w);
        }
    });
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    EstimatorDistribution::discrete(t.to_vec(), points, weights)
}

fn sample_counts<R: Rng + ?Sized>(rng: &mut R, n: u64, q: &[f64]) -> Vec<u64> {
    let mut counts = vec![0; q.len()];
    let mut rem = n;
    let mut mass = 1.0;
    for (k, &qk) in q.iter().enumerate() {
        if rem == 0 {
            break;
        }
        if k + 1 == q.len() {
            counts[k] = rem;
            break;
        }
        let pk = if mass > 0.0 { (qk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(rem, pk).map(|b| b.sample(rng)).unwrap_or(0);
        counts[k] = c;
        rem -= c;
        mass -= qk;
    }
    counts
}

fn sampled_from_probabilities(
    strategy: &ProductStrategy,
    t: &[f64],
    q: &[f64],
    n: u64,
    trials: usize,
    seed: u64,
) -> Result<EstimatorDistribution> {
    let samples: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|j| strategy.estimator.estimate(&sample_counts(&mut rng_for(seed, j as u64), n, q), n))
        .collect();
    EstimatorDistribution::sampled(t.to_vec(), samples, Some(seed))
}

/// Monte-Carlo law of the estimate from `trials` independent runs; run `j`
/// draws from the stream `(seed, j)`.
pub fn sampled_distribution(
    family: &ChannelFamily,
    strategy: &ProductStrategy,
    t: &[f64],
    n: u64,
    trials: usize,
    seed: u64,
) -> Result<EstimatorDistribution> {
    let q = strategy.outcome_probabilities(family, t)?;
    sampled_from_probabilities(strategy, t, &q, n, trials.max(1), seed)
}

#[derive(Clone, Copy, Debug)]
pub struct ExperimentOptions {
    pub trials: usize,
    pub confidence: f64,
    pub prior_points: usize,
    pub seed: u64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { trials: 10_000, confidence: 0.9, prior_points: DEFAULT_PRIOR_POINTS, seed: crate::sampling::DEFAULT_SEED }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimationReport {
    pub n: u64,
    pub trials: usize,
    /// True when every law was enumerated exactly (`n ≤ 16`).
    pub exact: bool,
    pub t: Vec<f64>,
    pub confidence: f64,
    pub mse_empirical: f64,
    pub mse_stderr: f64,
    pub inaccuracy_p: f64,
    /// Largest inaccuracy over the prior grid.
    pub delta_p_worst: f64,
    pub mi_empirical: f64,
    pub mi_stderr: f64,
    pub prior_points: usize,
    pub bound1: f64,
    pub bound2: f64,
    pub condition_ok: bool,
}

/// Prior grid: cell midpoints of a regular subdivision of the box with
/// about `target` points in total.
pub fn prior_grid(bounds: &[(f64, f64)], target: usize) -> Vec<Vec<f64>> {
    let v = bounds.len();
    let m = ((target as f64).powf(1.0 / v as f64).round() as usize).max(2);
    let mut out = vec![vec![]];
    for &(lo, hi) in bounds {
        let w = (hi - lo) / m as f64;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..m).map(move |k| {
                    let mut p = prefix.clone();
                    p.push(lo + (k as f64 + 0.5) * w);
                    p
                })
            })
            .collect();
    }
    out
}

fn nearest_cell(x: &[f64], bounds: &[(f64, f64)], m: usize) -> usize {
    x.iter().zip(bounds).fold(0, |acc, (&xi, &(lo, hi))| {
        let k = (((xi - lo) / (hi - lo) * m as f64).floor().max(0.0) as usize).min(m - 1);
        acc * m + k
    })
}

/// Runs `strategy` on `n` uses of `C_t`: MSE and inaccuracy at `t`, and the
/// mutual information between a uniform prior on a grid over the box and
/// the estimate (binned to the same grid cells), with the information bounds
/// evaluated at the worst inaccuracy over the grid.
///
/// For `n ≤ 16` all laws are enumerated exactly; otherwise each uses
/// `trials` Monte-Carlo runs, and the mutual information is a plug-in
/// estimate with the Miller–Madow correction.
pub fn estimation_experiment(
    family: &ChannelFamily,
    strategy: &ProductStrategy,
    t: &[f64],
    n: u64,
    options: &ExperimentOptions,
) -> Result<EstimationReport> {
    if !family.contains(t) {
        return Err(Error::OutOfBox(format!("{t:?} is outside the parameter box")));
    }
    check_confidence(options.confidence)?;
    strategy.validate(family)?;
    let exact = n <= EXACT_ENUMERATION_MAX_N;
    let trials = options.trials.max(1);
    let law = |point: &[f64], stream: u64| -> Result<EstimatorDistribution> {
        let q = strategy.outcome_probabilities(family, point)?;
        if exact {
            exact_from_probabilities(strategy, point, &q, n)
        } else {
            sampled_from_probabilities(strategy, point, &q, n, trials, derive_seed(options.seed, stream))
        }
    };

    let at_t = law(t, 0)?;
    let mse = at_t.mse();
    let mse_stderr = if exact {
        0.0
    } else {
        let sq: Vec<f64> = at_t.points.iter().map(|p| sq_dist(p, t)).collect();
        let var = sq.iter().map(|x| (x - mse).powi(2)).sum::<f64>() / (sq.len() as f64 - 1.0).max(1.0);
        (var / sq.len() as f64).sqrt()
    };
    let inaccuracy_p = inaccuracy(options.confidence, &at_t)?;

    let bounds = family.bounds();
    let grid = prior_grid(bounds, options.prior_points.max(2));
    let m = ((grid.len() as f64).powf(1.0 / bounds.len() as f64)).round() as usize;
    let laws: Vec<EstimatorDistribution> =
        grid.par_iter().enumerate().map(|(i, pt)| law(pt, i as u64 + 1)).collect::<Result<_>>()?;
    let delta_p_worst = laws
        .iter()
        .map(|d| inaccuracy(options.confidence, d))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    // conditional laws of the binned estimate
    let cells = grid.len();
    let cond: Vec<Vec<f64>> = laws
        .iter()
        .map(|d| {
            let mut row = vec![0.0; cells];
            for (p, w) in d.points.iter().zip(&d.weights) {
                row[nearest_cell(p, bounds, m)] += w;
            }
            row
        })
        .collect();
    let (mi_empirical, mi_stderr) = mutual_information(&cond, if exact { None } else { Some(trials) });

    let box_volume = family.box_volume();
    let mi = mutual_info_lower_bounds(box_volume.log2(), options.confidence, delta_p_worst.max(1e-300), family.v(), box_volume)?;
    Ok(EstimationReport {
        n,
        trials: if exact { 0 } else { trials },
        exact,
        t: t.to_vec(),
        confidence: options.confidence,
        mse_empirical: mse,
        mse_stderr,
        inaccuracy_p,
        delta_p_worst,
        mi_empirical,
        mi_stderr,
        prior_points: cells,
        bound1: mi.bound1,
        bound2: mi.bound2,
        condition_ok: mi.condition_ok,
    })
}

fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Mutual information (bits) of a uniform input and rows `cond[i]`. With
/// `Some(n)` the rows are empirical frequencies from `n` draws each and the
/// Miller–Madow correction and an asymptotic standard error are applied.
fn mutual_information(cond: &[Vec<f64>], draws: Option<usize>) -> (f64, f64) {
    let rows = cond.len() as f64;
    let cols = cond.first().map_or(0, |r| r.len());
    let marginal: Vec<f64> = (0..cols).map(|b| cond.iter().map(|r| r[b]).sum::<f64>() / rows).collect();
    let h_cond: f64 = cond.iter().map(|r| entropy_bits(r)).sum::<f64>() / rows;
    let plug_in = entropy_bits(&marginal) - h_cond;
    let Some(n) = draws else {
        return (plug_in, 0.0);
    };
    let nonzero = |r: &[f64]| r.iter().filter(|&&x| x > 0.0).count() as f64;
    let corr = |support: f64, samples: f64| (support - 1.0).max(0.0) / (2.0 * samples * std::f64::consts::LN_2);
    let total = n as f64 * rows;
    let h_marg = corr(nonzero(&marginal), total);
    let h_rows: f64 = cond.iter().map(|r| corr(nonzero(r), n as f64)).sum::<f64>() / rows;
    let mi = plug_in + h_marg - h_rows;
    // variance of the pointwise information density
    let mut second = 0.0;
    for r in cond {
        for (b, &x) in r.iter().enumerate() {
            if x > 0.0 {
                second += x / rows * (x / marginal[b]).log2().powi(2);
            }
        }
    }
    let se = ((second - plug_in * plug_in).max(0.0) / total).sqrt();
    (mi, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::bitflip;

    #[test]
    fn ball_volume_examples() {
        assert!((ball_volume(1, 0.01) - 0.02).abs() < 1e-15);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        assert_eq!(ball_volume(2, 0.0), 0.0);
    }

    #[test]
    fn inaccuracy_two_point() {
        let d = EstimatorDistribution::discrete(vec![0.0], vec![vec![0.1], vec![-0.5]], vec![0.6, 0.4]).unwrap();
        assert_eq!(inaccuracy(0.5, &d).unwrap(), 0.1);
        assert_eq!(inaccuracy(0.6, &d).unwrap(), 0.1);
        assert_eq!(inaccuracy(0.9, &d).unwrap(), 0.5);
        assert!(inaccuracy(1.0, &d).is_err());
    }

    #[test]
    fn sampled_quantile_is_upper() {
        let s: Vec<Vec<f64>> = (1..=10).map(|k| vec![k as f64]).collect();
        let d = EstimatorDistribution::sampled(vec![0.0], s, None).unwrap();
        assert_eq!(inaccuracy(0.9, &d).unwrap(), 9.0);
        assert_eq!(inaccuracy(0.91, &d).unwrap(), 10.0);
        assert_eq!(inaccuracy(0.05, &d).unwrap(), 1.0);
        assert_eq!(d.sample_count(), Some(10));
    }

    #[test]
    fn two_outcome_povm_mse() {
        let fam = bitflip(0.0, 1.0).unwrap();
        let povm = vec![
            (ComplexMatrix::from_real_diag(&[1.0, 0.0]), vec![0.3]),
            (ComplexMatrix::from_real_diag(&[0.0, 1.0]), vec![0.7]),
        ];
        let probe = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let rec = mse_matrix(&probe, &fam, &[0.3], &povm, 1).unwrap();
        assert!((rec.trace - 0.048).abs() < 1e-14);
        let bad = vec![(ComplexMatrix::from_real_diag(&[1.0, 0.5]), vec![0.3])];
        assert!(mse_matrix(&probe, &fam, &[0.3], &bad, 1).is_err());
    }

    #[test]
    fn mutual_info_example() {
        let b = mutual_info_lower_bounds(0.0, 0.9, 0.01, 1, 1.0).unwrap();
        assert!(b.condition_ok);
        let expect = -0.9 * (0.02f64 / 0.9).log2() - 0.1 * (1.98f64 / 0.1).log2();
        assert!((b.bound1 - expect).abs() < 1e-12);
        assert!((b.bound1 - 4.512).abs() < 1e-3);
        assert!(b.bound2 <= b.bound1);
        let wide = mutual_info_lower_bounds(0.0, 0.9, 2.0, 1, 1.0).unwrap();
        assert!(!wide.condition_ok);
    }

    #[test]
    fn compositions_cover_simplex() {
        let mut seen = 0;
        for_each_composition(5, 3, &mut |c| {
            assert_eq!(c.iter().sum::<u64>(), 5);
            seen += 1;
        });
        assert_eq!(seen as u128, composition_count(5, 3));
        assert_eq!(composition_count(100, 2), 101);
    }

    #[test]
    fn prior_grid_shape() {
        assert_eq!(prior_grid(&[(0.0, 1.0)], 64).len(), 64);
        let g = prior_grid(&[(0.0, 1.0), (0.0, 2.0)], 64);
        assert_eq!(g.len(), 64);
        assert!((g[9][1] - 0.375).abs() < 1e-15 && (g[9][0] - 0.1875).abs() < 1e-15);
        assert_eq!(nearest_cell(&g[9], &[(0.0, 1.0), (0.0, 2.0)], 8), 9);
    }
}
