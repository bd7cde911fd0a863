//! The 2-Rényi divergence `D₂(ρ‖σ) = log₂ Tr[ρ²σ⁻¹]` for states and channels.
//!
//! For channels with Choi operators `A`, `B` and `supp A ⊆ supp B`,
//!
//! ```text
//! D₂(A‖B) = log₂ ‖Tr_out[A B⁻¹ A]‖_∞ = log₂(1 + ‖Tr_out[(A−B) B⁻¹ (A−B)]‖_∞)
//! ```
//!
//! The second form is used for the reported value because it keeps full
//! relative precision when the two channels are close. The variational route
//! maximizes the state divergence of `(A⊗I)(ψ)` against `(B⊗I)(ψ)` over pure
//! inputs and is never larger than the closed form.
//!
//! All values are in bits.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::channels::{reshape_probe, sandwich_probe, tensor_channel, Channel};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, max_entangled, normalize, op_norm_inf, pinv_from_eigen, support_contains, tr_out, ComplexMatrix,
    SupportProjector, C64, DEFAULT_PINV_REL_TOL,
};
use crate::optimize::{maximize_pure, AscentOptions};

/// `log₂ e`.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;
/// Allowed excess of the variational value over the closed form.
pub const VARIATIONAL_SLACK: f64 = 1e-7;
/// Default number of restarts for variational optimizations.
pub const DEFAULT_RESTARTS: usize = 64;
/// Weight outside `supp σ` above which `D₂(ρ‖σ)` is reported infinite.
pub const STATE_SUPPORT_TOL: f64 = 1e-9;
/// Variational inputs whose reduced state has an eigenvalue below this are
/// skipped. Close to rank-deficient inputs the output pair is ill-conditioned
/// and round-off inflates `Tr[ρ²σ⁻¹]`; the objective is continuous, so the
/// supremum moves by `O(floor)`.
pub const SCHMIDT_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Variational,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub value_bits: f64,
    pub method: Method,
    /// Input state attaining `value_bits` (variational method only).
    pub witness: Option<Vec<C64>>,
    pub restarts_used: usize,
    /// Set when an eigenvalue of the second argument lies within three
    /// decades of the support cutoff.
    pub marginal_support: bool,
}

fn is_marginal(values: &[f64], cutoff: f64) -> bool {
    cutoff > 0.0 && values.iter().any(|&l| l.abs() > cutoff * 1e-3 && l.abs() < cutoff * 1e3)
}

fn check_square_pair(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() || rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(Error::DimensionMismatch(format!(
            "states of shape {}x{} and {}x{}",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    Ok(())
}

/// `Tr[ρ²σ⁺]` with the support condition checked as `Tr[(I − P_σ)ρ] ≤ 1e-9·Tr ρ`.
fn state_collision(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_square_pair(rho, sigma)?;
    let eig = eig_hermitian(sigma)?;
    let support = SupportProjector::from_eigen(&eig, None);
    let inside = rho.trace_product(&support.projector).re;
    let leak = rho.trace().re - inside;
    if leak > STATE_SUPPORT_TOL * rho.trace().re.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::InfiniteDivergence(format!("weight {leak:.3e} outside the support of σ")));
    }
    let inv = pinv_from_eigen(&eig, DEFAULT_PINV_REL_TOL);
    Ok(rho.matmul(rho).trace_product(&inv).re)
}

/// `D₂(ρ‖σ) = log₂ Tr[ρ²σ⁻¹]` in bits.
pub fn d2_states(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let q = state_collision(rho, sigma)?;
    let value = q.log2();
    Ok(if value < 0.0 && value > -1e-12 { 0.0 } else { value })
}

/// Intermediate quantities of the closed form.
#[derive(Clone, Debug)]
pub struct ClosedFormParts {
    /// `Tr_out[A B⁺ A]`.
    pub collision: ComplexMatrix,
    /// `Tr_out[(A−B) B⁺ (A−B)]`.
    pub excess: ComplexMatrix,
    pub value_bits: f64,
    pub marginal_support: bool,
}

fn check_same_shape(a: &Channel, b: &Channel) -> Result<()> {
    if a.d_in() != b.d_in() || a.d_out() != b.d_out() {
        return Err(Error::DimensionMismatch(format!(
            "channels {}->{} and {}->{}",
            a.d_in(),
            a.d_out(),
            b.d_in(),
            b.d_out()
        )));
    }
    Ok(())
}

/// Support check and both closed-form operators.
pub fn closed_form_parts(a: &Channel, b: &Channel) -> Result<ClosedFormParts> {
    check_same_shape(a, b)?;
    let eig_b = eig_hermitian(b.choi())?;
    let support_b = SupportProjector::from_eigen(&eig_b, None);
    let support_a = SupportProjector::from_eigen(&eig_hermitian(a.choi())?, None);
    if !support_contains(&support_b, &support_a) {
        return Err(Error::InfiniteDivergence("support of Choi(B) does not contain support of Choi(A)".into()));
    }
    let inv = pinv_from_eigen(&eig_b, DEFAULT_PINV_REL_TOL);
    let (d_in, d_out) = (a.d_in(), a.d_out());
    let collision = tr_out(&a.choi().matmul(&inv).matmul(a.choi()), d_out, d_in)?.hermitian_part();
    let diff = a.choi() - b.choi();
    let excess = tr_out(&diff.matmul(&inv).matmul(&diff), d_out, d_in)?.hermitian_part();
    let value_bits = op_norm_inf(&excess).ln_1p() / LN_2;
    let lmax = eig_b.values.last().copied().unwrap_or(0.0);
    Ok(ClosedFormParts {
        collision,
        excess,
        value_bits,
        marginal_support: is_marginal(&eig_b.values, support_b.tolerance.max(DEFAULT_PINV_REL_TOL * lmax)),
    })
}

/// Closed-form channel divergence `log₂ ‖Tr_out[A B⁻¹ A]‖_∞`.
pub fn d2_channels_closed(a: &Channel, b: &Channel) -> Result<DivergenceReport> {
    let parts = closed_form_parts(a, b)?;
    Ok(DivergenceReport {
        value_bits: parts.value_bits,
        method: Method::ClosedForm,
        witness: None,
        restarts_used: 0,
        marginal_support: parts.marginal_support,
    })
}

/// Convenience wrapper returning only the closed-form value in bits.
pub fn d2_channels(a: &Channel, b: &Channel) -> Result<f64> {
    Ok(closed_form_parts(a, b)?.value_bits)
}

/// `D₂((A⊗I)(ψ) ‖ (B⊗I)(ψ))` for a pure input `ψ ∈ H_in ⊗ H_in`.
pub fn d2_for_input(a: &Channel, b: &Channel, psi: &[C64]) -> Result<f64> {
    check_same_shape(a, b)?;
    let f = reshape_probe(psi, a.d_in())?;
    let rho = sandwich_probe(a.choi(), &f, a.d_out());
    let sigma = sandwich_probe(b.choi(), &f, b.d_out());
    d2_states(&rho, &sigma)
}

/// Multistart maximization of [`d2_for_input`]. Restart 0 starts at the
/// normalized maximally entangled state. Candidates whose output pair
/// violates the support condition, or whose reduced input state falls below
/// [`SCHMIDT_FLOOR`], are skipped. The result is checked against
/// the closed form.
pub fn d2_channels_variational(a: &Channel, b: &Channel, restarts: usize, seed: u64) -> Result<DivergenceReport> {
    check_same_shape(a, b)?;
    let closed = d2_channels_closed(a, b)?;
    let d = a.d_in();
    let mut phi = max_entangled(d);
    normalize(&mut phi);
    let best = maximize_pure(d * d, restarts, seed, Some(phi), AscentOptions::default(), |psi| {
        let f = reshape_probe(psi, d).ok()?;
        let reduced = eig_hermitian(&f.adjoint().matmul(&f)).ok()?;
        if reduced.values[0] < SCHMIDT_FLOOR {
            return None;
        }
        d2_for_input(a, b, psi).ok()
    })
    .ok_or_else(|| Error::InfiniteDivergence("no admissible input state found".into()))?;
    if best.value > closed.value_bits + VARIATIONAL_SLACK {
        return Err(Error::InvariantViolation(format!(
            "variational D₂ {} exceeds closed form {}",
            best.value, closed.value_bits
        )));
    }
    Ok(DivergenceReport {
        value_bits: best.value.max(0.0),
        method: Method::Variational,
        witness: Some(best.state),
        restarts_used: best.restarts_used,
        marginal_support: closed.marginal_support,
    })
}

/// `λ_min(Tr_out[A B⁻¹ A])`; at least `1` for valid channel pairs.
pub fn collision_min_eigenvalue(a: &Channel, b: &Channel) -> Result<f64> {
    let parts = closed_form_parts(a, b)?;
    Ok(eig_hermitian(&parts.collision)?.values[0])
}

/// `|(2^{D₂} − 1) − ‖Tr_out[(A−B)B⁻¹(A−B)]‖_∞|` with `D₂` taken from the
/// `A B⁻¹ A` form.
pub fn collision_excess_residual(a: &Channel, b: &Channel) -> Result<f64> {
    let parts = closed_form_parts(a, b)?;
    let lhs = op_norm_inf(&parts.collision) - 1.0;
    let rhs = op_norm_inf(&parts.excess);
    Ok((lhs - rhs).abs())
}

/// `|D₂(a1⊗b1 ‖ a2⊗b2) − D₂(a1‖a2) − D₂(b1‖b2)|`.
pub fn check_additivity(a1: &Channel, a2: &Channel, b1: &Channel, b2: &Channel) -> Result<f64> {
    let joint = d2_channels(&tensor_channel(a1, b1), &tensor_channel(a2, b2))?;
    Ok((joint - d2_channels(a1, a2)? - d2_channels(b1, b2)?).abs())
}

/// `min(2, sqrt((2n / log₂ e)·D₂))` for `D₂` in bits.
pub fn pinsker_from_d2(d2_bits: f64, n: u64) -> f64 {
    (2.0 * n as f64 / LOG2_E * d2_bits.max(0.0)).sqrt().min(2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PinskerBound {
    pub value: f64,
    /// The support condition failed and `value` is the trivial bound 2.
    pub support_violated: bool,
}

/// Upper bound on `‖a^{⊗n} − b^{⊗n}‖_⋄` via Pinsker and additivity of `D₂`.
pub fn pinsker_error_upper_bound(a: &Channel, b: &Channel, n: u64) -> Result<PinskerBound> {
    match d2_channels(a, b) {
        Ok(d2) => Ok(PinskerBound { value: pinsker_from_d2(d2, n), support_violated: false }),
        Err(e) if e.is_infinite_signal() => Ok(PinskerBound { value: 2.0, support_violated: true }),
        Err(e) => Err(e),
    }
}
