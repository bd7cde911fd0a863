//! Channels in Choi form and parametric channel families.
//!
//! A [`Channel`] stores its Choi operator `(C ⊗ I)(|I⟩⟩⟨⟨I|)` on `out ⊗ in`
//! with the unnormalized `|I⟩⟩ = Σ_k |k⟩|k⟩`, so `Tr_out Choi = I_in` and
//! `Tr Choi = d_in`.
//!
//! A [`ChannelFamily`] is a box `T = [a_1,b_1] × … × [a_v,b_v]` with a map
//! `t ↦ C_t`, optional analytic partial derivatives of the Choi operator and,
//! for Pauli families, the probability map `t ↦ p_t`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, kron, max_entangled, pauli_matrices, permute_subsystems, range_contained, support_contains,
    support_projector, tr_out, ComplexMatrix, C64,
};

/// Positivity tolerance for Choi operators.
pub const CHOI_PSD_TOL: f64 = 1e-9;
/// Tolerance on `‖Tr_out Choi − I‖_max`.
pub const CHOI_NORMALIZATION_TOL: f64 = 1e-8;
/// Tolerance for probability vectors.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// A quantum channel `L(H_in) → L(H_out)` in Choi form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    choi: ComplexMatrix,
}

impl Channel {
    /// Validates positivity and `Tr_out Choi = I_in`.
    pub fn new(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        let d = d_in * d_out;
        if d_in == 0 || d_out == 0 || choi.rows() != d || choi.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Choi operator of a {d_in}->{d_out} channel must be {d}x{d}, got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        let eig = eig_hermitian(&choi).map_err(|e| Error::InvalidChannel(format!("Choi operator: {e}")))?;
        let lmax = eig.values.last().copied().unwrap_or(0.0);
        if eig.values[0] < -CHOI_PSD_TOL * lmax.max(1.0) {
            return Err(Error::InvalidChannel(format!("Choi operator has eigenvalue {:.3e}", eig.values[0])));
        }
        let marg = tr_out(&choi, d_out, d_in)?;
        let resid = (&marg - &ComplexMatrix::identity(d_in)).max_abs();
        if resid > CHOI_NORMALIZATION_TOL {
            return Err(Error::InvalidChannel(format!("not trace preserving: ‖Tr_out Choi − I‖ = {resid:.3e}")));
        }
        Ok(Self { d_in, d_out, choi: choi.hermitian_part() })
    }

    pub(crate) fn from_parts_unchecked(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Self {
        Self { d_in, d_out, choi }
    }

    pub fn identity(d: usize) -> Self {
        let phi = max_entangled(d);
        Self { d_in: d, d_out: d, choi: ComplexMatrix::projector(&phi) }
    }

    /// Qubit Pauli channel `ρ ↦ Σ_k p_k σ_k ρ σ_k` with `p = (p_0, p_x, p_y, p_z)`.
    pub fn pauli(p: [f64; 4]) -> Result<Self> {
        check_probability(&p)?;
        let basis = pauli_choi_basis();
        let mut choi = ComplexMatrix::zeros(4, 4);
        for (k, b) in basis.iter().enumerate() {
            choi += &b.scale_real(p[k].max(0.0));
        }
        Ok(Self { d_in: 2, d_out: 2, choi })
    }

    /// Replacement channel `ρ ↦ Tr[ρ]·σ` on a `d_in`-dimensional input.
    pub fn replacement(sigma: &ComplexMatrix, d_in: usize) -> Result<Self> {
        Self::new(d_in, sigma.rows(), kron(sigma, &ComplexMatrix::identity(d_in)))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    /// `C(ρ)_{ab} = Σ_{ij} ρ_{ij}·Choi[(a,i),(b,j)]`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (di, d_o) = (self.d_in, self.d_out);
        if rho.rows() != di || rho.cols() != di {
            return Err(Error::DimensionMismatch(format!(
                "input of dimension {}x{} for a channel with d_in = {di}",
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(ComplexMatrix::from_fn(d_o, d_o, |a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..di {
                for j in 0..di {
                    acc += rho.get(i, j) * self.choi.get(a * di + i, b * di + j);
                }
            }
            acc
        }))
    }

    /// `(C ⊗ I)(|ψ⟩⟨ψ|)` for a vector `ψ ∈ H_in ⊗ H_in`.
    pub fn apply_extended(&self, psi: &[C64]) -> Result<ComplexMatrix> {
        let f = reshape_probe(psi, self.d_in)?;
        let k = kron(&ComplexMatrix::identity(self.d_out), &f);
        Ok(self.choi.sandwich(&k))
    }

    /// `(C ⊗ I_R)(|ψ⟩⟨ψ|)` for `ψ ∈ H_in ⊗ R` with an ancilla of any
    /// dimension `d_ref`. Output ordering is `out ⊗ R`.
    pub fn apply_with_reference(&self, psi: &[C64], d_ref: usize) -> Result<ComplexMatrix> {
        let (di, d_o) = (self.d_in, self.d_out);
        if d_ref == 0 || psi.len() != di * d_ref {
            return Err(Error::DimensionMismatch(format!(
                "probe of length {} for input dimension {di} and reference dimension {d_ref}",
                psi.len()
            )));
        }
        let mut out = ComplexMatrix::zeros(d_o * d_ref, d_o * d_ref);
        for a in 0..d_o {
            for b in 0..d_o {
                for i in 0..di {
                    for j in 0..di {
                        let c = self.choi.get(a * di + i, b * di + j);
                        if c == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for r in 0..d_ref {
                            let x = c * psi[i * d_ref + r];
                            for s in 0..d_ref {
                                let (row, col) = (a * d_ref + r, b * d_ref + s);
                                out.set(row, col, out.get(row, col) + x * psi[j * d_ref + s].conj());
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The operator `F` with `|ψ⟩ = (I ⊗ F)|I⟩⟩`, i.e. `F_{jk} = ψ_{kj}`.
pub(crate) fn reshape_probe(psi: &[C64], d_in: usize) -> Result<ComplexMatrix> {
    if psi.len() != d_in * d_in {
        return Err(Error::DimensionMismatch(format!(
            "probe of length {} for input dimension {d_in} (expected {})",
            psi.len(),
            d_in * d_in
        )));
    }
    Ok(ComplexMatrix::from_fn(d_in, d_in, |j, k| psi[k * d_in + j]))
}

/// `(I_out ⊗ F)·M·(I_out ⊗ F)†` for an operator `M` on `out ⊗ in`.
pub(crate) fn sandwich_probe(m: &ComplexMatrix, f: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    m.sandwich(&kron(&ComplexMatrix::identity(d_out), f))
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            d_in: usize,
            d_out: usize,
            choi: ComplexMatrix,
        }
        let raw = Raw::deserialize(deserializer)?;
        Channel::new(raw.d_in, raw.d_out, raw.choi).map_err(serde::de::Error::custom)
    }
}

fn check_probability(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -PROBABILITY_TOL) {
        return Err(Error::InvalidProbability(format!("component {x} in {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROBABILITY_TOL.max(1e-12 * p.len() as f64) {
        return Err(Error::InvalidProbability(format!("components of {p:?} sum to {s}")));
    }
    Ok(())
}

/// `|σ_k⟩⟩⟨⟨σ_k|` for `σ = I, X, Y, Z`.
pub fn pauli_choi_basis() -> [ComplexMatrix; 4] {
    static BASIS: OnceLock<[ComplexMatrix; 4]> = OnceLock::new();
    BASIS
        .get_or_init(|| {
            let phi = max_entangled(2);
            pauli_matrices().map(|s| {
                let v = kron(&s, &ComplexMatrix::identity(2)).matvec(&phi);
                ComplexMatrix::projector(&v)
            })
        })
        .clone()
}

/// Choi operator of `ρ ↦ Σ_k K_k ρ K_k†`.
pub fn choi_from_kraus(kraus: &[ComplexMatrix], d_in: usize, d_out: usize) -> Result<Channel> {
    if kraus.is_empty() {
        return Err(Error::InvalidChannel("empty Kraus set".into()));
    }
    let mut completeness = ComplexMatrix::zeros(d_in, d_in);
    for k in kraus {
        if k.rows() != d_out || k.cols() != d_in {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                k.rows(),
                k.cols()
            )));
        }
        completeness += &k.adjoint().matmul(k);
    }
    let resid = (&completeness - &ComplexMatrix::identity(d_in)).max_abs();
    if resid > 1e-9 {
        return Err(Error::InvalidChannel(format!("Kraus set is not trace preserving: residual {resid:.3e}")));
    }
    let phi = max_entangled(d_in);
    let mut choi = ComplexMatrix::zeros(d_out * d_in, d_out * d_in);
    for k in kraus {
        let v = kron(k, &ComplexMatrix::identity(d_in)).matvec(&phi);
        choi += &ComplexMatrix::projector(&v);
    }
    Ok(Channel::from_parts_unchecked(d_in, d_out, choi))
}

/// `A ⊗ B` with Choi factors reordered from `(out_A, in_A, out_B, in_B)` to
/// `(out_A, out_B, in_A, in_B)`.
pub fn tensor_channel(a: &Channel, b: &Channel) -> Channel {
    let raw = kron(&a.choi, &b.choi);
    let dims = [a.d_out, a.d_in, b.d_out, b.d_in];
    let choi = permute_subsystems(&raw, &dims, &[0, 2, 1, 3]).expect("consistent dimensions");
    Channel::from_parts_unchecked(a.d_in * b.d_in, a.d_out * b.d_out, choi)
}

/// `n`-fold tensor power.
pub fn tensor_power(c: &Channel, n: usize) -> Channel {
    assert!(n >= 1, "tensor power needs n ≥ 1");
    (1..n).fold(c.clone(), |acc, _| tensor_channel(&acc, c))
}

pub type EvalFn = dyn Fn(&[f64]) -> Result<Channel> + Send + Sync;
pub type DerivativeFn = dyn Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync;
pub type PauliMapFn = dyn Fn(&[f64]) -> [f64; 4] + Send + Sync;

/// Built-in family kinds; `Custom` for user-constructed families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Bitflip,
    Pauli,
    Depolarizing,
    Rotation,
    ConstantPure,
    Constant,
    Custom,
}

/// A parametric channel family `{C_t}_{t ∈ T}`.
#[derive(Clone)]
pub struct ChannelFamily {
    name: String,
    kind: FamilyKind,
    bounds: Vec<(f64, f64)>,
    d_in: usize,
    d_out: usize,
    eval: Arc<EvalFn>,
    derivative: Option<Arc<DerivativeFn>>,
    pauli_map: Option<Arc<PauliMapFn>>,
    unitary: bool,
    pub(crate) jr_max_cache: Arc<OnceLock<Result<(f64, Vec<f64>)>>>,
}

impl fmt::Debug for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelFamily")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("bounds", &self.bounds)
            .field("d_in", &self.d_in)
            .field("d_out", &self.d_out)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("unitary", &self.unitary)
            .finish()
    }
}

impl ChannelFamily {
    pub fn new(
        name: impl Into<String>,
        bounds: Vec<(f64, f64)>,
        d_in: usize,
        d_out: usize,
        eval: impl Fn(&[f64]) -> Result<Channel> + Send + Sync + 'static,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("a family needs at least one parameter".into()));
        }
        for &(a, b) in &bounds {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::InvalidArgument(format!("invalid interval [{a}, {b}]")));
            }
        }
        Ok(Self {
            name: name.into(),
            kind: FamilyKind::Custom,
            bounds,
            d_in,
            d_out,
            eval: Arc::new(eval),
            derivative: None,
            pauli_map: None,
            unitary: false,
            jr_max_cache: Arc::new(OnceLock::new()),
        })
    }

    /// Attaches analytic partial derivatives `(t, i) ↦ ∂_i Choi(C_t)`.
    pub fn with_derivative(
        mut self,
        derivative: impl Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self.jr_max_cache = Arc::new(OnceLock::new());
        self
    }

    /// Marks every member as a unitary channel.
    pub fn with_unitary_tag(mut self) -> Self {
        self.unitary = true;
        self
    }

    fn with_kind(mut self, kind: FamilyKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn v(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn is_pauli(&self) -> bool {
        self.pauli_map.is_some()
    }

    /// Lebesgue volume `|T|` of the box.
    pub fn box_volume(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| b - a).collect()
    }

    /// Closed-box membership with a `1e-12·width` allowance.
    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.v()
            && t.iter().zip(&self.bounds).all(|(&x, &(a, b))| {
                let slack = 1e-12 * (b - a).max(1.0);
                x.is_finite() && x >= a - slack && x <= b + slack
            })
    }

    fn check_point(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.v() {
            return Err(Error::DimensionMismatch(format!("point has {} coordinates, family has v = {}", t.len(), self.v())));
        }
        if !self.contains(t) {
            return Err(Error::OutOfBox(format!("{t:?} not in {:?}", self.bounds)));
        }
        Ok(())
    }

    /// `C_t` for `t` in the closed box.
    pub fn eval(&self, t: &[f64]) -> Result<Channel> {
        self.check_point(t)?;
        self.eval_unchecked(t)
    }

    pub(crate) fn eval_unchecked(&self, t: &[f64]) -> Result<Channel> {
        let c = (self.eval)(t)?;
        if c.d_in != self.d_in || c.d_out != self.d_out {
            return Err(Error::DimensionMismatch(format!(
                "family {} produced a {}->{} channel, declared {}->{}",
                self.name, c.d_in, c.d_out, self.d_in, self.d_out
            )));
        }
        Ok(c)
    }

    /// Pauli probability vector at `t`, for Pauli families.
    pub fn pauli_vector(&self, t: &[f64]) -> Option<[f64; 4]> {
        self.pauli_map.as_ref().map(|m| m(t))
    }

    /// `∂_i Choi(C_t)`: analytic when available, otherwise a Richardson
    /// extrapolated finite difference that stays inside the box.
    pub fn partial_derivative(&self, t: &[f64], i: usize) -> Result<ComplexMatrix> {
        self.check_point(t)?;
        if i >= self.v() {
            return Err(Error::InvalidArgument(format!("parameter index {i} for v = {}", self.v())));
        }
        if let Some(d) = &self.derivative {
            return d(t, i);
        }
        let mut dir = vec![0.0; self.v()];
        dir[i] = 1.0;
        let (a, b) = self.bounds[i];
        let h = 1e-4 * (b - a);
        if h == 0.0 {
            return Ok(ComplexMatrix::zeros(self.d_in * self.d_out, self.d_in * self.d_out));
        }
        let f = |x: &[f64]| self.eval_unchecked(x).map(|c| c.choi);
        let room_lo = t[i] - a;
        let room_hi = b - t[i];
        let one_sided = |sign: f64, h: f64| -> Result<ComplexMatrix> {
            // second-order one-sided stencil
            let p = |k: f64| shifted(t, &dir, sign * k * h);
            let f0 = f(t)?;
            let f1 = f(&p(1.0))?;
            let f2 = f(&p(2.0))?;
            Ok((f1.scale_real(4.0) - f0.scale_real(3.0) - f2).scale_real(sign / (2.0 * h)))
        };
        if room_lo >= h && room_hi >= h {
            Ok(richardson_central(&f, t, &dir, h)?.0)
        } else if room_hi >= 2.0 * h {
            one_sided(1.0, h)
        } else {
            one_sided(-1.0, h)
        }
    }
}

fn shifted(t: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    t.iter().zip(dir).map(|(x, d)| x + s * d).collect()
}

/// Central difference at `h` and `h/2` combined by one Richardson step.
/// Returns the extrapolated value and `‖D(h) − D(h/2)‖_max` as an error
/// estimate.
fn richardson_central(
    f: &dyn Fn(&[f64]) -> Result<ComplexMatrix>,
    t: &[f64],
    dir: &[f64],
    h: f64,
) -> Result<(ComplexMatrix, f64)> {
    let central = |h: f64| -> Result<ComplexMatrix> {
        Ok((f(&shifted(t, dir, h))? - f(&shifted(t, dir, -h))?).scale_real(0.5 / h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    let err = (&d1 - &d2).max_abs();
    Ok((d2.scale_real(4.0 / 3.0) - d1.scale_real(1.0 / 3.0), err))
}

/// Default finite-difference step: `1e-4` times the extent of the box along `dir`.
pub fn default_step(family: &ChannelFamily, dir: &[f64]) -> f64 {
    let extent = family
        .bounds
        .iter()
        .zip(dir)
        .filter(|(_, d)| d.abs() > 0.0)
        .map(|(&(a, b), d)| (b - a) / d.abs())
        .fold(f64::INFINITY, f64::min);
    if extent.is_finite() {
        1e-4 * extent
    } else {
        1e-4
    }
}

/// Directional derivative `Σ_i dir_i ∂_i Choi(C_t)`. Uses the analytic
/// derivative when present, otherwise the central difference with step `h`.
/// `t ± h·dir` must lie in the box.
pub fn choi_derivative(family: &ChannelFamily, t: &[f64], dir: &[f64], h: f64) -> Result<ComplexMatrix> {
    if dir.len() != family.v() || t.len() != family.v() {
        return Err(Error::DimensionMismatch("point and direction must have v coordinates".into()));
    }
    let plus = shifted(t, dir, h);
    let minus = shifted(t, dir, -h);
    if !family.contains(&plus) || !family.contains(&minus) {
        return Err(Error::OutOfBox(format!("t ± h·dir leaves the box (t = {t:?}, h = {h})")));
    }
    if let Some(d) = &family.derivative {
        let dim = family.d_in * family.d_out;
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (i, &w) in dir.iter().enumerate() {
            if w != 0.0 {
                acc += &d(t, i)?.scale_real(w);
            }
        }
        return Ok(acc);
    }
    let a = family.eval(&plus)?;
    let b = family.eval(&minus)?;
    Ok((&a.choi - &b.choi).scale_real(0.5 / h))
}

/// All partial derivatives `∂_1 Choi, …, ∂_v Choi` at `t`.
pub fn choi_gradient(family: &ChannelFamily, t: &[f64]) -> Result<Vec<ComplexMatrix>> {
    (0..family.v()).map(|i| family.partial_derivative(t, i)).collect()
}

fn grid_points(bounds: &[(f64, f64)], per_axis: usize, cap: usize) -> Vec<Vec<f64>> {
    let v = bounds.len();
    let total = (per_axis as f64).powi(v as i32);
    if total <= cap as f64 {
        let total = total as usize;
        (0..total)
            .map(|mut idx| {
                let mut point = vec![0.0; v];
                for axis in (0..v).rev() {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    let (a, b) = bounds[axis];
                    point[axis] = a + (b - a) * (k as f64 + 0.5) / per_axis as f64;
                }
                point
            })
            .collect()
    } else {
        (0..cap)
            .map(|k| {
                bounds
                    .iter()
                    .enumerate()
                    .map(|(axis, &(a, b))| a + (b - a) * halton(k + 1, nth_prime(axis)))
                    .collect()
            })
            .collect()
    }
}

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn nth_prime(n: usize) -> usize {
    let mut count = 0;
    let mut k = 1;
    loop {
        k += 1;
        if (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0) {
            if count == n {
                return k;
            }
            count += 1;
        }
    }
}

/// Points used for the condition checks: cell midpoints of a 10-per-axis
/// grid when that is at most 1000 points, else 1000 Halton points.
pub fn condition_sample_points(family: &ChannelFamily) -> Vec<Vec<f64>> {
    grid_points(&family.bounds, 10, 1000)
}

/// Constant support of `Choi(C_t)` over the box (sampled): every sample's
/// support equals the first sample's support.
pub fn check_condition_support_constant(family: &ChannelFamily, extra_points: &[Vec<f64>]) -> Result<bool> {
    let mut points = condition_sample_points(family);
    points.extend(extra_points.iter().cloned());
    let mut reference = None;
    for t in &points {
        let proj = support_projector(family.eval(t)?.choi(), None)?;
        match &reference {
            None => reference = Some(proj),
            Some(r) => {
                if !(support_contains(r, &proj) && support_contains(&proj, r)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Support of each directional derivative inside the support of
/// `Choi(C_t)`. With no directions, the coordinate axes are used, which
/// covers every direction by linearity.
pub fn check_condition_derivative_support(family: &ChannelFamily, t: &[f64], directions: &[Vec<f64>]) -> Result<bool> {
    let proj = support_projector(family.eval(t)?.choi(), None)?;
    let grads = choi_gradient(family, t)?;
    let axes: Vec<Vec<f64>> = (0..family.v())
        .map(|i| (0..family.v()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dirs = if directions.is_empty() { &axes[..] } else { directions };
    for dir in dirs {
        if dir.len() != family.v() {
            return Err(Error::DimensionMismatch("direction must have v coordinates".into()));
        }
        let dim = family.d_in * family.d_out;
        let mut d = ComplexMatrix::zeros(dim, dim);
        for (g, &w) in grads.iter().zip(dir) {
            d += &g.scale_real(w);
        }
        if !range_contained(&proj, &d) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pauli family from a probability map. The map is validated on the box
/// corners and a sample grid; derivatives are central differences of the
/// 4-vector, which are exact for affine maps.
pub fn pauli_family(
    name: impl Into<String>,
    map: impl Fn(&[f64]) -> [f64; 4] + Send + Sync + 'static,
    bounds: Vec<(f64, f64)>,
) -> Result<ChannelFamily> {
    let map: Arc<PauliMapFn> = Arc::new(map);
    let mut probes = grid_points(&bounds, 10, 1000);
    let v = bounds.len();
    for mask in 0..(1usize << v.min(16)) {
        probes.push(bounds.iter().enumerate().map(|(i, &(a, b))| if mask >> i & 1 == 1 { b } else { a }).collect());
    }
    for t in &probes {
        check_probability(&map(t)).map_err(|e| match e {
            Error::InvalidProbability(m) => Error::InvalidProbability(format!("at t = {t:?}: {m}")),
            other => other,
        })?;
    }
    let widths: Vec<f64> = bounds.iter().map(|(a, b)| b - a).collect();
    let eval_map = map.clone();
    let deriv_map = map.clone();
    let family = ChannelFamily::new(name, bounds, 2, 2, move |t| Channel::pauli(eval_map(t)))?.with_derivative(
        move |t, i| {
            let h = 1e-5 * widths[i].max(1e-3);
            let mut up = t.to_vec();
            let mut down = t.to_vec();
            up[i] += h;
            down[i] -= h;
            let (pu, pd) = (deriv_map(&up), deriv_map(&down));
            let basis = pauli_choi_basis();
            let mut acc = ComplexMatrix::zeros(4, 4);
            for k in 0..4 {
                acc += &basis[k].scale_real((pu[k] - pd[k]) / (2.0 * h));
            }
            Ok(acc)
        },
    );
    Ok(ChannelFamily { pauli_map: Some(map), ..family.with_kind(FamilyKind::Pauli) })
}

/// Affine Pauli family `p_t = p0 + Σ_i t_i·coefficients[i]`.
pub fn pauli_affine(
    name: impl Into<String>,
    p0: [f64; 4],
    coefficients: Vec<[f64; 4]>,
    bounds: Vec<(f64, f64)>,
) -> Result<ChannelFamily> {
    if coefficients.len() != bounds.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient rows for {} parameters",
            coefficients.len(),
            bounds.len()
        )));
    }
    pauli_family(
        name,
        move |t| {
            let mut p = p0;
            for (ti, c) in t.iter().zip(&coefficients) {
                for k in 0..4 {
                    p[k] += ti * c[k];
                }
            }
            p
        },
        bounds,
    )
}

/// Bit-flip family `t ↦ (1−t, t, 0, 0)` on `[a, b]`.
pub fn bitflip(a: f64, b: f64) -> Result<ChannelFamily> {
    Ok(pauli_affine("bitflip", [1.0, 0.0, 0.0, 0.0], vec![[-1.0, 1.0, 0.0, 0.0]], vec![(a, b)])?
        .with_kind(FamilyKind::Bitflip))
}

/// The `v`-parameter Pauli family `t ↦ (1 − Σ t_i, t_1, …, t_v, 0, …)`, `v ≤ 3`.
pub fn pauli_simplex(bounds: Vec<(f64, f64)>) -> Result<ChannelFamily> {
    let v = bounds.len();
    if v == 0 || v > 3 {
        return Err(Error::InvalidArgument(format!("Pauli simplex family needs 1 ≤ v ≤ 3, got {v}")));
    }
    let coefficients = (0..v)
        .map(|i| {
            let mut c = [-1.0, 0.0, 0.0, 0.0];
            c[i + 1] = 1.0;
            c
        })
        .collect();
    pauli_affine("pauli", [1.0, 0.0, 0.0, 0.0], coefficients, bounds)
}

/// Depolarizing family `t ↦ (1 − 3t/4, t/4, t/4, t/4)` on `[a, b]`.
pub fn depolarizing(a: f64, b: f64) -> Result<ChannelFamily> {
    Ok(pauli_affine("depolarizing", [1.0, 0.0, 0.0, 0.0], vec![[-0.75, 0.25, 0.25, 0.25]], vec![(a, b)])?
        .with_kind(FamilyKind::Depolarizing))
}

fn rotation_vectors(theta: f64) -> (Vec<C64>, Vec<C64>) {
    // U = exp(−iθZ/2) = diag(e^{−iθ/2}, e^{iθ/2}); |U⟩⟩ = (U ⊗ I)|I⟩⟩
    let e = C64::from_polar(1.0, -theta / 2.0);
    let u = vec![e, C64::new(0.0, 0.0), C64::new(0.0, 0.0), e.conj()];
    let i = C64::new(0.0, 1.0);
    let du = vec![-i * 0.5 * u[0], u[1], u[2], i * 0.5 * u[3]];
    (u, du)
}

/// Z-rotation family `ρ ↦ U_θ ρ U_θ†`, `U_θ = exp(−iθZ/2)`.
pub fn rotation(a: f64, b: f64) -> Result<ChannelFamily> {
    let fam = ChannelFamily::new("rotation", vec![(a, b)], 2, 2, |t| {
        let (u, _) = rotation_vectors(t[0]);
        Ok(Channel::from_parts_unchecked(2, 2, ComplexMatrix::projector(&u)))
    })?
    .with_derivative(|t, _| {
        let (u, du) = rotation_vectors(t[0]);
        Ok(ComplexMatrix::outer(&du, &u) + ComplexMatrix::outer(&u, &du))
    })
    .with_unitary_tag();
    Ok(fam.with_kind(FamilyKind::Rotation))
}

/// Constant-pure-output family `ρ ↦ Tr[ρ]·|ψ_t⟩⟨ψ_t|`,
/// `ψ_t = cos t|0⟩ + sin t|1⟩`.
pub fn constant_pure(a: f64, b: f64) -> Result<ChannelFamily> {
    let state = |t: f64| vec![C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)];
    let dstate = |t: f64| vec![C64::new(-t.sin(), 0.0), C64::new(t.cos(), 0.0)];
    let fam = ChannelFamily::new("constant_pure", vec![(a, b)], 2, 2, move |t| {
        let psi = ComplexMatrix::projector(&state(t[0]));
        Ok(Channel::from_parts_unchecked(2, 2, kron(&psi, &ComplexMatrix::identity(2))))
    })?
    .with_derivative(move |t, _| {
        let (s, ds) = (state(t[0]), dstate(t[0]));
        let d = ComplexMatrix::outer(&ds, &s) + ComplexMatrix::outer(&s, &ds);
        Ok(kron(&d, &ComplexMatrix::identity(2)))
    });
    Ok(fam.with_kind(FamilyKind::ConstantPure))
}

/// Family whose members all equal `channel`.
pub fn constant(channel: Channel, bounds: Vec<(f64, f64)>) -> Result<ChannelFamily> {
    let (d_in, d_out) = (channel.d_in, channel.d_out);
    let dim = d_in * d_out;
    let fam = ChannelFamily::new("constant", bounds, d_in, d_out, move |_| Ok(channel.clone()))?
        .with_derivative(move |_, _| Ok(ComplexMatrix::zeros(dim, dim)));
    Ok(fam.with_kind(FamilyKind::Constant))
}
