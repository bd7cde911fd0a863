//! RLD and SLD Fisher information.
//!
//! For a state family `ρ_t` the RLD Fisher matrix is
//! `J^R_ij = Tr[∂_iρ · ρ⁻¹ · ∂_jρ]` (support-restricted inverse); the SLD
//! matrix solves `∂_iρ = (L_iρ + ρL_i)/2` in the eigenbasis of `ρ`. Both are
//! returned as real symmetric `v×v` matrices (the real part of the Hermitian
//! RLD matrix, which is what real parameter directions see).
//!
//! For a channel family, the RLD Fisher information norm is
//!
//! ```text
//! J^R_C = max_{‖s‖=1} ‖Σ_ij s_i s_j M_ij‖_∞,   M_ij = Tr_out[∂_iC · C⁻¹ · ∂_jC]
//! ```
//!
//! with `C = Choi(C_t)`. It is infinite (signalled by [`Error::InfiniteFisher`])
//! when the range of some `∂_iC` leaves the support of `C`.
//!
//! Fisher quantities are base-free (natural units). The only conversion to
//! bits is in [`taylor_check_d2`], which compares against `D₂` in bits.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    check_condition_derivative_support, check_condition_support_constant, choi_gradient, condition_sample_points,
    reshape_probe, sandwich_probe, ChannelFamily,
};
use crate::divergences::{d2_channels, LOG2_E};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, max_entangled, normalize, pinv_from_eigen, range_contained, tr_out, ComplexMatrix, SupportProjector,
    C64, DEFAULT_PINV_REL_TOL,
};
use crate::optimize::{maximize_pure, AscentOptions};
use crate::sampling::rng_for;

/// Real `v×v` matrix, row-major as nested vectors.
pub type RealMatrix = Vec<Vec<f64>>;

/// Values above this are treated as a diverging `sup_T J^R`.
pub const JR_MAX_DIVERGENCE: f64 = 1e12;

type StateEval = dyn Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync;
type StateDerivative = dyn Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync;

/// A parametric family of density matrices `t ↦ ρ_t`.
#[derive(Clone)]
pub struct StateFamily {
    v: usize,
    eval: Arc<StateEval>,
    derivative: Option<Arc<StateDerivative>>,
}

impl StateFamily {
    pub fn new(v: usize, eval: impl Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync + 'static) -> Self {
        Self { v, eval: Arc::new(eval), derivative: None }
    }

    pub fn with_derivative(mut self, d: impl Fn(&[f64], usize) -> Result<ComplexMatrix> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Output family `t ↦ (C_t ⊗ I)(|ψ⟩⟨ψ|)` of a channel family on a fixed
    /// pure probe, with derivatives inherited from the Choi derivatives.
    pub fn from_channel_family(family: &ChannelFamily, probe: &[C64]) -> Result<Self> {
        let f = reshape_probe(probe, family.d_in())?;
        let d_out = family.d_out();
        let (fam_e, fam_d, f_e, f_d) = (family.clone(), family.clone(), f.clone(), f);
        Ok(Self::new(family.v(), move |t| Ok(sandwich_probe(fam_e.eval(t)?.choi(), &f_e, d_out)))
            .with_derivative(move |t, i| Ok(sandwich_probe(&fam_d.partial_derivative(t, i)?, &f_d, d_out))))
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn eval(&self, t: &[f64]) -> Result<ComplexMatrix> {
        (self.eval)(t)
    }

    /// `∂_iρ_t`: analytic if available, else a central difference with step `h`.
    pub fn derivative(&self, t: &[f64], i: usize, h: f64) -> Result<ComplexMatrix> {
        if let Some(d) = &self.derivative {
            return d(t, i);
        }
        let mut up = t.to_vec();
        let mut down = t.to_vec();
        up[i] += h;
        down[i] -= h;
        Ok((self.eval(&up)? - self.eval(&down)?).scale_real(0.5 / h))
    }
}

fn real_part_matrix(entries: &[C64], v: usize) -> RealMatrix {
    (0..v).map(|i| (0..v).map(|j| 0.5 * (entries[i * v + j].re + entries[j * v + i].re)).collect()).collect()
}

fn real_to_complex(m: &RealMatrix) -> ComplexMatrix {
    let v = m.len();
    ComplexMatrix::from_fn(v, v, |i, j| C64::new(m[i][j], 0.0))
}

/// Eigenvalues (ascending) of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &RealMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(&real_to_complex(m))?.values)
}

/// RLD Fisher matrix of a state family at `t`.
pub fn rld_fisher_states(family: &StateFamily, t: &[f64], h: f64) -> Result<RealMatrix> {
    let rho = family.eval(t)?;
    let eig = eig_hermitian(&rho)?;
    let support = SupportProjector::from_eigen(&eig, None);
    let inv = pinv_from_eigen(&eig, DEFAULT_PINV_REL_TOL);
    let v = family.v();
    let derivs: Vec<ComplexMatrix> = (0..v).map(|i| family.derivative(t, i, h)).collect::<Result<_>>()?;
    for (i, d) in derivs.iter().enumerate() {
        if !range_contained(&support, d) {
            return Err(Error::InfiniteFisher(format!("∂_{i}ρ leaves the support of ρ")));
        }
    }
    let left: Vec<ComplexMatrix> = derivs.iter().map(|d| d.matmul(&inv)).collect();
    let mut entries = vec![C64::new(0.0, 0.0); v * v];
    for i in 0..v {
        for j in 0..v {
            entries[i * v + j] = left[i].trace_product(&derivs[j]);
        }
    }
    Ok(real_part_matrix(&entries, v))
}

/// SLD Fisher matrix of a state family at `t`.
pub fn sld_fisher_states(family: &StateFamily, t: &[f64], h: f64) -> Result<RealMatrix> {
    let rho = family.eval(t)?;
    let eig = eig_hermitian(&rho)?;
    let n = rho.rows();
    let lmax = eig.max_abs_value();
    let tol = 1e-10 * lmax.max(f64::MIN_POSITIVE);
    let u = &eig.vectors;
    let v = family.v();
    let mut slds = Vec::with_capacity(v);
    for i in 0..v {
        let d = u.adjoint().matmul(&family.derivative(t, i, h)?).matmul(u);
        let scale = d.max_abs().max(1.0);
        let mut l = ComplexMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let s = eig.values[a] + eig.values[b];
                if s > tol {
                    l.set(a, b, d.get(a, b) * (2.0 / s));
                } else if d.get(a, b).norm() > 1e-7 * scale {
                    return Err(Error::InfiniteFisher(format!("∂_{i}ρ has weight on the kernel of ρ")));
                }
            }
        }
        slds.push(l);
    }
    let mut out = vec![vec![0.0; v]; v];
    for i in 0..v {
        for j in 0..v {
            let lij = slds[i].matmul(&slds[j]);
            out[i][j] = (0..n).map(|a| eig.values[a] * lij.get(a, a).re).sum();
        }
    }
    Ok((0..v).map(|i| (0..v).map(|j| 0.5 * (out[i][j] + out[j][i])).collect()).collect())
}

/// Quantum Fisher information of `e^{−iθH}|ψ⟩`: `4(⟨H²⟩ − ⟨H⟩²)`.
pub fn qfi_pure_phase(probe: &[C64], generator: &ComplexMatrix) -> Result<f64> {
    if generator.rows() != probe.len() || !generator.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "probe of length {} and generator {}x{}",
            probe.len(),
            generator.rows(),
            generator.cols()
        )));
    }
    let norm: f64 = probe.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("probe has squared norm {norm}")));
    }
    let hpsi = generator.matvec(probe);
    let mean: f64 = probe.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum();
    let second: f64 = hpsi.iter().map(|z| z.norm_sqr()).sum();
    Ok(4.0 * (second - mean * mean))
}

/// The tensor `M_ij = Tr_out[∂_iC · C⁻¹ · ∂_jC]`, stored row-major with
/// `M_ji = M_ij†`.
#[derive(Clone, Debug)]
pub struct QuadraticFormTensor {
    pub v: usize,
    pub entries: Vec<ComplexMatrix>,
}

impl QuadraticFormTensor {
    pub fn get(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.entries[i * self.v + j]
    }

    /// `Σ_ij s_i s_j M_ij`.
    pub fn direction_operator(&self, s: &[f64]) -> ComplexMatrix {
        let d = self.entries[0].rows();
        let mut acc = ComplexMatrix::zeros(d, d);
        for i in 0..self.v {
            for j in 0..self.v {
                let w = s[i] * s[j];
                if w != 0.0 {
                    acc += &self.get(i, j).scale_real(w);
                }
            }
        }
        acc.hermitian_part()
    }

    /// `‖Σ_ij s_i s_j M_ij‖_∞` (the operator is PSD, so this is its top eigenvalue).
    pub fn value(&self, s: &[f64]) -> f64 {
        lambda_max(&self.direction_operator(s))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|m| m.max_abs() == 0.0)
    }
}

/// Largest eigenvalue of a Hermitian matrix; closed form for 2×2.
fn lambda_max(m: &ComplexMatrix) -> f64 {
    if m.rows() == 2 {
        let (a, d, b) = (m.get(0, 0).re, m.get(1, 1).re, m.get(0, 1));
        let half = 0.5 * (a - d);
        return 0.5 * (a + d) + (half * half + b.norm_sqr()).sqrt();
    }
    eig_hermitian(m).map(|e| e.values.last().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
}

/// Builds `M_ij` at `t` after checking that each `∂_iC` stays in the support
/// of `C`.
pub fn quadratic_form_tensor(family: &ChannelFamily, t: &[f64]) -> Result<QuadraticFormTensor> {
    let choi = family.eval(t)?;
    let eig = eig_hermitian(choi.choi())?;
    let support = SupportProjector::from_eigen(&eig, None);
    let grads = choi_gradient(family, t)?;
    for (i, g) in grads.iter().enumerate() {
        if !range_contained(&support, g) {
            return Err(Error::InfiniteFisher(format!(
                "∂_{i}Choi leaves the support of Choi(C_t) at t = {t:?}"
            )));
        }
    }
    let inv = pinv_from_eigen(&eig, DEFAULT_PINV_REL_TOL);
    let (d_in, d_out) = (family.d_in(), family.d_out());
    let v = family.v();
    let left: Vec<ComplexMatrix> = grads.iter().map(|g| g.matmul(&inv)).collect();
    let mut entries = vec![ComplexMatrix::zeros(d_in, d_in); v * v];
    for i in 0..v {
        for j in i..v {
            let m = tr_out(&left[i].matmul(&grads[j]), d_out, d_in)?;
            if i == j {
                entries[i * v + j] = m.hermitian_part();
            } else {
                let other = tr_out(&left[j].matmul(&grads[i]), d_out, d_in)?;
                let sym = (&m + &other.adjoint()).scale_real(0.5);
                entries[j * v + i] = sym.adjoint();
                entries[i * v + j] = sym;
            }
        }
    }
    Ok(QuadraticFormTensor { v, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    ChoiClosed,
    Variational,
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherReport {
    pub value: f64,
    pub direction: Vec<f64>,
    pub method: FisherMethod,
    pub grid_resolution: usize,
    pub restarts: usize,
}

/// Sphere search settings for [`rld_norm_channel`].
#[derive(Clone, Copy, Debug)]
pub struct SphereOptions {
    pub directions: usize,
    pub refine_best: usize,
    pub refine_steps: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self { directions: 10_000, refine_best: 10, refine_steps: 50 }
    }
}

impl SphereOptions {
    /// Reduced settings used inside box-wide sweeps.
    pub fn coarse() -> Self {
        Self { directions: 400, refine_best: 3, refine_steps: 20 }
    }
}

/// Directions covering the unit sphere up to sign: a half circle for `v = 2`,
/// a Fibonacci lattice on the upper hemisphere for `v = 3`, seeded Gaussian
/// directions otherwise.
pub fn sphere_directions(v: usize, count: usize) -> Vec<Vec<f64>> {
    match v {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = rng_for(0x5F3E, v as u64);
            (0..count)
                .map(|_| {
                    let mut s: Vec<f64> = (0..v).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = s.iter().map(|x| x * x).sum::<f64>().sqrt();
                    s.iter_mut().for_each(|x| *x /= n);
                    s
                })
                .collect()
        }
    }
}

fn unit(mut s: Vec<f64>) -> Vec<f64> {
    let n = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.iter_mut().for_each(|x| *x /= n);
    s
}

/// Projected-gradient refinement on the sphere with step halving.
fn refine_direction(q: &QuadraticFormTensor, start: &[f64], steps: usize) -> (f64, Vec<f64>) {
    let mut s = start.to_vec();
    let mut f = q.value(&s);
    let mut step = 0.05;
    let h = 1e-7;
    for _ in 0..steps {
        let mut g: Vec<f64> = (0..s.len())
            .map(|k| {
                let mut up = s.clone();
                let mut down = s.clone();
                up[k] += h;
                down[k] -= h;
                (q.value(&unit(up)) - q.value(&unit(down))) / (2.0 * h)
            })
            .collect();
        let radial: f64 = g.iter().zip(&s).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(&s).for_each(|(a, b)| *a -= radial * b);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-14 {
            break;
        }
        let mut moved = false;
        while step > 1e-12 {
            let cand = unit(s.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect());
            let fc = q.value(&cand);
            if fc > f {
                s = cand;
                f = fc;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (f, s)
}

fn maximize_on_sphere(q: &QuadraticFormTensor, opts: SphereOptions) -> (f64, Vec<f64>) {
    if q.v == 1 {
        return (q.value(&[1.0]), vec![1.0]);
    }
    let dirs = sphere_directions(q.v, opts.directions.max(1));
    let mut scored: Vec<(f64, usize)> = dirs.iter().enumerate().map(|(k, s)| (q.value(s), k)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = (scored[0].0, dirs[scored[0].1].clone());
    for &(_, k) in scored.iter().take(opts.refine_best.max(1)) {
        let cand = refine_direction(q, &dirs[k], opts.refine_steps);
        if cand.0 > best.0 {
            best = cand;
        }
    }
    // canonical sign: first nonzero component positive
    if let Some(x) = best.1.iter().find(|x| x.abs() > 1e-15) {
        if *x < 0.0 {
            best.1.iter_mut().for_each(|x| *x = -*x);
        }
    }
    best
}

/// RLD Fisher information norm of a channel family at `t` from the
/// quadratic-form tensor.
pub fn rld_norm_channel(family: &ChannelFamily, t: &[f64], opts: SphereOptions) -> Result<FisherReport> {
    let q = quadratic_form_tensor(family, t)?;
    let (value, direction) = maximize_on_sphere(&q, opts);
    Ok(FisherReport {
        value: value.max(0.0),
        direction,
        method: FisherMethod::ChoiClosed,
        grid_resolution: if family.v() == 1 { 1 } else { opts.directions },
        restarts: 0,
    })
}

/// Largest eigenvalue of the RLD Fisher matrix of the output family on a
/// pure probe, maximized over probes. Restart 0 is the maximally entangled
/// probe; probes producing a moving support are skipped.
pub fn rld_norm_channel_variational(family: &ChannelFamily, t: &[f64], restarts: usize, seed: u64) -> Result<FisherReport> {
    let closed = rld_norm_channel(family, t, SphereOptions::default())?;
    let d = family.d_in();
    let mut phi = max_entangled(d);
    normalize(&mut phi);
    let objective = |psi: &[C64]| -> Option<f64> {
        let states = StateFamily::from_channel_family(family, psi).ok()?;
        let j = rld_fisher_states(&states, t, 0.0).ok()?;
        symmetric_eigenvalues(&j).ok()?.last().copied()
    };
    let best = maximize_pure(d * d, restarts, seed, Some(phi), AscentOptions::default(), objective)
        .ok_or_else(|| Error::InfiniteFisher("no probe gives a finite RLD Fisher matrix".into()))?;
    if best.value > closed.value + 1e-6 * closed.value.max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "variational RLD norm {} exceeds the closed form {}",
            best.value, closed.value
        )));
    }
    let states = StateFamily::from_channel_family(family, &best.state)?;
    let j = rld_fisher_states(&states, t, 0.0)?;
    let eig = eig_hermitian(&real_to_complex(&j))?;
    let direction: Vec<f64> = eig.vectors.column_vec(family.v() - 1).iter().map(|z| z.re).collect();
    Ok(FisherReport {
        value: best.value.max(0.0),
        direction: unit(direction),
        method: FisherMethod::Variational,
        grid_resolution: 0,
        restarts: best.restarts_used,
    })
}

/// `sup_T J^R` with the point attaining it.
#[derive(Clone, Debug, Serialize)]
pub struct JrMax {
    pub value: f64,
    pub argmax: Vec<f64>,
}

fn axis_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    if m <= 1 || a == b {
        return vec![0.5 * (a + b)];
    }
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (f1, x1)
    } else {
        (f2, x2)
    }
}

/// Estimates `sup_T J^R` over the closed box: a 1000-point axis grid for
/// `v = 1`; for `v ≥ 2` a Cartesian grid of at most ~10⁴ points (100 per
/// axis when that fits) with a reduced sphere search. The best grid point is
/// refined by golden-section search along each axis. The result is cached on
/// the family. Infinite Fisher information anywhere on the grid, or a value
/// above `1e12`, is reported as [`Error::InfiniteFisher`].
pub fn jr_max(family: &ChannelFamily) -> Result<JrMax> {
    let cached = family.jr_max_cache.get_or_init(|| compute_jr_max(family).map(|r| (r.value, r.argmax)));
    cached.clone().map(|(value, argmax)| JrMax { value, argmax })
}

fn compute_jr_max(family: &ChannelFamily) -> Result<JrMax> {
    let v = family.v();
    let per_axis = if v == 1 { 1000 } else { (1e4f64.powf(1.0 / v as f64).floor() as usize).clamp(2, 100) };
    let opts = if v == 1 { SphereOptions::default() } else { SphereOptions::coarse() };
    let axes: Vec<Vec<f64>> = family.bounds().iter().map(|&(a, b)| axis_grid(a, b, per_axis)).collect();
    let total: usize = axes.iter().map(|a| a.len()).product();
    let point = |mut idx: usize| -> Vec<f64> {
        let mut p = vec![0.0; v];
        for axis in (0..v).rev() {
            let m = axes[axis].len();
            p[axis] = axes[axis][idx % m];
            idx /= m;
        }
        p
    };
    let values: Vec<Result<f64>> =
        (0..total).into_par_iter().map(|k| rld_norm_channel(family, &point(k), opts).map(|r| r.value)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, r) in values.into_iter().enumerate() {
        let val = r?;
        if !val.is_finite() || val > JR_MAX_DIVERGENCE {
            return Err(Error::InfiniteFisher(format!("J^R = {val:e} at {:?}; sup over the box diverges", point(k))));
        }
        if val > best.0 {
            best = (val, k);
        }
    }
    let mut argmax = point(best.1);
    let mut value = best.0;
    // golden-section refinement along each axis within the neighbouring cells
    for axis in 0..v {
        let grid = &axes[axis];
        if grid.len() < 3 {
            continue;
        }
        let pos = grid.iter().position(|&x| x == argmax[axis]).unwrap_or(0);
        let lo = grid[pos.saturating_sub(1)];
        let hi = grid[(pos + 1).min(grid.len() - 1)];
        let base = argmax.clone();
        let f = |x: f64| {
            let mut p = base.clone();
            p[axis] = x;
            rld_norm_channel(family, &p, opts).map(|r| r.value).unwrap_or(f64::NEG_INFINITY)
        };
        let (fv, x) = golden_max(&f, lo, hi, 40);
        if fv > value {
            value = fv;
            argmax[axis] = x;
        }
    }
    if v > 1 {
        // final evaluation at full sphere resolution
        value = value.max(rld_norm_channel(family, &argmax, SphereOptions::default())?.value);
    }
    if value > JR_MAX_DIVERGENCE {
        return Err(Error::InfiniteFisher(format!("sup J^R ≈ {value:e} diverges")));
    }
    Ok(JrMax { value, argmax })
}

/// The three regularity conditions, evaluated on the condition sample points.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    /// Every directional derivative of the Choi operator stays inside its support.
    pub condition1: bool,
    /// `J^R` is not identically zero on the box.
    pub condition2: bool,
    /// The Choi support is the same everywhere on the box.
    pub condition3: bool,
    /// `sup_T J^R`; `None` when it diverges.
    pub jr_max: Option<f64>,
    pub sample_points: usize,
}

pub fn check_conditions(family: &ChannelFamily) -> Result<ConditionReport> {
    let points = condition_sample_points(family);
    let condition1 = points
        .par_iter()
        .map(|t| check_condition_derivative_support(family, t, &[]))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|ok| ok);
    let condition3 = check_condition_support_constant(family, &[])?;
    let (condition2, jr) = match jr_max(family) {
        Ok(j) => (j.value > 1e-12, Some(j.value)),
        Err(e) if e.is_infinite_signal() => (true, None),
        Err(e) => return Err(e),
    };
    Ok(ConditionReport { condition1, condition2, condition3, jr_max: jr, sample_points: points.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorReport {
    pub eps: Vec<f64>,
    pub d2_bits: Vec<f64>,
    /// Log-log slope of `D₂` against `ε`; `None` when every value is zero.
    pub slope: Option<f64>,
    /// `D₂/ε²` at the smallest `ε`.
    pub coefficient: f64,
    /// `‖Σ s_i s_j M_ij‖_∞ · log₂ e`, the quadratic coefficient in bits.
    pub quadratic_bound: f64,
    /// `coefficient ≤ 1.05·quadratic_bound`.
    pub within_bound: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Evaluates `D₂(C_{t+ε·dir} ‖ C_t)` over `eps_list` and compares the
/// quadratic coefficient with the Fisher quadratic form converted to bits.
pub fn taylor_check_d2(family: &ChannelFamily, t: &[f64], dir: &[f64], eps_list: &[f64]) -> Result<TaylorReport> {
    if dir.len() != family.v() {
        return Err(Error::DimensionMismatch("direction must have v coordinates".into()));
    }
    let dir = unit(dir.to_vec());
    let base = family.eval(t)?;
    let mut d2 = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p: Vec<f64> = t.iter().zip(&dir).map(|(x, s)| x + eps * s).collect();
        if !family.contains(&p) {
            return Err(Error::OutOfBox(format!("t + ε·dir = {p:?} leaves the box")));
        }
        d2.push(d2_channels(&family.eval(&p)?, &base)?);
    }
    let q = quadratic_form_tensor(family, t)?;
    let quadratic_bound = q.value(&dir) * LOG2_E;
    let positive: Vec<(f64, f64)> = eps_list.iter().zip(&d2).filter(|(_, &d)| d > 0.0).map(|(&e, &d)| (e.ln(), d.ln())).collect();
    let slope = if positive.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        Some(ls_slope(&x, &y))
    } else {
        None
    };
    let k = eps_list
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidArgument("empty ε list".into()))?;
    let coefficient = d2[k] / (eps_list[k] * eps_list[k]);
    Ok(TaylorReport {
        eps: eps_list.to_vec(),
        d2_bits: d2,
        slope,
        coefficient,
        quadratic_bound,
        within_bound: coefficient <= 1.05 * quadratic_bound + 1e-300,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bitflip, constant, constant_pure, pauli_simplex, rotation, Channel};

    fn bernoulli_states() -> StateFamily {
        StateFamily::new(1, |t| Ok(ComplexMatrix::from_real_diag(&[t[0], 1.0 - t[0]])))
    }

    #[test]
    fn state_rld_examples() {
        let j = rld_fisher_states(&bernoulli_states(), &[0.5], 1e-5).unwrap();
        assert!((j[0][0] - 4.0).abs() < 1e-6);
        let j = rld_fisher_states(&bernoulli_states(), &[0.2], 1e-5).unwrap();
        assert!((j[0][0] - 6.25).abs() < 1e-6);
        let constant_states = StateFamily::new(2, |_| Ok(ComplexMatrix::from_real_diag(&[0.3, 0.7])));
        let j = rld_fisher_states(&constant_states, &[0.1, 0.2], 1e-5).unwrap();
        assert!(j.iter().flatten().all(|x| *x == 0.0));
        let pure = StateFamily::new(1, |t| {
            Ok(ComplexMatrix::projector(&[C64::new(t[0].cos(), 0.0), C64::new(t[0].sin(), 0.0)]))
        });
        assert!(matches!(rld_fisher_states(&pure, &[0.3], 1e-5), Err(Error::InfiniteFisher(_))));
    }

    #[test]
    fn state_sld_examples() {
        let j = sld_fisher_states(&bernoulli_states(), &[0.3], 1e-5).unwrap();
        assert!((j[0][0] - 1.0 / 0.21).abs() < 1e-6);
        let phase = StateFamily::new(1, |t| {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            Ok(ComplexMatrix::projector(&[C64::from_polar(s, -t[0] / 2.0), C64::from_polar(s, t[0] / 2.0)]))
        });
        let j = sld_fisher_states(&phase, &[0.4], 1e-5).unwrap();
        assert!((j[0][0] - 1.0).abs() < 1e-6);
        let constant_states = StateFamily::new(1, |_| Ok(ComplexMatrix::from_real_diag(&[0.3, 0.7])));
        assert_eq!(sld_fisher_states(&constant_states, &[0.1], 1e-5).unwrap()[0][0], 0.0);
    }

    #[test]
    fn qfi_examples() {
        let plus = vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
        let gen = ComplexMatrix::from_real_diag(&[0.5, -0.5]);
        assert!((qfi_pure_phase(&plus, &gen).unwrap() - 1.0).abs() < 1e-12);
        let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(qfi_pure_phase(&zero, &gen).unwrap(), 0.0);
        assert!(qfi_pure_phase(&[C64::new(2.0, 0.0), C64::new(0.0, 0.0)], &gen).is_err());
    }

    #[test]
    fn bitflip_quadratic_form() {
        let fam = bitflip(0.1, 0.9).unwrap();
        for p in [0.2, 0.5, 0.8] {
            let q = quadratic_form_tensor(&fam, &[p]).unwrap();
            let expected = ComplexMatrix::identity(2).scale_real(1.0 / (p * (1.0 - p)));
            assert!((q.get(0, 0) - &expected).max_abs() < 1e-9);
            let r = rld_norm_channel(&fam, &[p], SphereOptions::default()).unwrap();
            assert!((r.value - 1.0 / (p * (1.0 - p))).abs() < 1e-9);
            assert_eq!(r.direction, vec![1.0]);
        }
    }

    #[test]
    fn degenerate_and_unitary_families() {
        let c = constant(Channel::pauli([0.7, 0.1, 0.1, 0.1]).unwrap(), vec![(0.0, 1.0)]).unwrap();
        assert!(quadratic_form_tensor(&c, &[0.5]).unwrap().is_zero());
        assert_eq!(rld_norm_channel(&c, &[0.5], SphereOptions::default()).unwrap().value, 0.0);
        assert!(matches!(quadratic_form_tensor(&rotation(0.0, 1.0).unwrap(), &[0.5]), Err(Error::InfiniteFisher(_))));
        assert!(matches!(quadratic_form_tensor(&constant_pure(-1.0, 1.0).unwrap(), &[0.0]), Err(Error::InfiniteFisher(_))));
    }

    #[test]
    fn decoupled_two_parameter_family() {
        // independent bit flips on two qubits; Choi of the product channel
        let fam = ChannelFamily::new("two-bitflips", vec![(0.1, 0.9), (0.1, 0.9)], 4, 4, |t| {
            Ok(crate::channels::tensor_channel(
                &Channel::pauli([1.0 - t[0], t[0], 0.0, 0.0])?,
                &Channel::pauli([1.0 - t[1], t[1], 0.0, 0.0])?,
            ))
        })
        .unwrap();
        let t = [0.5, 0.2];
        let r = rld_norm_channel(&fam, &t, SphereOptions { directions: 2000, ..SphereOptions::default() }).unwrap();
        assert!((r.value - 6.25).abs() < 1e-6, "{}", r.value);
        assert!(r.direction[1].abs() > 0.999);
    }

    #[test]
    fn variational_norm_examples() {
        let fam = bitflip(0.1, 0.9).unwrap();
        let r = rld_norm_channel_variational(&fam, &[0.5], 4, 3).unwrap();
        assert!((r.value - 4.0).abs() < 1e-9);
        let states = StateFamily::from_channel_family(&fam, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let j = rld_fisher_states(&states, &[0.3], 0.0).unwrap();
        assert!((j[0][0] - 1.0 / 0.21).abs() < 1e-9);
        let c = constant(Channel::identity(2), vec![(0.0, 1.0)]).unwrap();
        assert_eq!(rld_norm_channel_variational(&c, &[0.5], 2, 3).unwrap().value, 0.0);
    }

    #[test]
    fn reparametrization_scales_inverse_square() {
        let c = 2.0;
        let scaled = ChannelFamily::new("scaled-bitflip", vec![(0.2, 1.6)], 2, 2, move |t| {
            let p = t[0] / c;
            Channel::pauli([1.0 - p, p, 0.0, 0.0])
        })
        .unwrap();
        let j_scaled = rld_norm_channel(&scaled, &[0.6], SphereOptions::default()).unwrap().value;
        let j = rld_norm_channel(&bitflip(0.1, 0.8).unwrap(), &[0.3], SphereOptions::default()).unwrap().value;
        assert!((j_scaled - j / (c * c)).abs() < 1e-6 * j);
    }

    #[test]
    fn jr_max_of_bitflip() {
        let fam = bitflip(0.2, 0.8).unwrap();
        let m = jr_max(&fam).unwrap();
        assert!((m.value - 6.25).abs() < 1e-9);
        assert!(m.argmax[0] == 0.2 || m.argmax[0] == 0.8);
        let again = jr_max(&fam).unwrap();
        assert_eq!(again.value.to_bits(), m.value.to_bits());
        assert!(matches!(jr_max(&rotation(0.0, 1.0).unwrap()), Err(Error::InfiniteFisher(_))));
    }

    #[test]
    fn taylor_examples() {
        let fam = bitflip(0.1, 0.9).unwrap();
        let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let r = taylor_check_d2(&fam, &[0.5], &[1.0], &eps).unwrap();
        let slope = r.slope.unwrap();
        assert!((1.9..=2.1).contains(&slope), "{slope}");
        assert!((r.coefficient - 4.0 * LOG2_E).abs() < 1e-4 * 4.0 * LOG2_E);
        assert!(r.within_bound);
        let c = constant(Channel::identity(2), vec![(0.0, 1.0)]).unwrap();
        let r = taylor_check_d2(&c, &[0.5], &[1.0], &eps).unwrap();
        assert!(r.d2_bits.iter().all(|&d| d == 0.0) && r.slope.is_none());
        let p3 = pauli_simplex(vec![(0.1, 0.3); 3]).unwrap();
        let r = taylor_check_d2(&p3, &[0.2, 0.2, 0.2], &[0.3, -0.5, 0.8], &[5e-2, 1e-2, 1e-3]).unwrap();
        assert!((1.9..=2.1).contains(&r.slope.unwrap()));
        assert!(taylor_check_d2(&fam, &[0.85], &[1.0], &[0.1]).is_err());
    }

    #[test]
    fn sld_below_rld_on_output_families() {
        let fam = pauli_simplex(vec![(0.1, 0.2); 3]).unwrap();
        let probe = crate::sampling::random_pure_state(&mut rng_for(5, 0), 4);
        let states = StateFamily::from_channel_family(&fam, &probe).unwrap();
        let t = [0.15, 0.12, 0.18];
        let jr = rld_fisher_states(&states, &t, 0.0).unwrap();
        let js = sld_fisher_states(&states, &t, 0.0).unwrap();
        let diff: RealMatrix = (0..3).map(|i| (0..3).map(|j| jr[i][j] - js[i][j]).collect()).collect();
        assert!(symmetric_eigenvalues(&diff).unwrap()[0] >= -1e-8);
    }
}
