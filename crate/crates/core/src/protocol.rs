//! Discretization protocol for transmitting a channel from a family.
//!
//! The sender knows `t ∈ T` and sends the label of a lattice point
//! `t_n ∈ T_n = (spacing·Z^v) ∩ T` with `spacing = n^{−α−1/2}/sqrt(v·J^R_max)`.
//! The receiver applies `C_{t_n}` to each of its `n` inputs. The label costs
//! `ceil(log₂|T_n|)` bits, and the error `‖C_t^{⊗n} − C_{t_n}^{⊗n}‖_⋄` is
//! bounded through Pinsker's inequality and additivity of `D₂`:
//!
//! ```text
//! ‖C_t^{⊗n} − C_{t_n}^{⊗n}‖_⋄ ≤ min(2, sqrt((2n / log₂ e)·D₂(C_{t_n}‖C_t)))
//! ```
//!
//! Program states are orthogonal, so the label is handled classically and no
//! operator of dimension `|T_n|` is ever built; the grid itself is stored per
//! axis.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::bounds::classify_beta;
use crate::channels::{reshape_probe, sandwich_probe, Channel, ChannelFamily};
use crate::divergences::{pinsker_error_upper_bound, PinskerBound};
use crate::error::{Error, Result};
use crate::fisher::jr_max;
use crate::linalg::{max_entangled, normalize, trace_norm, ComplexMatrix, C64};
use crate::optimize::{maximize_pure, AscentOptions};

/// Largest number of type classes [`exact_error_pauli`] will enumerate.
pub const EXACT_ERROR_MAX_TERMS: f64 = 5e7;

/// Lattice points of one axis: `z·spacing` for `z_min ≤ z ≤ z_max`, clamped
/// into `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisLattice {
    pub z_min: i64,
    pub z_max: i64,
    pub lo: f64,
    pub hi: f64,
}

impl AxisLattice {
    pub fn len(&self) -> u64 {
        (self.z_max - self.z_min + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.z_max < self.z_min
    }

    pub fn coordinate(&self, z: i64, spacing: f64) -> f64 {
        (z as f64 * spacing).clamp(self.lo, self.hi)
    }
}

/// `T_n` for given `n`, `α` and `J^R_max`.
#[derive(Clone, Debug, Serialize)]
pub struct DiscretizationGrid {
    pub n: u64,
    pub alpha: f64,
    pub j_r_max: f64,
    pub spacing: f64,
    pub axes: Vec<AxisLattice>,
}

impl DiscretizationGrid {
    /// Builds the lattice directly from `J^R_max`. Lattice points within a
    /// relative `1e-9` of a face (in units of the spacing) are kept and
    /// clamped onto it, absorbing rounding in a numerically maximized `J^R_max`.
    pub fn new(bounds: &[(f64, f64)], n: u64, alpha: f64, j_r_max: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(j_r_max.is_finite() && j_r_max > 0.0) {
            return Err(Error::ConditionViolated(format!(
                "J^R_max = {j_r_max:e}: the RLD Fisher information must be nonzero and finite on the box"
            )));
        }
        let v = bounds.len();
        let spacing = (n as f64).powf(-alpha - 0.5) / (v as f64 * j_r_max).sqrt();
        let axes: Vec<AxisLattice> = bounds
            .iter()
            .map(|&(lo, hi)| AxisLattice {
                z_min: {
                    let x = lo / spacing;
                    (x - 1e-9 * x.abs().max(1.0)).ceil() as i64
                },
                z_max: {
                    let x = hi / spacing;
                    (x + 1e-9 * x.abs().max(1.0)).floor() as i64
                },
                lo,
                hi,
            })
            .collect();
        if let Some(k) = axes.iter().position(|a| a.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "no lattice point with spacing {spacing:e} in [{}, {}]",
                bounds[k].0, bounds[k].1
            )));
        }
        let grid = Self { n, alpha, j_r_max, spacing, axes };
        let budget: f64 = bounds.iter().map(|(a, b)| ((b - a) / spacing + 1.0).log2()).sum::<f64>() + v as f64;
        if grid.log2_points() > budget + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "log₂|T_n| = {} exceeds the lattice budget {budget}",
                grid.log2_points()
            )));
        }
        Ok(grid)
    }

    pub fn v(&self) -> usize {
        self.axes.len()
    }

    pub fn num_points(&self) -> u128 {
        self.axes.iter().map(|a| a.len() as u128).product()
    }

    pub fn log2_points(&self) -> f64 {
        self.axes.iter().map(|a| (a.len() as f64).log2()).sum()
    }

    /// `ceil(log₂|T_n|)`.
    pub fn cost_bits(&self) -> u32 {
        let count = self.num_points();
        if count <= 1 {
            0
        } else {
            128 - (count - 1).leading_zeros()
        }
    }

    /// The radius `n^{−α−1/2}/sqrt(J^R_max)` every encoding must beat.
    pub fn radius(&self) -> f64 {
        (self.n as f64).powf(-self.alpha - 0.5) / self.j_r_max.sqrt()
    }

    /// Point with lexicographic index `index` (last axis fastest).
    pub fn point(&self, mut index: u128) -> Option<Vec<f64>> {
        if index >= self.num_points() {
            return None;
        }
        let mut p = vec![0.0; self.v()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let len = axis.len() as u128;
            p[k] = axis.coordinate(axis.z_min + (index % len) as i64, self.spacing);
            index /= len;
        }
        Some(p)
    }

    /// Every point, for grids of at most `limit` points.
    pub fn points(&self, limit: usize) -> Result<Vec<Vec<f64>>> {
        let count = self.num_points();
        if count > limit as u128 {
            return Err(Error::TooLarge(format!("{count} grid points exceed the limit {limit}")));
        }
        Ok((0..count).map(|k| self.point(k).expect("index in range")).collect())
    }
}

/// Builds `T_n` for a family using its cached `J^R_max`.
pub fn build_grid(family: &ChannelFamily, n: u64, alpha: f64) -> Result<DiscretizationGrid> {
    let jr = jr_max(family)?;
    if jr.value <= 1e-12 {
        return Err(Error::ConditionViolated(format!(
            "RLD Fisher information vanishes on the box of family {} (J^R_max = {:e})",
            family.name(),
            jr.value
        )));
    }
    DiscretizationGrid::new(family.bounds(), n, alpha, jr.value)
}

/// Encoded point and its lexicographic index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Encoding {
    pub t_n: Vec<f64>,
    pub index: u128,
    pub distance: f64,
}

/// Nearest lattice point in Euclidean distance, ties going to the smaller
/// lattice coordinate on each axis. Checks `‖t_n − t‖ < radius`.
pub fn encode(t: &[f64], grid: &DiscretizationGrid) -> Result<Encoding> {
    if t.len() != grid.v() {
        return Err(Error::DimensionMismatch(format!("point has {} coordinates, grid has {}", t.len(), grid.v())));
    }
    let mut t_n = Vec::with_capacity(t.len());
    let mut index: u128 = 0;
    for (&x, axis) in t.iter().zip(&grid.axes) {
        let slack = 1e-12 * (axis.hi - axis.lo).max(1.0);
        if !(x.is_finite() && x >= axis.lo - slack && x <= axis.hi + slack) {
            return Err(Error::OutOfBox(format!("{t:?} lies outside the parameter box")));
        }
        let below = ((x / grid.spacing).floor() as i64).clamp(axis.z_min, axis.z_max);
        let above = (below + 1).min(axis.z_max);
        let (cb, ca) = (axis.coordinate(below, grid.spacing), axis.coordinate(above, grid.spacing));
        let z = if (ca - x).abs() < (x - cb).abs() { above } else { below };
        t_n.push(axis.coordinate(z, grid.spacing));
        index = index * axis.len() as u128 + (z - axis.z_min) as u128;
    }
    let distance = t.iter().zip(&t_n).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if distance >= grid.radius() {
        return Err(Error::InvariantViolation(format!(
            "encoding distance {distance:e} is not below {:e}",
            grid.radius()
        )));
    }
    Ok(Encoding { t_n, index, distance })
}

/// The receiver's action: apply `C_{t_n}` to every input.
pub fn decode_apply(t_n: &[f64], family: &ChannelFamily, inputs: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let channel = family.eval(t_n)?;
    inputs.iter().map(|rho| channel.apply(rho)).collect()
}

/// Pinsker-chain bound on `‖C_t^{⊗n} − C_{t_n}^{⊗n}‖_⋄`.
pub fn error_upper(family: &ChannelFamily, t: &[f64], t_n: &[f64], n: u64) -> Result<PinskerBound> {
    pinsker_error_upper_bound(&family.eval(t_n)?, &family.eval(t)?, n)
}

fn ln_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `|e^{a} − e^{b}|` for log-probabilities `a, b` with `d = b − a` supplied
/// separately (it is more accurate than the difference of `a` and `b`).
fn abs_exp_diff(a: f64, b: f64, d: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (false, false) => 0.0,
        (true, false) => a.exp(),
        (false, true) => b.exp(),
        (true, true) => a.exp() * d.exp_m1().abs(),
    }
}

fn for_each_composition(total: u64, parts: usize, prefix: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
    if parts == 1 {
        prefix.push(total);
        f(prefix);
        prefix.pop();
        return;
    }
    for c in 0..=total {
        prefix.push(c);
        for_each_composition(total - c, parts - 1, prefix, f);
        prefix.pop();
    }
}

/// Diamond distance between `n`-fold tensor powers of two qubit Pauli
/// channels: the L1 distance `Σ_x |P^n(x) − Q^n(x)|` between the product
/// distributions. Outcomes are grouped by how many positions fall on the
/// differing components and by the type on those components.
pub fn exact_error_pauli(p: [f64; 4], q: [f64; 4], n: u64) -> Result<f64> {
    Channel::pauli(p)?;
    Channel::pauli(q)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let differing: Vec<usize> = (0..4).filter(|&k| p[k] != q[k]).collect();
    if differing.is_empty() {
        return Ok(0.0);
    }
    let s = differing.len();
    let same_mass: f64 = (0..4).filter(|k| !differing.contains(k)).map(|k| p[k]).sum();
    let js: Vec<u64> = if same_mass > 0.0 { (0..=n).collect() } else { vec![n] };
    let terms: f64 = js.iter().map(|&j| ((j + 1) as f64).powi(s as i32 - 1)).sum();
    if terms > EXACT_ERROR_MAX_TERMS {
        return Err(Error::TooLarge(format!("{terms:e} type classes for n = {n}")));
    }
    let lp: Vec<f64> = differing.iter().map(|&k| ln_or_neg_inf(p[k])).collect();
    let lq: Vec<f64> = differing.iter().map(|&k| ln_or_neg_inf(q[k])).collect();
    let ln_same = ln_or_neg_inf(same_mass);
    let partials: Vec<f64> = js
        .par_iter()
        .map(|&j| {
            let base = ln_binomial(n, j) + if j == n { 0.0 } else { (n - j) as f64 * ln_same };
            if base == f64::NEG_INFINITY {
                return 0.0;
            }
            let ln_j = ln_factorial(j);
            let mut acc = 0.0;
            for_each_composition(j, s, &mut Vec::with_capacity(s), &mut |c| {
                let mut a = base + ln_j;
                let mut b = a;
                let mut d = 0.0;
                for (k, &ck) in c.iter().enumerate() {
                    if ck == 0 {
                        continue;
                    }
                    let lf = ln_factorial(ck);
                    a += ck as f64 * lp[k] - lf;
                    b += ck as f64 * lq[k] - lf;
                    d += ck as f64 * (lq[k] - lp[k]);
                }
                acc += abs_exp_diff(a, b, d);
            });
            acc
        })
        .collect();
    Ok(partials.iter().sum::<f64>().min(2.0))
}

/// `‖((A − B) ⊗ I)(|ψ⟩⟨ψ|)‖₁` for a pure input on `H_in ⊗ H_in`.
pub fn output_trace_distance(a: &Channel, b: &Channel, psi: &[C64]) -> Result<f64> {
    if a.d_in() != b.d_in() || a.d_out() != b.d_out() {
        return Err(Error::DimensionMismatch("channels of different shapes".into()));
    }
    let f = reshape_probe(psi, a.d_in())?;
    trace_norm(&sandwich_probe(&(a.choi() - b.choi()), &f, a.d_out()))
}

/// Multistart lower bound on `‖A − B‖_⋄`; restart 0 is the maximally
/// entangled input.
pub fn diamond_lower(a: &Channel, b: &Channel, restarts: usize, seed: u64) -> Result<f64> {
    if a.d_in() != b.d_in() || a.d_out() != b.d_out() {
        return Err(Error::DimensionMismatch("channels of different shapes".into()));
    }
    let d = a.d_in();
    let mut phi = max_entangled(d);
    normalize(&mut phi);
    let diff = a.choi() - b.choi();
    let best = maximize_pure(d * d, restarts, seed, Some(phi), AscentOptions::default(), |psi| {
        let f = reshape_probe(psi, d).ok()?;
        trace_norm(&sandwich_probe(&diff, &f, a.d_out())).ok()
    })
    .ok_or_else(|| Error::InvalidArgument("optimization produced no admissible input".into()))?;
    Ok(best.value)
}

/// One execution of the protocol at a given `n`.
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRun {
    pub n: u64,
    pub alpha: f64,
    pub v: usize,
    pub t: Vec<f64>,
    pub t_n: Vec<f64>,
    pub spacing: f64,
    pub num_points: u128,
    pub cost_bits: u32,
    /// Largest Pinsker bound over `t` and the corners of the cell of
    /// parameters that encode to `t_n`: the worst-case error of this program.
    pub err_upper: f64,
    /// Pinsker bound at the given `t` only.
    pub err_upper_at_t: f64,
    pub err_exact: Option<f64>,
    pub err_lower: Option<f64>,
    /// Rate bound `v·β/2` at `ε = 0`; `NaN` when `β` is not classified.
    /// Serialized under the column name `thm1_rate`.
    #[serde(rename = "thm1_rate")]
    pub rate_bound: f64,
    /// The support condition failed somewhere and a trivial bound was used.
    pub support_violated: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    /// Overrides the classified `β` in `rate_bound`.
    pub beta: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { beta: None, restarts: 16, seed: crate::sampling::DEFAULT_SEED }
    }
}

/// Corners of the encoding cell `t_n ± spacing/2` (clamped to the box).
fn cell_corners(grid: &DiscretizationGrid, t_n: &[f64]) -> Vec<Vec<f64>> {
    let v = t_n.len();
    (0..1usize << v)
        .map(|mask| {
            (0..v)
                .map(|k| {
                    let sign = if mask >> k & 1 == 1 { 0.5 } else { -0.5 };
                    (t_n[k] + sign * grid.spacing).clamp(grid.axes[k].lo, grid.axes[k].hi)
                })
                .collect()
        })
        .collect()
}

/// Runs the protocol at one `n`.
pub fn protocol_run(family: &ChannelFamily, alpha: f64, t: &[f64], n: u64, options: &SweepOptions) -> Result<ProtocolRun> {
    let grid = build_grid(family, n, alpha)?;
    let enc = encode(t, &grid)?;
    let at_t = error_upper(family, t, &enc.t_n, n)?;
    let mut err_upper = at_t.value;
    let mut violated = at_t.support_violated;
    for corner in cell_corners(&grid, &enc.t_n) {
        let b = error_upper(family, &corner, &enc.t_n, n)?;
        err_upper = err_upper.max(b.value);
        violated |= b.support_violated;
    }
    let err_exact = match (family.pauli_vector(&enc.t_n), family.pauli_vector(t)) {
        (Some(pn), Some(pt)) => match exact_error_pauli(pn, pt, n) {
            Ok(x) => Some(x),
            Err(Error::TooLarge(_)) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    let err_lower = if n == 1 {
        Some(diamond_lower(&family.eval(&enc.t_n)?, &family.eval(t)?, options.restarts, options.seed)?)
    } else {
        None
    };
    let beta = match options.beta {
        Some(b) => Some(b),
        None => classify_beta(family)?.value(),
    };
    let rate_bound = beta.map(|b| family.v() as f64 * b / 2.0).unwrap_or(f64::NAN);
    let slack = 1e-6;
    if let (Some(lo), Some(ex)) = (err_lower, err_exact) {
        if lo > ex + slack {
            return Err(Error::InvariantViolation(format!("diamond lower bound {lo} exceeds exact error {ex}")));
        }
    }
    if let Some(ex) = err_exact {
        if ex > at_t.value + slack {
            return Err(Error::InvariantViolation(format!("exact error {ex} exceeds the Pinsker bound {}", at_t.value)));
        }
    }
    Ok(ProtocolRun {
        n,
        alpha,
        v: family.v(),
        t: t.to_vec(),
        t_n: enc.t_n,
        spacing: grid.spacing,
        num_points: grid.num_points(),
        cost_bits: grid.cost_bits(),
        err_upper,
        err_upper_at_t: at_t.value,
        err_exact,
        err_lower,
        rate_bound,
        support_violated: violated,
    })
}

/// Runs the protocol for every `n` in `n_list`; results follow input order.
pub fn protocol_sweep(
    family: &ChannelFamily,
    alpha: f64,
    t: &[f64],
    n_list: &[u64],
    options: &SweepOptions,
) -> Result<Vec<ProtocolRun>> {
    jr_max(family)?;
    n_list.par_iter().map(|&n| protocol_run(family, alpha, t, n, options)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bitflip, constant, pauli_simplex};
    use crate::divergences::{d2_channels, LOG2_E};

    fn bf(p: f64) -> Channel {
        Channel::pauli([1.0 - p, p, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn bitflip_grid_sizes() {
        let fam = bitflip(0.2, 0.8).unwrap();
        let g = build_grid(&fam, 100, 0.5).unwrap();
        assert!((g.spacing - 0.004).abs() < 1e-12);
        assert_eq!(g.num_points(), 151);
        assert_eq!(g.cost_bits(), 8);
        let pts = g.points(1000).unwrap();
        // oracle: explicit scan of multiples of 0.004 in [0.2, 0.8]
        let scan: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.004).filter(|&x| x >= 0.2 - 1e-12 && x <= 0.8 + 1e-12).collect();
        assert_eq!(pts.len(), scan.len());
        for (p, s) in pts.iter().zip(&scan) {
            assert!((p[0] - s).abs() < 1e-12);
        }
        for w in pts.windows(2) {
            assert!((w[1][0] - w[0][0] - g.spacing).abs() < 1e-12);
        }
        let g = build_grid(&fam, 10_000, 0.5).unwrap();
        assert!((g.spacing - 4e-5).abs() < 1e-15);
        assert_eq!(g.num_points(), 15001);
        assert_eq!(g.cost_bits(), 14);
    }

    #[test]
    fn three_parameter_grid_matches_enumeration() {
        let fam = pauli_simplex(vec![(0.1, 0.2); 3]).unwrap();
        let g = build_grid(&fam, 100, 0.5).unwrap();
        let per_axis: u128 = (0..100_000)
            .map(|k| k as f64 * g.spacing)
            .filter(|&x| x >= 0.1 - 1e-9 * g.spacing && x <= 0.2 + 1e-9 * g.spacing)
            .count() as u128;
        assert_eq!(g.num_points(), per_axis.pow(3));
        assert!((per_axis as f64 - (0.1 / g.spacing).floor()).abs() <= 1.0);
    }

    #[test]
    fn encode_examples() {
        let fam = bitflip(0.2, 0.8).unwrap();
        let g = build_grid(&fam, 100, 0.5).unwrap();
        let e = encode(&[0.412], &g).unwrap();
        assert!((e.t_n[0] - 0.412).abs() < 1e-12 && e.distance < 1e-12);
        let e = encode(&[0.4142], &g).unwrap();
        let pts = g.points(1000).unwrap();
        let nearest = pts.iter().map(|p| p[0]).min_by(|a, b| (a - 0.4142).abs().total_cmp(&(b - 0.4142).abs())).unwrap();
        assert!((e.t_n[0] - nearest).abs() < 1e-15);
        assert!((e.t_n[0] - 0.416).abs() < 1e-12);
        assert_eq!(g.point(e.index).unwrap(), e.t_n);
        // spacing 0.25 on [0, 1]: 0.125 and 0.625 are exact midpoints
        let g2 = DiscretizationGrid::new(&[(0.0, 1.0), (0.0, 1.0)], 1, 0.5, 8.0).unwrap();
        assert_eq!(g2.spacing, 0.25);
        let e = encode(&[0.125, 0.625], &g2).unwrap();
        assert_eq!(e.t_n, vec![0.0, 0.5], "ties go to the smaller point");
        assert!(matches!(encode(&[0.9], &g), Err(Error::OutOfBox(_))));
    }

    #[test]
    fn decode_examples() {
        let fam = bitflip(0.2, 0.8).unwrap();
        let out = decode_apply(&[0.412], &fam, &[ComplexMatrix::from_real_diag(&[1.0, 0.0])]).unwrap();
        assert!((&out[0] - &ComplexMatrix::from_real_diag(&[0.588, 0.412])).max_abs() < 1e-14);
        assert!(decode_apply(&[0.412], &fam, &[]).unwrap().is_empty());
    }

    #[test]
    fn error_upper_examples() {
        let fam = bitflip(0.2, 0.8).unwrap();
        assert_eq!(error_upper(&fam, &[0.4142], &[0.4142], 100).unwrap().value, 0.0);
        let b = error_upper(&fam, &[0.4142], &[0.412], 100).unwrap().value;
        let d2 = ((0.588f64).powi(2) / 0.5858 + (0.412f64).powi(2) / 0.4142).log2();
        assert!((b - (200.0 / LOG2_E * d2).sqrt()).abs() < 1e-9);
        assert!((d2 - 2.878e-5).abs() < 1e-8);
    }

    #[test]
    fn exact_pauli_examples() {
        assert_eq!(exact_error_pauli([0.7, 0.3, 0.0, 0.0], [0.7, 0.3, 0.0, 0.0], 5).unwrap(), 0.0);
        assert!((exact_error_pauli([0.7, 0.3, 0.0, 0.0], [0.5, 0.5, 0.0, 0.0], 1).unwrap() - 0.4).abs() < 1e-14);
        let mut prev = 0.0;
        for n in [1, 2, 5, 10, 50, 200, 1000, 5000, 100_000] {
            let e = exact_error_pauli([0.51, 0.49, 0.0, 0.0], [0.49, 0.51, 0.0, 0.0], n).unwrap();
            assert!(e >= prev - 1e-12);
            prev = e;
        }
        assert!(prev > 1.9);
    }

    #[test]
    fn exact_pauli_matches_brute_force() {
        let p = [0.5, 0.2, 0.2, 0.1];
        let q = [0.5, 0.1, 0.25, 0.15];
        for n in 1..=4u32 {
            let mut total = 0.0f64;
            for x in 0..4usize.pow(n) {
                let (mut a, mut b, mut r) = (1.0f64, 1.0f64, x);
                for _ in 0..n {
                    a *= p[r % 4];
                    b *= q[r % 4];
                    r /= 4;
                }
                total += (a - b).abs();
            }
            assert!((exact_error_pauli(p, q, n as u64).unwrap() - total).abs() < 1e-13);
        }
    }

    #[test]
    fn diamond_lower_examples() {
        assert!(diamond_lower(&bf(0.3), &bf(0.3), 2, 1).unwrap().abs() < 1e-14);
        assert!((diamond_lower(&bf(0.3), &bf(0.5), 4, 1).unwrap() - 0.4).abs() < 1e-4);
    }

    #[test]
    fn sweep_and_degenerate_family() {
        let fam = bitflip(0.2, 0.8).unwrap();
        let runs = protocol_sweep(&fam, 0.5, &[0.4142], &[1, 100, 1000], &SweepOptions::default()).unwrap();
        assert_eq!(runs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 100, 1000]);
        for r in &runs {
            assert_eq!(r.rate_bound, 0.5);
            let ex = r.err_exact.unwrap();
            assert!(ex <= r.err_upper + 1e-12);
            assert!(r.err_upper_at_t <= r.err_upper);
        }
        assert!(runs[0].err_lower.is_some() && runs[1].err_lower.is_none());
        let c = constant(bf(0.3), vec![(0.0, 1.0)]).unwrap();
        assert!(matches!(build_grid(&c, 100, 0.5), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn tiny_divergence_pinsker_is_accurate() {
        let d2 = d2_channels(&bf(0.4142 + 1e-9), &bf(0.4142)).unwrap();
        let exact = 1e-18 / (0.4142 * 0.5858) * LOG2_E;
        assert!((d2 - exact).abs() < 1e-4 * exact);
    }
}
