//! Dense complex linear algebra.
//!
//! Everything in the crate is built on [`ComplexMatrix`], a row-major dense
//! matrix of `Complex64` entries, and a single spectral primitive,
//! [`eig_hermitian`] (cyclic complex Jacobi). Norms, the support-restricted
//! pseudo-inverse and support projectors are all derived from it.
//!
//! | Operation | Meaning |
//! |-----------|---------|
//! | [`kron`] | Kronecker product `a ⊗ b` |
//! | [`partial_trace`] | trace over one factor of a bipartite operator |
//! | [`eig_hermitian`] | ascending eigenvalues and unitary eigenvectors |
//! | [`pinv_on_support`] | Moore–Penrose inverse on the numerical support |
//! | [`op_norm_inf`], [`trace_norm`] | largest / summed singular values |
//! | [`support_projector`], [`support_contains`] | support inclusion tests |
//!
//! Choi operators use the factor order `out ⊗ in`, so for a Choi operator
//! `Keep::Second` keeps the input factor (`Tr_out`).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative cutoff used by [`pinv_on_support`] when none is given.
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-10;
/// Relative cutoff (times the largest |eigenvalue|) for support projectors.
pub const DEFAULT_SUPPORT_REL_TOL: f64 = 1e-9;
/// `support_contains(a, b)` holds iff `‖(I − P_a)·P_b‖_∞` is at most this.
pub const SUPPORT_CONTAINMENT_TOL: f64 = 1e-7;
/// Hermiticity tolerance for checked constructors, relative to `‖M‖_max`.
pub const HERMITIAN_STRICT_TOL: f64 = 1e-12;
/// Hermiticity tolerance accepted by [`eig_hermitian`], relative to `max(1, ‖M‖_max)`.
pub const HERMITIAN_EIG_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, re: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, re.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Checked Hermitian constructor: rejects inputs with
    /// `‖M − M†‖_max > 1e-12·‖M‖_max`.
    pub fn hermitian(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        let m = Self::from_vec(rows, cols, data)?;
        if !m.is_square() {
            return Err(Error::DimensionMismatch("Hermitian matrix must be square".into()));
        }
        let asym = m.hermitian_asymmetry();
        if asym > HERMITIAN_STRICT_TOL * m.max_abs() {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(m)
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn column(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M − M†‖_max`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermitian_asymmetry() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = vec![ZERO; self.rows * rhs.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dst = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Self { rows: self.rows, cols: rhs.cols, data: out }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `K·M·K†`.
    pub fn sandwich(&self, k: &Self) -> Self {
        k.matmul(self).matmul(&k.adjoint())
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mv = self.matvec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Column `j` as a vector.
    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Trace of `self · rhs` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        assert!(self.cols == rhs.rows && self.rows == rhs.cols, "trace_product dimension mismatch");
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(i, k) * rhs.get(k, i);
            }
        }
        acc
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

macro_rules! elementwise {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert!(
                    self.rows == rhs.rows && self.cols == rhs.cols,
                    "elementwise op on {}x{} and {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                );
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let data = raw.re.iter().zip(&raw.im).map(|(&re, &im)| C64::new(re, im)).collect();
        ComplexMatrix::from_vec(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a.get(i, j);
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out.data[(i * br + k) * (ac * bc) + j * bc + l] = x * b.get(k, l);
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Which factor of a bipartite operator survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `H_1 ⊗ H_2` with `dims = (d_1, d_2)`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    let d = d1 * d2;
    if m.rows != d || m.cols != d {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {}x{} dims needs a {}x{} matrix, got {}x{}",
            d1, d2, d, d, m.rows, m.cols
        )));
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| m.get(i * d2 + k, j * d2 + k)).sum()),
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|k| m.get(k * d2 + i, k * d2 + j)).sum()),
    })
}

/// `Tr_out` of an operator on `out ⊗ in`.
pub fn tr_out(m: &ComplexMatrix, d_out: usize, d_in: usize) -> Result<ComplexMatrix> {
    partial_trace(m, (d_out, d_in), Keep::Second)
}

/// Reorders tensor factors. Factor `a` of the result is factor `perm[a]` of
/// the input, where the input factor dimensions are `dims`.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if m.rows != total || m.cols != total {
        return Err(Error::DimensionMismatch(format!("permutation over dims {:?} needs a {}x{} matrix", dims, total, total)));
    }
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidArgument(format!("{:?} is not a permutation of {} factors", perm, dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // old flat index of the state whose new multi-index is encoded in `idx`
    let map: Vec<usize> = (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut digits = vec![0usize; dims.len()];
            for a in (0..new_dims.len()).rev() {
                digits[perm[a]] = rem % new_dims[a];
                rem /= new_dims[a];
            }
            digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
        })
        .collect();
    Ok(ComplexMatrix::from_fn(total, total, |i, j| m.get(map[i], map[j])))
}

/// Spectral decomposition `M = U·diag(values)·U†`, eigenvalues ascending,
/// eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }

    /// `U·diag(f(λ))·U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).filter(|&k| weights[k] != 0.0).map(|k| u.get(i, k) * u.get(j, k).conj() * weights[k]).sum()
        })
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigendecomposition of a {}x{} matrix", m.rows, m.cols)));
    }
    let asym = m.hermitian_asymmetry();
    if asym > HERMITIAN_EIG_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let fro_sq: f64 = a.data.iter().map(|z| z.norm_sqr()).sum();
    if fro_sq > 0.0 {
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q).norm_sqr();
                }
            }
            if off <= 1e-36 * fro_sq {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v.get(i, order[k]));
    Ok(Eigen { values, vectors })
}

fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq / r;
    let theta = (a.get(q, q).re - a.get(p, p).re) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;
    let n = a.rows;
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * upp + akq * uqp);
        a.set(k, q, akp * upq + akq * uqq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, upp.conj() * apk + uqp.conj() * aqk);
        a.set(q, k, upq.conj() * apk + uqq.conj() * aqk);
    }
    a.set(p, q, ZERO);
    a.set(q, p, ZERO);
    let (dp, dq) = (a.get(p, p).re, a.get(q, q).re);
    a.set(p, p, C64::new(dp, 0.0));
    a.set(q, q, C64::new(dq, 0.0));
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * upp + vkq * uqp);
        v.set(k, q, vkp * upq + vkq * uqq);
    }
}

/// Moore–Penrose inverse of a Hermitian PSD matrix keeping eigenvalues
/// `λ > rel_tol·λ_max`. The zero matrix maps to the zero matrix.
pub fn pinv_on_support(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    Ok(pinv_from_eigen(&eig, rel_tol))
}

pub(crate) fn pinv_from_eigen(eig: &Eigen, rel_tol: f64) -> ComplexMatrix {
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        let n = eig.values.len();
        return ComplexMatrix::zeros(n, n);
    }
    let cut = rel_tol * lmax;
    eig.reconstruct_with(|l| if l > cut { 1.0 / l } else { 0.0 })
}

/// Singular values, descending. Hermitian inputs use |eigenvalues|;
/// otherwise the square roots of the eigenvalues of `m†m`.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = if m.is_hermitian(HERMITIAN_STRICT_TOL) {
        eig_hermitian(m).expect("Hermitian input").values.iter().map(|l| l.abs()).collect()
    } else {
        let gram = m.adjoint().matmul(m);
        eig_hermitian(&gram).expect("Gram matrix is Hermitian").values.iter().map(|l| l.max(0.0).sqrt()).collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (Schatten ∞-norm).
pub fn op_norm_inf(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Sum of singular values (Schatten 1-norm); requires a square matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("trace norm of a {}x{} matrix", m.rows, m.cols)));
    }
    Ok(singular_values(m).iter().sum())
}

/// Orthogonal projector onto the span of eigenvectors whose eigenvalue has
/// modulus above `tolerance`.
#[derive(Clone, Debug)]
pub struct SupportProjector {
    pub projector: ComplexMatrix,
    pub rank: usize,
    pub tolerance: f64,
}

impl SupportProjector {
    pub fn dim(&self) -> usize {
        self.projector.rows()
    }

    pub(crate) fn from_eigen(eig: &Eigen, abs_tol: Option<f64>) -> Self {
        let lmax = eig.max_abs_value();
        // below this the operator is treated as numerically zero
        let floor = 1e-13;
        let tolerance = abs_tol.unwrap_or(DEFAULT_SUPPORT_REL_TOL * lmax).max(if lmax <= floor { floor } else { 0.0 });
        let n = eig.values.len();
        let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k].abs() > tolerance).collect();
        let u = &eig.vectors;
        let projector = ComplexMatrix::from_fn(n, n, |i, j| kept.iter().map(|&k| u.get(i, k) * u.get(j, k).conj()).sum());
        Self { projector, rank: kept.len(), tolerance }
    }
}

/// Support projector of a Hermitian matrix. `abs_tol` defaults to
/// `1e-9·max|λ|`.
pub fn support_projector(m: &ComplexMatrix, abs_tol: Option<f64>) -> Result<SupportProjector> {
    let eig = eig_hermitian(m)?;
    Ok(SupportProjector::from_eigen(&eig, abs_tol))
}

/// True iff the support of `b` lies inside the support of `a`.
pub fn support_contains(a: &SupportProjector, b: &SupportProjector) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    if b.rank == 0 {
        return true;
    }
    let complement = &ComplexMatrix::identity(a.dim()) - &a.projector;
    op_norm_inf(&complement.matmul(&b.projector)) <= SUPPORT_CONTAINMENT_TOL
}

/// True iff the range of the (not necessarily Hermitian) matrix `m` lies in
/// the support `a`, measured as `‖(I − P_a)·m‖_∞ ≤ 1e-7·max(‖m‖_∞, 1)`.
pub fn range_contained(a: &SupportProjector, m: &ComplexMatrix) -> bool {
    let complement = &ComplexMatrix::identity(a.dim()) - &a.projector;
    let leak = op_norm_inf(&complement.matmul(m));
    leak <= SUPPORT_CONTAINMENT_TOL * op_norm_inf(m).max(1.0)
}

/// Pauli matrices `I, X, Y, Z`.
pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![ZERO, -i, i, ZERO]).unwrap(),
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap(),
    ]
}

/// The unnormalized maximally entangled vector `|I⟩⟩ = Σ_k |k⟩⊗|k⟩`.
pub fn max_entangled(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    for k in 0..d {
        v[k * d + k] = ONE;
    }
    v
}

/// Normalizes a vector in place and returns its former norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}
