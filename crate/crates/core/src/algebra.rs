//! Dense complex matrices for one and two qubits.
//!
//! Basis convention: index 0 is the excited state |↑⟩ (the +1 eigenvector of
//! σz) and index 1 is the ground state |↓⟩. Two-qubit operators use the
//! Kronecker ordering of [`tensor`], first factor most significant.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used when deciding whether two eigenvalues coincide.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Tolerance on `‖A − A†‖` accepted as self-adjoint.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    /// Builds a 2×2 matrix from its four entries.
    pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            dim: 2,
            data: vec![a, b, c, d],
        }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self - other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self * other)
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(&(self * other) - &(other * self))
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(&(self * other) + &(other * self))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Positive semidefiniteness up to `tol`, tested by a Cholesky
    /// factorisation of `A + tol·I`. Assumes `A` is self-adjoint.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j).re + tol;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * n + j] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        true
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let n = self.dim;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect())
    }

    /// Outer product `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: w.len(),
            });
        }
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * w[j].conj();
            }
        }
        Ok(m)
    }

    /// `⟨v|A|v⟩`
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<(f64, f64)>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| {
                let v = self.get(i, j);
                (v.re, v.im)
            }).collect())
            .collect();
        f.debug_struct("ComplexMatrix").field("rows", &rows).finish()
    }
}

// Arithmetic operators panic on dimension mismatch; the `try_*` methods
// return an error instead.

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        let v = self.get(i, j);
                        [v.re, v.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(rows).map_err(D::Error::custom)
    }
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::mat2(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::mat2(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::mat2(ONE, ZERO, ZERO, -ONE)
}

/// Raising operator `|↑⟩⟨↓|`.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::mat2(ZERO, ONE, ZERO, ZERO)
}

/// Lowering operator `|↓⟩⟨↑|`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::mat2(ZERO, ZERO, ONE, ZERO)
}

/// Cartesian coordinates of a qubit state in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const GROUND: BlochVector = BlochVector { x: 0.0, y: 0.0, z: -1.0 };
    pub const EXCITED: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// `self + s·other`
    pub fn axpy(self, s: f64, other: Self) -> Self {
        Self::new(self.x + s * other.x, self.y + s * other.y, self.z + s * other.z)
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// A validated density matrix: self-adjoint, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const EIGEN_TOL: f64 = 1e-12;

    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotSelfAdjoint { deviation: dev });
        }
        let tr = m.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::NotAState(format!("trace {tr} differs from 1")));
        }
        if !m.is_positive_semidefinite(Self::EIGEN_TOL) {
            return Err(Error::NotAState("negative eigenvalue".into()));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi, psi)?)
    }

    pub fn from_bloch(r: BlochVector) -> Result<Self> {
        density_from_bloch(r)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `ρ = ½(I + xσx + yσy + zσz)`.
pub fn density_from_bloch(r: BlochVector) -> Result<DensityMatrix> {
    if r.norm() > 1.0 + 1e-9 {
        return Err(Error::NotAState(format!(
            "Bloch vector norm {} exceeds 1",
            r.norm()
        )));
    }
    Ok(DensityMatrix(bloch_matrix(1.0, r)))
}

/// `½(nI + xσx + yσy + zσz)` without validation; `n` is the trace.
pub fn bloch_matrix(n: f64, r: BlochVector) -> ComplexMatrix {
    ComplexMatrix::mat2(
        C64::new(0.5 * (n + r.z), 0.0),
        C64::new(0.5 * r.x, -0.5 * r.y),
        C64::new(0.5 * r.x, 0.5 * r.y),
        C64::new(0.5 * (n - r.z), 0.0),
    )
}

/// Components `tr[ρσα]` of a 2×2 density matrix.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    let m = rho.matrix();
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: m.dim(),
        });
    }
    Ok(bloch_components(m).1)
}

/// Trace and Bloch components `(tr M, (tr Mσx, tr Mσy, tr Mσz))` of any 2×2
/// matrix, real parts only.
pub fn bloch_components(m: &ComplexMatrix) -> (f64, BlochVector) {
    let a = m.get(0, 0);
    let b = m.get(0, 1);
    let c = m.get(1, 0);
    let d = m.get(1, 1);
    let n = (a + d).re;
    let x = (b + c).re;
    let y = (I * (b - c)).re;
    let z = (a - d).re;
    (n, BlochVector::new(x, y, z))
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<ComplexMatrix>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.projectors[0].dim();
        let mut out = ComplexMatrix::zeros(dim);
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += &p.scale_real(*a);
        }
        out
    }

    pub fn projector_for(&self, outcome: f64) -> Result<&ComplexMatrix> {
        self.eigenvalues
            .iter()
            .position(|a| (a - outcome).abs() <= DEGENERACY_TOL)
            .map(|k| &self.projectors[k])
            .ok_or(Error::UnknownOutcome(outcome))
    }
}

/// Closed-form spectral decomposition of a self-adjoint 2×2 matrix.
pub fn spectral_decompose(a: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if a.dim() != 2 {
        return Err(Error::UnsupportedDimension(a.dim()));
    }
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotSelfAdjoint { deviation: dev });
    }
    let p = a.get(0, 0).re;
    let q = a.get(1, 1).re;
    let b = 0.5 * (a.get(0, 1) + a.get(1, 0).conj());
    let mean = 0.5 * (p + q);
    let half_gap = (0.25 * (p - q) * (p - q) + b.norm_sqr()).sqrt();

    if 2.0 * half_gap < DEGENERACY_TOL {
        return Ok(SpectralDecomposition {
            eigenvalues: vec![mean],
            projectors: vec![identity2()],
        });
    }

    // P± = ½(I ± (A − m I)/r)
    let traceless = ComplexMatrix::mat2(
        C64::new(0.5 * (p - q), 0.0),
        b,
        b.conj(),
        C64::new(0.5 * (q - p), 0.0),
    )
    .scale_real(1.0 / half_gap);
    let id = identity2();
    let plus = (&id + &traceless).scale_real(0.5);
    let minus = (&id - &traceless).scale_real(0.5);
    Ok(SpectralDecomposition {
        eigenvalues: vec![mean + half_gap, mean - half_gap],
        projectors: vec![plus, minus],
    })
}

/// Outcome distribution `(a, tr[ρ Pa])` for measuring the observable `a`.
pub fn measurement_probabilities(rho: &DensityMatrix, a: &ComplexMatrix) -> Result<Vec<(f64, f64)>> {
    let spec = spectral_decompose(a)?;
    let m = rho.matrix();
    if m.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: a.dim(),
        });
    }
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&spec.projectors)
        .map(|(&ev, p)| (ev, (m * p).trace().re.clamp(0.0, 1.0)))
        .collect())
}

/// Conditional state `Pa ρ Pa / tr[ρ Pa]` after observing `outcome`.
pub fn project_postulate(rho: &DensityMatrix, a: &ComplexMatrix, outcome: f64) -> Result<DensityMatrix> {
    let spec = spectral_decompose(a)?;
    let p = spec.projector_for(outcome)?;
    let m = rho.matrix();
    m.check_dim(p)?;
    let prob = (m * p).trace().re;
    if prob <= 1e-12 {
        return Err(Error::NullEvent { probability: prob });
    }
    let post = (&(p * m) * p).scale_real(1.0 / prob);
    // Projection of a valid state is a valid state; only round-off remains.
    Ok(DensityMatrix(post))
}

/// `½[L, ρL†] + ½[Lρ, L†]`
pub fn lindblad_dissipator(l: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    l.check_dim(rho)?;
    let ld = l.adjoint();
    let rho_ld = rho * &ld;
    let l_rho = l * rho;
    let first = l.commutator(&rho_ld)?;
    let second = l_rho.commutator(&ld)?;
    Ok((&first + &second).scale_real(0.5))
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a.get(i, j);
            for k in 0..nb {
                for l in 0..nb {
                    out.set(i * nb + k, j * nb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Which factor of a two-qubit operator is traced out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a 4×4 operator over one qubit, leaving a 2×2 operator.
pub fn partial_trace(m: &ComplexMatrix, traced: Subsystem) -> Result<ComplexMatrix> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: m.dim(),
        });
    }
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let v = match traced {
                Subsystem::Second => (0..2).map(|k| m.get(i * 2 + k, j * 2 + k)).sum(),
                Subsystem::First => (0..2).map(|k| m.get(k * 2 + i, k * 2 + j)).sum(),
            };
            out.set(i, j, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn bloch_examples() {
        let up = density_from_bloch(BlochVector::EXCITED).unwrap();
        assert!(up.matrix().max_abs_diff(&ComplexMatrix::diag(&[ONE, ZERO])) < 1e-15);

        let mixed = density_from_bloch(BlochVector::default()).unwrap();
        assert!(mixed.matrix().max_abs_diff(&identity2().scale_real(0.5)) < 1e-15);

        let xplus = density_from_bloch(BlochVector::new(1.0, 0.0, 0.0)).unwrap();
        let expect = ComplexMatrix::mat2(c(0.5), c(0.5), c(0.5), c(0.5));
        assert!(xplus.matrix().max_abs_diff(&expect) < 1e-15);

        assert!(density_from_bloch(BlochVector::new(1.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn bloch_readout_examples() {
        let down = DensityMatrix::new(ComplexMatrix::diag(&[ZERO, ONE])).unwrap();
        assert_eq!(bloch_from_density(&down).unwrap(), BlochVector::new(0.0, 0.0, -1.0));

        let yplus = DensityMatrix::new((&identity2() + &sigma_y()).scale_real(0.5)).unwrap();
        let r = bloch_from_density(&yplus).unwrap();
        assert!(r.max_abs_diff(BlochVector::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let non_herm = ComplexMatrix::mat2(c(0.5), c(1.0), c(0.0), c(0.5));
        assert!(matches!(DensityMatrix::new(non_herm), Err(Error::NotSelfAdjoint { .. })));
        let bad_trace = ComplexMatrix::diag(&[c(0.7), c(0.7)]);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::NotAState(_))));
        let negative = ComplexMatrix::diag(&[c(1.5), c(-0.5)]);
        assert!(DensityMatrix::new(negative).is_err());
    }

    #[test]
    fn spectral_examples() {
        let sz = spectral_decompose(&sigma_z()).unwrap();
        assert_eq!(sz.eigenvalues, vec![1.0, -1.0]);
        assert!(sz.projectors[0].max_abs_diff(&ComplexMatrix::diag(&[ONE, ZERO])) < 1e-15);
        assert!(sz.projectors[1].max_abs_diff(&ComplexMatrix::diag(&[ZERO, ONE])) < 1e-15);

        let id = spectral_decompose(&identity2()).unwrap();
        assert_eq!(id.eigenvalues, vec![1.0]);
        assert!(id.projectors[0].max_abs_diff(&identity2()) < 1e-15);

        let sx = spectral_decompose(&sigma_x()).unwrap();
        assert_eq!(sx.eigenvalues.len(), 2);
        assert!((sx.eigenvalues[0] - 1.0).abs() < 1e-15);
        let plus = (&identity2() + &sigma_x()).scale_real(0.5);
        let minus = (&identity2() - &sigma_x()).scale_real(0.5);
        assert!(sx.projectors[0].max_abs_diff(&plus) < 1e-15);
        assert!(sx.projectors[1].max_abs_diff(&minus) < 1e-15);
    }

    #[test]
    fn spectral_rejects_non_hermitian_and_large() {
        assert!(spectral_decompose(&sigma_plus()).is_err());
        assert!(matches!(
            spectral_decompose(&ComplexMatrix::identity(4)),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn measurement_examples() {
        let mixed = density_from_bloch(BlochVector::default()).unwrap();
        let p = measurement_probabilities(&mixed, &sigma_z()).unwrap();
        assert_eq!(p, vec![(1.0, 0.5), (-1.0, 0.5)]);

        let up = density_from_bloch(BlochVector::EXCITED).unwrap();
        let p = measurement_probabilities(&up, &sigma_z()).unwrap();
        assert_eq!(p, vec![(1.0, 1.0), (-1.0, 0.0)]);

        let r = BlochVector::new(0.3, -0.2, 0.4);
        let rho = density_from_bloch(r).unwrap();
        let p = measurement_probabilities(&rho, &sigma_z()).unwrap();
        assert!((p[0].1 - (1.0 + r.z) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let mixed = density_from_bloch(BlochVector::default()).unwrap();
        let post = project_postulate(&mixed, &sigma_z(), 1.0).unwrap();
        assert!(post.matrix().max_abs_diff(&ComplexMatrix::diag(&[ONE, ZERO])) < 1e-15);

        let again = project_postulate(&post, &sigma_z(), 1.0).unwrap();
        assert!(again.matrix().max_abs_diff(post.matrix()) < 1e-15);

        let xplus = density_from_bloch(BlochVector::new(1.0, 0.0, 0.0)).unwrap();
        let down = project_postulate(&xplus, &sigma_z(), -1.0).unwrap();
        assert!(down.matrix().max_abs_diff(&ComplexMatrix::diag(&[ZERO, ONE])) < 1e-15);
    }

    #[test]
    fn projection_errors() {
        let up = density_from_bloch(BlochVector::EXCITED).unwrap();
        assert!(matches!(
            project_postulate(&up, &sigma_z(), -1.0),
            Err(Error::NullEvent { .. })
        ));
        assert!(matches!(
            project_postulate(&up, &sigma_z(), 0.5),
            Err(Error::UnknownOutcome(_))
        ));
    }

    #[test]
    fn dissipator_examples() {
        let kappa: f64 = 0.7;
        let l = sigma_minus().scale_real(kappa.sqrt());
        let up = ComplexMatrix::diag(&[ONE, ZERO]);
        // κ(σ−ρσ+ − ½{σ+σ−, ρ}) = κ(|↓⟩⟨↓| − |↑⟩⟨↑|)
        let expect = ComplexMatrix::diag(&[c(-kappa), c(kappa)]);
        let out = lindblad_dissipator(&l, &up).unwrap();
        assert!(out.max_abs_diff(&expect) < 1e-15);

        let down = ComplexMatrix::diag(&[ZERO, ONE]);
        let out = lindblad_dissipator(&sigma_minus(), &down).unwrap();
        assert!(out.max_abs() < 1e-15);

        assert!(lindblad_dissipator(&sigma_minus(), &ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn tensor_examples() {
        assert!(tensor(&identity2(), &identity2()).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        let (a, b) = (sigma_x(), sigma_z());
        let k = tensor(&a, &b);
        for r in 0..4 {
            for s in 0..4 {
                let expect = a.get(r / 2, s / 2) * b.get(r % 2, s % 2);
                assert_eq!(k.get(r, s), expect);
            }
        }

        let rho = density_from_bloch(BlochVector::new(0.1, 0.2, 0.3)).unwrap();
        let sigma = density_from_bloch(BlochVector::new(-0.5, 0.0, 0.5)).unwrap();
        let joint = tensor(rho.matrix(), sigma.matrix());
        let reduced = partial_trace(&joint, Subsystem::Second).unwrap();
        assert!(reduced.max_abs_diff(rho.matrix()) < 1e-15);
        let reduced = partial_trace(&joint, Subsystem::First).unwrap();
        assert!(reduced.max_abs_diff(sigma.matrix()) < 1e-15);

        assert!(partial_trace(&identity2(), Subsystem::First).is_err());
    }

    #[test]
    fn matrix_json_is_rows_of_pairs() {
        let json = serde_json::to_string(&sigma_y()).unwrap();
        assert_eq!(json, "[[[0.0,0.0],[-0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sigma_y());
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[0,0],[1,0]]]").is_err());
    }
}
