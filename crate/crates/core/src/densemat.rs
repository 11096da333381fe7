//! Dense complex linear algebra for dimensions up to [`MAX_DIM`].
//!
//! Storage is fixed-capacity and `Copy`; only the leading `dim × dim` block
//! of a [`ComplexMatrix`] is meaningful and the rest is kept at zero.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::{Error, Result, C64};

pub const MAX_DIM: usize = 6;

/// Absolute Frobenius tolerance on `A - A†` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this
/// (scaled by `max(1, ‖A‖_F)`).
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(())
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [[C64; MAX_DIM]; MAX_DIM],
}

impl core::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut list = f.debug_list();
        for row in &self.data[..self.dim] {
            list.entry(&&row[..self.dim]);
        }
        list.finish()
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: [[ZERO; MAX_DIM]; MAX_DIM],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i][i] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from `dim * dim` entries in row-major order.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::EntryCount {
                dim,
                found: entries.len(),
            });
        }
        for (k, z) in entries.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            m.data[k / dim][k % dim] = *z;
        }
        Ok(m)
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let complex: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &complex)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFinite);
            }
            m.data[i][i] = C64::new(d, 0.0);
        }
        Ok(m)
    }

    /// The rank-one operator `|ket⟩⟨bra|`.
    pub fn outer(ket: &ComplexVector, bra: &ComplexVector) -> Result<Self> {
        same_dim(ket.dim, bra.dim)?;
        let mut m = Self::zeros(ket.dim)?;
        for i in 0..ket.dim {
            for j in 0..ket.dim {
                m.data[i][j] = ket.data[i] * bra.data[j].conj();
            }
        }
        Ok(m)
    }

    /// The projector `|v⟩⟨v|`.
    pub fn projector(v: &ComplexVector) -> Self {
        let mut m = Self {
            dim: v.dim,
            data: [[ZERO; MAX_DIM]; MAX_DIM],
        };
        for i in 0..v.dim {
            for j in 0..v.dim {
                m.data[i][j] = v.data[i] * v.data[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major copy of the meaningful entries.
    pub fn entries(&self) -> Vec<C64> {
        let n = self.dim;
        self.data[..n]
            .iter()
            .flat_map(|row| row[..n].iter().copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        let n = self.dim;
        self.data[..n].iter().all(|row| {
            row[..n]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
        })
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self {
            dim: n,
            data: [[ZERO; MAX_DIM]; MAX_DIM],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i][j] += a * other.data[k][j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] = self.data[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = *self;
        for row in &mut out.data[..self.dim] {
            for x in &mut row[..self.dim] {
                *x *= z;
            }
        }
        out
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(self.mul_unchecked(other) - other.mul_unchecked(self))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.dim;
        libm::sqrt(
            self.data[..n]
                .iter()
                .flat_map(|row| row[..n].iter())
                .map(|z| z.norm_sqr())
                .sum(),
        )
    }

    /// `√Σ|A_ij − B_ij|²`.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim, other.dim)?;
        Ok((*self - *other).frobenius_norm())
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_deviation(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        same_dim(self.dim, v.dim)?;
        let mut out = ComplexVector::zeros(self.dim)?;
        for i in 0..self.dim {
            out.data[i] = (0..self.dim).map(|k| self.data[i][k] * v.data[k]).sum();
        }
        Ok(out)
    }

    /// `⟨bra|A|ket⟩`.
    pub fn matrix_element(&self, bra: &ComplexVector, ket: &ComplexVector) -> Result<C64> {
        same_dim(self.dim, bra.dim)?;
        let av = self.apply(ket)?;
        Ok(bra.inner(&av))
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Cyclic complex Jacobi rotations until the off-diagonal Frobenius norm
    /// is below `1e-13 · max(1, ‖A‖_F)`.
    pub fn herm_eigvals(&self) -> Result<Vec<f64>> {
        let deviation = self.hermiticity_deviation();
        if !(deviation < HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        let n = self.dim;
        let mut a = (*self + self.adjoint()).scale_real(0.5);
        let threshold = JACOBI_TOL * a.frobenius_norm().max(1.0);

        let mut off = a.off_diagonal_norm();
        let mut sweeps = 0;
        while off >= threshold {
            if sweeps == JACOBI_MAX_SWEEPS {
                return Err(Error::EigenNotConverged { off_diagonal: off });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    a.jacobi_rotate(p, q);
                }
            }
            off = a.off_diagonal_norm();
            sweeps += 1;
        }

        let mut vals: Vec<f64> = (0..n).map(|i| a.data[i][i].re).collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc += self.data[i][j].norm_sqr();
                }
            }
        }
        libm::sqrt(acc)
    }

    /// Zeroes the (p, q) pair with `A ← J† A J`.
    fn jacobi_rotate(&mut self, p: usize, q: usize) {
        let apq = self.data[p][q];
        let g = apq.norm();
        if g == 0.0 {
            return;
        }
        // Phase factor making the pivot real, then a real Jacobi rotation.
        let e = apq / g;
        let theta = (self.data[q][q].re - self.data[p][p].re) / (2.0 * g);
        let t = if theta == 0.0 {
            1.0
        } else {
            theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0))
        };
        let c = 1.0 / libm::sqrt(1.0 + t * t);
        let s = t * c;
        let jpp = C64::new(c, 0.0);
        let jpq = C64::new(s, 0.0);
        let jqp = e.conj() * (-s);
        let jqq = e.conj() * c;

        let n = self.dim;
        for k in 0..n {
            let akp = self.data[k][p];
            let akq = self.data[k][q];
            self.data[k][p] = akp * jpp + akq * jqp;
            self.data[k][q] = akp * jpq + akq * jqq;
        }
        for k in 0..n {
            let apk = self.data[p][k];
            let aqk = self.data[q][k];
            self.data[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
            self.data[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
        }
        self.data[p][q] = ZERO;
        self.data[q][p] = ZERO;
        self.data[p][p].im = 0.0;
        self.data[q][q].im = 0.0;
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.dim && j < self.dim,
            "index ({i}, {j}) out of range"
        );
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(
            i < self.dim && j < self.dim,
            "index ({i}, {j}) out of range"
        );
        &mut self.data[i][j]
    }
}

// Operator impls assume matching dimensions; use the `Result`-returning
// methods where dimensions come from outside.
impl Add for ComplexMatrix {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMatrix {
    fn add_assign(&mut self, rhs: Self) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = Self;

    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl Neg for ComplexMatrix {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        &self * &rhs
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct ComplexVector {
    dim: usize,
    data: [C64; MAX_DIM],
}

impl core::fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(&self.data[..self.dim]).finish()
    }
}

impl ComplexVector {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: [ZERO; MAX_DIM],
        })
    }

    /// The `index`-th standard basis vector.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        let mut v = Self::zeros(dim)?;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        v.data[index] = ONE;
        Ok(v)
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        let mut v = Self::zeros(entries.len())?;
        for (slot, z) in v.data.iter_mut().zip(entries) {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            *slot = *z;
        }
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data[..self.dim]
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.as_slice().iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = *self;
        for x in &mut out.data[..self.dim] {
            *x *= z;
        }
        out
    }

    pub fn normalized(&self) -> Self {
        self.scale(C64::new(1.0 / self.norm(), 0.0))
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        assert!(i < self.dim, "index {i} out of range");
        &mut self.data[i]
    }
}

impl Add for ComplexVector {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(rhs.data) {
            *a += b;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_product() {
        let a = ComplexMatrix::from_rows(
            3,
            &[
                c(1.0, 2.0),
                c(0.0, -1.0),
                c(3.0, 0.0),
                c(0.5, 0.5),
                c(2.0, 0.0),
                c(-1.0, 1.0),
                c(0.0, 0.0),
                c(4.0, -2.0),
                c(1.0, 1.0),
            ],
        )
        .unwrap();
        let i3 = ComplexMatrix::identity(3).unwrap();
        assert_eq!(i3.mat_mul(&a).unwrap(), a);
    }

    #[test]
    fn rank_one_product() {
        let a = ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = ComplexMatrix::from_real_rows(2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let expected = ComplexMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.mat_mul(&b).unwrap(), expected);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let a = ComplexMatrix::identity(2).unwrap();
        let b = ComplexMatrix::identity(3).unwrap();
        assert!(matches!(
            a.mat_mul(&b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.frobenius_distance(&b).is_err());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(ComplexMatrix::zeros(0), Err(Error::UnsupportedDimension(0)));
        assert_eq!(ComplexMatrix::zeros(7), Err(Error::UnsupportedDimension(7)));
        assert!(matches!(
            ComplexMatrix::from_real_rows(2, &[1.0, 2.0, 3.0]),
            Err(Error::EntryCount { dim: 2, found: 3 })
        ));
        assert_eq!(
            ComplexMatrix::from_real_rows(1, &[f64::NAN]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn adjoint_single_entry() {
        let a = ComplexMatrix::from_rows(2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let expected =
            ComplexMatrix::from_rows(2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0), c(0.0, 0.0)])
                .unwrap();
        assert_eq!(a.adjoint(), expected);
        let h = a + a.adjoint();
        assert_eq!(h.adjoint(), h);
    }

    #[test]
    fn eigvals_simple_cases() {
        let d = ComplexMatrix::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.herm_eigvals().unwrap(), [1.0, 2.0, 3.0]);
        let x = ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let ev = x.herm_eigvals().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigvals_complex_pivot() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let a = ComplexMatrix::from_rows(2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)])
            .unwrap();
        let ev = a.herm_eigvals().unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(a.herm_eigvals(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn distance_of_identity() {
        let z = ComplexMatrix::zeros(2).unwrap();
        let i = ComplexMatrix::identity(2).unwrap();
        assert_eq!(z.frobenius_distance(&z).unwrap(), 0.0);
        assert!((z.frobenius_distance(&i).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vector_basics() {
        let v = ComplexVector::from_slice(&[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert_eq!(v.norm(), 5.0);
        assert!((v.normalized().norm() - 1.0).abs() < 1e-15);
        let p = ComplexMatrix::projector(&v.normalized());
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        assert!(ComplexVector::basis(2, 2).is_err());
    }
}
