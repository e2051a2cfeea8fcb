//! Dense square complex matrices, row-major.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix with entries stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        let show = self.dim.min(8);
        for r in 0..show {
            write!(f, "  ")?;
            for c in 0..show {
                let z = self.get(r, c);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f, "{}", if self.dim > show { "..." } else { "" })?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    /// Build from row-major real entries.
    pub fn from_real(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self { dim, data: rows.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Outer product |u><v| of two vectors of equal length.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        Self::from_fn(dim, |r, c| u[r] * v[c].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] += v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r))
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                sums[c] += self.get(r, c).norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Residual max|A - A†|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_residual() <= rel_tol * self.max_abs().max(1e-300)
    }

    /// (A + A†)/2, with the asymmetry residual that was removed.
    pub fn hermitize(&self) -> (Self, f64) {
        let residual = self.hermiticity_residual();
        let m = Self::from_fn(self.dim, |r, c| (self.get(r, c) + self.get(c, r).conj()) * 0.5);
        (m, residual)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let dim = da * db;
        let mut out = Self::zeros(dim);
        for ra in 0..da {
            for ca in 0..da {
                let va = self.get(ra, ca);
                if va == ZERO {
                    continue;
                }
                for rb in 0..db {
                    let dst = (ra * db + rb) * dim + ca * db;
                    let src = rb * db;
                    for cb in 0..db {
                        out.data[dst + cb] = va * other.data[src + cb];
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let arow = &self.data[i * n..(i + 1) * n];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in arow.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut out = vec![ZERO; n];
        for i in 0..n {
            let mut acc = ZERO;
            let row = &self.data[i * n..(i + 1) * n];
            for (a, x) in row.iter().zip(v.iter()) {
                acc += a * x;
            }
            out[i] = acc;
        }
        out
    }

    /// tr[A† B], the Frobenius inner product.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// tr[A^T B] without conjugation; the contraction underlying the Born rule here.
    pub fn contract_t(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    /// Solve A x = b for square A by LU with partial pivoting, in place on copies.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut lu = self.data.clone();
        let mut x = rhs.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[perm[k] * n + k].norm();
            for r in (k + 1)..n {
                let v = lu[perm[r] * n + k].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularGram);
            }
            perm.swap(k, p);
            let pk = perm[k];
            let piv = lu[pk * n + k];
            for r in (k + 1)..n {
                let pr = perm[r];
                let f = lu[pr * n + k] / piv;
                lu[pr * n + k] = f;
                for c in (k + 1)..n {
                    let v = lu[pk * n + c];
                    lu[pr * n + c] -= f * v;
                }
                for c in 0..n {
                    let v = x[pk * n + c];
                    x[pr * n + c] -= f * v;
                }
            }
        }
        let mut out = vec![ZERO; n * n];
        for c in 0..n {
            for k in (0..n).rev() {
                let pk = perm[k];
                let mut acc = x[pk * n + c];
                for j in (k + 1)..n {
                    acc -= lu[pk * n + j] * out[j * n + c];
                }
                out[k * n + c] = acc / lu[pk * n + k];
            }
        }
        Self::from_vec(n, out)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { dim: self.dim, data: self.data.iter().map(|z| -z).collect() }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Common single-qubit operators.
pub mod qubit {
    use super::{C64, ComplexMatrix};

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    /// Lowering operator |0><1|.
    pub fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0])
    }

    pub fn ket(amplitudes: &[C64]) -> Vec<C64> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        amplitudes.iter().map(|z| z / norm).collect()
    }

    pub fn ket0() -> Vec<C64> {
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    }

    pub fn ket1() -> Vec<C64> {
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    }

    pub fn ket_plus_x() -> Vec<C64> {
        ket(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn ket_plus_y() -> Vec<C64> {
        ket(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)])
    }

    pub fn projector(ket: &[C64]) -> ComplexMatrix {
        ComplexMatrix::outer(ket, ket)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
        let zz = qubit::sigma_z().kron(&qubit::sigma_z());
        let expect = ComplexMatrix::diag(&[ONE, -ONE, -ONE, ONE]);
        assert!((&zz - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn kron_bit_flip() {
        let xx = qubit::sigma_x().kron(&qubit::sigma_x());
        let mut v00 = vec![ZERO; 4];
        v00[0] = ONE;
        let flipped = xx.matvec(&v00);
        assert!((flipped[3] - ONE).norm() < 1e-15);
        assert!(flipped[0].norm() < 1e-15 && flipped[1].norm() < 1e-15 && flipped[2].norm() < 1e-15);
    }

    #[test]
    fn matmul_against_known_product() {
        let x = qubit::sigma_x();
        let y = qubit::sigma_y();
        let xy = x.matmul(&y);
        // sigma_x sigma_y = i sigma_z
        let expect = qubit::sigma_z().scale(I);
        assert!((&xy - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn solve_roundtrip() {
        let a = ComplexMatrix::from_vec(
            3,
            vec![
                C64::new(2.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0),
                C64::new(0.5, 0.0), C64::new(3.0, 0.0), C64::new(0.0, 2.0),
                C64::new(-1.0, 0.5), C64::new(1.0, 1.0), C64::new(4.0, -1.0),
            ],
        )
        .unwrap();
        let b = ComplexMatrix::identity(3);
        let inv = a.solve(&b).unwrap();
        let check = a.matmul(&inv);
        assert!((&check - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn hermitize_removes_asymmetry() {
        let mut m = qubit::sigma_x();
        m.set(0, 1, m.get(0, 1) + C64::new(1e-13, 1e-13));
        let (h, res) = m.hermitize();
        assert!(res > 0.0 && res < 1e-12);
        assert_eq!(h.hermiticity_residual(), 0.0);
    }
}
