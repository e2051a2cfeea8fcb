//! Hermitian eigendecomposition, trace norm, and the matrix exponential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{C64, ComplexMatrix};

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Matching eigenvectors as columns.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// V diag(values) V†.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut vd = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                vd.set(r, c, self.vectors.get(r, c) * self.values[c]);
            }
        }
        vd.matmul(&self.vectors.dagger())
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        (0..self.values.len()).map(|r| self.vectors.get(r, k)).collect()
    }
}

fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.dim(), m.dim(), |r, c| m.get(r, c))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let residual = m.hermiticity_residual();
    let tol = HERMITICITY_TOL * m.max_abs().max(1e-300);
    if residual > tol {
        return Err(Error::NonHermitian { residual, tol });
    }
    let eig = to_na(m).symmetric_eigen();
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (c_new, &c_old) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, c_new, eig.eigenvectors[(r, c_old)]);
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let residual = m.hermiticity_residual();
    let tol = HERMITICITY_TOL * m.max_abs().max(1e-300);
    if residual > tol {
        return Err(Error::NonHermitian { residual, tol });
    }
    let mut vals: Vec<f64> = to_na(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_hermitian(1e-12) {
        let (h, _) = m.hermitize();
        return eigvals_hermitian(&h).expect("hermitized").iter().map(|v| v.abs()).sum();
    }
    let gram = m.dagger().matmul(m);
    let (g, _) = gram.hermitize();
    eigvals_hermitian(&g)
        .expect("gram matrix is Hermitian")
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum()
}

// Padé order-13 numerator coefficients for the exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const PADE13_THETA: f64 = 5.371920351148152;

/// Matrix exponential by order-13 Padé approximation with scaling and squaring.
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let norm = m.one_norm();
    let s = if norm > PADE13_THETA {
        ((norm / PADE13_THETA).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m.scale_re(0.5f64.powi(s));
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);
    let b = &PADE13;
    let ident = ComplexMatrix::identity(n);

    let mut w1 = a6.scale_re(b[13]);
    w1 = &w1 + &a4.scale_re(b[11]);
    w1 = &w1 + &a2.scale_re(b[9]);
    let mut w2 = a6.scale_re(b[7]);
    w2 = &w2 + &a4.scale_re(b[5]);
    w2 = &w2 + &a2.scale_re(b[3]);
    w2 = &w2 + &ident.scale_re(b[1]);
    let u = a.matmul(&(&a6.matmul(&w1) + &w2));

    let mut z1 = a6.scale_re(b[12]);
    z1 = &z1 + &a4.scale_re(b[10]);
    z1 = &z1 + &a2.scale_re(b[8]);
    let mut v = a6.matmul(&z1);
    v = &v + &a6.scale_re(b[6]);
    v = &v + &a4.scale_re(b[4]);
    v = &v + &a2.scale_re(b[2]);
    v = &v + &ident.scale_re(b[0]);

    let num = &v + &u;
    let den = &v - &u;
    let mut r = den.solve(&num).expect("Padé denominator is invertible");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{I, qubit};

    #[test]
    fn eig_sigma_z() {
        let e = eig_hermitian(&qubit::sigma_z()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_maximally_mixed() {
        let m = ComplexMatrix::identity(2).scale_re(0.5);
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-14 && (e.values[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eig_sigma_x_vectors() {
        let e = eig_hermitian(&qubit::sigma_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        let v = e.eigenvector(0);
        // |+> up to phase
        assert!((v[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((v[1].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let rec = e.reconstruct();
        assert!((&rec - &qubit::sigma_x()).max_abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(eig_hermitian(&m).is_err());
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut state = 1234u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for n in [3usize, 17, 64] {
            let g = ComplexMatrix::from_fn(n, |_, _| C64::new(next(), next()));
            let h = &g + &g.dagger();
            let e = eig_hermitian(&h).unwrap();
            let rec = e.reconstruct();
            assert!((&rec - &h).max_abs() < 1e-10 * h.max_abs());
            // unitarity of V
            let vtv = e.vectors.dagger().matmul(&e.vectors);
            assert!((&vtv - &ComplexMatrix::identity(n)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn trace_norms() {
        assert!((trace_norm(&ComplexMatrix::identity(2)) - 2.0).abs() < 1e-12);
        assert!((trace_norm(&qubit::sigma_z()) - 2.0).abs() < 1e-12);
        let rho = ComplexMatrix::from_real(2, &[0.5, 0.0, 0.0, 0.5]);
        assert!(trace_norm(&(&rho - &rho)) < 1e-14);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = ComplexMatrix::zeros(5);
        let e = expm(&z);
        assert!((&e - &ComplexMatrix::identity(5)).max_abs() <= 1e-14);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(i pi X / 2) = i X
        let a = qubit::sigma_x().scale(I * (std::f64::consts::PI / 2.0));
        let e = expm(&a);
        let expect = qubit::sigma_x().scale(I);
        assert!((&e - &expect).max_abs() < 1e-13);
    }

    #[test]
    fn expm_diagonal() {
        let a = ComplexMatrix::diag(&[C64::new(1.5, 0.0), C64::new(-0.3, 2.0)]);
        let e = expm(&a);
        assert!((e.get(0, 0) - C64::new(1.5, 0.0).exp()).norm() < 1e-13);
        assert!((e.get(1, 1) - C64::new(-0.3, 2.0).exp()).norm() < 1e-13);
        assert!(e.get(0, 1).norm() < 1e-14 && e.get(1, 0).norm() < 1e-14);
    }

    #[test]
    fn expm_commuting_additivity() {
        // A and B commuting: diagonal in the same basis
        let a = ComplexMatrix::diag(&[C64::new(0.4, 0.1), C64::new(-1.0, 0.0), C64::new(2.0, -0.5)]);
        let b = ComplexMatrix::diag(&[C64::new(-0.2, 1.0), C64::new(0.7, 0.3), C64::new(-0.1, 0.0)]);
        let lhs = expm(&(&a + &b));
        let rhs = expm(&a).matmul(&expm(&b));
        assert!((&lhs - &rhs).max_abs() < 1e-10);
    }

    #[test]
    fn expm_large_norm_scaling() {
        let a = qubit::sigma_y().scale_re(40.0).scale(I);
        let e = expm(&a);
        // exp(40 i Y) = cos(40) I + i sin(40) Y; || <= 1 entries
        let expect = &ComplexMatrix::identity(2).scale_re(40.0f64.cos())
            + &qubit::sigma_y().scale(I * 40.0f64.sin());
        assert!((&e - &expect).max_abs() < 1e-11);
    }
}
