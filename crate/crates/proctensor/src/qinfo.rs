//! Entropic measures and Choi-state utilities. All entropies are base-2.

use crate::eig::{eig_hermitian, eigvals_hermitian};
use crate::error::{Error, Result};
use crate::legs::{LegId, LegLayout, partial_trace};
use crate::matrix::{ComplexMatrix, ONE};

/// Eigenvalues in [-EIG_CLAMP, 0) are treated as exact zeros; anything more
/// negative is an error on operators that must be positive.
pub const EIG_CLAMP: f64 = 1e-12;

/// Support detection threshold for relative-entropy divergence.
pub const SUPPORT_TOL: f64 = 1e-12;

const LN2: f64 = std::f64::consts::LN_2;

/// Unnormalized maximally entangled operator sum_{ab} |aa><bb|, trace d.
pub fn psi_plus(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            m.set(a * d + a, b * d + b, ONE);
        }
    }
    m
}

/// A state (or subnormalized state) together with its leg structure.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    pub matrix: ComplexMatrix,
    pub layout: LegLayout,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix, layout: LegLayout) -> Result<Self> {
        if matrix.dim() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} vs layout dimension {}",
                matrix.dim(),
                layout.dim()
            )));
        }
        let scale = matrix.max_abs().max(1e-300);
        let residual = matrix.hermiticity_residual();
        if residual > 1e-10 * scale {
            return Err(Error::NonHermitian { residual, tol: 1e-10 * scale });
        }
        let vals = eigvals_hermitian(&matrix.hermitize().0)?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -1e-10 * scale.max(1.0) {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(Self { matrix, layout })
    }

    /// Single-system state without timestep structure.
    pub fn plain(matrix: ComplexMatrix) -> Result<Self> {
        let layout = LegLayout::single(0, crate::legs::LegRole::In, matrix.dim());
        Self::new(matrix, layout)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
    }
}

fn clamped_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let vals = eigvals_hermitian(m)?;
    let scale = vals.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
    let clamp = EIG_CLAMP * scale;
    vals.into_iter()
        .map(|v| {
            if v < -clamp {
                Err(Error::NegativeEigenvalue(v))
            } else {
                Ok(v.max(0.0))
            }
        })
        .collect()
}

/// von Neumann entropy -tr[rho log2 rho] of a normalized state.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(tr));
    }
    let vals = clamped_spectrum(rho)?;
    Ok(vals
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum())
}

/// Entropy of the trace-normalized copy; accepts subnormalized input.
pub fn von_neumann_entropy_scaled(rho: &ComplexMatrix) -> Result<f64> {
    let tr = rho.trace().re;
    if tr <= 0.0 {
        return Err(Error::NotNormalized(tr));
    }
    von_neumann_entropy(&rho.scale_re(1.0 / tr))
}

/// Quantum relative entropy tr[rho(log2 rho - log2 sigma)].
///
/// Returns +infinity when the support of rho is not contained in the support
/// of sigma. No normalization is applied; S(a rho || a sigma) = a S(rho||sigma).
pub fn relative_entropy(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let p = clamped_spectrum(rho)?;
    let sig = eig_hermitian(sigma)?;
    let q: Vec<f64> = {
        let scale = sig.values.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
        let clamp = EIG_CLAMP * scale;
        sig.values
            .iter()
            .map(|&v| {
                if v < -clamp {
                    Err(Error::NegativeEigenvalue(v))
                } else {
                    Ok(v.max(0.0))
                }
            })
            .collect::<Result<_>>()?
    };
    let first: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum();
    // <v_j| rho |v_j> for all eigenvectors of sigma via one product.
    let r = rho.matmul(&sig.vectors);
    let n = rho.dim();
    let rho_scale = p.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let q_scale = q.iter().fold(1.0f64, |m, &v| m.max(v));
    let mut second = 0.0f64;
    for j in 0..n {
        let mut w = 0.0f64;
        for rr in 0..n {
            w += (sig.vectors.get(rr, j).conj() * r.get(rr, j)).re;
        }
        if q[j] <= SUPPORT_TOL * q_scale {
            if w > SUPPORT_TOL * rho_scale.max(1.0) {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        second += w.max(0.0) * q[j].log2();
    }
    Ok(first - second)
}

fn check_partition(layout: &LegLayout, parts: &[&[LegId]]) -> Result<()> {
    let mut all: Vec<LegId> = Vec::new();
    for part in parts {
        for &id in *part {
            if !layout.contains(id) {
                return Err(Error::UnknownLeg(id));
            }
            if all.contains(&id) {
                return Err(Error::LayoutMismatch(format!("leg {id} in two parts")));
            }
            all.push(id);
        }
    }
    if all.len() != layout.len() {
        return Err(Error::LayoutMismatch("partition does not cover the layout".into()));
    }
    Ok(())
}

/// I(A:B) = S_A + S_B - S_AB of a normalized state.
pub fn mutual_information(
    rho: &ComplexMatrix,
    layout: &LegLayout,
    legs_a: &[LegId],
    legs_b: &[LegId],
) -> Result<f64> {
    check_partition(layout, &[legs_a, legs_b])?;
    let s_ab = von_neumann_entropy(rho)?;
    let (ra, _) = partial_trace(rho, layout, legs_b)?;
    let (rb, _) = partial_trace(rho, layout, legs_a)?;
    Ok(von_neumann_entropy(&ra)? + von_neumann_entropy(&rb)? - s_ab)
}

/// I(F:H|M) = S_FM + S_MH - S_FMH - S_M of a normalized state.
pub fn conditional_mutual_information(
    rho: &ComplexMatrix,
    layout: &LegLayout,
    legs_f: &[LegId],
    legs_m: &[LegId],
    legs_h: &[LegId],
) -> Result<f64> {
    check_partition(layout, &[legs_f, legs_m, legs_h])?;
    let s_fmh = von_neumann_entropy(rho)?;
    let (fm, _) = partial_trace(rho, layout, legs_h)?;
    let (mh, _) = partial_trace(rho, layout, legs_f)?;
    let mut fh = legs_f.to_vec();
    fh.extend_from_slice(legs_h);
    let (m_only, _) = partial_trace(rho, layout, &fh)?;
    Ok(von_neumann_entropy(&fm)? + von_neumann_entropy(&mh)?
        - s_fmh
        - von_neumann_entropy(&m_only)?)
}

/// Apply a channel given by its Choi matrix (legs ordered input, output) to a
/// state: out = tr_in[choi (rho^T ⊗ 1)].
pub fn apply_choi_matrix(choi: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d_in = rho.dim();
    if choi.dim() % d_in != 0 {
        return Err(Error::DimensionMismatch(format!(
            "Choi dimension {} is not a multiple of the input dimension {}",
            choi.dim(),
            d_in
        )));
    }
    let d_out = choi.dim() / d_in;
    let mut out = ComplexMatrix::zeros(d_out);
    for i in 0..d_in {
        for i2 in 0..d_in {
            let w = rho.get(i, i2);
            if w == crate::matrix::ZERO {
                continue;
            }
            for o in 0..d_out {
                for o2 in 0..d_out {
                    out.add_at(o, o2, w * choi.get(i * d_out + o, i2 * d_out + o2));
                }
            }
        }
    }
    Ok(out)
}

/// Channel application preserving the layout when dimensions allow.
pub fn apply_choi(choi: &ComplexMatrix, input: &DensityOperator) -> Result<DensityOperator> {
    let out = apply_choi_matrix(choi, &input.matrix)?;
    let layout = if out.dim() == input.matrix.dim() {
        input.layout.clone()
    } else {
        LegLayout::single(0, crate::legs::LegRole::In, out.dim())
    };
    DensityOperator::new(out, layout)
}

/// Classical Kullback-Leibler divergence in bits over matched outcome lists.
/// +infinity when q vanishes where p does not.
pub fn kl_divergence_bits(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        s += pi * (pi.log2() - qi.log2());
    }
    s
}

/// Convert an entropic quantity from bits to nats.
pub fn bits_to_nats(x: f64) -> f64 {
    x * LN2
}
