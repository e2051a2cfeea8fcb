//! Haar-random unitaries, states, and channels for sampling and tests.

use rand::Rng;

use crate::matrix::{C64, ComplexMatrix};

pub fn ginibre(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    use rand::distributions::Distribution;
    let normal = rand_distr_standard_normal();
    ComplexMatrix::from_fn(d, |_, _| C64::new(normal.sample(rng), normal.sample(rng)))
}

// rand 0.8 ships StandardNormal through rand_distr; a Box-Muller pair keeps the
// dependency set small.
struct BoxMuller;

impl rand::distributions::Distribution<f64> for BoxMuller {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

fn rand_distr_standard_normal() -> BoxMuller {
    BoxMuller
}

/// Haar-distributed unitary via QR of a Ginibre matrix. Modified Gram-Schmidt
/// yields the unique Q with positive-diagonal R, which is Haar for Ginibre input.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, rng);
    let mut cols: Vec<Vec<C64>> = (0..d).map(|c| (0..d).map(|r| g.get(r, c)).collect()).collect();
    for k in 0..d {
        for _ in 0..2 {
            for j in 0..k {
                let proj: C64 = cols[j].iter().zip(cols[k].iter()).map(|(a, b)| a.conj() * b).sum();
                for r in 0..d {
                    let t = cols[j][r];
                    cols[k][r] -= proj * t;
                }
            }
        }
        let norm: f64 = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[k].iter_mut() {
            *z /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(d);
    for c in 0..d {
        for r in 0..d {
            u.set(r, c, cols[c][r]);
        }
    }
    u
}

/// Haar-random pure state vector.
pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    let g = ginibre(d, rng);
    let mut v: Vec<C64> = (0..d).map(|r| g.get(r, 0)).collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    v
}

/// Random full-rank density matrix from the Hilbert-Schmidt ensemble.
pub fn random_density(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, rng);
    let rho = g.matmul(&g.dagger());
    rho.scale_re(1.0 / rho.trace().re)
}

/// Random rank-deficient or full-rank CPTP map as a row-major superoperator,
/// built from a Haar isometry with `kraus` Kraus operators.
pub fn random_cptp_superop(d: usize, kraus: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let big = haar_unitary(d * kraus, rng);
    // Kraus_k = blocks of the first d columns.
    let mut sup = ComplexMatrix::zeros(d * d);
    for k in 0..kraus {
        let kr = ComplexMatrix::from_fn(d, |r, c| big.get(k * d + r, c));
        // vec(K rho K†) = (K ⊗ K*) vec(rho), row-major.
        let term = kr.kron(&kr.conj());
        sup = &sup + &term;
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for d in [2usize, 3, 6] {
            let u = haar_unitary(d, &mut rng);
            let utu = u.dagger().matmul(&u);
            assert!((&utu - &ComplexMatrix::identity(d)).max_abs() < 1e-11);
        }
    }

    #[test]
    fn random_density_is_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let rho = random_density(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.is_hermitian(1e-12));
    }

    #[test]
    fn random_cptp_is_trace_preserving() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let sup = random_cptp_superop(2, 3, &mut rng);
        let rho = random_density(2, &mut rng);
        let vec_rho: Vec<C64> =
            (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| rho.get(r, c)).collect();
        let out = sup.matvec(&vec_rho);
        let tr = out[0] + out[3];
        assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
    }
}
