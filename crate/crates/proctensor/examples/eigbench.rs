use nalgebra::{Complex, DMatrix};
use std::time::Instant;

fn bench(n: usize) {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    let g = DMatrix::from_fn(n, n, |_, _| Complex::new(next(), next()));
    let h = &g * g.adjoint();
    let t0 = Instant::now();
    let eig = h.clone().symmetric_eigen();
    let dt = t0.elapsed();
    // reconstruction error
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex::new(x, 0.0)));
    let rec = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
    let err = (&rec - &h).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    println!("n={n}: {:?}, max recon err {:.3e} (scale {:.3e})", dt, err, scale);

    let t1 = Instant::now();
    let _p = &h * &h;
    println!("n={n}: matmul {:?}", t1.elapsed());
}

fn main() {
    bench(256);
    bench(1024);
}
