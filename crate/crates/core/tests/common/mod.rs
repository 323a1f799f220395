#![allow(dead_code)]

use bhess_core::linear::{periodic_gaussian_1d, MatrixMap};
use bhess_core::poisson::{simulate_counts, PoissonDeconvProblem};
use bhess_core::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense circulant form of the periodic Gaussian blur on an `n × n` grid,
/// acting on flattened fields.
pub fn dense_blur(n: usize, sigma: f64) -> MatrixMap {
    let k = periodic_gaussian_1d(n, sigma).unwrap();
    let m = n * n;
    let mut a = vec![0.0; m * m];
    for (r, row) in a.chunks_exact_mut(m).enumerate() {
        let (i1, j1) = (r / n, r % n);
        for (c, v) in row.iter_mut().enumerate() {
            let (i2, j2) = (c / n, c % n);
            *v = k[(i1 + n - i2) % n] * k[(j1 + n - j2) % n];
        }
    }
    MatrixMap::new(m, m, a).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Field {
    Field::from_vec(&[len], (0..len).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Field {
    uniform(rng, len, -1.0, 1.0)
}

/// Poisson instance on a flattened `n × n` grid with rates in `[1, 5)`.
pub fn poisson_instance(n: usize, sigma: f64, seed: u64) -> (PoissonDeconvProblem<MatrixMap>, Field) {
    let op = dense_blur(n, sigma);
    let mut r = rng(seed);
    let x = uniform(&mut r, n * n, 1.0, 5.0);
    let c = simulate_counts(&x, &op, seed ^ 0x5eed).unwrap();
    (PoissonDeconvProblem::new(op, c).unwrap(), x)
}

/// High-rate instance without zero counts, so the minimizer `Tx = c` is
/// interior and the objective strongly convex around it.
pub fn interior_instance(n: usize, sigma: f64, seed: u64) -> (PoissonDeconvProblem<MatrixMap>, Field) {
    let op = dense_blur(n, sigma);
    let mut r = rng(seed);
    let x = uniform(&mut r, n * n, 20.0, 40.0);
    let c = simulate_counts(&x, &op, seed ^ 0x5eed).unwrap();
    assert!(c.as_slice().iter().all(|&v| v > 0.0));
    (PoissonDeconvProblem::new(op, c).unwrap(), x)
}

pub fn rel_err(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Random symmetric positive definite `n × n` matrix `QᵀQ + n·I`.
pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let q: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum::<f64>();
        }
        a[i * n + i] += n as f64;
    }
    a
}
