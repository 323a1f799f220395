use bhess::blur::GaussianBlur;
use bhess::verify::direct_convolution;
use bhess_core::{Field, LinearMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Field {
    Field::from_vec(&[n, n], (0..n * n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

#[test]
fn adjoint_identity_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let blur = GaussianBlur::new(16, 3.0).unwrap();
    for _ in 0..10 {
        let (u, v) = (field(&mut rng, 16, -1.0, 1.0), field(&mut rng, 16, -1.0, 1.0));
        let l = blur.forward(&u).unwrap().inner_real(&v).unwrap();
        let r = u.inner_real(&blur.adjoint(&v).unwrap()).unwrap();
        assert!((l - r).abs() <= 1e-10 * l.abs().max(r.abs()), "{l} vs {r}");
    }
}

#[test]
fn fft_blur_matches_spatial_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (n, sigma) in [(8, 1.5), (8, 3.0), (5, 0.7)] {
        let blur = GaussianBlur::new(n, sigma).unwrap();
        let x = field(&mut rng, n, -1.0, 1.0);
        let fast = blur.forward(&x).unwrap();
        let slow = direct_convolution(&x, sigma).unwrap();
        let err = fast.sub(&slow).unwrap().norm() / slow.norm();
        assert!(err <= 1e-10, "n={n} sigma={sigma}: {err:e}");
    }
}

#[test]
fn blur_preserves_mass_and_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let blur = GaussianBlur::new(32, 3.0).unwrap();
    let x = field(&mut rng, 32, 0.0, 1.0);
    let y = blur.forward(&x).unwrap();
    let (sx, sy): (f64, f64) = (x.as_slice().iter().sum(), y.as_slice().iter().sum());
    assert!((sx - sy).abs() <= 1e-10 * sx);
    // Positive input stays positive up to FFT round-off.
    assert!(y.as_slice().iter().all(|&v| v > -1e-12));
    let mut spike = vec![0.0; 32 * 32];
    spike[0] = 1.0;
    let psf = blur.forward(&Field::from_vec(&[32, 32], spike).unwrap()).unwrap();
    assert!(psf.as_slice().iter().all(|&v| v > -1e-12));
    assert!((psf.as_slice()[1] - psf.as_slice()[32]).abs() < 1e-15, "isotropic");
}
