//! Periodic Gaussian blur on an `n × n` grid, applied through 2-D FFTs.

use std::fmt;
use std::sync::Arc;

use bhess_core::linear::periodic_gaussian_kernel;
use bhess_core::{Error, Field, LinearMap, Result, ScalarKind};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Blur width used when none is given, in pixels.
pub const DEFAULT_SIGMA: f64 = 3.0;

/// Circular convolution with a periodized, unit-mass Gaussian.
///
/// The kernel is symmetric, so the operator is self-adjoint; the adjoint is
/// still applied as convolution with the reflected kernel (conjugated
/// frequency response).
#[derive(Clone)]
pub struct GaussianBlur {
    n: usize,
    sigma: f64,
    shape: [usize; 2],
    response: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GaussianBlur {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianBlur")
            .field("n", &self.n)
            .field("sigma", &self.sigma)
            .finish_non_exhaustive()
    }
}

impl GaussianBlur {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        let kernel = periodic_gaussian_kernel(n, sigma)?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut blur = Self {
            n,
            sigma,
            shape: [n, n],
            response: Vec::new(),
            fft,
            ifft,
        };
        let mut buf: Vec<Complex64> = kernel.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        blur.fft2(&mut buf, false);
        blur.response = buf;
        Ok(blur)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Frequency response of the kernel, row-major `n × n`.
    pub fn frequency_response(&self) -> &[Complex64] {
        &self.response
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.n;
        plan.process(buf);
        transpose(buf, n);
        plan.process(buf);
        transpose(buf, n);
    }

    fn convolve(&self, x: &Field, conjugate: bool) -> Result<Field> {
        if x.shape() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.to_vec(),
                found: x.shape().to_vec(),
            });
        }
        let mut buf: Vec<Complex64> = (0..x.len()).map(|i| x.entry(i)).collect();
        self.fft2(&mut buf, false);
        for (b, r) in buf.iter_mut().zip(&self.response) {
            *b *= if conjugate { r.conj() } else { *r };
        }
        self.fft2(&mut buf, true);
        let scale = 1.0 / (self.n * self.n) as f64;
        match x.kind() {
            ScalarKind::Real => Field::from_vec(&self.shape, buf.iter().map(|z| z.re * scale).collect()),
            ScalarKind::Complex => {
                buf.iter_mut().for_each(|z| *z *= scale);
                Field::from_complex(&self.shape, &buf)
            }
        }
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

impl LinearMap for GaussianBlur {
    fn domain_shape(&self) -> &[usize] {
        &self.shape
    }

    fn codomain_shape(&self) -> &[usize] {
        &self.shape
    }

    fn forward(&self, x: &Field) -> Result<Field> {
        self.convolve(x, false)
    }

    fn adjoint(&self, y: &Field) -> Result<Field> {
        self.convolve(y, true)
    }
}

/// [`GaussianBlur::new`] under the name used by the command line.
pub fn blur_make(n: usize, sigma: f64) -> Result<GaussianBlur> {
    GaussianBlur::new(n, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fields_are_preserved() {
        let blur = GaussianBlur::new(12, 2.5).unwrap();
        let c = Field::filled(&[12, 12], 3.25).unwrap();
        let out = blur.forward(&c).unwrap();
        for v in out.as_slice() {
            assert!((v - 3.25).abs() < 1e-13);
        }
    }

    #[test]
    fn parameters_are_validated() {
        assert!(GaussianBlur::new(8, 0.0).is_err());
        assert!(GaussianBlur::new(8, -2.0).is_err());
        assert!(GaussianBlur::new(0, 1.0).is_err());
        let blur = GaussianBlur::new(4, 1.0).unwrap();
        assert!(blur.forward(&Field::filled(&[4, 5], 1.0).unwrap()).is_err());
    }

    #[test]
    fn response_is_real_for_symmetric_kernel() {
        let blur = GaussianBlur::new(10, 3.0).unwrap();
        assert!(blur.frequency_response().iter().all(|z| z.im.abs() < 1e-14));
        assert!((blur.frequency_response()[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_inputs_stay_complex() {
        let blur = GaussianBlur::new(6, 1.0).unwrap();
        let z = Field::from_complex(&[6, 6], &vec![Complex64::new(0.0, 2.0); 36]).unwrap();
        let out = blur.forward(&z).unwrap();
        assert_eq!(out.kind(), ScalarKind::Complex);
        assert!((out.entry(7) - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }
}
