//! Linear maps with forward and adjoint application.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Field, ScalarKind};

/// A real-linear operator `T` together with its adjoint `T*`, characterized
/// by `⟨T(x), y⟩_ℝ = ⟨x, T*(y)⟩_ℝ`.
pub trait LinearMap {
    fn domain_shape(&self) -> &[usize];
    fn codomain_shape(&self) -> &[usize];
    fn forward(&self, x: &Field) -> Result<Field>;
    fn adjoint(&self, y: &Field) -> Result<Field>;
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn domain_shape(&self) -> &[usize] {
        (**self).domain_shape()
    }
    fn codomain_shape(&self) -> &[usize] {
        (**self).codomain_shape()
    }
    fn forward(&self, x: &Field) -> Result<Field> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &Field) -> Result<Field> {
        (**self).adjoint(y)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Box<T> {
    fn domain_shape(&self) -> &[usize] {
        (**self).domain_shape()
    }
    fn codomain_shape(&self) -> &[usize] {
        (**self).codomain_shape()
    }
    fn forward(&self, x: &Field) -> Result<Field> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &Field) -> Result<Field> {
        (**self).adjoint(y)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn domain_shape(&self) -> &[usize] {
        (**self).domain_shape()
    }
    fn codomain_shape(&self) -> &[usize] {
        (**self).codomain_shape()
    }
    fn forward(&self, x: &Field) -> Result<Field> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &Field) -> Result<Field> {
        (**self).adjoint(y)
    }
}

pub(crate) fn check_shape(expected: &[usize], x: &Field) -> Result<()> {
    if x.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected: expected.to_vec(),
            found: x.shape().to_vec(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Identity {
    shape: Vec<usize>,
}

impl Identity {
    pub fn new(shape: &[usize]) -> Result<Self> {
        Field::zeros(shape, ScalarKind::Real)?;
        Ok(Self {
            shape: shape.to_vec(),
        })
    }
}

impl LinearMap for Identity {
    fn domain_shape(&self) -> &[usize] {
        &self.shape
    }
    fn codomain_shape(&self) -> &[usize] {
        &self.shape
    }
    fn forward(&self, x: &Field) -> Result<Field> {
        check_shape(&self.shape, x)?;
        Ok(x.clone())
    }
    fn adjoint(&self, y: &Field) -> Result<Field> {
        check_shape(&self.shape, y)?;
        Ok(y.clone())
    }
}

/// Dense real matrix acting on flattened real fields; for small problems
/// and tests.
#[derive(Debug, Clone)]
pub struct MatrixMap {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    domain: [usize; 1],
    codomain: [usize; 1],
}

impl MatrixMap {
    /// `entries` is row-major with `rows * cols` values.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(vec![rows, cols]));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidParameter("matrix entry count must equal rows * cols"));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            domain: [cols],
            codomain: [rows],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

impl LinearMap for MatrixMap {
    fn domain_shape(&self) -> &[usize] {
        &self.domain
    }
    fn codomain_shape(&self) -> &[usize] {
        &self.codomain
    }
    fn forward(&self, x: &Field) -> Result<Field> {
        check_shape(&self.domain, x)?;
        let xs = x.as_slice();
        let out = self
            .entries
            .chunks_exact(self.cols)
            .map(|row| crate::field::dot(row, xs))
            .collect();
        Field::from_vec(&self.codomain, out)
    }
    fn adjoint(&self, y: &Field) -> Result<Field> {
        check_shape(&self.codomain, y)?;
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.entries.chunks_exact(self.cols).zip(y.as_slice()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        Field::from_vec(&self.domain, out)
    }
}

/// One-dimensional Gaussian of width `sigma` periodized onto `n` points and
/// normalized to unit mass. Index 0 is the kernel center; the profile is
/// symmetric, `k[i] == k[n - i]`.
pub fn periodic_gaussian_1d(n: usize, sigma: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("grid size must be positive"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter("sigma must be positive"));
    }
    // Images beyond 40 sigma contribute below f64 resolution.
    let reach = (libm::ceil(40.0 * sigma / n as f64) as i64).max(1) + 1;
    let mut k: Vec<f64> = (0..n as i64)
        .map(|i| {
            // Evaluate at the folded offset so that k[i] and k[n - i] agree exactly.
            let i = i.min(n as i64 - i);
            (-reach..=reach)
                .map(|p| {
                    let d = (i + p * n as i64) as f64;
                    libm::exp(-d * d / (2.0 * sigma * sigma))
                })
                .sum()
        })
        .collect();
    let mass: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= mass);
    Ok(k)
}

/// Separable periodized Gaussian on an `n × n` grid, row-major, unit mass.
pub fn periodic_gaussian_kernel(n: usize, sigma: f64) -> Result<Field> {
    let k1 = periodic_gaussian_1d(n, sigma)?;
    let data = k1
        .iter()
        .flat_map(|&a| k1.iter().map(move |&b| a * b))
        .collect();
    Field::from_vec(&[n, n], data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for &(n, sigma) in &[(1, 1.0), (8, 0.7), (16, 3.0), (5, 50.0)] {
            let k = periodic_gaussian_kernel(n, sigma).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-14);
            assert!(k.as_slice().iter().all(|&v| v >= 0.0));
            let k1 = periodic_gaussian_1d(n, sigma).unwrap();
            for i in 1..n {
                assert_eq!(k1[i], k1[n - i]);
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_parameters() {
        assert!(periodic_gaussian_kernel(8, 0.0).is_err());
        assert!(periodic_gaussian_kernel(8, -1.0).is_err());
        assert!(periodic_gaussian_kernel(0, 1.0).is_err());
        assert!(periodic_gaussian_kernel(8, f64::NAN).is_err());
    }

    #[test]
    fn matrix_adjoint_is_transpose() {
        let m = MatrixMap::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = Field::from_vec(&[3], vec![1.0, -1.0, 2.0]).unwrap();
        let y = Field::from_vec(&[2], vec![0.5, 3.0]).unwrap();
        assert_eq!(m.forward(&x).unwrap().as_slice(), &[5.0, 11.0]);
        assert_eq!(m.adjoint(&y).unwrap().as_slice(), &[12.5, 16.0, 19.5]);
        let lhs = m.forward(&x).unwrap().inner_real(&y).unwrap();
        let rhs = x.inner_real(&m.adjoint(&y).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert!(m.forward(&y).is_err());
    }
}
