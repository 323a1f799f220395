//! The objective-model contract: value, gradient, bilinear Hessian and
//! Hessian operator of a real functional on a field space.
//!
//! The gradient `∇f|x` is the field with `df|x(Δx) = ⟨∇f|x, Δx⟩_ℝ`, the
//! bilinear Hessian `𝓗|x(y, z)` is the symmetric form whose diagonal is the
//! second-order Taylor term (`f(x+y) ≈ f(x) + ⟨∇f|x, y⟩_ℝ + ½𝓗|x(y, y)`),
//! and the Hessian operator `H|x` is the self-adjoint map with
//! `⟨H|x(y), z⟩_ℝ = 𝓗|x(y, z)`. None of them is ever stored as a matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Field, ScalarKind};
use crate::linear::check_shape;

/// First and second order information of an objective at one point.
///
/// Implementations cache whatever the point-dependent parts of the
/// derivatives need, so repeated Hessian queries at the same point only pay
/// for the direction-dependent work.
pub trait LocalModel {
    fn point(&self) -> &Field;
    fn value(&self) -> f64;
    fn gradient(&self) -> &Field;
    /// `𝓗|x(y, z)`
    fn hess_bilinear(&self, y: &Field, z: &Field) -> Result<f64>;
    /// `H|x(y)`
    fn hess_apply(&self, y: &Field) -> Result<Field>;
    /// `𝓗|x(y, y)`
    fn curvature(&self, y: &Field) -> Result<f64> {
        self.hess_bilinear(y, y)
    }
}

pub trait Objective {
    type Local: LocalModel;

    fn shape(&self) -> &[usize];

    fn kind(&self) -> ScalarKind {
        ScalarKind::Real
    }

    fn in_domain(&self, x: &Field) -> bool;

    fn value(&self, x: &Field) -> Result<f64>;

    /// Evaluates value and gradient at `x` and prepares Hessian queries.
    fn local(&self, x: &Field) -> Result<Self::Local>;

    fn gradient(&self, x: &Field) -> Result<Field> {
        Ok(self.local(x)?.gradient().clone())
    }

    fn hess_bilinear(&self, x: &Field, y: &Field, z: &Field) -> Result<f64> {
        self.local(x)?.hess_bilinear(y, z)
    }

    fn hess_apply(&self, x: &Field, y: &Field) -> Result<Field> {
        self.local(x)?.hess_apply(y)
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    type Local = O::Local;
    fn shape(&self) -> &[usize] {
        (**self).shape()
    }
    fn kind(&self) -> ScalarKind {
        (**self).kind()
    }
    fn in_domain(&self, x: &Field) -> bool {
        (**self).in_domain(x)
    }
    fn value(&self, x: &Field) -> Result<f64> {
        (**self).value(x)
    }
    fn local(&self, x: &Field) -> Result<Self::Local> {
        (**self).local(x)
    }
}

/// Second-order Taylor model of an objective around a base point.
pub struct QuadraticModel<'a, L: LocalModel> {
    local: &'a L,
}

impl<'a, L: LocalModel> QuadraticModel<'a, L> {
    pub fn new(local: &'a L) -> Self {
        Self { local }
    }

    pub fn base_point(&self) -> &Field {
        self.local.point()
    }

    /// `f(x) + ⟨∇f|x, y⟩_ℝ + ½𝓗|x(y, y)`
    pub fn value(&self, y: &Field) -> Result<f64> {
        let g = self.local.gradient();
        Ok(self.local.value() + g.inner_real(y)? + 0.5 * self.local.curvature(y)?)
    }
}

pub fn quad_value<L: LocalModel>(model: &QuadraticModel<'_, L>, y: &Field) -> Result<f64> {
    model.value(y)
}

/// `f(x) = ½⟨Ax, x⟩ − ⟨b, x⟩` for a dense symmetric `A` on a 1-d real field.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    n: usize,
    shape: [usize; 1],
    a: Vec<f64>,
    b: Field,
}

impl QuadraticObjective {
    /// `a` is row-major `n × n` and must be symmetric.
    pub fn new(a: Vec<f64>, b: Field) -> Result<Self> {
        let n = b.len();
        if b.shape() != [n] || b.kind() != ScalarKind::Real {
            return Err(Error::InvalidParameter("linear term must be a 1-d real field"));
        }
        if a.len() != n * n {
            return Err(Error::InvalidParameter("matrix must be n × n"));
        }
        for i in 0..n {
            for j in 0..i {
                let (p, q) = (a[i * n + j], a[j * n + i]);
                if (p - q).abs() > 1e-12 * (1.0 + p.abs().max(q.abs())) {
                    return Err(Error::InvalidParameter("matrix must be symmetric"));
                }
            }
        }
        Ok(Self {
            n,
            shape: [n],
            a,
            b,
        })
    }

    /// `½‖x‖²` on `n` entries.
    pub fn half_norm_sq(n: usize) -> Result<Self> {
        let mut a = alloc::vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        Self::new(a, Field::zeros(&[n], ScalarKind::Real)?)
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn linear_term(&self) -> &Field {
        &self.b
    }

    pub fn apply_matrix(&self, x: &Field) -> Result<Field> {
        check_shape(&self.shape, x)?;
        let xs = x.as_slice();
        let out = self
            .a
            .chunks_exact(self.n)
            .map(|row| crate::field::dot(row, xs))
            .collect();
        Field::from_vec(&self.shape, out)
    }
}

pub struct QuadraticLocal<'a> {
    objective: &'a QuadraticObjective,
    x: Field,
    value: f64,
    gradient: Field,
}

impl LocalModel for QuadraticLocal<'_> {
    fn point(&self) -> &Field {
        &self.x
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn gradient(&self) -> &Field {
        &self.gradient
    }
    fn hess_bilinear(&self, y: &Field, z: &Field) -> Result<f64> {
        self.objective.apply_matrix(y)?.inner_real(z)
    }
    fn hess_apply(&self, y: &Field) -> Result<Field> {
        self.objective.apply_matrix(y)
    }
}

impl<'q> Objective for &'q QuadraticObjective {
    type Local = QuadraticLocal<'q>;

    fn shape(&self) -> &[usize] {
        &self.shape
    }
    fn in_domain(&self, x: &Field) -> bool {
        x.shape() == self.shape && x.kind() == ScalarKind::Real
    }
    fn value(&self, x: &Field) -> Result<f64> {
        let ax = self.apply_matrix(x)?;
        Ok(0.5 * ax.inner_real(x)? - self.b.inner_real(x)?)
    }
    fn local(&self, x: &Field) -> Result<Self::Local> {
        let ax = self.apply_matrix(x)?;
        let value = 0.5 * ax.inner_real(x)? - self.b.inner_real(x)?;
        let gradient = ax.sub(&self.b)?;
        Ok(QuadraticLocal {
            objective: self,
            x: x.clone(),
            value,
            gradient,
        })
    }
}

/// `λ·f` for a fixed `λ > 0`.
#[derive(Debug, Clone)]
pub struct Scaled<O> {
    inner: O,
    factor: f64,
}

impl<O: Objective> Scaled<O> {
    pub fn new(inner: O, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidParameter("scale factor must be positive"));
        }
        Ok(Self { inner, factor })
    }
}

pub struct ScaledLocal<L> {
    inner: L,
    factor: f64,
    gradient: Field,
}

impl<L: LocalModel> LocalModel for ScaledLocal<L> {
    fn point(&self) -> &Field {
        self.inner.point()
    }
    fn value(&self) -> f64 {
        self.factor * self.inner.value()
    }
    fn gradient(&self) -> &Field {
        &self.gradient
    }
    fn hess_bilinear(&self, y: &Field, z: &Field) -> Result<f64> {
        Ok(self.factor * self.inner.hess_bilinear(y, z)?)
    }
    fn hess_apply(&self, y: &Field) -> Result<Field> {
        Ok(self.inner.hess_apply(y)?.scaled(self.factor))
    }
    fn curvature(&self, y: &Field) -> Result<f64> {
        Ok(self.factor * self.inner.curvature(y)?)
    }
}

impl<O: Objective> Objective for Scaled<O> {
    type Local = ScaledLocal<O::Local>;

    fn shape(&self) -> &[usize] {
        self.inner.shape()
    }
    fn kind(&self) -> ScalarKind {
        self.inner.kind()
    }
    fn in_domain(&self, x: &Field) -> bool {
        self.inner.in_domain(x)
    }
    fn value(&self, x: &Field) -> Result<f64> {
        Ok(self.factor * self.inner.value(x)?)
    }
    fn local(&self, x: &Field) -> Result<Self::Local> {
        let inner = self.inner.local(x)?;
        let gradient = inner.gradient().scaled(self.factor);
        Ok(ScaledLocal {
            inner,
            factor: self.factor,
            gradient,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quad_value_at_zero_is_the_value() {
        let q = QuadraticObjective::new(
            vec![2.0, 1.0, 1.0, 3.0],
            Field::from_vec(&[2], vec![1.0, -1.0]).unwrap(),
        )
        .unwrap();
        let x = Field::from_vec(&[2], vec![0.3, 0.7]).unwrap();
        let local = (&q).local(&x).unwrap();
        let model = QuadraticModel::new(&local);
        let zero = x.zeros_like();
        assert_eq!(quad_value(&model, &zero).unwrap(), local.value());
    }

    #[test]
    fn taylor_model_is_exact_on_quadratics() {
        let q = QuadraticObjective::half_norm_sq(3).unwrap();
        let x = Field::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let y = Field::from_vec(&[3], vec![0.25, 4.0, -3.0]).unwrap();
        let local = (&q).local(&x).unwrap();
        let model = QuadraticModel::new(&local);
        let exact = (&q).value(&x.add(&y).unwrap()).unwrap();
        assert!((model.value(&y).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let b = Field::zeros(&[2], ScalarKind::Real).unwrap();
        assert!(QuadraticObjective::new(vec![1.0, 2.0, 0.0, 1.0], b).is_err());
    }

    #[test]
    fn scaling_multiplies_everything() {
        let q = QuadraticObjective::half_norm_sq(2).unwrap();
        let s = Scaled::new(&q, 3.0).unwrap();
        let x = Field::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let local = s.local(&x).unwrap();
        assert_eq!(local.value(), 7.5);
        assert_eq!(local.gradient().as_slice(), &[3.0, 6.0]);
        assert_eq!(local.curvature(&x).unwrap(), 15.0);
        assert!(Scaled::new(&q, 0.0).is_err());
    }
}
