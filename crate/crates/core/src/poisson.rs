//! Negative Poisson log-likelihood through a linear forward operator,
//!
//! ```text
//! f(x)      = Σ_γ (T x)_γ − c_γ log (T x)_γ
//! ∇f|x      = T*(1 − c / T x)
//! 𝓗|x(u, v) = Σ_γ c_γ (T u)_γ (T v)_γ / (T x)_γ²
//! H|x(y)    = T*((c / (T x)²) · T y)
//! ```
//!
//! The bilinear Hessian is normalized so that `𝓗|x(u, u)` equals the full
//! second differential `d²f|x(u, u)`; with that choice the quadratic model
//! `f(x) + ⟨∇f, y⟩ + ½𝓗(y, y)` is the second-order Taylor polynomial.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::field::{Field, ScalarKind};
use crate::linear::{check_shape, LinearMap};
use crate::objective::{LocalModel, Objective};

pub const DEFAULT_FLOOR_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PoissonDeconvProblem<T> {
    op: T,
    counts: Field,
    floor_eps: f64,
}

impl<T: LinearMap> PoissonDeconvProblem<T> {
    pub fn new(op: T, counts: Field) -> Result<Self> {
        check_shape(op.codomain_shape(), &counts)?;
        if counts.kind() != ScalarKind::Real {
            return Err(Error::KindMismatch {
                expected: ScalarKind::Real,
                found: counts.kind(),
            });
        }
        if let Some((index, &value)) = counts
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c >= 0.0) || !c.is_finite())
        {
            return Err(Error::NegativeCount { index, value });
        }
        Ok(Self {
            op,
            counts,
            floor_eps: DEFAULT_FLOOR_EPS,
        })
    }

    pub fn with_floor_eps(mut self, floor_eps: f64) -> Result<Self> {
        if !(floor_eps > 0.0) {
            return Err(Error::InvalidParameter("floor_eps must be positive"));
        }
        self.floor_eps = floor_eps;
        Ok(self)
    }

    pub fn operator(&self) -> &T {
        &self.op
    }

    pub fn counts(&self) -> &Field {
        &self.counts
    }

    pub fn floor_eps(&self) -> f64 {
        self.floor_eps
    }

    /// `T(x)`, checked against the positivity domain.
    pub fn forward_checked(&self, x: &Field) -> Result<Field> {
        let tx = self.op.forward(x)?;
        self.check_rates(&tx)?;
        Ok(tx)
    }

    fn check_rates(&self, tx: &Field) -> Result<()> {
        let bad = tx
            .as_slice()
            .iter()
            .zip(self.counts.as_slice())
            .position(|(&y, &c)| {
                let floor = if c > 0.0 { self.floor_eps } else { -self.floor_eps };
                // NaN fails both comparisons and is reported too.
                !(y >= floor) || (c == 0.0 && y == floor)
            });
        match bad {
            Some(index) => Err(Error::Positivity {
                index,
                value: tx.as_slice()[index],
            }),
            None => Ok(()),
        }
    }

    fn value_from_rates(&self, tx: &Field) -> f64 {
        tx.as_slice()
            .iter()
            .zip(self.counts.as_slice())
            .map(|(&y, &c)| if c > 0.0 { y - c * libm::log(y) } else { y })
            .sum()
    }

    pub fn eval(&self, x: &Field) -> Result<f64> {
        let tx = self.forward_checked(x)?;
        Ok(self.value_from_rates(&tx))
    }

    pub fn grad(&self, x: &Field) -> Result<Field> {
        let tx = self.forward_checked(x)?;
        self.grad_from_rates(&tx)
    }

    fn grad_from_rates(&self, tx: &Field) -> Result<Field> {
        let residual: Vec<f64> = tx
            .as_slice()
            .iter()
            .zip(self.counts.as_slice())
            .map(|(&y, &c)| if c > 0.0 { 1.0 - c / y } else { 1.0 })
            .collect();
        self.op.adjoint(&Field::from_vec(tx.shape(), residual)?)
    }

    pub fn hess_bilinear_at(&self, x: &Field, u: &Field, v: &Field) -> Result<f64> {
        self.local(x)?.hess_bilinear(u, v)
    }

    pub fn hess_apply_at(&self, x: &Field, y: &Field) -> Result<Field> {
        self.local(x)?.hess_apply(y)
    }
}

/// Cached `T(x)`, curvature weights `c/(T x)²`, value and gradient at a point.
#[derive(Debug, Clone)]
pub struct PoissonLocal<'p, T> {
    problem: &'p PoissonDeconvProblem<T>,
    x: Field,
    weights: Field,
    value: f64,
    gradient: Field,
}

impl<T: LinearMap> PoissonLocal<'_, T> {
    pub fn weights(&self) -> &Field {
        &self.weights
    }
}

impl<T: LinearMap> LocalModel for PoissonLocal<'_, T> {
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
        let ty = self.problem.op.forward(y)?;
        let tz = self.problem.op.forward(z)?;
        Ok(ty
            .as_slice()
            .iter()
            .zip(tz.as_slice())
            .zip(self.weights.as_slice())
            .map(|((a, b), w)| w * a * b)
            .sum())
    }

    fn curvature(&self, y: &Field) -> Result<f64> {
        let ty = self.problem.op.forward(y)?;
        Ok(ty
            .as_slice()
            .iter()
            .zip(self.weights.as_slice())
            .map(|(a, w)| w * a * a)
            .sum())
    }

    fn hess_apply(&self, y: &Field) -> Result<Field> {
        let ty = self.problem.op.forward(y)?;
        self.problem.op.adjoint(&self.weights.hadamard(&ty)?)
    }
}

impl<'p, T: LinearMap> Objective for &'p PoissonDeconvProblem<T> {
    type Local = PoissonLocal<'p, T>;

    fn shape(&self) -> &[usize] {
        self.op.domain_shape()
    }

    fn in_domain(&self, x: &Field) -> bool {
        self.forward_checked(x).is_ok()
    }

    fn value(&self, x: &Field) -> Result<f64> {
        self.eval(x)
    }

    fn local(&self, x: &Field) -> Result<Self::Local> {
        let tx = self.forward_checked(x)?;
        let value = self.value_from_rates(&tx);
        let gradient = self.grad_from_rates(&tx)?;
        let weights: Vec<f64> = tx
            .as_slice()
            .iter()
            .zip(self.counts.as_slice())
            .map(|(&y, &c)| if c > 0.0 { c / (y * y) } else { 0.0 })
            .collect();
        Ok(PoissonLocal {
            problem: self,
            x: x.clone(),
            weights: Field::from_vec(tx.shape(), weights)?,
            value,
            gradient,
        })
    }
}

/// Draws `c_γ ~ Poisson((T x)_γ)` independently from a ChaCha8 stream seeded
/// with `seed`. Rates in `(−1e-12, 0)` are treated as round-off and read as
/// zero; anything more negative is an error.
pub fn simulate_counts<T: LinearMap>(rates: &Field, op: &T, seed: u64) -> Result<Field> {
    let lambda = op.forward(rates)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(lambda.len());
    for (index, &l) in lambda.as_slice().iter().enumerate() {
        if !(l > -DEFAULT_FLOOR_EPS) || !l.is_finite() {
            return Err(Error::NegativeRate { index, value: l });
        }
        let c = if l <= 0.0 {
            0.0
        } else {
            Poisson::new(l)
                .map_err(|_| Error::NegativeRate { index, value: l })?
                .sample(&mut rng)
        };
        out.push(c);
    }
    Field::from_vec(lambda.shape(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::Identity;
    use alloc::vec;

    fn identity_problem(counts: &[f64]) -> PoissonDeconvProblem<Identity> {
        let shape = [counts.len()];
        PoissonDeconvProblem::new(
            Identity::new(&shape).unwrap(),
            Field::from_vec(&shape, counts.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn counts_equal_unit_rates() {
        let shape = [4, 4];
        let ones = Field::filled(&shape, 1.0).unwrap();
        let p = PoissonDeconvProblem::new(Identity::new(&shape).unwrap(), ones.clone()).unwrap();
        assert_eq!(p.eval(&ones).unwrap(), 16.0);
        assert_eq!(p.grad(&ones).unwrap().norm(), 0.0);
    }

    #[test]
    fn single_term_value() {
        let p = identity_problem(&[4.0]);
        let x = Field::from_vec(&[1], vec![2.0]).unwrap();
        let f = p.eval(&x).unwrap();
        assert!((f - (2.0 - 4.0 * core::f64::consts::LN_2)).abs() < 1e-15);
        assert!((f + 0.77259).abs() < 1e-5);
    }

    #[test]
    fn identity_gradient_and_hessian() {
        let p = identity_problem(&[4.0, 0.0, 1.0]);
        let x = Field::from_vec(&[3], vec![2.0, 0.5, 4.0]).unwrap();
        let g = p.grad(&x).unwrap();
        assert_eq!(g.as_slice(), &[1.0 - 2.0, 1.0, 1.0 - 0.25]);
        let y = Field::from_vec(&[3], vec![1.0, 1.0, 2.0]).unwrap();
        let hy = p.hess_apply_at(&x, &y).unwrap();
        assert_eq!(hy.as_slice(), &[1.0, 0.0, 2.0 / 16.0]);
    }

    #[test]
    fn zero_counts_give_zero_curvature() {
        let p = identity_problem(&[0.0, 0.0]);
        let x = Field::from_vec(&[2], vec![1.0, 3.0]).unwrap();
        let u = Field::from_vec(&[2], vec![1.0, -2.0]).unwrap();
        assert_eq!(p.hess_bilinear_at(&x, &u, &x).unwrap(), 0.0);
        // c = 0 entries contribute the bare rate, even at zero
        let z = Field::from_vec(&[2], vec![0.0, 1.0]).unwrap();
        assert_eq!(p.eval(&z).unwrap(), 1.0);
    }

    #[test]
    fn domain_violation_reports_first_offender() {
        let p = identity_problem(&[1.0, 2.0, 0.0]);
        let x = Field::from_vec(&[3], vec![1.0, 0.0, -1.0]).unwrap();
        assert!(matches!(p.eval(&x), Err(Error::Positivity { index: 1, .. })));
        let x = Field::from_vec(&[3], vec![1.0, 1.0, -1.0]).unwrap();
        assert!(matches!(p.grad(&x), Err(Error::Positivity { index: 2, .. })));
        assert!(!(&p).in_domain(&x));
    }

    #[test]
    fn negative_counts_rejected() {
        let shape = [2];
        let c = Field::from_vec(&shape, vec![1.0, -1.0]).unwrap();
        assert!(matches!(
            PoissonDeconvProblem::new(Identity::new(&shape).unwrap(), c),
            Err(Error::NegativeCount { index: 1, .. })
        ));
    }

    #[test]
    fn zero_rates_give_zero_counts() {
        let shape = [5, 5];
        let op = Identity::new(&shape).unwrap();
        let c = simulate_counts(&Field::zeros(&shape, ScalarKind::Real).unwrap(), &op, 3).unwrap();
        assert_eq!(c.sum(), 0.0);
        let neg = Field::filled(&shape, -1.0).unwrap();
        assert!(matches!(simulate_counts(&neg, &op, 3), Err(Error::NegativeRate { index: 0, .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let shape = [100, 100];
        let op = Identity::new(&shape).unwrap();
        let rates = Field::filled(&shape, 3.0).unwrap();
        let a = simulate_counts(&rates, &op, 42).unwrap();
        let b = simulate_counts(&rates, &op, 42).unwrap();
        assert_eq!(a, b);
        let bound = 4.0 * libm::sqrt(3.0 / 1e4);
        assert!((a.mean() - 3.0).abs() < bound, "mean {}", a.mean());
        assert!(a.as_slice().iter().all(|&c| c >= 0.0 && c == libm::floor(c)));
    }
}
