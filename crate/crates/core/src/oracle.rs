//! Independent derivative oracles: central finite differences, polarization
//! and dense Hessian assembly for desk-scale problems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::objective::{LocalModel, Objective};

/// Largest real dimension [`hess_dense`] will assemble.
pub const DENSE_HESSIAN_MAX_DIM: usize = 64;

/// `ε^{1/3}·(1 + ‖x‖)`, the usual balance of truncation and round-off error
/// for central differences.
pub fn default_fd_step(x: &Field) -> f64 {
    libm::cbrt(f64::EPSILON) * (1.0 + x.norm())
}

/// Central-difference gradient over the canonical real basis of `x`'s space.
///
/// Any error from `f` at a probe point (typically a domain violation) is
/// returned as is; the step is never shrunk behind the caller's back.
pub fn fd_gradient<F>(f: F, x: &Field, h: f64) -> Result<Field>
where
    F: Fn(&Field) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("finite-difference step must be positive"));
    }
    let mut out = x.zeros_like();
    let mut probe = x.clone();
    for j in 0..x.real_dim() {
        let orig = probe.as_slice()[j];
        probe.as_mut_slice()[j] = orig + h;
        let fp = f(&probe)?;
        probe.as_mut_slice()[j] = orig - h;
        let fm = f(&probe)?;
        probe.as_mut_slice()[j] = orig;
        out.as_mut_slice()[j] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Hessian operator as the directional derivative of the gradient,
/// `H|x(y) = d/dt ∇f|x+ty` at `t = 0`, by central differences.
///
/// The probe points are `x ± h·y/‖y‖`, so `h` is a distance in the field
/// space independent of the scale of `y`.
pub fn dirder_hess_apply<G>(grad: G, x: &Field, y: &Field, h: f64) -> Result<Field>
where
    G: Fn(&Field) -> Result<Field>,
{
    x.check_conformable(y)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("finite-difference step must be positive"));
    }
    let ny = y.norm();
    if ny == 0.0 {
        return Ok(y.clone());
    }
    let t = h / ny;
    let gp = grad(&crate::field::axpy(t, y, x)?)?;
    let gm = grad(&crate::field::axpy(-t, y, x)?)?;
    let mut d = gp.sub(&gm)?;
    d.scale_mut(1.0 / (2.0 * t));
    Ok(d)
}

/// Recovers `𝓗(u, v)` from the diagonal `Q(w) = 𝓗(w, w)` of a symmetric
/// bilinear form: `½(Q(u+v) − Q(u) − Q(v))`.
pub fn polarize<Q>(h_diag: Q, u: &Field, v: &Field) -> Result<f64>
where
    Q: Fn(&Field) -> Result<f64>,
{
    let sum = u.add(v)?;
    Ok(0.5 * (h_diag(&sum)? - h_diag(u)? - h_diag(v)?))
}

/// Square row-major matrix of Hessian coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

/// Assembles `M[j][k] = 𝓗|x(e_j, e_k)` over the canonical real basis.
/// Refused above [`DENSE_HESSIAN_MAX_DIM`] real dimensions.
pub fn hess_dense<O: Objective>(model: &O, x: &Field) -> Result<DenseMatrix> {
    let n = x.real_dim();
    if n > DENSE_HESSIAN_MAX_DIM {
        return Err(Error::TooLarge {
            dim: n,
            max: DENSE_HESSIAN_MAX_DIM,
        });
    }
    let local = model.local(x)?;
    let mut entries = vec![0.0; n * n];
    for j in 0..n {
        let e = Field::basis(x.shape(), x.kind(), j)?;
        let column = local.hess_apply(&e)?;
        for (k, v) in column.as_slice().iter().enumerate() {
            entries[k * n + j] = *v;
        }
    }
    Ok(DenseMatrix { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarKind;
    use crate::objective::QuadraticObjective;

    fn v(xs: &[f64]) -> Field {
        Field::from_vec(&[xs.len()], xs.to_vec()).unwrap()
    }

    #[test]
    fn fd_gradient_of_squared_norm() {
        let x = v(&[1.0, 2.0]);
        let g = fd_gradient(|z| Ok(z.norm_sq()), &x, 1e-4).unwrap();
        assert!((g.as_slice()[0] - 2.0).abs() < 1e-8);
        assert!((g.as_slice()[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn fd_gradient_exact_on_affine() {
        let a = v(&[0.5, -3.0, 7.25]);
        let x = v(&[1.0, 1.0, 1.0]);
        let g = fd_gradient(|z| Ok(a.inner_real(z)? + 2.0), &x, 1e-3).unwrap();
        for (p, q) in g.as_slice().iter().zip(a.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_gradient_propagates_domain_errors() {
        let x = v(&[1e-6]);
        let f = |z: &Field| {
            let t = z.as_slice()[0];
            if t <= 0.0 {
                Err(Error::Positivity { index: 0, value: t })
            } else {
                Ok(libm::log(t))
            }
        };
        assert!(matches!(
            fd_gradient(f, &x, 1e-3),
            Err(Error::Positivity { index: 0, .. })
        ));
    }

    #[test]
    fn complex_fd_gradient_probes_both_parts() {
        use num_complex::Complex64;
        let x = Field::from_complex(&[1], &[Complex64::new(1.0, 2.0)]).unwrap();
        // f(z) = |z|², gradient 2z in the real-product sense
        let g = fd_gradient(|z| Ok(z.norm_sq()), &x, 1e-4).unwrap();
        assert_eq!(g.kind(), ScalarKind::Complex);
        assert!((g.entry(0) - Complex64::new(2.0, 4.0)).norm() < 1e-8);
    }

    #[test]
    fn dirder_on_identity_hessian() {
        let q = QuadraticObjective::half_norm_sq(3).unwrap();
        let x = v(&[1.0, -1.0, 2.0]);
        let y = v(&[0.3, 0.1, -5.0]);
        let hy = dirder_hess_apply(|z| (&q).gradient(z), &x, &y, 1e-3).unwrap();
        for (p, q) in hy.as_slice().iter().zip(y.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn dirder_with_known_matrix() {
        let q = QuadraticObjective::new(vec![2.0, 0.5, 0.5, 1.0], v(&[0.0, 0.0])).unwrap();
        let y = v(&[1.0, 2.0]);
        let hy = dirder_hess_apply(|z| (&q).gradient(z), &v(&[3.0, 4.0]), &y, 1e-2).unwrap();
        assert!((hy.as_slice()[0] - 3.0).abs() < 1e-9);
        assert!((hy.as_slice()[1] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn polarization_identities() {
        let u = v(&[1.0, 2.0, -1.0]);
        let w = v(&[0.5, -1.5, 4.0]);
        let sq = |z: &Field| Ok(z.norm_sq());
        assert!((polarize(sq, &u, &u).unwrap() - u.norm_sq()).abs() < 1e-12);
        assert!((polarize(sq, &u, &w).unwrap() - u.inner_real(&w).unwrap()).abs() < 1e-12);
        assert!(polarize(sq, &u, &v(&[1.0])).is_err());
    }

    #[test]
    fn dense_identity_and_cap() {
        let q = QuadraticObjective::half_norm_sq(4).unwrap();
        let m = hess_dense(&&q, &v(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let big = QuadraticObjective::half_norm_sq(65).unwrap();
        let x = Field::zeros(&[65], ScalarKind::Real).unwrap();
        assert!(matches!(hess_dense(&&big, &x), Err(Error::TooLarge { dim: 65, max: 64 })));
    }
}
