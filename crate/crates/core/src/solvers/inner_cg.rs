use crate::error::Result;
use crate::field::Field;

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Field,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Set when a direction with `⟨p, H p⟩ ≤ 0` was met; `x` is the iterate
    /// reached before it.
    pub negative_curvature: bool,
}

/// Hestenes-Stiefel conjugate gradients for `H y = b`, with `H` available
/// only through `apply_h`. Stops after `iters` steps or once the residual
/// falls to `tol·‖b‖`.
pub fn cg_quadratic<F>(mut apply_h: F, b: &Field, iters: usize, tol: f64) -> Result<CgSolution>
where
    F: FnMut(&Field) -> Result<Field>,
{
    let mut x = b.zeros_like();
    let mut r = b.clone();
    let mut rr = r.norm_sq();
    let target = tol * b.norm();
    let mut p = r.clone();
    let mut done = 0;
    while done < iters && libm::sqrt(rr) > target {
        let hp = apply_h(&p)?;
        let php = hp.inner_real(&p)?;
        if !(php > 0.0) {
            return Ok(CgSolution {
                x,
                iterations: done,
                residual_norm: libm::sqrt(rr),
                negative_curvature: true,
            });
        }
        let a = rr / php;
        x.axpy_mut(a, &p)?;
        r.axpy_mut(-a, &hp)?;
        let rr_next = r.norm_sq();
        let beta = rr_next / rr;
        rr = rr_next;
        p.scale_mut(beta);
        p.axpy_mut(1.0, &r)?;
        done += 1;
    }
    Ok(CgSolution {
        x,
        iterations: done,
        residual_norm: libm::sqrt(rr),
        negative_curvature: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{LinearMap, MatrixMap};
    use alloc::vec;

    fn v(xs: &[f64]) -> Field {
        Field::from_vec(&[xs.len()], xs.to_vec()).unwrap()
    }

    #[test]
    fn identity_solves_in_one_step() {
        let b = v(&[1.0, -2.0, 3.0]);
        let sol = cg_quadratic(|p| Ok(p.clone()), &b, 10, 1e-14).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.x, b);
    }

    #[test]
    fn two_by_two_exact() {
        // A = [[4, 1], [1, 3]], A⁻¹ = [[3, -1], [-1, 4]] / 11
        let a = MatrixMap::new(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap();
        let b = v(&[1.0, 2.0]);
        let sol = cg_quadratic(|p| a.forward(p), &b, 2, 0.0).unwrap();
        assert!(sol.iterations <= 2);
        assert!((sol.x.as_slice()[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((sol.x.as_slice()[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let b = v(&[0.0, 0.0]);
        let sol = cg_quadratic(|p| Ok(p.scaled(2.0)), &b, 5, 1e-10).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.x, b);
    }

    #[test]
    fn negative_curvature_truncates() {
        let a = MatrixMap::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = v(&[0.0, 1.0]);
        let sol = cg_quadratic(|p| a.forward(p), &b, 5, 1e-12).unwrap();
        assert!(sol.negative_curvature);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.x.norm(), 0.0);
    }
}
