//! Self-check of the analytic derivatives against independent oracles on a
//! 4 × 4 Poisson deconvolution instance.

use bhess_core::linear::periodic_gaussian_kernel;
use bhess_core::objective::QuadraticModel;
use bhess_core::oracle::{default_fd_step, dirder_hess_apply, fd_gradient, hess_dense, polarize};
use bhess_core::poisson::{simulate_counts, PoissonDeconvProblem};
use bhess_core::{Field, LinearMap, LocalModel, Objective};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blur::GaussianBlur;
use crate::error::Result;

pub const VERIFY_N: usize = 4;
pub const VERIFY_SIGMA: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    /// Observed error measure; the check passes when it is at most `tol`.
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

fn random_field(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
    let v = (0..VERIFY_N * VERIFY_N).map(|_| rng.random_range(lo..hi)).collect();
    Field::from_vec(&[VERIFY_N, VERIFY_N], v).unwrap()
}

fn rel(a: &Field, b: &Field) -> Result<f64> {
    Ok(a.sub(b)?.norm() / b.norm().max(f64::MIN_POSITIVE))
}

/// Spatial-domain circular convolution with the periodized kernel.
pub fn direct_convolution(x: &Field, sigma: f64) -> bhess_core::Result<Field> {
    let n = x.shape()[0];
    let k = periodic_gaussian_kernel(n, sigma)?;
    let (ks, xs) = (k.as_slice(), x.as_slice());
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    acc += ks[((i + n - p) % n) * n + (j + n - q) % n] * xs[p * n + q];
                }
            }
            out[i * n + j] = acc;
        }
    }
    Field::from_vec(&[n, n], out)
}

/// `d²/dt² f(x + t·w)` at `t = 0`, summing the scalar second derivative of
/// `y − c·log y` with `Tx`, `Tw` from [`direct_convolution`].
fn taylor_diagonal(counts: &Field, x: &Field, w: &Field) -> bhess_core::Result<f64> {
    let (tx, tw) = (direct_convolution(x, VERIFY_SIGMA)?, direct_convolution(w, VERIFY_SIGMA)?);
    Ok(tx
        .as_slice()
        .iter()
        .zip(tw.as_slice())
        .zip(counts.as_slice())
        .map(|((y, d), c)| c * d * d / (y * y))
        .sum())
}

pub fn run_oracle_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blur = GaussianBlur::new(VERIFY_N, VERIFY_SIGMA)?;
    let rates = random_field(&mut rng, 1.0, 5.0);
    let counts = simulate_counts(&rates, &blur, seed.wrapping_add(1))?;
    let problem = PoissonDeconvProblem::new(blur.clone(), counts)?;
    let p = &problem;
    let x = random_field(&mut rng, 1.0, 5.0);
    let local = p.local(&x)?;
    let mut checks = Vec::new();

    let mut adjoint = 0.0f64;
    for _ in 0..10 {
        let (u, v) = (random_field(&mut rng, -1.0, 1.0), random_field(&mut rng, -1.0, 1.0));
        let l = blur.forward(&u)?.inner_real(&v)?;
        let r = u.inner_real(&blur.adjoint(&v)?)?;
        adjoint = adjoint.max((l - r).abs() / l.abs().max(r.abs()).max(f64::MIN_POSITIVE));
    }
    checks.push(Check { name: "blur adjoint identity", value: adjoint, tol: 1e-10 });

    let u = random_field(&mut rng, -1.0, 1.0);
    checks.push(Check {
        name: "blur equals direct convolution",
        value: rel(&blur.forward(&u)?, &direct_convolution(&u, VERIFY_SIGMA)?)?,
        tol: 1e-10,
    });

    let h = default_fd_step(&x);
    let fd = fd_gradient(|y| p.value(y), &x, h)?;
    checks.push(Check { name: "gradient vs finite differences", value: rel(local.gradient(), &fd)?, tol: 1e-6 });

    let y = random_field(&mut rng, -1.0, 1.0);
    let dd = dirder_hess_apply(|z| p.gradient(z), &x, &y, h)?;
    checks.push(Check {
        name: "Hessian operator vs gradient derivative",
        value: rel(&local.hess_apply(&y)?, &dd)?,
        tol: 1e-6,
    });

    let z = random_field(&mut rng, -1.0, 1.0);
    let b = local.hess_bilinear(&y, &z)?;
    let pol = polarize(|w| taylor_diagonal(p.counts(), &x, w), &y, &z)?;
    checks.push(Check {
        name: "bilinear Hessian vs polarized Taylor term",
        value: (b - pol).abs() / b.abs().max(f64::MIN_POSITIVE),
        tol: 1e-9,
    });

    let (mut sym, mut compat, mut selfadj) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (y, z) = (random_field(&mut rng, -1.0, 1.0), random_field(&mut rng, -1.0, 1.0));
        let yz = local.hess_bilinear(&y, &z)?;
        let zy = local.hess_bilinear(&z, &y)?;
        let hy = local.hess_apply(&y)?;
        let hz = local.hess_apply(&z)?;
        let scale = (local.curvature(&y)? * local.curvature(&z)?).sqrt().max(f64::MIN_POSITIVE);
        sym = sym.max((yz - zy).abs() / (1.0 + yz.abs()));
        compat = compat.max((yz - hy.inner_real(&z)?).abs() / scale);
        selfadj = selfadj.max((hy.inner_real(&z)? - y.inner_real(&hz)?).abs() / scale);
    }
    checks.push(Check { name: "bilinear Hessian symmetry", value: sym, tol: 1e-10 });
    checks.push(Check { name: "bilinear form vs operator", value: compat, tol: 1e-10 });
    checks.push(Check { name: "Hessian operator self-adjoint", value: selfadj, tol: 1e-10 });

    let dense = hess_dense(&p, &x)?;
    checks.push(Check {
        name: "dense Hessian symmetric",
        value: dense.max_asymmetry() / dense.max_abs(),
        tol: 1e-10,
    });
    let m = DMatrix::from_row_slice(dense.dim(), dense.dim(), dense.as_slice());
    let eig = m.symmetric_eigen().eigenvalues;
    checks.push(Check {
        name: "dense Hessian positive semidefinite",
        value: (-eig.min() / eig.max()).max(0.0),
        tol: 1e-10,
    });

    // Residual of the second-order model shrinks ~8x per halving of the step.
    let model = QuadraticModel::new(&local);
    let s = local.gradient().scaled(-1.0);
    let residual = |a: f64| -> Result<f64> {
        let d = s.scaled(a);
        Ok((p.value(&x.add(&d)?)? - model.value(&d)?).abs())
    };
    let a = 0.05 / s.norm();
    let order = (residual(a)? / residual(a / 2.0)?).log2();
    checks.push(Check { name: "quadratic model third-order residual", value: (order - 3.0).abs(), tol: 0.25 });
    Ok(checks)
}
