//! Bilinear-Hessian optimizers: gradient descent with the Newton step size
//! (BH-GD), nonlinear conjugate gradients with Daniel's or a classical β
//! rule (BH-CG), and truncated Newton with an inner CG loop (BH-QN).
//!
//! Every solver talks to the problem only through [`Objective`] and
//! [`LocalModel`]; no Hessian matrix is ever formed.

mod beta;
mod inner_cg;
mod step;

use alloc::vec::Vec;

pub use beta::{classical_beta, daniel_beta};
pub use inner_cg::{cg_quadratic, CgSolution};
pub use step::{grid_line_search, log_grid, newton_step_alpha, CURVATURE_EPS, MAX_HALVINGS};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::objective::{LocalModel, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepRule {
    /// `α = −⟨∇f, s⟩ / 𝓗(s, s)`, with line-search fallback.
    NewtonStep,
    /// Best of a logarithmic grid around the Newton step.
    GridLineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BetaRule {
    Daniel,
    FletcherReeves,
    PolakRibiere,
    HestenesStiefel,
    DaiYuan,
    HagerZhang,
    None,
}

impl BetaRule {
    pub const CLASSICAL: [BetaRule; 5] = [
        BetaRule::FletcherReeves,
        BetaRule::PolakRibiere,
        BetaRule::HestenesStiefel,
        BetaRule::DaiYuan,
        BetaRule::HagerZhang,
    ];

    /// Daniel's rule runs without restarts; the gradient-only rules restart
    /// on non-descent directions.
    pub fn default_restart(self) -> RestartPolicy {
        match self {
            BetaRule::Daniel | BetaRule::None => RestartPolicy::Never,
            _ => RestartPolicy::OnNonDescent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestartPolicy {
    OnNonDescent,
    EveryN(usize),
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GradientDescent,
    ConjugateGradient,
    QuasiNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `‖∇f‖ ≤ grad_tol·(1 + |f|)`.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub beta_rule: BetaRule,
    pub restart_policy: RestartPolicy,
    /// Inner CG iterations per BH-QN step.
    pub inner_iters: usize,
    /// Inner CG stops at residual `inner_tol·‖∇f‖`.
    pub inner_tol: f64,
    pub ls_points: usize,
    pub ls_lo: f64,
    pub ls_hi: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-8,
            step_rule: StepRule::NewtonStep,
            beta_rule: BetaRule::Daniel,
            restart_policy: RestartPolicy::Never,
            inner_iters: 12,
            inner_tol: 1e-10,
            ls_points: 50,
            ls_lo: 0.1,
            ls_hi: 3.3,
        }
    }
}

impl SolverConfig {
    /// Sets the β rule together with its default restart policy.
    pub fn with_beta_rule(mut self, rule: BetaRule) -> Self {
        self.beta_rule = rule;
        self.restart_policy = rule.default_restart();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be at least 1"));
        }
        if self.inner_iters < 1 {
            return Err(Error::InvalidParameter("inner_iters must be at least 1"));
        }
        if !(self.ls_lo > 0.0 && self.ls_lo < self.ls_hi) || !self.ls_hi.is_finite() {
            return Err(Error::InvalidParameter("line search needs 0 < ls_lo < ls_hi"));
        }
        if self.ls_points < 2 {
            return Err(Error::InvalidParameter("line search needs at least 2 points"));
        }
        if !(self.grad_tol >= 0.0) || !(self.inner_tol >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be nonnegative"));
        }
        if self.restart_policy == RestartPolicy::EveryN(0) {
            return Err(Error::InvalidParameter("restart period must be positive"));
        }
        Ok(())
    }
}

/// Source of cumulative wall-clock seconds for traces.
pub trait Clock {
    fn elapsed_seconds(&self) -> f64;
}

/// Reports zero elapsed time; for `no_std` callers and deterministic tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

impl<F: Fn() -> f64> Clock for F {
    fn elapsed_seconds(&self) -> f64 {
        self()
    }
}

/// State at iterate `x_k` and the quantities computed there.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    /// Step length taken from `x_k`; absent on the final record.
    pub alpha: Option<f64>,
    /// Coefficient combining `−∇f|x_k` with the previous direction.
    pub beta: Option<f64>,
    /// The direction at `x_k` was reset to the negative gradient.
    pub restart: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace {
    pub records: Vec<IterRecord>,
}

impl IterateTrace {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.f)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// No trial point decreased the objective any further.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Field,
    pub trace: IterateTrace,
    pub status: SolveStatus,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

pub fn bhgd_solve<O: Objective>(model: &O, x0: &Field, cfg: &SolverConfig) -> Result<Solution> {
    solve(Method::GradientDescent, model, x0, cfg, &NoClock)
}

pub fn bhcg_solve<O: Objective>(model: &O, x0: &Field, cfg: &SolverConfig) -> Result<Solution> {
    solve(Method::ConjugateGradient, model, x0, cfg, &NoClock)
}

pub fn bhqn_solve<O: Objective>(model: &O, x0: &Field, cfg: &SolverConfig) -> Result<Solution> {
    solve(Method::QuasiNewton, model, x0, cfg, &NoClock)
}

struct Direction {
    s: Field,
    beta: Option<f64>,
    restart: bool,
}

fn negative_gradient<L: LocalModel>(local: &L, restart: bool) -> Direction {
    Direction {
        s: local.gradient().scaled(-1.0),
        beta: None,
        restart,
    }
}

fn cg_direction<L: LocalModel>(
    cfg: &SolverConfig,
    k: usize,
    local: &L,
    prev: Option<&(Field, Field)>,
) -> Result<Direction> {
    let Some((s_prev, g_prev)) = prev else {
        return Ok(negative_gradient(local, false));
    };
    if cfg.beta_rule == BetaRule::None {
        return Ok(negative_gradient(local, false));
    }
    if let RestartPolicy::EveryN(n) = cfg.restart_policy {
        if k % n == 0 {
            return Ok(negative_gradient(local, true));
        }
    }
    let g = local.gradient();
    let beta = match cfg.beta_rule {
        BetaRule::Daniel => match daniel_beta(local, g, s_prev)? {
            Some(beta) => beta,
            None => return Ok(negative_gradient(local, true)),
        },
        rule => classical_beta(rule, g, g_prev, s_prev, &g.sub(g_prev)?)?,
    };
    let mut s = g.scaled(-1.0);
    s.axpy_mut(beta, s_prev)?;
    if cfg.restart_policy == RestartPolicy::OnNonDescent && !(g.inner_real(&s)? < 0.0) {
        return Ok(Direction {
            s: g.scaled(-1.0),
            beta: Some(0.0),
            restart: true,
        });
    }
    Ok(Direction {
        s,
        beta: Some(beta),
        restart: false,
    })
}

fn newton_direction<L: LocalModel>(cfg: &SolverConfig, local: &L) -> Result<Direction> {
    let g = local.gradient();
    let rhs = g.scaled(-1.0);
    let inner = cg_quadratic(|y| local.hess_apply(y), &rhs, cfg.inner_iters, cfg.inner_tol)?;
    if inner.x.norm_sq() == 0.0 || !(g.inner_real(&inner.x)? < 0.0) {
        return Ok(negative_gradient(local, true));
    }
    Ok(Direction {
        s: inner.x,
        beta: None,
        restart: false,
    })
}

/// Sees every accepted step: the local model at `x_k`, the direction `s_k`
/// and the step length taken along it.
pub trait Observer<L> {
    fn on_step(&mut self, k: usize, local: &L, s: &Field, alpha: f64, restart: bool);
}

impl<L> Observer<L> for () {
    fn on_step(&mut self, _: usize, _: &L, _: &Field, _: f64, _: bool) {}
}

impl<L, F: FnMut(usize, &L, &Field, f64, bool)> Observer<L> for F {
    fn on_step(&mut self, k: usize, local: &L, s: &Field, alpha: f64, restart: bool) {
        self(k, local, s, alpha, restart)
    }
}

/// Runs `method` from `x0` until the gradient tolerance, the iteration cap
/// or a stall, recording one [`IterRecord`] per iterate.
pub fn solve<O: Objective, C: Clock + ?Sized>(
    method: Method,
    model: &O,
    x0: &Field,
    cfg: &SolverConfig,
    clock: &C,
) -> Result<Solution> {
    solve_observed(method, model, x0, cfg, clock, &mut ())
}

/// [`solve`], reporting each accepted step to `observer`.
pub fn solve_observed<O: Objective, C: Clock + ?Sized, V: Observer<O::Local> + ?Sized>(
    method: Method,
    model: &O,
    x0: &Field,
    cfg: &SolverConfig,
    clock: &C,
    observer: &mut V,
) -> Result<Solution> {
    cfg.validate()?;
    let mut local = model.local(x0)?;
    let mut records = Vec::new();
    let mut prev: Option<(Field, Field)> = None;
    let mut alpha_hint = 1.0;
    let mut last_seconds = 0.0f64;
    let mut k = 0;
    let status = loop {
        let seconds = clock.elapsed_seconds().max(last_seconds);
        last_seconds = seconds;
        let f = local.value();
        let grad_norm = local.gradient().norm();
        let mut record = IterRecord {
            iter: k,
            f,
            grad_norm,
            alpha: None,
            beta: None,
            restart: false,
            seconds,
        };
        if grad_norm <= cfg.grad_tol * (1.0 + f.abs()) {
            records.push(record);
            break SolveStatus::Converged;
        }
        if k == cfg.max_iters {
            records.push(record);
            break SolveStatus::MaxIterations;
        }
        let dir = match method {
            Method::GradientDescent => negative_gradient(&local, false),
            Method::ConjugateGradient => cg_direction(cfg, k, &local, prev.as_ref())?,
            Method::QuasiNewton => newton_direction(cfg, &local)?,
        };
        record.beta = dir.beta;
        record.restart = dir.restart;
        let Some(next) = step::take_step(model, &local, &dir.s, cfg, alpha_hint)? else {
            records.push(record);
            break SolveStatus::Stalled;
        };
        record.alpha = Some(next.alpha);
        observer.on_step(k, &local, &dir.s, next.alpha, dir.restart);
        records.push(record);
        alpha_hint = next.alpha;
        let g_prev = local.gradient().clone();
        prev = Some((dir.s, g_prev));
        local = next.local;
        k += 1;
    };
    Ok(Solution {
        x: local.point().clone(),
        trace: IterateTrace { records },
        status,
    })
}
