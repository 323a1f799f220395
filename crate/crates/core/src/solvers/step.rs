use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{axpy, Field};
use crate::objective::{LocalModel, Objective};

use super::{SolverConfig, StepRule};

/// Relative threshold under which `𝓗|x(s, s)` counts as nonpositive.
pub const CURVATURE_EPS: f64 = 1e-14;

/// Maximum number of halvings when a trial step leaves the domain.
pub const MAX_HALVINGS: usize = 30;

/// Minimizer of the quadratic model along `s`:
/// `α = −⟨∇f|x, s⟩ / 𝓗|x(s, s)`.
///
/// Fails with [`Error::NonconvexDirection`] when
/// `𝓗|x(s, s) ≤ 1e-14·(1 + |f(x)|)·‖s‖²`.
pub fn newton_step_alpha<L: LocalModel>(local: &L, s: &Field) -> Result<f64> {
    let curvature = local.curvature(s)?;
    let threshold = CURVATURE_EPS * (1.0 + local.value().abs()) * s.norm_sq();
    if !(curvature > threshold) {
        return Err(Error::NonconvexDirection { curvature });
    }
    Ok(-local.gradient().inner_real(s)? / curvature)
}

/// `points` values logarithmically spaced over `[lo·alpha_ref, hi·alpha_ref]`,
/// endpoints included.
pub fn log_grid(alpha_ref: f64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (libm::log(lo * alpha_ref), libm::log(hi * alpha_ref));
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| libm::exp(a + (b - a) * i as f64 / last))
        .collect()
}

/// Returns the grid step `t` minimizing `f(x + t·s)` and the value there.
/// Grid points outside the domain are skipped.
pub fn grid_line_search<O: Objective>(
    model: &O,
    x: &Field,
    s: &Field,
    alpha_ref: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if s.norm_sq() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if !(alpha_ref > 0.0) || !alpha_ref.is_finite() {
        return Err(Error::InvalidParameter("reference step must be positive"));
    }
    let mut best: Option<(f64, f64)> = None;
    for t in log_grid(alpha_ref, cfg.ls_lo, cfg.ls_hi, cfg.ls_points) {
        let trial = axpy(t, s, x)?;
        let Ok(f) = model.value(&trial) else { continue };
        if best.map_or(true, |(_, fb)| f < fb) {
            best = Some((t, f));
        }
    }
    best.ok_or(Error::LineSearchFailed)
}

pub(crate) struct Step<L> {
    pub alpha: f64,
    pub local: L,
}

fn accepts(f_new: f64, f_old: f64) -> bool {
    f_new <= f_old + 8.0 * f64::EPSILON * f_old.abs()
}

/// Evaluates `x + α·s`, halving `α` while the trial point leaves the domain.
fn evaluate_with_backoff<O: Objective>(
    model: &O,
    x: &Field,
    s: &Field,
    mut alpha: f64,
) -> Result<(f64, O::Local)> {
    for _ in 0..=MAX_HALVINGS {
        let trial = axpy(alpha, s, x)?;
        match model.local(&trial) {
            Ok(local) => return Ok((alpha, local)),
            Err(Error::Positivity { .. }) => alpha *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::LineSearchFailed)
}

/// Grid search along `s` (which must be a descent direction) followed, if
/// no grid point decreases `f` or none is feasible, by halving below the
/// grid.
fn grid_step<O: Objective>(
    model: &O,
    current: &O::Local,
    s: &Field,
    alpha_ref: f64,
    cfg: &SolverConfig,
) -> Result<Option<Step<O::Local>>> {
    let x = current.point();
    let f0 = current.value();
    match grid_line_search(model, x, s, alpha_ref, cfg) {
        Ok((t, f)) if accepts(f, f0) => {
            let (alpha, local) = evaluate_with_backoff(model, x, s, t)?;
            return Ok(Some(Step { alpha, local }));
        }
        Ok(_) | Err(Error::LineSearchFailed) => {}
        Err(e) => return Err(e),
    }
    let mut t = cfg.ls_lo * alpha_ref;
    for _ in 0..MAX_HALVINGS {
        t *= 0.5;
        let trial = axpy(t, s, x)?;
        if let Ok(local) = model.local(&trial) {
            if local.value() < f0 {
                return Ok(Some(Step { alpha: t, local }));
            }
        }
    }
    // Every trial point left the domain: the iterate sits on the boundary
    // and `s` points outward. Treated as a stall, like a failed decrease.
    Ok(None)
}

/// One outer step from `current` along `s` under the configured rule.
///
/// Returns `None` when no trial point decreases the objective (the iteration
/// has stalled at round-off level). `alpha_hint` seeds the line search when
/// the curvature along `s` is not positive.
pub(crate) fn take_step<O: Objective>(
    model: &O,
    current: &O::Local,
    s: &Field,
    cfg: &SolverConfig,
    alpha_hint: f64,
) -> Result<Option<Step<O::Local>>> {
    if s.norm_sq() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let f0 = current.value();
    match (cfg.step_rule, newton_step_alpha(current, s)) {
        (StepRule::NewtonStep, Ok(alpha)) => {
            match evaluate_with_backoff(model, current.point(), s, alpha) {
                Ok((alpha, local)) if accepts(local.value(), f0) => return Ok(Some(Step { alpha, local })),
                Ok(_) | Err(Error::LineSearchFailed) => {}
                Err(e) => return Err(e),
            }
            oriented_grid_step(model, current, s, alpha, cfg)
        }
        (StepRule::GridLineSearch, Ok(alpha)) => oriented_grid_step(model, current, s, alpha, cfg),
        (_, Err(Error::NonconvexDirection { .. })) => {
            let slope = current.gradient().inner_real(s)?;
            let sign = if slope > 0.0 { -1.0 } else { 1.0 };
            oriented_grid_step(model, current, s, sign * alpha_hint.abs().max(f64::MIN_POSITIVE), cfg)
        }
        (_, Err(e)) => Err(e),
    }
}

/// Grid search around a signed reference step; negative references search
/// along `−s`.
fn oriented_grid_step<O: Objective>(
    model: &O,
    current: &O::Local,
    s: &Field,
    alpha_ref: f64,
    cfg: &SolverConfig,
) -> Result<Option<Step<O::Local>>> {
    if alpha_ref == 0.0 {
        return Ok(None);
    }
    if alpha_ref > 0.0 {
        return grid_step(model, current, s, alpha_ref, cfg);
    }
    let flipped = s.scaled(-1.0);
    Ok(grid_step(model, current, &flipped, -alpha_ref, cfg)?.map(|mut step| {
        step.alpha = -step.alpha;
        step
    }))
}
