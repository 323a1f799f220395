use crate::error::Result;
use crate::field::Field;
use crate::objective::LocalModel;

use super::step::CURVATURE_EPS;
use super::BetaRule;

/// Daniel's conjugacy coefficient
/// `β = 𝓗|x₊(∇f|x₊, s) / 𝓗|x₊(s, s)`, evaluated at the new point `x₊`.
///
/// `None` signals a restart: the curvature along `s` is not positive, so no
/// conjugate direction exists.
pub fn daniel_beta<L: LocalModel>(local_next: &L, grad_next: &Field, s: &Field) -> Result<Option<f64>> {
    let hs = local_next.hess_apply(s)?;
    let curvature = hs.inner_real(s)?;
    let threshold = CURVATURE_EPS * (1.0 + local_next.value().abs()) * s.norm_sq();
    if !(curvature > threshold) {
        return Ok(None);
    }
    Ok(Some(hs.inner_real(grad_next)? / curvature))
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 || !den.is_finite() {
        0.0
    } else {
        num / den
    }
}

/// Gradient-only β rules, with `g₊ = grad_next`, `g = grad_prev`,
/// `s` the previous direction and `y = g₊ − g`:
///
/// | rule | β |
/// |------|---|
/// | Fletcher-Reeves  | `‖g₊‖² / ‖g‖²` |
/// | Polak-Ribière    | `⟨g₊, y⟩ / ‖g‖²` |
/// | Hestenes-Stiefel | `⟨g₊, y⟩ / ⟨s, y⟩` |
/// | Dai-Yuan         | `‖g₊‖² / ⟨s, y⟩` |
/// | Hager-Zhang      | `⟨y − 2s‖y‖²/⟨s, y⟩, g₊⟩ / ⟨s, y⟩` |
///
/// A vanishing denominator yields `β = 0`. [`BetaRule::None`] is always 0;
/// [`BetaRule::Daniel`] needs curvature and also yields 0 here.
pub fn classical_beta(
    rule: BetaRule,
    grad_next: &Field,
    grad_prev: &Field,
    s: &Field,
    y_diff: &Field,
) -> Result<f64> {
    let beta = match rule {
        BetaRule::FletcherReeves => ratio(grad_next.norm_sq(), grad_prev.norm_sq()),
        BetaRule::PolakRibiere => ratio(grad_next.inner_real(y_diff)?, grad_prev.norm_sq()),
        BetaRule::HestenesStiefel => ratio(grad_next.inner_real(y_diff)?, s.inner_real(y_diff)?),
        BetaRule::DaiYuan => ratio(grad_next.norm_sq(), s.inner_real(y_diff)?),
        BetaRule::HagerZhang => {
            let sy = s.inner_real(y_diff)?;
            if sy == 0.0 || !sy.is_finite() {
                0.0
            } else {
                let yg = y_diff.inner_real(grad_next)?;
                let sg = s.inner_real(grad_next)?;
                (yg - 2.0 * y_diff.norm_sq() * sg / sy) / sy
            }
        }
        BetaRule::Daniel | BetaRule::None => 0.0,
    };
    Ok(beta)
}
