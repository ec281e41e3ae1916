//! Per-stage lower bounds on reward and constraint over the tube balls, and
//! their discounted max-min composition.

use super::solver::{max_linear_over_ball, min_linear_over_ball, solve_in_eigenbasis, SECULAR_TOL};
use crate::error::{Error, Result};
use crate::systems::{Mode, SurrogateQuadratic, SystemModel};
use crate::tube::Tube;
use crate::value::check_gamma;

/// Lower bounds `ř_t`, `č_t` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageBounds {
    pub reward: Vec<f64>,
    pub constraint: Vec<f64>,
    /// Stages whose constraint subproblem did not converge (bound set to `-∞`).
    pub solver_failures: Vec<usize>,
}

/// `ř_t = r(x̄_t) - L_r Δx_t`, `č_t = c(x̄_t) - L_c Δx_t`.
pub fn lipschitz_bounds(model: &SystemModel, tube: &Tube) -> StageBounds {
    let lr = model.reward_lipschitz();
    let lc = model.constraint_lipschitz();
    let (reward, constraint) = tube
        .nominal_states
        .iter()
        .zip(&tube.radii)
        .map(|(x, dx)| (model.reward(x) - lr * dx, model.constraint(x) - lc * dx))
        .unzip();
    StageBounds {
        reward,
        constraint,
        solver_failures: Vec::new(),
    }
}

/// Exact minimum of the surrogate target and surrogate constraint over each
/// tube ball. Mode overrides (`r ≡ -1`, `c ≡ 1`) bypass the surrogates.
pub fn socp_bounds(model: &SystemModel, tube: &Tube) -> Result<StageBounds> {
    let mode = model.mode();
    let target = match mode {
        Mode::Viability => None,
        _ => Some(model.surrogate_target().ok_or(Error::MissingSurrogate("target"))?),
    };
    let constraint = match mode {
        Mode::Reach => None,
        _ => Some(
            model
                .surrogate_constraint()
                .ok_or(Error::MissingSurrogate("constraint"))?,
        ),
    };
    let stages = tube.nominal_states.len();
    let mut out = StageBounds {
        reward: Vec::with_capacity(stages),
        constraint: Vec::with_capacity(stages),
        solver_failures: Vec::new(),
    };
    for (t, (x, &radius)) in tube.nominal_states.iter().zip(&tube.radii).enumerate() {
        let r = match target {
            None => -1.0,
            Some(target) => target
                .halfspaces
                .iter()
                .map(|h| min_linear_over_ball(&h.normal, h.offset, x, radius))
                .fold(f64::INFINITY, f64::min),
        };
        let c = match constraint {
            None => 1.0,
            Some(constraint) => {
                let mut worst = f64::INFINITY;
                for quad in &constraint.quadratics {
                    match min_quadratic_over_ball(quad, x, radius) {
                        Ok(v) => worst = worst.min(v),
                        Err(Error::SolverFailure { .. }) => {
                            worst = f64::NEG_INFINITY;
                            out.solver_failures.push(t);
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                worst
            }
        };
        out.reward.push(r);
        out.constraint.push(c);
    }
    Ok(out)
}

/// Minimum of one surrogate quadratic over a ball. A coupled offset is first
/// replaced by its worst case over the same ball, clamped at zero.
pub fn min_quadratic_over_ball(quad: &SurrogateQuadratic, center: &[f64], radius: f64) -> Result<f64> {
    let mut b = quad.offset();
    if let Some(coupled) = quad.coupled() {
        let worst = max_linear_over_ball(&coupled.direction, coupled.shift, center, radius);
        b -= coupled.scale * worst.max(0.0);
    }
    let (values, vectors) = quad.eigen();
    solve_in_eigenbasis(quad.q(), values, vectors, quad.lin(), b, center, radius, SECULAR_TOL).map(|m| m.value)
}

/// `max_{t<=T} min{ γ^t ř_t, min_{τ<=t} γ^τ č_τ }`.
pub fn compose(reward: &[f64], constraint: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if reward.len() != constraint.len() || reward.is_empty() {
        return Err(Error::Dimension {
            what: "stage bounds",
            expected: reward.len().max(1),
            got: constraint.len(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    let mut running = f64::INFINITY;
    let mut discount = 1.0;
    for (r, c) in reward.iter().zip(constraint) {
        running = running.min(discount * c);
        best = best.max(running.min(discount * r));
        discount *= gamma;
    }
    Ok(best)
}
