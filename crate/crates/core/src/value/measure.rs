use crate::error::{Error, Result};
use crate::policy::Trajectory;
use crate::systems::SystemModel;

use super::iteration::check_gamma;

fn check_stage(traj: &Trajectory, t: usize) -> Result<()> {
    if t < traj.states.len() {
        Ok(())
    } else {
        Err(Error::StageOutOfRange {
            stage: t,
            len: traj.states.len(),
        })
    }
}

/// `g(ξ, t) = min{ r(x_t), min_{τ<=t} c(x_τ) }`.
pub fn ra_measure(traj: &Trajectory, t: usize, model: &SystemModel) -> Result<f64> {
    check_stage(traj, t)?;
    let running = traj.states[..=t]
        .iter()
        .map(|x| model.constraint(x))
        .fold(f64::INFINITY, f64::min);
    Ok(model.reward(&traj.states[t]).min(running))
}

/// `g_γ(ξ, t) = min{ γ^t r(x_t), min_{τ<=t} γ^τ c(x_τ) }`.
pub fn discounted_ra_measure(traj: &Trajectory, t: usize, gamma: f64, model: &SystemModel) -> Result<f64> {
    check_gamma(gamma)?;
    check_stage(traj, t)?;
    let mut running = f64::INFINITY;
    let mut discount = 1.0;
    for x in &traj.states[..=t] {
        running = running.min(discount * model.constraint(x));
        discount *= gamma;
    }
    Ok((gamma.powi(t as i32) * model.reward(&traj.states[t])).min(running))
}

/// First stage `t` with `g(ξ, t) > 0`, if any.
pub fn first_reach_stage(traj: &Trajectory, model: &SystemModel) -> Option<usize> {
    let mut running = f64::INFINITY;
    for (t, x) in traj.states.iter().enumerate() {
        running = running.min(model.constraint(x));
        if running <= 0.0 {
            return None;
        }
        if model.reward(x) > 0.0 {
            return Some(t);
        }
    }
    None
}
