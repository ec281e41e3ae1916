//! Disturbance-free nominal trajectories and Lipschitz error-ball radii.
//!
//! For every initial state within `ε_x` of `x̄₀` and every disturbance
//! sequence with `‖d_t‖ <= ε_d`, the trajectory driven by the nominal
//! open-loop controls stays within `Δx_t` of `x̄_t`, where
//! `Δx_{t+1} = L_fx Δx_t + L_fd ε_d` and `Δx₀ = ε_x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::systems::SystemModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub nominal_states: Vec<Vec<f64>>,
    pub nominal_controls: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub eps_x: f64,
    pub eps_d: f64,
    pub horizon: usize,
}

impl Tube {
    pub fn build(model: &SystemModel, policy: &Policy, center: &[f64], eps_x: f64, horizon: usize) -> Result<Self> {
        let (states, controls) = nominal_rollout(model, policy, center, horizon)?;
        Ok(Tube {
            nominal_states: states,
            nominal_controls: controls,
            radii: lipschitz_tube(model, eps_x, horizon)?,
            eps_x,
            eps_d: model.disturbance_bound(),
            horizon,
        })
    }
}

type NominalControls = Vec<Vec<f64>>;

/// `x̄_{t+1} = f(x̄_t, π(x̄_t), 0)` for `t < horizon`.
pub fn nominal_rollout(
    model: &SystemModel,
    policy: &Policy,
    x0: &[f64],
    horizon: usize,
) -> Result<(Vec<Vec<f64>>, NominalControls)> {
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "certification horizon must be at least 1".into(),
        ));
    }
    if !model.disturbance_set().contains_origin() {
        return Err(Error::ZeroDisturbanceMissing);
    }
    model.check_state(x0)?;
    let zero = vec![0.0; model.disturbance_dim()];
    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    states.push(x0.to_vec());
    for t in 0..horizon {
        let u = policy.control(model, &states[t])?;
        let next = model.step(&states[t], &u, &zero)?;
        states.push(next);
        controls.push(u);
    }
    Ok((states, controls))
}

/// Radii `Δx₀..Δx_T` by the recursion `Δx_{t+1} = L_fx Δx_t + L_fd ε_d`.
pub fn lipschitz_tube(model: &SystemModel, eps_x: f64, horizon: usize) -> Result<Vec<f64>> {
    tube_radii(
        model.lipschitz_state(),
        model.lipschitz_disturbance(),
        model.disturbance_bound(),
        eps_x,
        horizon,
    )
}

pub fn tube_radii(lfx: f64, lfd: f64, eps_d: f64, eps_x: f64, horizon: usize) -> Result<Vec<f64>> {
    if !(eps_x >= 0.0 && eps_x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial radius must be nonnegative, got {eps_x}"
        )));
    }
    let mut radii = Vec::with_capacity(horizon + 1);
    radii.push(eps_x);
    for t in 0..horizon {
        radii.push(lfx * radii[t] + lfd * eps_d);
    }
    Ok(radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_uncertainty_gives_zero_radii() {
        let r = tube_radii(1.3, 0.2, 0.0, 0.0, 20).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_radius_is_rejected() {
        assert!(tube_radii(1.0, 1.0, 1.0, -0.1, 3).is_err());
    }
}
