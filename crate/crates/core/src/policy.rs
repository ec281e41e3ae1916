//! Control and disturbance policies, greedy max-min extraction from a value
//! field, and trajectory rollout.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::rng::stream_rng;
use crate::linalg::dist;
use crate::systems::SystemModel;
use crate::value::{ActionLattice, Grid, ValueField};

/// How far outside `U` a black-box control may land before rollout fails.
pub const CONTROL_CLAMP_TOL: f64 = 1e-6;

type ControlFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// State-feedback control policy `π: ℝⁿ → U`.
#[derive(Clone)]
pub enum Policy {
    /// Argmax of the Bellman integrand over the lattice controls.
    GridGreedy {
        field: Arc<ValueField>,
        lattice: Arc<ActionLattice>,
    },
    Constant(Vec<f64>),
    BlackBox(ControlFn),
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::GridGreedy { field, .. } => f
                .debug_struct("GridGreedy")
                .field("gamma", &field.gamma())
                .finish_non_exhaustive(),
            Policy::Constant(u) => f.debug_tuple("Constant").field(u).finish(),
            Policy::BlackBox(_) => f.write_str("BlackBox"),
        }
    }
}

/// `min{ c(x), max{ r(x), γ V(f(x,u,d)) } }`.
fn integrand(model: &SystemModel, field: &ValueField, x: &[f64], r: f64, c: f64, u: &[f64], d: &[f64]) -> f64 {
    let next = model.step_unchecked(x, u, d);
    c.min(r.max(field.gamma() * field.interpolate(&next)))
}

/// Greedy max-min control at `x`: index into the lattice controls and the
/// attained max-min integrand value. Ties go to the first control.
pub fn greedy_control(model: &SystemModel, field: &ValueField, lattice: &ActionLattice, x: &[f64]) -> (usize, f64) {
    let r = model.reward(x);
    let c = model.constraint(x);
    let mut best = (0, f64::NEG_INFINITY);
    for (iu, u) in lattice.controls().iter().enumerate() {
        let mut worst = f64::INFINITY;
        for d in lattice.disturbances() {
            worst = worst.min(integrand(model, field, x, r, c, u, d));
            if worst <= best.1 {
                break;
            }
        }
        if worst > best.1 {
            best = (iu, worst);
        }
    }
    best
}

/// Worst-case lattice disturbance against control `u` at `x`. Ties go to
/// the first disturbance.
pub fn worst_disturbance(
    model: &SystemModel,
    field: &ValueField,
    lattice: &ActionLattice,
    x: &[f64],
    u: &[f64],
) -> Vec<f64> {
    let r = model.reward(x);
    let c = model.constraint(x);
    let mut best = (0, f64::INFINITY);
    for (id, d) in lattice.disturbances().iter().enumerate() {
        let v = integrand(model, field, x, r, c, u, d);
        if v < best.1 {
            best = (id, v);
        }
    }
    lattice.disturbances()[best.0].clone()
}

/// Projects `u` into `U` if it is within [`CONTROL_CLAMP_TOL`] of it.
pub fn admit_control(model: &SystemModel, u: Vec<f64>) -> Result<Vec<f64>> {
    if u.len() != model.control_dim() {
        return Err(Error::Dimension {
            what: "policy output",
            expected: model.control_dim(),
            got: u.len(),
        });
    }
    if model.control_set().contains(&u, 0.0) {
        return Ok(u);
    }
    let p = model.control_set().project(&u);
    if dist(&p, &u) <= CONTROL_CLAMP_TOL && u.iter().all(|v| v.is_finite()) {
        Ok(p)
    } else {
        Err(Error::PolicyViolation(u))
    }
}

impl Policy {
    pub fn greedy(field: Arc<ValueField>, lattice: Arc<ActionLattice>) -> Self {
        Policy::GridGreedy { field, lattice }
    }

    pub fn black_box<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Policy::BlackBox(Arc::new(f))
    }

    /// Control at `x`, always inside `U`.
    pub fn control(&self, model: &SystemModel, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Policy::GridGreedy { field, lattice } => {
                let (iu, _) = greedy_control(model, field, lattice, x);
                Ok(lattice.controls()[iu].clone())
            }
            Policy::Constant(u) => admit_control(model, u.clone()),
            Policy::BlackBox(f) => admit_control(model, f(x)),
        }
    }
}

/// Disturbance policy `φ: ℝⁿ × U → D`.
#[derive(Clone)]
pub enum DisturbancePolicy {
    GridWorstCase {
        field: Arc<ValueField>,
        lattice: Arc<ActionLattice>,
    },
    /// Uniform draws over `D` from the rollout's seeded generator.
    Sampler,
    Constant(Vec<f64>),
}

impl fmt::Debug for DisturbancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisturbancePolicy::GridWorstCase { .. } => f.write_str("GridWorstCase"),
            DisturbancePolicy::Sampler => f.write_str("Sampler"),
            DisturbancePolicy::Constant(d) => f.debug_tuple("Constant").field(d).finish(),
        }
    }
}

impl DisturbancePolicy {
    pub fn disturbance<R: Rng + ?Sized>(
        &self,
        model: &SystemModel,
        x: &[f64],
        u: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let d = match self {
            DisturbancePolicy::GridWorstCase { field, lattice } => worst_disturbance(model, field, lattice, x, u),
            DisturbancePolicy::Sampler => model.disturbance_set().sample(rng),
            DisturbancePolicy::Constant(d) => d.clone(),
        };
        if d.len() != model.disturbance_dim() || !model.disturbance_set().contains(&d, crate::systems::MEMBERSHIP_TOL) {
            return Err(Error::OutsideSet {
                what: "disturbance",
                value: d,
            });
        }
        Ok(d)
    }
}

/// States `x₀..x_T` with the controls and disturbances that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    /// Re-applies the dynamics to every stored transition and checks for an
    /// exact match.
    pub fn verify(&self, model: &SystemModel) -> bool {
        self.states.len() == self.controls.len() + 1
            && self.controls.len() == self.disturbances.len()
            && (0..self.controls.len()).all(|t| {
                model
                    .step(&self.states[t], &self.controls[t], &self.disturbances[t])
                    .map(|next| next == self.states[t + 1])
                    .unwrap_or(false)
            })
    }
}

/// Closed-loop rollout `x_{t+1} = f(x_t, π(x_t), φ(x_t, π(x_t)))` for
/// exactly `horizon` steps. Sampled disturbances come from `seed`.
pub fn rollout(
    model: &SystemModel,
    policy: &Policy,
    dist_policy: &DisturbancePolicy,
    x0: &[f64],
    horizon: usize,
    seed: u64,
) -> Result<Trajectory> {
    model.check_state(x0)?;
    let mut rng = stream_rng(seed, 0);
    let mut traj = Trajectory {
        states: vec![x0.to_vec()],
        controls: Vec::with_capacity(horizon),
        disturbances: Vec::with_capacity(horizon),
    };
    for _ in 0..horizon {
        let x = traj.states.last().expect("nonempty");
        let u = policy.control(model, x)?;
        let d = dist_policy.disturbance(model, x, &u, &mut rng)?;
        let next = model.step(x, &u, &d)?;
        traj.states.push(next);
        traj.controls.push(u);
        traj.disturbances.push(d);
    }
    Ok(traj)
}

/// Replays a fixed control sequence from `x0` under a disturbance policy.
pub fn rollout_open_loop(
    model: &SystemModel,
    controls: &[Vec<f64>],
    dist_policy: &DisturbancePolicy,
    x0: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    model.check_state(x0)?;
    let mut rng = stream_rng(seed, 0);
    let mut traj = Trajectory {
        states: vec![x0.to_vec()],
        controls: Vec::with_capacity(controls.len()),
        disturbances: Vec::with_capacity(controls.len()),
    };
    for u in controls {
        let x = traj.states.last().expect("nonempty");
        let d = dist_policy.disturbance(model, x, u, &mut rng)?;
        let next = model.step(x, u, &d)?;
        traj.states.push(next);
        traj.controls.push(u.clone());
        traj.disturbances.push(d);
    }
    Ok(traj)
}

/// Samples the policy at every grid node: coordinates `x*` then controls `u*`.
pub fn write_policy_csv<W: Write>(policy: &Policy, model: &SystemModel, grid: &Grid, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..grid.dim()).map(|i| format!("x{i}")).collect();
    header.extend((0..model.control_dim()).map(|i| format!("u{i}")));
    out.write_record(&header)?;
    for i in 0..grid.len() {
        let x = grid.node(i);
        let u = policy.control(model, &x)?;
        let row: Vec<String> = x.iter().chain(&u).map(|v| format!("{v:?}")).collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{builtin_system, Mode};
    use std::collections::BTreeMap;

    fn linear1d() -> SystemModel {
        builtin_system("linear1d", &BTreeMap::new(), Mode::ReachAvoid).unwrap()
    }

    #[test]
    fn constant_policy_returns_constant() {
        let m = linear1d();
        assert_eq!(Policy::Constant(vec![0.0]).control(&m, &[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn black_box_is_clamped_within_tolerance() {
        let m = linear1d();
        let p = Policy::black_box(|_| vec![1.0 + 5e-7]);
        assert_eq!(p.control(&m, &[0.0]).unwrap(), vec![1.0]);
        let bad = Policy::black_box(|_| vec![1.1]);
        assert!(matches!(bad.control(&m, &[0.0]), Err(Error::PolicyViolation(_))));
    }

    #[test]
    fn horizon_zero_rollout_has_only_initial_state() {
        let m = linear1d();
        let t = rollout(
            &m,
            &Policy::Constant(vec![0.0]),
            &DisturbancePolicy::Sampler,
            &[0.3],
            0,
            1,
        )
        .unwrap();
        assert_eq!(t.states, vec![vec![0.3]]);
        assert!(t.controls.is_empty());
    }
}
