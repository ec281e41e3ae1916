//! Dynamical systems: transition map, control/disturbance sets, reward and
//! constraint functions, Lipschitz data and surrogate set descriptions.

mod builtin;
mod dynamics;
mod function;
mod sets;
mod spec;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{builtin_system, BUILTIN_NAMES};
pub use dynamics::Dynamics;
pub use function::{Piece, ScalarFn};
pub(crate) use sets::cartesian;
pub use sets::{Ball, BoundedSet, Rect};
pub use spec::{CustomSystem, FnSpec, SystemSpec};
pub(crate) use surrogate::psd_eigen;
pub use surrogate::{
    CoupledOffset, Halfspace, SurrogateConstraint, SurrogateQuadratic, SurrogateTarget, PSD_TOLERANCE,
};

/// Tolerance for control/disturbance membership checks in [`SystemModel::step`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Which game the value function encodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    ReachAvoid,
    /// Reward forced to `-1`: the value is zero exactly on the viability kernel.
    Viability,
    /// Constraint forced to `+1`: the value is positive on the backward reachable set.
    Reach,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reach_avoid" => Ok(Mode::ReachAvoid),
            "viability" => Ok(Mode::Viability),
            "reach" => Ok(Mode::Reach),
            other => Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

/// Immutable description of a reach-avoid problem.
#[derive(Debug, Clone)]
pub struct SystemModel {
    name: String,
    dynamics: Dynamics,
    control_set: BoundedSet,
    disturbance_set: BoundedSet,
    disturbance_bound: f64,
    reward: ScalarFn,
    constraint: ScalarFn,
    lipschitz_state: f64,
    lipschitz_disturbance: f64,
    surrogate_target: Option<SurrogateTarget>,
    surrogate_constraint: Option<SurrogateConstraint>,
    mode: Mode,
}

impl SystemModel {
    pub fn builder(name: impl Into<String>, dynamics: Dynamics) -> SystemBuilder {
        SystemBuilder {
            name: name.into(),
            dynamics,
            control_set: None,
            disturbance_set: None,
            reward: None,
            constraint: None,
            lipschitz_state: None,
            lipschitz_disturbance: None,
            surrogate_target: None,
            surrogate_constraint: None,
            mode: Mode::ReachAvoid,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.dynamics.control_dim()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.dynamics.disturbance_dim()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn control_set(&self) -> &BoundedSet {
        &self.control_set
    }

    pub fn disturbance_set(&self) -> &BoundedSet {
        &self.disturbance_set
    }

    /// `ε_d`: the largest disturbance norm.
    pub fn disturbance_bound(&self) -> f64 {
        self.disturbance_bound
    }

    pub fn lipschitz_state(&self) -> f64 {
        self.lipschitz_state
    }

    pub fn lipschitz_disturbance(&self) -> f64 {
        self.lipschitz_disturbance
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn surrogate_target(&self) -> Option<&SurrogateTarget> {
        self.surrogate_target.as_ref()
    }

    pub fn surrogate_constraint(&self) -> Option<&SurrogateConstraint> {
        self.surrogate_constraint.as_ref()
    }

    /// The same model with the mode overridden.
    pub fn with_mode(&self, mode: Mode) -> SystemModel {
        SystemModel { mode, ..self.clone() }
    }

    /// Overrides the disturbance set (and `ε_d`); the set must contain the origin.
    pub fn with_disturbance_set(&self, set: BoundedSet) -> Result<SystemModel> {
        check_set(&set, self.disturbance_dim(), "disturbance set")?;
        Ok(SystemModel {
            disturbance_bound: set.max_norm(),
            disturbance_set: set,
            ..self.clone()
        })
    }

    /// `x' = f(x, u, d)`, rejecting controls and disturbances outside their sets.
    pub fn step(&self, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        check_len("control", self.control_dim(), u.len())?;
        check_len("disturbance", self.disturbance_dim(), d.len())?;
        if !self.control_set.contains(u, MEMBERSHIP_TOL) {
            return Err(Error::OutsideSet {
                what: "control",
                value: u.to_vec(),
            });
        }
        if !self.disturbance_set.contains(d, MEMBERSHIP_TOL) {
            return Err(Error::OutsideSet {
                what: "disturbance",
                value: d.to_vec(),
            });
        }
        Ok(self.dynamics.apply(x, u, d))
    }

    /// Transition without membership checks, for pre-validated inputs.
    pub fn step_unchecked(&self, x: &[f64], u: &[f64], d: &[f64]) -> Vec<f64> {
        self.dynamics.apply(x, u, d)
    }

    pub fn check_state(&self, x: &[f64]) -> Result<()> {
        check_len("state", self.state_dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("state {x:?} is not finite")));
        }
        Ok(())
    }

    /// `r(x)`; positive exactly on the target set.
    pub fn reward(&self, x: &[f64]) -> f64 {
        match self.mode {
            Mode::Viability => -1.0,
            _ => self.reward.eval(x),
        }
    }

    /// `c(x)`; positive exactly on the constraint set.
    pub fn constraint(&self, x: &[f64]) -> f64 {
        match self.mode {
            Mode::Reach => 1.0,
            _ => self.constraint.eval(x),
        }
    }

    pub fn reward_fn(&self) -> &ScalarFn {
        &self.reward
    }

    pub fn constraint_fn(&self) -> &ScalarFn {
        &self.constraint
    }

    pub fn reward_lipschitz(&self) -> f64 {
        match self.mode {
            Mode::Viability => 0.0,
            _ => self.reward.lipschitz(),
        }
    }

    pub fn constraint_lipschitz(&self) -> f64 {
        match self.mode {
            Mode::Reach => 0.0,
            _ => self.constraint.lipschitz(),
        }
    }

    pub fn reward_bound(&self) -> f64 {
        match self.mode {
            Mode::Viability => 1.0,
            _ => self.reward.bound(),
        }
    }

    pub fn constraint_bound(&self) -> f64 {
        match self.mode {
            Mode::Reach => 1.0,
            _ => self.constraint.bound(),
        }
    }

    /// Bound on the magnitude of any value function iterate.
    pub fn value_bound(&self) -> f64 {
        self.reward_bound().max(self.constraint_bound())
    }
}

/// Builder for [`SystemModel`]; `build` validates dimensions and sets.
pub struct SystemBuilder {
    name: String,
    dynamics: Dynamics,
    control_set: Option<BoundedSet>,
    disturbance_set: Option<BoundedSet>,
    reward: Option<ScalarFn>,
    constraint: Option<ScalarFn>,
    lipschitz_state: Option<f64>,
    lipschitz_disturbance: Option<f64>,
    surrogate_target: Option<SurrogateTarget>,
    surrogate_constraint: Option<SurrogateConstraint>,
    mode: Mode,
}

impl SystemBuilder {
    pub fn control_set(mut self, set: BoundedSet) -> Self {
        self.control_set = Some(set);
        self
    }

    pub fn disturbance_set(mut self, set: BoundedSet) -> Self {
        self.disturbance_set = Some(set);
        self
    }

    pub fn reward(mut self, f: ScalarFn) -> Self {
        self.reward = Some(f);
        self
    }

    pub fn constraint(mut self, f: ScalarFn) -> Self {
        self.constraint = Some(f);
        self
    }

    /// Overrides the Lipschitz constants; required for custom closures.
    pub fn lipschitz(mut self, state: f64, disturbance: f64) -> Self {
        self.lipschitz_state = Some(state);
        self.lipschitz_disturbance = Some(disturbance);
        self
    }

    pub fn surrogate_target(mut self, s: SurrogateTarget) -> Self {
        self.surrogate_target = Some(s);
        self
    }

    pub fn surrogate_constraint(mut self, s: SurrogateConstraint) -> Self {
        self.surrogate_constraint = Some(s);
        self
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn build(self) -> Result<SystemModel> {
        let n = self.dynamics.state_dim();
        if n == 0 {
            return Err(Error::InvalidParameter("state dimension must be positive".into()));
        }
        if let Dynamics::Affine { a, b, d, c } = &self.dynamics {
            if a.ncols() != n || b.nrows() != n || d.nrows() != n || c.len() != n {
                return Err(Error::InvalidParameter(
                    "affine dynamics matrices have inconsistent shapes".into(),
                ));
            }
        }
        let control_set = self
            .control_set
            .ok_or_else(|| Error::InvalidParameter("missing control set".into()))?;
        let disturbance_set = self
            .disturbance_set
            .ok_or_else(|| Error::InvalidParameter("missing disturbance set".into()))?;
        check_set(&control_set, self.dynamics.control_dim(), "control set")?;
        check_set(&disturbance_set, self.dynamics.disturbance_dim(), "disturbance set")?;

        let max_speed = match (&self.dynamics, &control_set) {
            (Dynamics::Unicycle { .. }, BoundedSet::Box(r)) => r.lo[0].abs().max(r.hi[0].abs()),
            (Dynamics::Unicycle { .. }, BoundedSet::Ball(b)) => b.center[0].abs() + b.radius,
            _ => 0.0,
        };
        let (lfx, lfd) = match (self.lipschitz_state, self.lipschitz_disturbance) {
            (Some(x), Some(d)) => (x, d),
            _ => self
                .dynamics
                .lipschitz(max_speed)
                .ok_or_else(|| Error::InvalidParameter("custom dynamics need explicit lipschitz constants".into()))?,
        };
        if !(lfx > 0.0 && lfx.is_finite() && lfd >= 0.0 && lfd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid dynamics lipschitz constants ({lfx}, {lfd})"
            )));
        }
        let reward = self
            .reward
            .ok_or_else(|| Error::InvalidParameter("missing reward function".into()))?;
        let constraint = self
            .constraint
            .ok_or_else(|| Error::InvalidParameter("missing constraint function".into()))?;
        if let Some(t) = &self.surrogate_target {
            SurrogateTarget::new(t.halfspaces.clone(), n)?;
        }
        if let Some(c) = &self.surrogate_constraint {
            SurrogateConstraint::new(c.quadratics.clone(), n)?;
        }
        Ok(SystemModel {
            name: self.name,
            dynamics: self.dynamics,
            disturbance_bound: disturbance_set.max_norm(),
            control_set,
            disturbance_set,
            reward,
            constraint,
            lipschitz_state: lfx,
            lipschitz_disturbance: lfd,
            surrogate_target: self.surrogate_target,
            surrogate_constraint: self.surrogate_constraint,
            mode: self.mode,
        })
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}

fn check_set(set: &BoundedSet, dim: usize, what: &'static str) -> Result<()> {
    set.validate()?;
    check_len(what, dim, set.dim())
}
