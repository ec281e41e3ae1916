use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{SystemModel, MEMBERSHIP_TOL};

pub const DEFAULT_CONTROL_POINTS: usize = 11;
pub const DEFAULT_DISTURBANCE_POINTS: usize = 5;

/// Finite control and disturbance candidates used to discretize the max-min.
///
/// Enumeration order is lexicographic over dimensions; max/min ties resolve
/// to the first element in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionLattice {
    controls: Vec<Vec<f64>>,
    disturbances: Vec<Vec<f64>>,
}

impl ActionLattice {
    /// Uniform per-dimension lattices over the model's sets.
    pub fn uniform(model: &SystemModel, control_points: usize, disturbance_points: usize) -> Self {
        ActionLattice {
            controls: model.control_set().lattice(control_points),
            disturbances: model.disturbance_set().lattice(disturbance_points),
        }
    }

    pub fn default_for(model: &SystemModel) -> Self {
        Self::uniform(model, DEFAULT_CONTROL_POINTS, DEFAULT_DISTURBANCE_POINTS)
    }

    /// Explicit lists; every element must lie in its set.
    pub fn from_lists(model: &SystemModel, controls: Vec<Vec<f64>>, disturbances: Vec<Vec<f64>>) -> Result<Self> {
        if controls.is_empty() || disturbances.is_empty() {
            return Err(Error::InvalidParameter("action lattice lists must be nonempty".into()));
        }
        for u in &controls {
            if u.len() != model.control_dim() || !model.control_set().contains(u, MEMBERSHIP_TOL) {
                return Err(Error::OutsideSet {
                    what: "lattice control",
                    value: u.clone(),
                });
            }
        }
        for d in &disturbances {
            if d.len() != model.disturbance_dim() || !model.disturbance_set().contains(d, MEMBERSHIP_TOL) {
                return Err(Error::OutsideSet {
                    what: "lattice disturbance",
                    value: d.clone(),
                });
            }
        }
        Ok(ActionLattice { controls, disturbances })
    }

    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    pub fn disturbances(&self) -> &[Vec<f64>] {
        &self.disturbances
    }
}
