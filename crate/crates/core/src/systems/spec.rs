use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    builtin_system, BoundedSet, Dynamics, Halfspace, Mode, Piece, ScalarFn, SurrogateConstraint, SurrogateQuadratic,
    SurrogateTarget, SystemModel,
};
use crate::error::{Error, Result};
use crate::linalg::matrix_from_rows;

fn default_bound() -> f64 {
    10.0
}

/// JSON description of a reward or constraint function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FnSpec {
    pub pieces: Vec<Piece>,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

/// Affine system given by matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomSystem {
    #[serde(default = "default_name")]
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    pub control_set: BoundedSet,
    pub disturbance_set: BoundedSet,
    pub reward: FnSpec,
    pub constraint: FnSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_state: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_disturbance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_target: Option<Vec<Halfspace>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_constraint: Option<Vec<SurrogateQuadratic>>,
}

fn default_name() -> String {
    "custom".into()
}

/// `{"name": "di2", "params": {...}, "mode": "reach_avoid"}` or
/// `{"custom": {...}, "mode": ...}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSystem>,
    #[serde(default)]
    pub mode: Mode,
}

impl SystemSpec {
    pub fn builtin(name: &str) -> Self {
        SystemSpec {
            name: Some(name.to_string()),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<SystemModel> {
        match (&self.name, &self.custom) {
            (Some(name), None) => builtin_system(name, &self.params, self.mode),
            (None, Some(custom)) => Ok(custom.build()?.with_mode(self.mode)),
            _ => Err(Error::InvalidParameter(
                "system needs exactly one of `name` or `custom`".into(),
            )),
        }
    }
}

impl CustomSystem {
    pub fn build(&self) -> Result<SystemModel> {
        let matrix = |rows: &[Vec<f64>], what: &str| {
            matrix_from_rows(rows).ok_or_else(|| Error::InvalidParameter(format!("ragged matrix `{what}`")))
        };
        let a = matrix(&self.a, "a")?;
        let n = a.nrows();
        let dynamics = Dynamics::Affine {
            a,
            b: matrix(&self.b, "b")?,
            d: matrix(&self.d, "d")?,
            c: self.c.clone().unwrap_or_else(|| vec![0.0; n]),
        };
        let mut builder = SystemModel::builder(self.name.clone(), dynamics)
            .control_set(self.control_set.clone())
            .disturbance_set(self.disturbance_set.clone())
            .reward(ScalarFn::from_pieces(
                self.reward.pieces.clone(),
                self.reward.bound,
                self.reward.lipschitz,
                n,
            )?)
            .constraint(ScalarFn::from_pieces(
                self.constraint.pieces.clone(),
                self.constraint.bound,
                self.constraint.lipschitz,
                n,
            )?);
        match (self.lipschitz_state, self.lipschitz_disturbance) {
            (Some(x), Some(d)) => builder = builder.lipschitz(x, d),
            (None, None) => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "give both lipschitz_state and lipschitz_disturbance or neither".into(),
                ))
            }
        }
        if let Some(h) = &self.surrogate_target {
            builder = builder.surrogate_target(SurrogateTarget::new(h.clone(), n)?);
        }
        if let Some(q) = &self.surrogate_constraint {
            builder = builder.surrogate_constraint(SurrogateConstraint::new(q.clone(), n)?);
        }
        builder.build()
    }
}
