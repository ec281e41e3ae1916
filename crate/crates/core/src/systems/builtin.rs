use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{
    BoundedSet, Dynamics, Halfspace, Mode, Piece, ScalarFn, SurrogateConstraint, SurrogateQuadratic, SurrogateTarget,
    SystemModel,
};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 4] = ["linear1d", "di2", "di4", "unicycle"];

const DEFAULT_BOUND: f64 = 10.0;

struct Params<'a> {
    name: &'a str,
    map: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl Params<'_> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "{}: parameter `{key}` must be positive, got {v}",
                self.name
            )))
        }
    }

    fn check_keys(&self) -> Result<()> {
        for key in self.map.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "{}: unknown parameter `{key}` (allowed: {})",
                    self.name,
                    self.allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// Instantiates one of the benchmark systems in [`BUILTIN_NAMES`].
pub fn builtin_system(name: &str, params: &BTreeMap<String, f64>, mode: Mode) -> Result<SystemModel> {
    let model = match name {
        "linear1d" => linear1d(Params {
            name,
            map: params,
            allowed: &["bound"],
        }),
        "di2" => di2(Params {
            name,
            map: params,
            allowed: &[
                "dt", "u_max", "d_max", "target_p", "target_v", "p_max", "v_max", "bound",
            ],
        }),
        "di4" => di4(Params {
            name,
            map: params,
            allowed: &[
                "dt",
                "u_max",
                "d_max",
                "target_p",
                "target_v",
                "p_max",
                "v_max",
                "obstacle_x",
                "obstacle_y",
                "obstacle_r",
                "bound",
            ],
        }),
        "unicycle" => unicycle(Params {
            name,
            map: params,
            allowed: &[
                "dt",
                "v_min",
                "v_max",
                "w_max",
                "d_max",
                "goal_x",
                "goal_y",
                "goal_half",
                "arena",
                "obstacle_x",
                "obstacle_y",
                "obstacle_r",
                "bound",
            ],
        }),
        other => return Err(Error::UnknownSystem(other.to_string())),
    }?;
    Ok(model.with_mode(mode))
}

/// `x' = 1.01 x + 0.01 (u + d)`, `|u| <= 1`, `|d| <= 0.5`, target `x < -1`,
/// constraint `x > -2`.
fn linear1d(p: Params) -> Result<SystemModel> {
    p.check_keys()?;
    let bound = p.positive("bound", DEFAULT_BOUND)?;
    let dynamics = Dynamics::Affine {
        a: DMatrix::from_element(1, 1, 1.01),
        b: DMatrix::from_element(1, 1, 0.01),
        d: DMatrix::from_element(1, 1, 0.01),
        c: vec![0.0],
    };
    let reward = ScalarFn::from_pieces(
        vec![Piece::Affine {
            coeffs: vec![-1.0],
            offset: -1.0,
        }],
        bound,
        None,
        1,
    )?;
    let constraint = ScalarFn::from_pieces(
        vec![Piece::Affine {
            coeffs: vec![1.0],
            offset: 2.0,
        }],
        bound,
        None,
        1,
    )?;
    SystemModel::builder("linear1d", dynamics)
        .control_set(BoundedSet::interval(-1.0, 1.0))
        .disturbance_set(BoundedSet::interval(-0.5, 0.5))
        .reward(reward)
        .constraint(constraint)
        .surrogate_target(SurrogateTarget::new(
            vec![Halfspace {
                normal: vec![-1.0],
                offset: 1.0,
            }],
            1,
        )?)
        .surrogate_constraint(SurrogateConstraint::new(
            vec![SurrogateQuadratic::linear(vec![1.0], 2.0)],
            1,
        )?)
        .build()
}

/// `|x_i - center_i| < half` as a list of `(coeffs, offset)` affine pieces.
fn box_pieces(n: usize, axes: &[(usize, f64, f64)]) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    for &(axis, center, half) in axes {
        let mut up = vec![0.0; n];
        up[axis] = -1.0;
        out.push((up, half + center));
        let mut down = vec![0.0; n];
        down[axis] = 1.0;
        out.push((down, half - center));
    }
    out
}

fn affine_pieces(pieces: &[(Vec<f64>, f64)]) -> Vec<Piece> {
    pieces
        .iter()
        .map(|(coeffs, offset)| Piece::Affine {
            coeffs: coeffs.clone(),
            offset: *offset,
        })
        .collect()
}

fn halfspaces(pieces: &[(Vec<f64>, f64)]) -> Vec<Halfspace> {
    pieces
        .iter()
        .map(|(coeffs, offset)| Halfspace {
            normal: coeffs.clone(),
            offset: -offset,
        })
        .collect()
}

fn linear_quadratics(pieces: &[(Vec<f64>, f64)]) -> Vec<SurrogateQuadratic> {
    pieces
        .iter()
        .map(|(coeffs, offset)| SurrogateQuadratic::linear(coeffs.clone(), *offset))
        .collect()
}

/// Planar clearance `Σ (x[axis] - center)² - r²` as a PSD quadratic.
fn clearance_quadratic(n: usize, axes: &[usize], center: &[f64], radius: f64) -> Result<SurrogateQuadratic> {
    let mut q = DMatrix::zeros(n, n);
    let mut lin = vec![0.0; n];
    let mut offset = -radius * radius;
    for (&axis, &c) in axes.iter().zip(center) {
        q[(axis, axis)] = 2.0;
        lin[axis] = -2.0 * c;
        offset += c * c;
    }
    SurrogateQuadratic::new(q, lin, offset, None)
}

/// 1-D double integrator `p' = p + dt v`, `v' = v + dt (u + d)`.
fn di2(p: Params) -> Result<SystemModel> {
    p.check_keys()?;
    let dt = p.positive("dt", 0.1)?;
    let u_max = p.positive("u_max", 1.0)?;
    let d_max = p.positive("d_max", 0.1)?;
    let target_p = p.positive("target_p", 0.3)?;
    let target_v = p.positive("target_v", 0.5)?;
    let p_max = p.positive("p_max", 1.0)?;
    let v_max = p.positive("v_max", 1.0)?;
    let bound = p.positive("bound", DEFAULT_BOUND)?;

    let dynamics = Dynamics::Affine {
        a: DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]),
        b: DMatrix::from_row_slice(2, 1, &[0.0, dt]),
        d: DMatrix::from_row_slice(2, 1, &[0.0, dt]),
        c: vec![0.0, 0.0],
    };
    let target = box_pieces(2, &[(0, 0.0, target_p), (1, 0.0, target_v)]);
    let safe = box_pieces(2, &[(0, 0.0, p_max), (1, 0.0, v_max)]);
    SystemModel::builder("di2", dynamics)
        .control_set(BoundedSet::interval(-u_max, u_max))
        .disturbance_set(BoundedSet::interval(-d_max, d_max))
        .reward(ScalarFn::from_pieces(affine_pieces(&target), bound, None, 2)?)
        .constraint(ScalarFn::from_pieces(affine_pieces(&safe), bound, None, 2)?)
        .surrogate_target(SurrogateTarget::new(halfspaces(&target), 2)?)
        .surrogate_constraint(SurrogateConstraint::new(linear_quadratics(&safe), 2)?)
        .build()
}

/// Planar double integrator with state `(px, py, vx, vy)` and a circular
/// obstacle.
fn di4(p: Params) -> Result<SystemModel> {
    p.check_keys()?;
    let dt = p.positive("dt", 0.1)?;
    let u_max = p.positive("u_max", 1.0)?;
    let d_max = p.positive("d_max", 0.05)?;
    let target_p = p.positive("target_p", 0.3)?;
    let target_v = p.positive("target_v", 0.5)?;
    let p_max = p.positive("p_max", 1.0)?;
    let v_max = p.positive("v_max", 1.0)?;
    let ox = p.get("obstacle_x", -0.5);
    let oy = p.get("obstacle_y", 0.0);
    let orad = p.positive("obstacle_r", 0.2)?;
    let bound = p.positive("bound", DEFAULT_BOUND)?;

    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, dt, 0.0,
        0.0, 1.0, 0.0, dt,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(4, 2, &[
        0.0, 0.0,
        0.0, 0.0,
        dt, 0.0,
        0.0, dt,
    ]);
    let dynamics = Dynamics::Affine {
        a,
        d: b.clone(),
        b,
        c: vec![0.0; 4],
    };
    let target = box_pieces(
        4,
        &[
            (0, 0.0, target_p),
            (1, 0.0, target_p),
            (2, 0.0, target_v),
            (3, 0.0, target_v),
        ],
    );
    let safe = box_pieces(4, &[(0, 0.0, p_max), (1, 0.0, p_max), (2, 0.0, v_max), (3, 0.0, v_max)]);
    let mut constraint_pieces = affine_pieces(&safe);
    constraint_pieces.push(Piece::SquaredDistance {
        axes: vec![0, 1],
        center: vec![ox, oy],
        radius: orad,
    });
    let mut quadratics = linear_quadratics(&safe);
    quadratics.push(clearance_quadratic(4, &[0, 1], &[ox, oy], orad)?);

    SystemModel::builder("di4", dynamics)
        .control_set(BoundedSet::symmetric_box(&[u_max, u_max]))
        .disturbance_set(BoundedSet::symmetric_box(&[d_max, d_max]))
        .reward(ScalarFn::from_pieces(affine_pieces(&target), bound, None, 4)?)
        .constraint(ScalarFn::from_pieces(constraint_pieces, bound, None, 4)?)
        .surrogate_target(SurrogateTarget::new(halfspaces(&target), 4)?)
        .surrogate_constraint(SurrogateConstraint::new(quadratics, 4)?)
        .build()
}

/// Unicycle `(px, py, θ)` driving to a square goal around an obstacle.
fn unicycle(p: Params) -> Result<SystemModel> {
    p.check_keys()?;
    let dt = p.positive("dt", 0.1)?;
    let v_min = p.get("v_min", 0.1);
    let v_max = p.positive("v_max", 1.0)?;
    let w_max = p.positive("w_max", 1.0)?;
    let d_max = p.positive("d_max", 0.05)?;
    let gx = p.get("goal_x", 0.8);
    let gy = p.get("goal_y", 0.0);
    let goal_half = p.positive("goal_half", 0.2)?;
    let arena = p.positive("arena", 1.2)?;
    let ox = p.get("obstacle_x", 0.2);
    let oy = p.get("obstacle_y", 0.0);
    let orad = p.positive("obstacle_r", 0.2)?;
    let bound = p.positive("bound", DEFAULT_BOUND)?;
    if !(v_min >= 0.0 && v_min <= v_max) {
        return Err(Error::InvalidParameter(format!(
            "unicycle: need 0 <= v_min <= v_max, got {v_min} and {v_max}"
        )));
    }

    let target = box_pieces(3, &[(0, gx, goal_half), (1, gy, goal_half)]);
    let walls = box_pieces(3, &[(0, 0.0, arena), (1, 0.0, arena)]);
    let mut constraint_pieces = affine_pieces(&walls);
    constraint_pieces.push(Piece::SquaredDistance {
        axes: vec![0, 1],
        center: vec![ox, oy],
        radius: orad,
    });
    let mut quadratics = linear_quadratics(&walls);
    quadratics.push(clearance_quadratic(3, &[0, 1], &[ox, oy], orad)?);

    SystemModel::builder("unicycle", Dynamics::Unicycle { dt })
        .control_set(BoundedSet::Box(super::Rect {
            lo: vec![v_min, -w_max],
            hi: vec![v_max, w_max],
        }))
        .disturbance_set(BoundedSet::symmetric_box(&[d_max, d_max]))
        .reward(ScalarFn::from_pieces(affine_pieces(&target), bound, None, 3)?)
        .constraint(ScalarFn::from_pieces(constraint_pieces, bound, None, 3)?)
        .surrogate_target(SurrogateTarget::new(halfspaces(&target), 3)?)
        .surrogate_constraint(SurrogateConstraint::new(quadratics, 3)?)
        .build()
}
