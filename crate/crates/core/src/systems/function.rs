use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// One component of a pointwise-minimum scalar function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Constant {
        value: f64,
    },
    /// `coeffs · x + offset`
    Affine {
        coeffs: Vec<f64>,
        offset: f64,
    },
    /// `Σ_k (x[axes[k]] - center[k])² - radius²`, e.g. an obstacle clearance.
    SquaredDistance {
        axes: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
    },
    /// `½ xᵀ Q x + lin · x + offset`; needs an explicit Lipschitz constant.
    Quadratic {
        q: Vec<Vec<f64>>,
        lin: Vec<f64>,
        offset: f64,
    },
}

impl Piece {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Piece::Constant { value } => *value,
            Piece::Affine { coeffs, offset } => dot(coeffs, x) + offset,
            Piece::SquaredDistance { axes, center, radius } => {
                axes.iter().zip(center).map(|(&a, c)| (x[a] - c).powi(2)).sum::<f64>() - radius * radius
            }
            Piece::Quadratic { q, lin, offset } => {
                let quad: f64 = q.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
                0.5 * quad + dot(lin, x) + offset
            }
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let bad = |got| Error::Dimension {
            what: "function piece",
            expected: n,
            got,
        };
        match self {
            Piece::Constant { .. } => Ok(()),
            Piece::Affine { coeffs, .. } if coeffs.len() != n => Err(bad(coeffs.len())),
            Piece::SquaredDistance { axes, center, .. } => {
                if axes.len() != center.len() || axes.iter().any(|&a| a >= n) {
                    Err(Error::InvalidParameter(
                        "squared-distance piece axes must index the state and match the center".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Piece::Quadratic { q, lin, .. } => {
                if lin.len() != n {
                    Err(bad(lin.len()))
                } else if q.len() != n || q.iter().any(|r| r.len() != n) {
                    Err(bad(q.len()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Lipschitz constant of `min(piece, bound)`, if derivable.
    fn clamped_lipschitz(&self, bound: f64) -> Option<f64> {
        match self {
            Piece::Constant { .. } => Some(0.0),
            Piece::Affine { coeffs, .. } => Some(norm(coeffs)),
            Piece::SquaredDistance { radius, .. } => Some(2.0 * (bound + radius * radius).sqrt()),
            Piece::Quadratic { .. } => None,
        }
    }
}

type Closure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Pieces(Vec<Piece>),
    Closure(Closure),
}

/// Bounded, Lipschitz scalar function `clamp(min_i piece_i(x), -bound, bound)`.
///
/// The sign encodes set membership: `f(x) > 0` iff `x` is in the set.
#[derive(Clone)]
pub struct ScalarFn {
    repr: Repr,
    lipschitz: f64,
    bound: f64,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("ScalarFn");
        match &self.repr {
            Repr::Pieces(p) => s.field("pieces", p),
            Repr::Closure(_) => s.field("pieces", &"<closure>"),
        };
        s.field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish()
    }
}

impl ScalarFn {
    /// Builds from pieces. The Lipschitz constant is derived unless given;
    /// a `Quadratic` piece requires an explicit constant.
    pub fn from_pieces(pieces: Vec<Piece>, bound: f64, lipschitz: Option<f64>, state_dim: usize) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter(
                "scalar function needs at least one piece".into(),
            ));
        }
        check_bound(bound)?;
        for p in &pieces {
            p.check_dim(state_dim)?;
        }
        let lipschitz = match lipschitz {
            Some(l) => l,
            None => pieces
                .iter()
                .map(|p| p.clamped_lipschitz(bound))
                .try_fold(0.0_f64, |acc, l| l.map(|l| acc.max(l)))
                .ok_or_else(|| {
                    Error::InvalidParameter("quadratic pieces need an explicit lipschitz constant".into())
                })?,
        };
        check_lipschitz(lipschitz)?;
        Ok(ScalarFn {
            repr: Repr::Pieces(pieces),
            lipschitz,
            bound,
        })
    }

    pub fn constant(value: f64) -> Self {
        ScalarFn {
            repr: Repr::Pieces(vec![Piece::Constant { value }]),
            lipschitz: 0.0,
            bound: value.abs().max(f64::MIN_POSITIVE),
        }
    }

    /// Wraps a user closure; the caller vouches for the Lipschitz constant.
    pub fn from_fn<F>(f: F, lipschitz: f64, bound: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_bound(bound)?;
        check_lipschitz(lipschitz)?;
        Ok(ScalarFn {
            repr: Repr::Closure(Arc::new(f)),
            lipschitz,
            bound,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let raw = match &self.repr {
            Repr::Pieces(pieces) => pieces.iter().map(|p| p.eval(x)).fold(f64::INFINITY, f64::min),
            Repr::Closure(f) => f(x),
        };
        raw.clamp(-self.bound, self.bound)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn pieces(&self) -> Option<&[Piece]> {
        match &self.repr {
            Repr::Pieces(p) => Some(p),
            Repr::Closure(_) => None,
        }
    }
}

fn check_bound(bound: f64) -> Result<()> {
    if bound > 0.0 && bound.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "clamp bound must be positive, got {bound}"
        )))
    }
}

fn check_lipschitz(l: f64) -> Result<()> {
    if l >= 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lipschitz constant must be finite and nonnegative, got {l}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_to_bound() {
        let f = ScalarFn::from_pieces(
            vec![Piece::Affine {
                coeffs: vec![-1.0],
                offset: -1.0,
            }],
            10.0,
            None,
            1,
        )
        .unwrap();
        assert_eq!(f.eval(&[-1.5]), 0.5);
        assert_eq!(f.eval(&[-100.0]), 10.0);
        assert_eq!(f.eval(&[100.0]), -10.0);
        assert_eq!(f.lipschitz(), 1.0);
    }

    #[test]
    fn min_of_pieces() {
        let f = ScalarFn::from_pieces(
            vec![
                Piece::Affine {
                    coeffs: vec![1.0, 0.0],
                    offset: 1.0,
                },
                Piece::Affine {
                    coeffs: vec![-1.0, 0.0],
                    offset: 1.0,
                },
            ],
            10.0,
            None,
            2,
        )
        .unwrap();
        assert_eq!(f.eval(&[0.25, 7.0]), 0.75);
    }

    #[test]
    fn quadratic_requires_explicit_lipschitz() {
        let piece = Piece::Quadratic {
            q: vec![vec![1.0]],
            lin: vec![0.0],
            offset: -1.0,
        };
        assert!(ScalarFn::from_pieces(vec![piece.clone()], 10.0, None, 1).is_err());
        let f = ScalarFn::from_pieces(vec![piece], 10.0, Some(3.0), 1).unwrap();
        assert_eq!(f.eval(&[2.0]), 1.0);
    }

    #[test]
    fn squared_distance_lipschitz_covers_clamped_slope() {
        let piece = Piece::SquaredDistance {
            axes: vec![0, 1],
            center: vec![0.5, 0.0],
            radius: 0.2,
        };
        let f = ScalarFn::from_pieces(vec![piece], 2.0, None, 2).unwrap();
        let expected = 2.0 * (2.0_f64 + 0.04).sqrt();
        assert!((f.lipschitz() - expected).abs() < 1e-12);
    }
}
