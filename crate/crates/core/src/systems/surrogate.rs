use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, matrix_from_rows, matrix_to_rows};

/// Eigenvalues below this are treated as a PSD violation.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Open halfspace `normal · x - offset > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

/// Polytope interior, declared to lie inside the target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurrogateTarget {
    pub halfspaces: Vec<Halfspace>,
}

impl SurrogateTarget {
    pub fn new(halfspaces: Vec<Halfspace>, state_dim: usize) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::InvalidParameter(
                "surrogate target needs at least one halfspace".into(),
            ));
        }
        for h in &halfspaces {
            if h.normal.len() != state_dim {
                return Err(Error::Dimension {
                    what: "surrogate halfspace",
                    expected: state_dim,
                    got: h.normal.len(),
                });
            }
        }
        Ok(SurrogateTarget { halfspaces })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.halfspaces.iter().map(|h| h.eval(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Offset coupling `b_eff = b - scale * max(direction · x + shift, 0)`.
///
/// During certification the inner linear term is maximized over the stage
/// ball before the clamp at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledOffset {
    pub direction: Vec<f64>,
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuadraticRepr {
    q: Vec<Vec<f64>>,
    lin: Vec<f64>,
    offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupled: Option<CoupledOffset>,
}

/// `½ xᵀ Q x + lin · x + offset` with `Q` positive semidefinite.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "QuadraticRepr", into = "QuadraticRepr")]
pub struct SurrogateQuadratic {
    q: DMatrix<f64>,
    lin: Vec<f64>,
    offset: f64,
    coupled: Option<CoupledOffset>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SurrogateQuadratic {
    pub fn new(q: DMatrix<f64>, lin: Vec<f64>, offset: f64, coupled: Option<CoupledOffset>) -> Result<Self> {
        let n = lin.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Dimension {
                what: "quadratic matrix",
                expected: n,
                got: q.nrows(),
            });
        }
        if let Some(c) = &coupled {
            if c.direction.len() != n {
                return Err(Error::Dimension {
                    what: "coupled offset direction",
                    expected: n,
                    got: c.direction.len(),
                });
            }
        }
        let asym = (&q - q.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + q.abs().max()) {
            return Err(Error::InvalidParameter("quadratic matrix must be symmetric".into()));
        }
        let (eigenvalues, eigenvectors) = psd_eigen(&q)?;
        Ok(SurrogateQuadratic {
            q,
            lin,
            offset,
            coupled,
            eigenvalues,
            eigenvectors,
        })
    }

    /// A linear function seen as a quadratic with `Q = 0`.
    pub fn linear(lin: Vec<f64>, offset: f64) -> Self {
        let n = lin.len();
        SurrogateQuadratic::new(DMatrix::zeros(n, n), lin, offset, None).expect("zero matrix is PSD")
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn lin(&self) -> &[f64] {
        &self.lin
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coupled(&self) -> Option<&CoupledOffset> {
        self.coupled.as_ref()
    }

    pub(crate) fn eigen(&self) -> (&[f64], &DMatrix<f64>) {
        (&self.eigenvalues, &self.eigenvectors)
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    /// Pointwise value, with any coupled offset evaluated at `x` itself.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * self.q[(i, j)] * x[j];
            }
        }
        let mut b = self.offset;
        if let Some(c) = &self.coupled {
            b -= c.scale * (dot(&c.direction, x) + c.shift).max(0.0);
        }
        0.5 * quad + dot(&self.lin, x) + b
    }
}

impl TryFrom<QuadraticRepr> for SurrogateQuadratic {
    type Error = Error;

    fn try_from(r: QuadraticRepr) -> Result<Self> {
        let q = if r.q.is_empty() {
            let n = r.lin.len();
            DMatrix::zeros(n, n)
        } else {
            matrix_from_rows(&r.q).ok_or_else(|| Error::InvalidParameter("ragged quadratic matrix".into()))?
        };
        SurrogateQuadratic::new(q, r.lin, r.offset, r.coupled)
    }
}

impl From<SurrogateQuadratic> for QuadraticRepr {
    fn from(s: SurrogateQuadratic) -> Self {
        QuadraticRepr {
            q: matrix_to_rows(&s.q),
            lin: s.lin,
            offset: s.offset,
            coupled: s.coupled,
        }
    }
}

/// Intersection of quadratic super-zero sets, declared to lie inside the
/// constraint set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurrogateConstraint {
    pub quadratics: Vec<SurrogateQuadratic>,
}

impl SurrogateConstraint {
    pub fn new(quadratics: Vec<SurrogateQuadratic>, state_dim: usize) -> Result<Self> {
        if quadratics.is_empty() {
            return Err(Error::InvalidParameter(
                "surrogate constraint needs at least one quadratic".into(),
            ));
        }
        for q in &quadratics {
            if q.dim() != state_dim {
                return Err(Error::Dimension {
                    what: "surrogate quadratic",
                    expected: state_dim,
                    got: q.dim(),
                });
            }
        }
        Ok(SurrogateConstraint { quadratics })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.quadratics.iter().map(|q| q.eval(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Eigen-decomposition of a symmetric matrix, rejecting eigenvalues below
/// `-PSD_TOLERANCE`. Slightly negative eigenvalues are rounded to zero.
pub(crate) fn psd_eigen(q: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if q.is_empty() {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::new(q.clone());
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd(min));
    }
    let values = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    Ok((values, eig.eigenvectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite_matrix() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            SurrogateQuadratic::new(q, vec![0.0, 0.0], 0.0, None),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn json_round_trip_keeps_eigen_cache() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let s = SurrogateQuadratic::new(q, vec![1.0, 0.0], -1.0, None).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SurrogateQuadratic = serde_json::from_str(&json).unwrap();
        assert_eq!(back.eval(&[1.0, 3.0]), s.eval(&[1.0, 3.0]));
        assert_eq!(back.eigen().0.len(), 2);
    }

    #[test]
    fn coupled_offset_uses_positive_part() {
        let s = SurrogateQuadratic::new(
            DMatrix::zeros(2, 2),
            vec![0.0, 0.0],
            -0.2,
            Some(CoupledOffset {
                direction: vec![1.0, -1.0],
                scale: 0.2,
                shift: 0.0,
            }),
        )
        .unwrap();
        assert!((s.eval(&[0.0, 1.0]) + 0.2).abs() < 1e-15);
        assert!((s.eval(&[1.0, 0.0]) + 0.4).abs() < 1e-15);
    }
}
