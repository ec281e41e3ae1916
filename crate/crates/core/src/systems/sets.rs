use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let rect = Rect { lo, hi };
        rect.validate()?;
        Ok(rect)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::Dimension {
                what: "box upper corner",
                expected: self.lo.len(),
                got: self.hi.len(),
            });
        }
        if self.lo.is_empty() {
            return Err(Error::InvalidParameter("box has zero dimensions".into()));
        }
        for (l, h) in self.lo.iter().zip(&self.hi) {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(Error::InvalidParameter(format!(
                    "box bounds must be finite with lo <= hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h > l { rng.random_range(*l..*h) } else { *l })
            .collect()
    }
}

/// Closed ball in the Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.center.len() && crate::linalg::dist(x, &self.center) <= self.radius + tol
    }

    /// Uniform sample by rejection from the bounding cube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.center.len();
        if self.radius == 0.0 {
            return self.center.clone();
        }
        let mut offset = vec![0.0; n];
        loop {
            for o in offset.iter_mut() {
                *o = rng.random_range(-1.0..1.0);
            }
            if norm(&offset) <= 1.0 {
                break;
            }
        }
        self.center
            .iter()
            .zip(&offset)
            .map(|(c, o)| c + self.radius * o)
            .collect()
    }
}

/// Compact, connected set of controls or disturbances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedSet {
    Box(Rect),
    Ball(Ball),
}

impl BoundedSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        BoundedSet::Box(Rect {
            lo: vec![lo],
            hi: vec![hi],
        })
    }

    pub fn symmetric_box(half_widths: &[f64]) -> Self {
        BoundedSet::Box(Rect {
            lo: half_widths.iter().map(|w| -w).collect(),
            hi: half_widths.to_vec(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundedSet::Box(rect) => rect.validate(),
            BoundedSet::Ball(ball) => {
                if ball.center.is_empty() {
                    return Err(Error::InvalidParameter("ball has zero dimensions".into()));
                }
                if !(ball.radius >= 0.0 && ball.radius.is_finite()) || ball.center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius must be finite and nonnegative, got {}",
                        ball.radius
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundedSet::Box(rect) => rect.dim(),
            BoundedSet::Ball(ball) => ball.center.len(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            BoundedSet::Box(rect) => rect.contains(x, tol),
            BoundedSet::Ball(ball) => ball.contains(x, tol),
        }
    }

    /// Nearest point of the set.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            BoundedSet::Box(rect) => x
                .iter()
                .zip(rect.lo.iter().zip(&rect.hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            BoundedSet::Ball(ball) => {
                let d = crate::linalg::dist(x, &ball.center);
                if d <= ball.radius {
                    x.to_vec()
                } else {
                    let s = ball.radius / d;
                    x.iter().zip(&ball.center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
        }
    }

    /// Largest Euclidean norm attained on the set.
    pub fn max_norm(&self) -> f64 {
        match self {
            BoundedSet::Box(rect) => rect
                .lo
                .iter()
                .zip(&rect.hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            BoundedSet::Ball(ball) => norm(&ball.center) + ball.radius,
        }
    }

    pub fn contains_origin(&self) -> bool {
        self.contains(&vec![0.0; self.dim()], 0.0)
    }

    /// Uniform per-dimension lattice in lexicographic order (last axis
    /// fastest). Boxes always include their corners; ball lattices are
    /// the bounding-box lattice projected onto the ball, deduplicated.
    pub fn lattice(&self, points_per_dim: usize) -> Vec<Vec<f64>> {
        let k = points_per_dim.max(2);
        let (lo, hi) = match self {
            BoundedSet::Box(rect) => (rect.lo.clone(), rect.hi.clone()),
            BoundedSet::Ball(ball) => (
                ball.center.iter().map(|c| c - ball.radius).collect(),
                ball.center.iter().map(|c| c + ball.radius).collect(),
            ),
        };
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| {
                if h > l {
                    (0..k)
                        .map(|i| {
                            if i + 1 == k {
                                *h
                            } else {
                                l + (h - l) * i as f64 / (k - 1) as f64
                            }
                        })
                        .collect()
                } else {
                    vec![*l]
                }
            })
            .collect();
        let mut points = cartesian(&axes);
        if let BoundedSet::Ball(_) = self {
            points = points.iter().map(|p| self.project(p)).collect();
            let mut unique: Vec<Vec<f64>> = Vec::with_capacity(points.len());
            for p in points {
                if !unique.iter().any(|q| q == &p) {
                    unique.push(p);
                }
            }
            points = unique;
        }
        points
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            BoundedSet::Box(rect) => rect.sample(rng),
            BoundedSet::Ball(ball) => ball.sample(rng),
        }
    }
}

/// Lexicographic product of per-axis coordinate lists.
pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
