use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of grid nodes.
pub const DEFAULT_NODE_BUDGET: usize = 20_000_000;

/// Gridding is for low-dimensional systems only.
pub const MAX_GRID_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + self.spacing() * i as f64
        }
    }
}

/// Uniform rectangular grid, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        Self::with_budget(axes, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(axes: Vec<Axis>, budget: usize) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one axis".into()));
        }
        if axes.len() > MAX_GRID_DIM {
            return Err(Error::InvalidParameter(format!(
                "grids support at most {MAX_GRID_DIM} dimensions, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) || a.points < 2 {
                return Err(Error::InvalidParameter(format!(
                    "grid axis needs min < max and at least 2 points, got {a:?}"
                )));
            }
        }
        let len = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
            .unwrap_or(usize::MAX);
        if len > budget {
            return Err(Error::GridBudget { required: len, budget });
        }
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len() - 1).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].points;
        }
        Ok(Grid { axes, strides, len })
    }

    /// Single-axis convenience constructor.
    pub fn uniform_1d(min: f64, max: f64, points: usize) -> Result<Self> {
        Grid::new(vec![Axis { min, max, points }])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (i, s) in self.strides.iter().enumerate() {
            idx[i] = flat / s;
            flat %= s;
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    /// Largest cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing().powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(v, a)| *v >= a.min && *v <= a.max)
    }

    /// Multilinear interpolation stencil of `x` after clamping it into the
    /// grid: `2^dim` `(node, weight)` pairs written into the output slices.
    #[allow(clippy::needless_range_loop)]
    pub fn stencil(&self, x: &[f64], idx: &mut [usize], w: &mut [f64]) {
        let d = self.dim();
        debug_assert_eq!(idx.len(), 1 << d);
        let mut base = 0usize;
        let mut frac = [0.0f64; MAX_GRID_DIM];
        for (k, a) in self.axes.iter().enumerate() {
            let v = x[k].clamp(a.min, a.max);
            let t = (v - a.min) / a.spacing();
            let i0 = (t.floor() as usize).min(a.points - 2);
            frac[k] = (t - i0 as f64).clamp(0.0, 1.0);
            base += i0 * self.strides[k];
        }
        for corner in 0..(1usize << d) {
            let mut node = base;
            let mut weight = 1.0;
            for k in 0..d {
                if corner >> (d - 1 - k) & 1 == 1 {
                    node += self.strides[k];
                    weight *= frac[k];
                } else {
                    weight *= 1.0 - frac[k];
                }
            }
            idx[corner] = node;
            w[corner] = weight;
        }
    }
}

impl TryFrom<Vec<Axis>> for Grid {
    type Error = Error;

    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        Grid::new(axes)
    }
}

impl From<Grid> for Vec<Axis> {
    fn from(g: Grid) -> Self {
        g.axes
    }
}
