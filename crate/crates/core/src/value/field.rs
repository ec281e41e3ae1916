use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Convergence record of a value-iteration run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations: usize,
    /// Final sup-norm Bellman residual.
    pub residual: f64,
    pub converged: bool,
}

/// Scalar field on a grid approximating the discounted reach-avoid value.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: Grid,
    values: Vec<f64>,
    gamma: f64,
    stats: IterationStats,
}

/// A maximal interval of a 1-D super-level set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// The interval is cut by the grid boundary on the left.
    pub lo_at_grid_edge: bool,
    pub hi_at_grid_edge: bool,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

impl ValueField {
    pub fn new(grid: Grid, values: Vec<f64>, gamma: f64, stats: IterationStats) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                what: "field values",
                expected: grid.len(),
                got: values.len(),
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount must lie in (0, 1), got {gamma}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(ValueField {
            grid,
            values,
            gamma,
            stats,
        })
    }

    /// Field with every node equal to `value`, flagged as not iterated.
    pub fn constant(grid: Grid, value: f64, gamma: f64) -> Result<Self> {
        let values = vec![value; grid.len()];
        ValueField::new(
            grid,
            values,
            gamma,
            IterationStats {
                iterations: 0,
                residual: f64::INFINITY,
                converged: false,
            },
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn stats(&self) -> IterationStats {
        self.stats
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, stats: IterationStats) -> ValueField {
        ValueField {
            grid: self.grid.clone(),
            values,
            gamma: self.gamma,
            stats,
        }
    }

    /// Multilinear interpolation; coordinates outside the grid are clamped
    /// to the boundary first.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let corners = 1 << self.grid.dim();
        let mut idx = [0usize; 1 << super::grid::MAX_GRID_DIM];
        let mut w = [0.0f64; 1 << super::grid::MAX_GRID_DIM];
        self.grid.stencil(x, &mut idx[..corners], &mut w[..corners]);
        idx[..corners]
            .iter()
            .zip(&w[..corners])
            .map(|(&i, w)| w * self.values[i])
            .sum()
    }

    /// Per-node `V > 0`.
    pub fn super_zero_mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v > 0.0).collect()
    }

    /// Per-node `V >= -tol_kernel`, the viability-kernel membership test.
    pub fn kernel_mask(&self, tol_kernel: f64) -> Vec<bool> {
        self.values.iter().map(|&v| v >= -tol_kernel).collect()
    }

    /// Maximal intervals of `{V > 0}` on a 1-D grid, with endpoints placed
    /// at the sign change by linear interpolation.
    pub fn super_zero_intervals(&self) -> Result<Vec<Interval>> {
        self.intervals_where(&self.super_zero_mask(), 0.0)
    }

    /// Maximal intervals of `{V >= -tol_kernel}` on a 1-D grid.
    pub fn kernel_intervals(&self, tol_kernel: f64) -> Result<Vec<Interval>> {
        self.intervals_where(&self.kernel_mask(tol_kernel), -tol_kernel)
    }

    fn intervals_where(&self, mask: &[bool], level: f64) -> Result<Vec<Interval>> {
        if self.grid.dim() != 1 {
            return Err(Error::Dimension {
                what: "interval extraction grid",
                expected: 1,
                got: self.grid.dim(),
            });
        }
        let axis = &self.grid.axes()[0];
        let v = &self.values;
        let crossing = |i: usize| {
            let (x0, x1) = (axis.coord(i), axis.coord(i + 1));
            let (v0, v1) = (v[i], v[i + 1]);
            if v1 == v0 {
                0.5 * (x0 + x1)
            } else {
                (x0 + (level - v0) / (v1 - v0) * (x1 - x0)).clamp(x0, x1)
            }
        };
        let mut out = Vec::new();
        let mut i = 0;
        let n = mask.len();
        while i < n {
            if !mask[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && mask[i + 1] {
                i += 1;
            }
            let end = i;
            out.push(Interval {
                lo: if start == 0 { axis.min } else { crossing(start - 1) },
                hi: if end + 1 == n { axis.max } else { crossing(end) },
                lo_at_grid_edge: start == 0,
                hi_at_grid_edge: end + 1 == n,
            });
            i += 1;
        }
        Ok(out)
    }
}
