use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{IterationStats, ValueField};
use super::grid::Grid;
use super::lattice::ActionLattice;
use crate::error::{Error, Result};
use crate::systems::SystemModel;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SIGN_PATIENCE: usize = 10;
/// Default cap on precomputed interpolation entries (node × action × corner).
pub const DEFAULT_STENCIL_BUDGET: usize = 1 << 23;

/// Settings for [`value_iteration`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// `None` selects `ceil(ln(tol/bound)/ln γ) + 100 + Σ axis points`.
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Consecutive iterations without a node changing sign required
    /// before stopping.
    #[serde(default = "default_patience")]
    pub sign_patience: usize,
    #[serde(default = "default_stencil_budget")]
    pub stencil_budget: usize,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_patience() -> usize {
    DEFAULT_SIGN_PATIENCE
}

fn default_stencil_budget() -> usize {
    DEFAULT_STENCIL_BUDGET
}

impl IterationOptions {
    pub fn new(gamma: f64) -> Self {
        IterationOptions {
            gamma,
            tol: DEFAULT_TOL,
            max_iter: None,
            sign_patience: DEFAULT_SIGN_PATIENCE,
            stencil_budget: DEFAULT_STENCIL_BUDGET,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn resolved_max_iter(&self, bound: f64, grid: &Grid) -> usize {
        self.max_iter.unwrap_or_else(|| {
            let contraction = ((self.tol / bound).ln() / self.gamma.ln()).ceil().max(0.0) as usize;
            contraction + 100 + grid.axes().iter().map(|a| a.points).sum::<usize>()
        })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "discount must lie in (0, 1), got {gamma}"
        )))
    }
}

/// The discounted reach-avoid Bellman operator on a fixed grid and lattice:
///
/// `B[V](x) = max_u min_d min{ c(x), max{ r(x), γ V(f(x,u,d)) } }`.
///
/// Successor interpolation stencils are precomputed when they fit the
/// stencil budget and recomputed per application otherwise; both paths
/// evaluate identical arithmetic.
pub struct BellmanOperator<'a> {
    model: &'a SystemModel,
    grid: &'a Grid,
    lattice: &'a ActionLattice,
    gamma: f64,
    reward: Vec<f64>,
    constraint: Vec<f64>,
    corners: usize,
    stencils: Option<(Vec<u32>, Vec<f64>)>,
}

impl<'a> BellmanOperator<'a> {
    pub fn new(
        model: &'a SystemModel,
        grid: &'a Grid,
        lattice: &'a ActionLattice,
        gamma: f64,
        stencil_budget: usize,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        if grid.dim() != model.state_dim() {
            return Err(Error::Dimension {
                what: "grid",
                expected: model.state_dim(),
                got: grid.dim(),
            });
        }
        let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.node(i)).collect();
        let reward = nodes.iter().map(|x| model.reward(x)).collect();
        let constraint = nodes.iter().map(|x| model.constraint(x)).collect();
        let corners = 1usize << grid.dim();
        let per_node = lattice.controls().len() * lattice.disturbances().len() * corners;
        let total = per_node.saturating_mul(grid.len());
        let stencils = if total <= stencil_budget && grid.len() <= u32::MAX as usize {
            let mut idx = vec![0u32; total];
            let mut w = vec![0.0f64; total];
            idx.par_chunks_mut(per_node)
                .zip(w.par_chunks_mut(per_node))
                .zip(nodes.par_iter())
                .for_each(|((idx, w), x)| {
                    let mut tmp = vec![0usize; corners];
                    let mut k = 0;
                    for u in lattice.controls() {
                        for d in lattice.disturbances() {
                            let next = model.step_unchecked(x, u, d);
                            grid.stencil(&next, &mut tmp, &mut w[k..k + corners]);
                            for (dst, src) in idx[k..k + corners].iter_mut().zip(&tmp) {
                                *dst = *src as u32;
                            }
                            k += corners;
                        }
                    }
                });
            Some((idx, w))
        } else {
            None
        };
        Ok(BellmanOperator {
            model,
            grid,
            lattice,
            gamma,
            reward,
            constraint,
            corners,
            stencils,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_precomputed(&self) -> bool {
        self.stencils.is_some()
    }

    /// Writes `B[values]` into `out`.
    pub fn apply(&self, values: &[f64], out: &mut [f64]) {
        let nu = self.lattice.controls().len();
        let nd = self.lattice.disturbances().len();
        let corners = self.corners;
        let gamma = self.gamma;
        out.par_iter_mut().enumerate().for_each(|(node, slot)| {
            let r = self.reward[node];
            let c = self.constraint[node];
            let mut local_idx = [0usize; 1 << super::grid::MAX_GRID_DIM];
            let mut local_w = [0.0f64; 1 << super::grid::MAX_GRID_DIM];
            let x = if self.stencils.is_none() {
                Some(self.grid.node(node))
            } else {
                None
            };
            let mut best = f64::NEG_INFINITY;
            for iu in 0..nu {
                let mut worst = f64::INFINITY;
                for id in 0..nd {
                    let next_value = match &self.stencils {
                        Some((idx, w)) => {
                            let k = ((node * nu + iu) * nd + id) * corners;
                            let mut acc = 0.0;
                            for j in k..k + corners {
                                acc += w[j] * values[idx[j] as usize];
                            }
                            acc
                        }
                        None => {
                            let next = self.model.step_unchecked(
                                x.as_ref().expect("node coordinates"),
                                &self.lattice.controls()[iu],
                                &self.lattice.disturbances()[id],
                            );
                            self.grid
                                .stencil(&next, &mut local_idx[..corners], &mut local_w[..corners]);
                            let mut acc = 0.0;
                            for j in 0..corners {
                                acc += local_w[j] * values[local_idx[j]];
                            }
                            acc
                        }
                    };
                    let v = c.min(r.max(gamma * next_value));
                    if v < worst {
                        worst = v;
                    }
                    if worst <= best {
                        break;
                    }
                }
                if worst > best {
                    best = worst;
                }
            }
            *slot = best;
        });
    }
}

/// One application of the Bellman operator; the input field is untouched.
pub fn bellman_backup(field: &ValueField, model: &SystemModel, lattice: &ActionLattice) -> Result<ValueField> {
    let op = BellmanOperator::new(model, field.grid(), lattice, field.gamma(), 0)?;
    let mut out = vec![0.0; field.values().len()];
    op.apply(field.values(), &mut out);
    let residual = sup_distance(&out, field.values());
    Ok(field.with_values(
        out,
        IterationStats {
            iterations: field.stats().iterations + 1,
            residual,
            converged: false,
        },
    ))
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Iterates the Bellman operator from `V₀ ≡ 0` until the sup-norm residual
/// is at most `tol` and no node has changed sign for `sign_patience`
/// consecutive iterations, or until the iteration cap.
///
/// Every residual is checked against the contraction bound
/// `res_k <= γ res_{k-1}`. A run that hits the cap is returned with
/// `converged = false`.
pub fn value_iteration(
    model: &SystemModel,
    grid: &Grid,
    lattice: &ActionLattice,
    options: &IterationOptions,
) -> Result<ValueField> {
    check_gamma(options.gamma)?;
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            options.tol
        )));
    }
    let bound = model.value_bound();
    let max_iter = options.resolved_max_iter(bound, grid);
    let op = BellmanOperator::new(model, grid, lattice, options.gamma, options.stencil_budget)?;

    let mut values = vec![0.0; grid.len()];
    let mut next = vec![0.0; grid.len()];
    let mut signs: Vec<i8> = values.iter().map(|&v| sign(v)).collect();
    let mut stable = 0usize;
    let mut previous = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iter {
        op.apply(&values, &mut next);
        iterations += 1;
        residual = sup_distance(&next, &values);
        if residual > options.gamma * previous + 1e-12 * bound {
            return Err(Error::ContractionViolated {
                previous,
                current: residual,
            });
        }
        previous = residual;
        std::mem::swap(&mut values, &mut next);

        let mut changed = false;
        for (s, &v) in signs.iter_mut().zip(&values) {
            let ns = sign(v);
            if ns != *s {
                *s = ns;
                changed = true;
            }
        }
        stable = if changed { 0 } else { stable + 1 };
        if residual <= options.tol && stable >= options.sign_patience {
            converged = true;
            break;
        }
    }

    ValueField::new(
        grid.clone(),
        values,
        options.gamma,
        IterationStats {
            iterations,
            residual,
            converged,
        },
    )
}
