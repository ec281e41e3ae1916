//! Discounted reach-avoid value function on grids.

mod field;
mod grid;
pub mod io;
mod iteration;
mod lattice;
mod measure;

pub use field::{Interval, IterationStats, ValueField};
pub use grid::{Axis, Grid, DEFAULT_NODE_BUDGET, MAX_GRID_DIM};
pub(crate) use iteration::check_gamma;
pub use iteration::{
    bellman_backup, value_iteration, BellmanOperator, IterationOptions, DEFAULT_SIGN_PATIENCE, DEFAULT_STENCIL_BUDGET,
    DEFAULT_TOL,
};
pub use lattice::{ActionLattice, DEFAULT_CONTROL_POINTS, DEFAULT_DISTURBANCE_POINTS};
pub use measure::{discounted_ra_measure, first_reach_stage, ra_measure};
