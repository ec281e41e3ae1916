#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use reachcert::systems::{builtin_system, Mode, SystemModel};
use reachcert::value::{value_iteration, ActionLattice, Axis, Grid, IterationOptions, ValueField};

pub fn builtin(name: &str) -> SystemModel {
    builtin_system(name, &BTreeMap::new(), Mode::ReachAvoid).unwrap()
}

pub fn linear1d_grid() -> Grid {
    Grid::uniform_1d(-4.0, 4.0, 801).unwrap()
}

pub fn linear1d_lattice(model: &SystemModel) -> ActionLattice {
    ActionLattice::uniform(model, 21, 11)
}

/// Converged linear1d field on the reference grid.
pub fn linear1d_field(mode: Mode, gamma: f64) -> Arc<ValueField> {
    let model = builtin("linear1d").with_mode(mode);
    let lattice = linear1d_lattice(&model);
    Arc::new(value_iteration(&model, &linear1d_grid(), &lattice, &IterationOptions::new(gamma)).unwrap())
}

pub fn linear1d_reach_avoid_09() -> Arc<ValueField> {
    static FIELD: OnceLock<Arc<ValueField>> = OnceLock::new();
    FIELD.get_or_init(|| linear1d_field(Mode::ReachAvoid, 0.9)).clone()
}

pub fn di2_grid() -> Grid {
    let axis = Axis {
        min: -1.2,
        max: 1.2,
        points: 81,
    };
    Grid::new(vec![axis.clone(), axis]).unwrap()
}

pub fn di2_lattice(model: &SystemModel) -> ActionLattice {
    ActionLattice::uniform(model, 11, 5)
}

pub fn di2_field_09() -> Arc<ValueField> {
    static FIELD: OnceLock<Arc<ValueField>> = OnceLock::new();
    FIELD
        .get_or_init(|| {
            let model = builtin("di2");
            let lattice = di2_lattice(&model);
            Arc::new(value_iteration(&model, &di2_grid(), &lattice, &IterationOptions::new(0.9)).unwrap())
        })
        .clone()
}
